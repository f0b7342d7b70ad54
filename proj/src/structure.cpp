#include "tablekit/structure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

#include "tablekit/targets.hpp"

namespace tablekit::structure {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

// Key pair of an edge, in canonical corner order.
std::array<std::int64_t, 2> edge_keys(const StructCell& c, Side s) {
    switch (s) {
        case Side::up: return {c.vertex_keys[0], c.vertex_keys[1]};
        case Side::right: return {c.vertex_keys[1], c.vertex_keys[2]};
        case Side::down: return {c.vertex_keys[3], c.vertex_keys[2]};
        case Side::left: return {c.vertex_keys[0], c.vertex_keys[3]};
    }
    return {0, 0};
}

std::array<geometry::Point, 2> edge_points(const StructCell& c, Side s) {
    switch (s) {
        case Side::up: return {c.quad.vertex(0), c.quad.vertex(1)};
        case Side::right: return {c.quad.vertex(1), c.quad.vertex(2)};
        case Side::down: return {c.quad.vertex(3), c.quad.vertex(2)};
        case Side::left: return {c.quad.vertex(0), c.quad.vertex(3)};
    }
    return {};
}

constexpr std::array<Side, 2> kHorizontalSides{Side::up, Side::down};
constexpr std::array<Side, 2> kVerticalSides{Side::left, Side::right};

std::vector<GridLine> lines_for(const std::vector<StructCell>& cells, Orientation ori) {
    const auto& sides = ori == Orientation::horizontal ? kHorizontalSides : kVerticalSides;

    std::map<std::int64_t, int> key_idx;
    auto idx_of = [&](std::int64_t k) {
        return key_idx.emplace(k, static_cast<int>(key_idx.size())).first->second;
    };
    std::vector<std::pair<int, int>> edge_key_idx;  // per edge, both endpoint indices
    std::vector<EdgeRef> edges;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        for (Side s : sides) {
            const auto k = edge_keys(cells[ci], s);
            edges.push_back({static_cast<int>(ci), s});
            edge_key_idx.emplace_back(idx_of(k[0]), idx_of(k[1]));
        }
    }

    UnionFind uf(static_cast<int>(key_idx.size()));
    for (const auto& [a, b] : edge_key_idx) uf.unite(a, b);

    std::map<int, int> root_line;
    std::vector<GridLine> lines;
    std::vector<int> line_of_edge(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const int root = uf.find(edge_key_idx[e].first);
        auto [it, inserted] = root_line.emplace(root, static_cast<int>(lines.size()));
        if (inserted) {
            GridLine l;
            l.orientation = ori;
            lines.push_back(std::move(l));
        }
        lines[static_cast<size_t>(it->second)].edges.push_back(edges[e]);
        line_of_edge[e] = it->second;
    }

    // Opposite edges of one cell collapsing onto one line means the key
    // graph short-circuits through this cell's row or column.
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const std::size_t base = ci * 2;
        if (line_of_edge[base] == line_of_edge[base + 1])
            throw std::runtime_error(
                "build_lines: opposite edges of cell " + std::to_string(cells[ci].id) +
                " fall on the same " +
                (ori == Orientation::horizontal ? std::string("horizontal") : std::string("vertical")) +
                " line");
    }
    return lines;
}

std::vector<std::vector<std::int64_t>> line_key_sets(const std::vector<GridLine*>& lines,
                                                     const std::vector<StructCell>& cells) {
    std::vector<std::vector<std::int64_t>> keys(lines.size());
    for (std::size_t li = 0; li < lines.size(); ++li) {
        for (const EdgeRef& e : lines[li]->edges)
            for (std::int64_t k : edge_keys(cells[static_cast<size_t>(e.cell)], e.side))
                keys[li].push_back(k);
        auto& ks = keys[li];
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    }
    return keys;
}

Side opposite(Side s) {
    switch (s) {
        case Side::up: return Side::down;
        case Side::down: return Side::up;
        case Side::left: return Side::right;
        case Side::right: return Side::left;
    }
    return Side::up;
}

// Parameter of p projected onto segment a->b; outside [0, 1] means beyond
// the endpoints.
double edge_param(const geometry::Point& p, const geometry::Point& a, const geometry::Point& b) {
    const geometry::Point d = b - a;
    const double l2 = d.x * d.x + d.y * d.y;
    if (l2 <= 0.0) return -1.0;
    return ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / l2;
}

// One orientation's lines plus the lookup tables the reunification walk
// needs.
struct OrientedLines {
    std::vector<GridLine*> lines;
    std::vector<std::vector<std::int64_t>> keys;       // per line, sorted unique
    std::map<std::int64_t, int> line_of_key;
    std::map<std::pair<int, Side>, int> line_of_side;  // (cell index, side)
};

OrientedLines collect(std::vector<GridLine>& all, Orientation ori,
                      const std::vector<StructCell>& cells) {
    OrientedLines o;
    for (auto& l : all)
        if (l.orientation == ori) o.lines.push_back(&l);
    o.keys = line_key_sets(o.lines, cells);
    for (std::size_t li = 0; li < o.lines.size(); ++li) {
        for (std::int64_t k : o.keys[li]) o.line_of_key[k] = static_cast<int>(li);
        for (const EdgeRef& e : o.lines[li]->edges)
            o.line_of_side[{e.cell, e.side}] = static_cast<int>(li);
    }
    return o;
}

constexpr double kParamEps = 1e-9;
// A re-emerging line must land within this fraction of the gap to the
// neighboring vertices; anything looser tunnels on or gives up.
constexpr double kSnapFrac = 0.45;

// Continue the loose end at key k (its line leaves via neighbor key `prev`)
// straight through whatever cells interrupt it. Each crossing ends on the
// cell's far edge, where the line either re-emerges at a perpendicular
// junction vertex (uniting the two severed segments) or runs into the next
// merged cell and keeps tunnelling. Counts on the two sides of one cell need
// not agree: distinct boundaries can enter and leave a stack of merges at
// different depths.
void walk_loose_end(int li, std::int64_t k, std::int64_t prev, const OrientedLines& own,
                    const OrientedLines& cross, UnionFind& uf,
                    const std::vector<StructCell>& cells,
                    const std::map<std::int64_t, geometry::Point>& pos) {
    geometry::Point p = pos.at(k);
    geometry::Point d = p - pos.at(prev);
    const double dl = std::sqrt(d.x * d.x + d.y * d.y);
    if (dl <= 0.0) return;
    d = d * (1.0 / dl);

    // The interrupting cell holds k strictly inside one of its cross edges.
    const auto itl = cross.line_of_key.find(k);
    if (itl == cross.line_of_key.end()) return;
    int cur = -1;
    Side in{};
    for (const EdgeRef& e : cross.lines[static_cast<size_t>(itl->second)]->edges) {
        const auto ek = edge_keys(cells[static_cast<size_t>(e.cell)], e.side);
        if (ek[0] == k || ek[1] == k) continue;
        const double t = edge_param(p, pos.at(ek[0]), pos.at(ek[1]));
        if (t <= kParamEps || t >= 1.0 - kParamEps) continue;
        if (cur >= 0) return;  // overlapping edges, bail out
        cur = e.cell;
        in = e.side;
    }
    if (cur < 0) return;

    for (std::size_t hop = 0; hop <= cells.size(); ++hop) {
        const Side out = opposite(in);
        const auto ek = edge_keys(cells[static_cast<size_t>(cur)], out);
        const geometry::Point a = pos.at(ek[0]);
        const geometry::Point b = pos.at(ek[1]);
        const geometry::Point ab = b - a;

        // Ray p + s*d against the exit edge a + t*(b - a).
        const double det = ab.x * d.y - ab.y * d.x;
        if (std::abs(det) <= kParamEps * std::sqrt(ab.x * ab.x + ab.y * ab.y)) return;
        const geometry::Point r{a.x - p.x, a.y - p.y};
        const double s = (ab.x * r.y - ab.y * r.x) / det;
        const double t = (d.x * r.y - d.y * r.x) / det;
        if (s <= 0.0 || t <= kParamEps || t >= 1.0 - kParamEps) return;
        const geometry::Point q{p.x + s * d.x, p.y + s * d.y};

        // Junction vertices available on the exit edge, in order.
        const int out_line = cross.line_of_side.at({cur, out});
        std::vector<std::pair<double, std::int64_t>> interior;
        for (std::int64_t kk : cross.keys[static_cast<size_t>(out_line)]) {
            const double tk = edge_param(pos.at(kk), a, b);
            if (tk > kParamEps && tk < 1.0 - kParamEps) interior.emplace_back(tk, kk);
        }
        std::sort(interior.begin(), interior.end());

        int best = -1;
        for (std::size_t i = 0; i < interior.size(); ++i) {
            if (own.line_of_key.find(interior[i].second) == own.line_of_key.end()) continue;
            if (best < 0 ||
                std::abs(interior[i].first - t) < std::abs(interior[static_cast<size_t>(best)].first - t))
                best = static_cast<int>(i);
        }
        if (best >= 0) {
            const double tk = interior[static_cast<size_t>(best)].first;
            const double lo = best > 0 ? interior[static_cast<size_t>(best) - 1].first : 0.0;
            const double hi = best + 1 < static_cast<int>(interior.size())
                                  ? interior[static_cast<size_t>(best) + 1].first
                                  : 1.0;
            if (std::abs(t - tk) <= kSnapFrac * std::min(tk - lo, hi - tk)) {
                uf.unite(li, own.line_of_key.at(interior[static_cast<size_t>(best)].second));
                return;
            }
        }

        // No junction where the ray lands: the next cell over is also merged
        // across this boundary.
        int nxt = -1;
        for (const EdgeRef& e : cross.lines[static_cast<size_t>(out_line)]->edges) {
            if (e.side != in || e.cell == cur) continue;
            const auto ck = edge_keys(cells[static_cast<size_t>(e.cell)], e.side);
            const double tc = edge_param(q, pos.at(ck[0]), pos.at(ck[1]));
            if (tc <= kParamEps || tc >= 1.0 - kParamEps) continue;
            if (nxt >= 0) return;
            nxt = e.cell;
        }
        if (nxt < 0) return;
        cur = nxt;
        p = q;
    }
}

// A merged cell interrupts the boundaries it spans; their severed segments
// terminate on its side lines as loose ends. Walk every loose end through
// the merges and unite the segments it reconnects with.
void unite_interrupted(const OrientedLines& own, const OrientedLines& cross, UnionFind& uf,
                       const std::vector<StructCell>& cells,
                       const std::map<std::int64_t, geometry::Point>& pos) {
    for (std::size_t li = 0; li < own.lines.size(); ++li) {
        // Loose ends are degree-one keys of the line's de-duplicated edge
        // graph (opposing cell edges contribute the same key pair twice).
        std::set<std::array<std::int64_t, 2>> seen;
        std::map<std::int64_t, std::vector<std::int64_t>> adj;
        for (const EdgeRef& e : own.lines[li]->edges) {
            auto ek = edge_keys(cells[static_cast<size_t>(e.cell)], e.side);
            if (ek[0] > ek[1]) std::swap(ek[0], ek[1]);
            if (!seen.insert(ek).second) continue;
            adj[ek[0]].push_back(ek[1]);
            adj[ek[1]].push_back(ek[0]);
        }
        for (const auto& [k, nbrs] : adj) {
            if (nbrs.size() != 1) continue;
            walk_loose_end(static_cast<int>(li), k, nbrs[0], own, cross, uf, cells, pos);
        }
    }
}

// Unit axis pointing from lower to higher indices: down-ish for horizontal
// lines, right-ish for vertical ones. Derived from the cells themselves so
// rotated tables order by their own frame, not the image's.
geometry::Point index_axis(const std::vector<GridLine*>& lines,
                           const std::vector<StructCell>& cells, Orientation ori) {
    geometry::Point u{0.0, 0.0};
    for (const GridLine* l : lines) {
        for (const EdgeRef& e : l->edges) {
            const auto p = edge_points(cells[static_cast<size_t>(e.cell)], e.side);
            u = u + (p[1] - p[0]);
        }
    }
    const double len = std::sqrt(u.x * u.x + u.y * u.y);
    if (len <= 0.0) return ori == Orientation::horizontal ? geometry::Point{0, 1}
                                                          : geometry::Point{1, 0};
    u = u * (1.0 / len);
    return ori == Orientation::horizontal ? geometry::Point{-u.y, u.x}
                                          : geometry::Point{u.y, -u.x};
}

// Topological sort over equivalence classes of lines with dense indices;
// incomparable classes order by mean coordinate along the index axis.
void index_classes(std::vector<GridLine*>& lines, UnionFind& uf,
                   const std::vector<StructCell>& cells, Orientation ori) {
    const std::size_t n = lines.size();
    if (n == 0) return;

    std::map<int, int> root_class;
    std::vector<int> class_of(n);
    for (std::size_t li = 0; li < n; ++li) {
        const int root = uf.find(static_cast<int>(li));
        class_of[li] =
            root_class.emplace(root, static_cast<int>(root_class.size())).first->second;
    }
    const std::size_t nc = root_class.size();

    std::map<std::pair<int, Side>, int> line_of;  // (cell index, side) -> local line idx
    for (std::size_t li = 0; li < n; ++li)
        for (const EdgeRef& e : lines[li]->edges) line_of[{e.cell, e.side}] = static_cast<int>(li);

    std::vector<std::vector<int>> succ(nc);
    std::vector<int> indegree(nc, 0);
    const bool horizontal = ori == Orientation::horizontal;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const int ic = static_cast<int>(ci);
        const int a = class_of[static_cast<size_t>(
            line_of.at({ic, horizontal ? Side::up : Side::left}))];
        const int b = class_of[static_cast<size_t>(
            line_of.at({ic, horizontal ? Side::down : Side::right}))];
        if (a == b)
            throw std::runtime_error("order_lines: opposite edges of cell " +
                                     std::to_string(cells[ci].id) +
                                     " resolve to the same line");
        auto& s = succ[static_cast<size_t>(a)];
        if (std::find(s.begin(), s.end(), b) == s.end()) {
            s.push_back(b);
            ++indegree[static_cast<size_t>(b)];
        }
    }

    const geometry::Point axis = index_axis(lines, cells, ori);
    std::vector<double> coord_sum(nc, 0.0);
    std::vector<int> coord_n(nc, 0);
    for (std::size_t li = 0; li < n; ++li) {
        for (const EdgeRef& e : lines[li]->edges) {
            for (const geometry::Point& p : edge_points(cells[static_cast<size_t>(e.cell)], e.side)) {
                coord_sum[static_cast<size_t>(class_of[li])] += p.x * axis.x + p.y * axis.y;
                ++coord_n[static_cast<size_t>(class_of[li])];
            }
        }
    }

    using Entry = std::pair<double, int>;  // (mean coordinate, class)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> ready;
    for (std::size_t c = 0; c < nc; ++c)
        if (indegree[c] == 0) ready.emplace(coord_sum[c] / coord_n[c], static_cast<int>(c));

    std::vector<int> class_index(nc, -1);
    int next = 0;
    while (!ready.empty()) {
        const int c = ready.top().second;
        ready.pop();
        class_index[static_cast<size_t>(c)] = next++;
        for (int s : succ[static_cast<size_t>(c)])
            if (--indegree[static_cast<size_t>(s)] == 0)
                ready.emplace(coord_sum[static_cast<size_t>(s)] / coord_n[static_cast<size_t>(s)],
                              s);
    }
    if (next != static_cast<int>(nc))
        throw std::runtime_error("order_lines: cyclic line constraints (degenerate geometry)");
    for (std::size_t li = 0; li < n; ++li)
        lines[li]->index = class_index[static_cast<size_t>(class_of[li])];
}

}  // namespace

std::vector<GridLine> build_lines(const std::vector<StructCell>& cells) {
    if (cells.empty()) return {};
    auto h = lines_for(cells, Orientation::horizontal);
    auto v = lines_for(cells, Orientation::vertical);
    std::vector<GridLine> all;
    all.reserve(h.size() + v.size());
    for (auto& l : h) all.push_back(std::move(l));
    for (auto& l : v) all.push_back(std::move(l));
    return all;
}

void order_lines(std::vector<GridLine>& lines, const std::vector<StructCell>& cells) {
    std::map<std::int64_t, geometry::Point> pos;
    for (const auto& c : cells)
        for (int k = 0; k < 4; ++k)
            pos.emplace(c.vertex_keys[static_cast<size_t>(k)], c.quad.vertex(k));

    auto h = collect(lines, Orientation::horizontal, cells);
    auto v = collect(lines, Orientation::vertical, cells);

    UnionFind hu(static_cast<int>(h.lines.size()));
    UnionFind vu(static_cast<int>(v.lines.size()));
    unite_interrupted(h, v, hu, cells, pos);
    unite_interrupted(v, h, vu, cells, pos);

    if (!h.lines.empty()) index_classes(h.lines, hu, cells, Orientation::horizontal);
    if (!v.lines.empty()) index_classes(v.lines, vu, cells, Orientation::vertical);
}

TableGrid assign_rc(const std::vector<StructCell>& cells, const std::vector<GridLine>& lines,
                    int table_id) {
    TableGrid grid;
    grid.table_id = table_id;
    if (cells.empty()) return grid;

    std::map<std::pair<int, Side>, int> index_of;  // (cell index, side) -> line index
    for (const GridLine& l : lines) {
        if (l.index < 0) throw std::invalid_argument("assign_rc: lines must be ordered first");
        for (const EdgeRef& e : l.edges) index_of[{e.cell, e.side}] = l.index;
    }

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const int ic = static_cast<int>(ci);
        CellSpan s;
        s.cell_id = cells[ci].id;
        s.quad = cells[ci].quad;
        s.start_row = index_of.at({ic, Side::up});
        s.end_row = index_of.at({ic, Side::down}) - 1;
        s.start_col = index_of.at({ic, Side::left});
        s.end_col = index_of.at({ic, Side::right}) - 1;
        if (s.end_row < s.start_row || s.end_col < s.start_col)
            throw std::runtime_error("assign_rc: cell " + std::to_string(s.cell_id) +
                                     " has an empty span");
        grid.cells.push_back(std::move(s));
        grid.n_rows = std::max(grid.n_rows, grid.cells.back().end_row + 1);
        grid.n_cols = std::max(grid.n_cols, grid.cells.back().end_col + 1);
    }

    std::vector<int> occupancy(static_cast<size_t>(grid.n_rows) * grid.n_cols, -1);
    for (const CellSpan& s : grid.cells) {
        for (int r = s.start_row; r <= s.end_row; ++r) {
            for (int c = s.start_col; c <= s.end_col; ++c) {
                int& slot = occupancy[static_cast<size_t>(r) * grid.n_cols + c];
                if (slot >= 0)
                    throw std::runtime_error("assign_rc: cells " + std::to_string(slot) + " and " +
                                             std::to_string(s.cell_id) + " overlap at row " +
                                             std::to_string(r) + ", col " + std::to_string(c));
                slot = s.cell_id;
            }
        }
    }

    std::sort(grid.cells.begin(), grid.cells.end(), [](const CellSpan& a, const CellSpan& b) {
        if (a.start_row != b.start_row) return a.start_row < b.start_row;
        if (a.start_col != b.start_col) return a.start_col < b.start_col;
        return a.cell_id < b.cell_id;
    });
    return grid;
}

TableGrid parse_group(const std::vector<StructCell>& cells, int table_id) {
    auto lines = build_lines(cells);
    order_lines(lines, cells);
    return assign_rc(cells, lines, table_id);
}

std::vector<StructCell> cells_with_shared_corners(
    const std::vector<std::pair<int, geometry::CellQuad>>& cells, double tol) {
    std::vector<geometry::CellQuad> quads;
    quads.reserve(cells.size());
    for (const auto& [id, q] : cells) quads.push_back(q);

    const auto vertices = targets::collect_shared_vertices(quads, tol);
    std::vector<StructCell> out(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out[i].id = cells[i].first;
        out[i].quad = cells[i].second;
    }
    for (std::size_t vi = 0; vi < vertices.size(); ++vi) {
        for (const auto& slot : vertices[vi].slots) {
            if (!slot) continue;
            out[static_cast<size_t>(slot->cell)].vertex_keys[static_cast<size_t>(slot->corner)] =
                static_cast<std::int64_t>(vi);
        }
    }
    return out;
}

}  // namespace tablekit::structure
