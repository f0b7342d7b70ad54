#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>

#include "tablekit/rng.hpp"

namespace oracle {

using tablekit::Rng;
using tablekit::geometry::CellQuad;
using tablekit::geometry::Point;
using tablekit::metrics::AdjacencyRelation;
using tablekit::metrics::StructureTree;
using tablekit::metrics::TreeNode;
using tablekit::structure::TableGrid;

namespace {

bool inside(const CellQuad& q, Point p) {
    const auto& v = q.vertices();
    for (int i = 0; i < 4; ++i) {
        const Point a = v[static_cast<size_t>(i)];
        const Point b = v[static_cast<size_t>((i + 1) % 4)];
        const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (cross < 0.0) return false;  // canonical order is screen-clockwise
    }
    return true;
}

}  // namespace

double mc_iou(const CellQuad& a, const CellQuad& b, int samples, std::uint64_t seed) {
    const Point lo{std::min(a.min_corner().x, b.min_corner().x),
                   std::min(a.min_corner().y, b.min_corner().y)};
    const Point hi{std::max(a.max_corner().x, b.max_corner().x),
                   std::max(a.max_corner().y, b.max_corner().y)};
    Rng rng(seed);
    long in_union = 0, in_both = 0;
    for (int s = 0; s < samples; ++s) {
        const Point p{rng.next_in(lo.x, hi.x), rng.next_in(lo.y, hi.y)};
        const bool ia = inside(a, p);
        const bool ib = inside(b, p);
        in_union += (ia || ib) ? 1 : 0;
        in_both += (ia && ib) ? 1 : 0;
    }
    return in_union == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(in_union);
}

namespace {

struct ForestDist {
    const StructureTree& ta;
    const StructureTree& tb;
    // forests are ordered lists of node indices into their tree
    std::map<std::pair<std::vector<int>, std::vector<int>>, int> memo;

    static int subtree_size(const StructureTree& t, int n) {
        int total = 1;
        for (int c : t.nodes[static_cast<size_t>(n)].children) total += subtree_size(t, c);
        return total;
    }

    static bool same_label(const TreeNode& x, const TreeNode& y) {
        if (x.label != y.label) return false;
        if (x.label != TreeNode::Label::cell) return true;
        return x.row_span == y.row_span && x.col_span == y.col_span;
    }

    int dist(std::vector<int> fa, std::vector<int> fb) {
        if (fa.empty() && fb.empty()) return 0;
        const auto key = std::make_pair(fa, fb);
        const auto it = memo.find(key);
        if (it != memo.end()) return it->second;

        int best;
        if (fa.empty()) {
            best = subtree_size(tb, fb.back());
            std::vector<int> rest(fb.begin(), fb.end() - 1);
            best += dist({}, std::move(rest));
        } else if (fb.empty()) {
            best = subtree_size(ta, fa.back());
            std::vector<int> rest(fa.begin(), fa.end() - 1);
            best += dist(std::move(rest), {});
        } else {
            const int ra = fa.back();
            const int rb = fb.back();
            const auto& ca = ta.nodes[static_cast<size_t>(ra)].children;
            const auto& cb = tb.nodes[static_cast<size_t>(rb)].children;

            // delete the root of the last tree of fa
            std::vector<int> da(fa.begin(), fa.end() - 1);
            da.insert(da.end(), ca.begin(), ca.end());
            best = 1 + dist(da, fb);

            // insert the root of the last tree of fb
            std::vector<int> db(fb.begin(), fb.end() - 1);
            db.insert(db.end(), cb.begin(), cb.end());
            best = std::min(best, 1 + dist(fa, db));

            // match the two roots
            const int relabel =
                same_label(ta.nodes[static_cast<size_t>(ra)], tb.nodes[static_cast<size_t>(rb)])
                    ? 0
                    : 1;
            std::vector<int> pa(fa.begin(), fa.end() - 1);
            std::vector<int> pb(fb.begin(), fb.end() - 1);
            best = std::min(best, relabel +
                                      dist(std::vector<int>(ca.begin(), ca.end()),
                                           std::vector<int>(cb.begin(), cb.end())) +
                                      dist(std::move(pa), std::move(pb)));
        }
        memo.emplace(key, best);
        return best;
    }
};

}  // namespace

int tree_edit_distance(const StructureTree& a, const StructureTree& b) {
    if (a.nodes.empty() && b.nodes.empty()) return 0;
    if (a.nodes.empty()) return ForestDist::subtree_size(b, 0);
    if (b.nodes.empty()) return ForestDist::subtree_size(a, 0);
    ForestDist fd{a, b, {}};
    return fd.dist({0}, {0});
}

std::vector<AdjacencyRelation> adjacency_relations(const TableGrid& grid) {
    if (grid.n_rows <= 0 || grid.n_cols <= 0) return {};
    std::vector<int> owner(static_cast<size_t>(grid.n_rows) * grid.n_cols, -1);
    for (const auto& s : grid.cells)
        for (int r = s.start_row; r <= s.end_row; ++r)
            for (int c = s.start_col; c <= s.end_col; ++c)
                owner[static_cast<size_t>(r) * grid.n_cols + c] = s.cell_id;

    std::vector<AdjacencyRelation> out;
    auto add = [&](int a, int b, tablekit::metrics::AdjacencyDir dir) {
        if (a < 0 || b < 0 || a == b) return;
        AdjacencyRelation rel{std::min(a, b), std::max(a, b), dir};
        if (std::find(out.begin(), out.end(), rel) == out.end()) out.push_back(rel);
    };
    for (int r = 0; r < grid.n_rows; ++r) {
        for (int c = 0; c < grid.n_cols; ++c) {
            const int id = owner[static_cast<size_t>(r) * grid.n_cols + c];
            if (c + 1 < grid.n_cols)
                add(id, owner[static_cast<size_t>(r) * grid.n_cols + c + 1],
                    tablekit::metrics::AdjacencyDir::horizontal);
            if (r + 1 < grid.n_rows)
                add(id, owner[static_cast<size_t>(r + 1) * grid.n_cols + c],
                    tablekit::metrics::AdjacencyDir::vertical);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

CellQuad random_convex_quad(std::uint64_t seed) {
    Rng rng(seed);
    for (;;) {
        const double cx = rng.next_in(10.0, 90.0);
        const double cy = rng.next_in(10.0, 90.0);
        const double w = rng.next_in(8.0, 40.0);
        const double h = rng.next_in(8.0, 40.0);
        std::array<Point, 4> pts{{{cx - w / 2, cy - h / 2},
                                  {cx + w / 2, cy - h / 2},
                                  {cx + w / 2, cy + h / 2},
                                  {cx - w / 2, cy + h / 2}}};
        for (auto& p : pts) {
            p.x += rng.next_in(-0.2, 0.2) * w;
            p.y += rng.next_in(-0.2, 0.2) * h;
        }
        const double ang = rng.next_in(0.0, 0.6);
        const double ca = std::cos(ang), sa = std::sin(ang);
        for (auto& p : pts) {
            const double dx = p.x - cx, dy = p.y - cy;
            p = {cx + ca * dx - sa * dy, cy + sa * dx + ca * dy};
        }
        if (auto q = CellQuad::try_from_points(pts)) return *q;
    }
}

TableGrid random_merged_grid(std::uint64_t seed, int max_rows, int max_cols) {
    Rng rng(seed);
    TableGrid g;
    g.n_rows = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_rows)));
    g.n_cols = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_cols)));
    std::vector<int> owner(static_cast<size_t>(g.n_rows) * g.n_cols, -1);
    auto at = [&](int r, int c) -> int& { return owner[static_cast<size_t>(r) * g.n_cols + c]; };

    int id = 0;
    for (int r = 0; r < g.n_rows; ++r) {
        for (int c = 0; c < g.n_cols; ++c) {
            if (at(r, c) >= 0) continue;
            int r1 = r, c1 = c;
            if (rng.next_unit() < 0.35) {
                r1 = std::min(g.n_rows - 1, r + static_cast<int>(rng.next_below(3)));
                c1 = std::min(g.n_cols - 1, c + static_cast<int>(rng.next_below(3)));
                // shrink until the rectangle is free
                for (bool ok = false; !ok;) {
                    ok = true;
                    for (int rr = r; rr <= r1 && ok; ++rr)
                        for (int cc = c; cc <= c1 && ok; ++cc) ok = at(rr, cc) < 0;
                    if (!ok) {
                        if (c1 > c)
                            --c1;
                        else
                            --r1;
                    }
                }
            }
            tablekit::structure::CellSpan s;
            s.cell_id = id++;
            s.start_row = r;
            s.end_row = r1;
            s.start_col = c;
            s.end_col = c1;
            s.quad = CellQuad::from_points({{{c * 10.0, r * 10.0},
                                             {(c1 + 1) * 10.0, r * 10.0},
                                             {(c1 + 1) * 10.0, (r1 + 1) * 10.0},
                                             {c * 10.0, (r1 + 1) * 10.0}}});
            for (int rr = r; rr <= r1; ++rr)
                for (int cc = c; cc <= c1; ++cc) at(rr, cc) = s.cell_id;
            g.cells.push_back(s);
        }
    }
    return g;
}

StructureTree random_tree(std::uint64_t seed, int max_nodes) {
    Rng rng(seed);
    const int n = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_nodes)));
    StructureTree t;
    t.nodes.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& node = t.nodes[static_cast<size_t>(i)];
        switch (rng.next_below(3)) {
            case 0: node.label = TreeNode::Label::table; break;
            case 1: node.label = TreeNode::Label::row; break;
            default: node.label = TreeNode::Label::cell; break;
        }
        // Spans are a cell attribute; row and table nodes always carry 1/1.
        if (node.label == TreeNode::Label::cell) {
            node.row_span = 1 + static_cast<int>(rng.next_below(3));
            node.col_span = 1 + static_cast<int>(rng.next_below(3));
        }
        if (i > 0) {
            const int parent = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i)));
            t.nodes[static_cast<size_t>(parent)].children.push_back(i);
        }
    }
    return t;
}

}  // namespace oracle
