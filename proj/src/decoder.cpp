#include "tablekit/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace tablekit::decoder {

namespace {

bool is_peak(const targets::Plane& hm, int x, int y) {
    const double v = hm.at(x, y);
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (!hm.contains(nx, ny)) continue;
            const double n = hm.at(nx, ny);
            if (n > v) return false;
            // Plateaus: only the raster-first pixel of a tied neighborhood
            // survives.
            if (n == v && (ny < y || (ny == y && nx < x))) return false;
        }
    }
    return true;
}

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

}  // namespace

std::vector<Peak> extract_peaks(const targets::Plane& heatmap, const targets::Plane& off_x,
                                const targets::Plane& off_y, int stride, double threshold,
                                int max_peaks, PeakClass cls) {
    if (heatmap.width != off_x.width || heatmap.height != off_x.height ||
        heatmap.width != off_y.width || heatmap.height != off_y.height)
        throw std::invalid_argument("extract_peaks: offset planes must match the heatmap shape");
    if (max_peaks < 0) max_peaks = 0;

    std::vector<Peak> peaks;
    for (int y = 0; y < heatmap.height; ++y) {
        for (int x = 0; x < heatmap.width; ++x) {
            const double v = heatmap.at(x, y);
            if (v < threshold || !is_peak(heatmap, x, y)) continue;
            Peak p;
            p.score = v;
            p.cls = cls;
            p.px = x;
            p.py = y;
            p.position = {(x + off_x.at(x, y)) * stride, (y + off_y.at(x, y)) * stride};
            peaks.push_back(p);
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& a, const Peak& b) { return a.score > b.score; });
    if (static_cast<int>(peaks.size()) > max_peaks) peaks.resize(static_cast<size_t>(max_peaks));
    return peaks;
}

std::vector<DecodedCell> decode_cells(const std::vector<Peak>& center_peaks,
                                      const std::array<targets::Plane, 8>& cv, int stride,
                                      int* discarded) {
    if (discarded) *discarded = 0;
    std::vector<DecodedCell> cells;
    cells.reserve(center_peaks.size());
    for (const Peak& c : center_peaks) {
        std::array<geometry::Point, 4> pts;
        for (int k = 0; k < 4; ++k) {
            const geometry::Point d{cv[2 * k].at(c.px, c.py) * stride,
                                    cv[2 * k + 1].at(c.px, c.py) * stride};
            pts[static_cast<size_t>(k)] = c.position - d;
        }
        const auto quad = geometry::CellQuad::try_from_points(pts);
        if (!quad) {
            if (discarded) ++*discarded;
            continue;
        }
        DecodedCell cell;
        cell.id = static_cast<int>(cells.size());
        cell.center = c;
        cell.corners = quad->vertices();
        cells.push_back(cell);
    }
    return cells;
}

std::vector<CornerMatch> cycle_match(const std::vector<DecodedCell>& cells,
                                     const std::vector<Peak>& vertex_peaks,
                                     const std::array<targets::Plane, 8>& vc, int stride,
                                     double tau) {
    std::vector<CornerMatch> matches;
    for (const DecodedCell& cell : cells) {
        for (int k = 0; k < 4; ++k) {
            const geometry::Point corner = cell.corners[static_cast<size_t>(k)];
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            double best_score = 0.0;
            for (std::size_t vi = 0; vi < vertex_peaks.size(); ++vi) {
                const Peak& v = vertex_peaks[vi];
                const double d = geometry::distance(corner, v.position);
                if (d > tau) continue;
                bool points_back = false;
                for (int s = 0; s < 4 && !points_back; ++s) {
                    const geometry::Point back{
                        v.position.x - vc[2 * s].at(v.px, v.py) * stride,
                        v.position.y - vc[2 * s + 1].at(v.px, v.py) * stride};
                    points_back = geometry::distance(back, cell.center.position) <= tau;
                }
                if (!points_back) continue;
                if (d < best_d || (d == best_d && v.score > best_score)) {
                    best = static_cast<int>(vi);
                    best_d = d;
                    best_score = v.score;
                }
            }
            if (best >= 0) matches.push_back({cell.id, k, best});
        }
    }
    return matches;
}

GroupResult group_and_snap(std::vector<DecodedCell> cells,
                           const std::vector<CornerMatch>& matches) {
    std::map<int, std::size_t> by_id;
    for (std::size_t i = 0; i < cells.size(); ++i) by_id[cells[i].id] = i;

    // Mean corner position per matched vertex.
    std::map<int, std::pair<geometry::Point, int>> acc;
    for (const CornerMatch& m : matches) {
        auto it = by_id.find(m.cell_id);
        if (it == by_id.end()) throw std::invalid_argument("group_and_snap: unknown cell id");
        const geometry::Point p = cells[it->second].corners[static_cast<size_t>(m.corner)];
        auto& [sum, n] = acc[m.vertex_id];
        sum = sum + p;
        ++n;
    }

    for (const CornerMatch& m : matches) {
        const auto& [sum, n] = acc[m.vertex_id];
        const geometry::Point mean = sum * (1.0 / n);
        DecodedCell& cell = cells[by_id[m.cell_id]];
        cell.corners[static_cast<size_t>(m.corner)] = mean;
        cell.vertex_ids[static_cast<size_t>(m.corner)] = m.vertex_id;
    }

    UnionFind uf(static_cast<int>(cells.size()));
    std::map<int, int> vertex_first_cell;
    for (const CornerMatch& m : matches) {
        const int idx = static_cast<int>(by_id[m.cell_id]);
        auto [it, inserted] = vertex_first_cell.emplace(m.vertex_id, idx);
        if (!inserted) uf.unite(it->second, idx);
    }

    GroupResult out;
    out.cells = std::move(cells);
    std::map<int, CellGroup> groups;  // keyed by root, i.e. smallest member index
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
        groups[uf.find(static_cast<int>(i))].cell_ids.push_back(out.cells[i].id);
    }
    for (const CornerMatch& m : matches) {
        const int root = uf.find(static_cast<int>(by_id[m.cell_id]));
        groups[root].vertex_ids.push_back(m.vertex_id);
    }
    for (auto& [root, g] : groups) {
        g.table_id = static_cast<int>(out.groups.size());
        std::sort(g.cell_ids.begin(), g.cell_ids.end());
        std::sort(g.vertex_ids.begin(), g.vertex_ids.end());
        g.vertex_ids.erase(std::unique(g.vertex_ids.begin(), g.vertex_ids.end()),
                           g.vertex_ids.end());
        out.groups.push_back(std::move(g));
    }
    return out;
}

DecodeOutput decode_maps(const targets::TargetMaps& maps, const DecodeConfig& cfg) {
    DecodeOutput out;
    out.center_peaks = extract_peaks(maps.heatmap[0], maps.offset[0], maps.offset[1], maps.stride,
                                     cfg.center_threshold, cfg.max_peaks, PeakClass::center);
    out.vertex_peaks = extract_peaks(maps.heatmap[1], maps.offset[0], maps.offset[1], maps.stride,
                                     cfg.vertex_threshold, cfg.max_peaks, PeakClass::vertex);
    auto cells = decode_cells(out.center_peaks, maps.cv, maps.stride, &out.discarded_cells);
    const double tau = cfg.tau_factor * maps.stride;
    const auto matches = cycle_match(cells, out.vertex_peaks, maps.vc, maps.stride, tau);
    auto grouped = group_and_snap(std::move(cells), matches);
    out.cells = std::move(grouped.cells);
    out.groups = std::move(grouped.groups);
    return out;
}

std::vector<structure::StructCell> to_struct_cells(const CellGroup& group,
                                                   const std::vector<DecodedCell>& cells) {
    std::map<int, const DecodedCell*> by_id;
    for (const auto& c : cells) by_id[c.id] = &c;

    std::vector<structure::StructCell> out;
    out.reserve(group.cell_ids.size());
    std::int64_t fresh = -1;
    for (int id : group.cell_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw std::invalid_argument("to_struct_cells: unknown cell id");
        const DecodedCell& c = *it->second;
        structure::StructCell sc;
        sc.id = c.id;
        sc.quad = geometry::CellQuad::from_points(c.corners);

        // Snapping moves corners, so re-canonicalization may permute them;
        // align each key with the canonical vertex nearest its source
        // corner.
        for (int k = 0; k < 4; ++k) {
            const geometry::Point v = sc.quad.vertex(k);
            int src = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < 4; ++j) {
                const double d = geometry::distance(v, c.corners[static_cast<size_t>(j)]);
                if (d < best) {
                    best = d;
                    src = j;
                }
            }
            const int vid = c.vertex_ids[static_cast<size_t>(src)];
            sc.vertex_keys[static_cast<size_t>(k)] = vid >= 0 ? vid : fresh--;
        }
        out.push_back(std::move(sc));
    }
    return out;
}

}  // namespace tablekit::decoder
