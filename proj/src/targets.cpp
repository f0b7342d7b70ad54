#include "tablekit/targets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace tablekit::targets {

namespace {

using geometry::CellQuad;
using geometry::Point;

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
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
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

int quadrant_slot(Point cell_center, Point vertex) {
    const bool right = cell_center.x >= vertex.x;
    const bool down = cell_center.y >= vertex.y;
    return (down ? 2 : 0) + (right ? 1 : 0);
}

int round_px(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

std::vector<SharedVertex> collect_shared_vertices(const std::vector<CellQuad>& cells, double tol) {
    if (tol < 0.0) throw std::invalid_argument("collect_shared_vertices: tol must be >= 0");

    const size_t n_corners = cells.size() * 4;
    std::vector<Point> corners(n_corners);
    for (size_t i = 0; i < cells.size(); ++i) {
        for (int k = 0; k < 4; ++k) corners[i * 4 + k] = cells[i].vertex(k);
    }

    UnionFind uf(n_corners);
    for (size_t i = 0; i < n_corners; ++i) {
        for (size_t j = i + 1; j < n_corners; ++j) {
            if (std::abs(corners[i].x - corners[j].x) > tol) continue;
            if (std::abs(corners[i].y - corners[j].y) > tol) continue;
            if (geometry::distance(corners[i], corners[j]) <= tol) uf.unite(static_cast<int>(i), static_cast<int>(j));
        }
    }

    // Group corners by root, in order of first appearance.
    std::vector<int> root_order;
    std::vector<std::vector<int>> groups;
    std::vector<int> root_to_group(n_corners, -1);
    for (size_t i = 0; i < n_corners; ++i) {
        const int r = uf.find(static_cast<int>(i));
        if (root_to_group[r] < 0) {
            root_to_group[r] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[root_to_group[r]].push_back(static_cast<int>(i));
    }

    std::vector<SharedVertex> vertices;
    vertices.reserve(groups.size());
    for (const auto& group : groups) {
        if (group.size() > 4) {
            throw std::runtime_error("collect_shared_vertices: more than 4 corners merged into one vertex (malformed annotation)");
        }
        SharedVertex v;
        double sx = 0, sy = 0;
        for (int gi : group) {
            sx += corners[gi].x;
            sy += corners[gi].y;
        }
        v.position = {sx / group.size(), sy / group.size()};

        std::vector<int> seen_cells;
        struct Entry {
            int quadrant;
            IncidentCorner ic;
        };
        std::vector<Entry> entries;
        for (int gi : group) {
            const int cell = gi / 4;
            const int corner = gi % 4;
            if (std::find(seen_cells.begin(), seen_cells.end(), cell) != seen_cells.end()) {
                throw std::runtime_error("collect_shared_vertices: two corners of one cell merged into the same vertex (malformed annotation)");
            }
            seen_cells.push_back(cell);
            const Point c = geometry::quad_center(cells[static_cast<size_t>(cell)]);
            entries.push_back({quadrant_slot(c, v.position), {cell, corner}});
        }
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.quadrant != b.quadrant) return a.quadrant < b.quadrant;
            return a.ic.cell < b.ic.cell;
        });
        for (const Entry& e : entries) {
            int slot = e.quadrant;
            if (v.slots[static_cast<size_t>(slot)]) {
                // Quadrant collision under deformation: take the first free slot.
                slot = 0;
                while (slot < 4 && v.slots[static_cast<size_t>(slot)]) ++slot;
            }
            v.slots[static_cast<size_t>(slot)] = e.ic;
        }
        vertices.push_back(std::move(v));
    }
    return vertices;
}

void splat_gaussian(Plane& plane, Point center, double radius) {
    if (radius < 1.0) throw std::invalid_argument("splat_gaussian: radius must be >= 1");
    const int cx = round_px(center.x);
    const int cy = round_px(center.y);
    const int win = static_cast<int>(std::ceil(radius));
    const double sigma = radius / 3.0;
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    for (int dy = -win; dy <= win; ++dy) {
        for (int dx = -win; dx <= win; ++dx) {
            const int x = cx + dx;
            const int y = cy + dy;
            if (!plane.contains(x, y)) continue;
            const double val = std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
            plane.at(x, y) = std::max(plane.at(x, y), val);
        }
    }
}

double gaussian_radius(const CellQuad& q, int stride, const EncodeConfig& cfg) {
    const auto& v = q.vertices();
    const double w = 0.5 * (geometry::distance(v[0], v[1]) + geometry::distance(v[3], v[2]));
    const double h = 0.5 * (geometry::distance(v[0], v[3]) + geometry::distance(v[1], v[2]));
    return std::max(cfg.gaussian_radius_floor, std::min(w, h) / (2.0 * stride));
}

TargetMaps encode_targets(const std::vector<std::vector<CellQuad>>& tables,
                          int image_width, int image_height, int stride,
                          const EncodeConfig& cfg) {
    if (stride < 1) throw std::invalid_argument("encode_targets: stride must be >= 1");
    if (image_width < 1 || image_height < 1) throw std::invalid_argument("encode_targets: empty image");

    TargetMaps tm;
    tm.stride = stride;
    tm.width = (image_width + stride - 1) / stride;
    tm.height = (image_height + stride - 1) / stride;
    auto make = [&]() { return Plane(tm.width, tm.height); };
    for (auto& p : tm.heatmap) p = make();
    for (auto& p : tm.offset) p = make();
    for (auto& p : tm.cv) p = make();
    for (auto& p : tm.vc) p = make();
    tm.cv_mask = make();
    for (auto& p : tm.vc_mask) p = make();

    const double s = stride;

    // Centers first; vertex offsets override afterwards.
    std::vector<std::vector<std::pair<int, int>>> center_px_per_table;  // map pixel per cell
    Plane center_owner(tm.width, tm.height);
    std::fill(center_owner.data.begin(), center_owner.data.end(), -1.0);

    int global_cell = 0;
    for (const auto& cells : tables) {
        center_px_per_table.emplace_back();
        for (const CellQuad& q : cells) {
            for (const Point& p : q.vertices()) {
                if (p.x < 0 || p.y < 0 || p.x > image_width || p.y > image_height) {
                    throw std::invalid_argument("encode_targets: cell extends outside the image");
                }
            }
            const Point c = geometry::quad_center(q);
            const double mx = c.x / s;
            const double my = c.y / s;
            const int px = round_px(mx);
            const int py = round_px(my);
            if (!tm.cv_mask.contains(px, py)) {
                throw std::invalid_argument("encode_targets: cell center quantizes outside the map");
            }
            if (tm.cv_mask.at(px, py) != 0.0) {
                throw std::runtime_error("encode_targets: two cell centers quantize to map pixel (" +
                                         std::to_string(px) + "," + std::to_string(py) + "); stride too coarse");
            }
            tm.cv_mask.at(px, py) = 1.0;
            center_owner.at(px, py) = global_cell;
            center_px_per_table.back().push_back({px, py});
            for (int k = 0; k < 4; ++k) {
                const Point v = q.vertex(k);
                tm.cv[static_cast<size_t>(2 * k)].at(px, py) = (c.x - v.x) / s;
                tm.cv[static_cast<size_t>(2 * k + 1)].at(px, py) = (c.y - v.y) / s;
            }
            tm.offset[0].at(px, py) = mx - px;
            tm.offset[1].at(px, py) = my - py;
            splat_gaussian(tm.heatmap[0], {mx, my}, gaussian_radius(q, stride, cfg));
            ++global_cell;
        }
    }

    Plane vertex_claim(tm.width, tm.height);
    int cell_base = 0;
    for (size_t t = 0; t < tables.size(); ++t) {
        const auto& cells = tables[t];
        const auto vertices = collect_shared_vertices(cells, cfg.merge_tol);
        for (const SharedVertex& v : vertices) {
            const double mx = v.position.x / s;
            const double my = v.position.y / s;
            const int px = round_px(mx);
            const int py = round_px(my);
            if (!vertex_claim.contains(px, py)) {
                throw std::invalid_argument("encode_targets: vertex quantizes outside the map");
            }
            if (vertex_claim.at(px, py) != 0.0) {
                throw std::runtime_error("encode_targets: two shared vertices quantize to map pixel (" +
                                         std::to_string(px) + "," + std::to_string(py) + "); stride too coarse");
            }
            vertex_claim.at(px, py) = 1.0;
            if (center_owner.at(px, py) >= 0.0) ++tm.offset_collisions;
            tm.offset[0].at(px, py) = mx - px;
            tm.offset[1].at(px, py) = my - py;

            for (int slot = 0; slot < 4; ++slot) {
                const auto& inc = v.slots[static_cast<size_t>(slot)];
                if (!inc) continue;  // unfilled slots stay zero
                const CellQuad& q = cells[static_cast<size_t>(inc->cell)];
                const Point c = geometry::quad_center(q);
                tm.vc[static_cast<size_t>(2 * slot)].at(px, py) = (v.position.x - c.x) / s;
                tm.vc[static_cast<size_t>(2 * slot + 1)].at(px, py) = (v.position.y - c.y) / s;
                tm.vc_mask[static_cast<size_t>(slot)].at(px, py) = 1.0;
                splat_gaussian(tm.heatmap[1], {mx, my}, gaussian_radius(q, stride, cfg));

                const auto [cpx, cpy] = center_px_per_table[t][static_cast<size_t>(inc->cell)];
                tm.pairs.push_back({cpx, cpy, inc->corner, px, py, slot});
            }
        }
        cell_base += static_cast<int>(cells.size());
    }
    (void)cell_base;
    return tm;
}

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_plane(std::string& out, const Plane& p) {
    for (double d : p.data) {
        const float f = static_cast<float>(d);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(buf[pos]) |
                                                  (static_cast<unsigned char>(buf[pos + 1]) << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    void plane(Plane& p, int w, int h) {
        p = Plane(w, h);
        for (double& d : p.data) {
            const std::uint32_t bits = u32();
            float f;
            std::memcpy(&f, &bits, 4);
            d = f;
        }
    }
    void need(size_t n) {
        if (pos + n > buf.size()) throw std::runtime_error("read_target_maps: truncated file");
    }
};

constexpr std::uint16_t kFormatVersion = 1;

}  // namespace

void write_target_maps(const TargetMaps& tm, const std::string& path) {
    std::string out;
    out.reserve(16 + static_cast<size_t>(tm.width) * tm.height * 25 * 4);
    out += "CCTM";
    put_u16(out, kFormatVersion);
    put_u16(out, static_cast<std::uint16_t>(tm.stride));
    put_u32(out, static_cast<std::uint32_t>(tm.height));
    put_u32(out, static_cast<std::uint32_t>(tm.width));
    for (const auto& p : tm.heatmap) put_plane(out, p);
    for (const auto& p : tm.offset) put_plane(out, p);
    for (const auto& p : tm.cv) put_plane(out, p);
    for (const auto& p : tm.vc) put_plane(out, p);
    put_plane(out, tm.cv_mask);
    for (const auto& p : tm.vc_mask) put_plane(out, p);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_target_maps: cannot open " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write_target_maps: write failed for " + path);
}

TargetMaps read_target_maps(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_target_maps: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf};
    r.need(4);
    if (buf.compare(0, 4, "CCTM") != 0) throw std::runtime_error("read_target_maps: bad magic in " + path);
    r.pos = 4;
    const auto version = r.u16();
    if (version != kFormatVersion) {
        throw std::runtime_error("read_target_maps: unsupported version " + std::to_string(version));
    }
    TargetMaps tm;
    tm.stride = r.u16();
    tm.height = static_cast<int>(r.u32());
    tm.width = static_cast<int>(r.u32());
    if (tm.stride < 1 || tm.width < 1 || tm.height < 1) {
        throw std::runtime_error("read_target_maps: bad header in " + path);
    }
    for (auto& p : tm.heatmap) r.plane(p, tm.width, tm.height);
    for (auto& p : tm.offset) r.plane(p, tm.width, tm.height);
    for (auto& p : tm.cv) r.plane(p, tm.width, tm.height);
    for (auto& p : tm.vc) r.plane(p, tm.width, tm.height);
    r.plane(tm.cv_mask, tm.width, tm.height);
    for (auto& p : tm.vc_mask) r.plane(p, tm.width, tm.height);
    if (r.pos != buf.size()) throw std::runtime_error("read_target_maps: trailing bytes in " + path);
    return tm;
}

}  // namespace tablekit::targets
