#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tablekit/geometry.hpp"

namespace tablekit::targets {

/// Row-major dense plane of map cells.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0.0) {}

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

struct IncidentCorner {
    int cell = -1;    // index into the flat cell list passed to collect_shared_vertices
    int corner = -1;  // canonical corner index k of that cell, 0..3
};

/// A grid vertex where corners of up to four cells coincide. Slots follow
/// the quadrant of the incident cell's center relative to the vertex:
/// up-left, up-right, down-left, down-right. A cell whose quadrant slot is
/// taken falls through to the first free slot.
struct SharedVertex {
    geometry::Point position;  // image pixels, mean of the merged corners
    std::array<std::optional<IncidentCorner>, 4> slots;

    int incident_count() const {
        int n = 0;
        for (const auto& s : slots) n += s.has_value() ? 1 : 0;
        return n;
    }
};

/// Merges cell corners lying within `tol` (Euclidean, via union-find) into
/// shared vertices. Throws std::runtime_error when more than four corners
/// collapse into one vertex or a cell touches a vertex twice.
std::vector<SharedVertex> collect_shared_vertices(const std::vector<geometry::CellQuad>& cells,
                                                  double tol);

/// One supervised center-vertex pair: a cell's corner slot in the cv map
/// bound to the vertex slot in the vc map that points back at the cell.
struct PairTarget {
    int center_x = 0, center_y = 0;  // map pixel carrying the cell's cv vector
    int corner = 0;                  // cv channel pair index k
    int vertex_x = 0, vertex_y = 0;  // map pixel carrying the vertex's vc vectors
    int slot = 0;                    // vc channel pair index
};

/// Dense training targets (or network outputs): CenterNet-style keypoint
/// heatmaps, a shared subpixel offset head, and the two 8-channel
/// center-to-vertex / vertex-to-center offset maps with their supervision
/// masks. All offsets are stored in map-cell units.
struct TargetMaps {
    int stride = 1;
    int width = 0;   // map columns
    int height = 0;  // map rows

    std::array<Plane, 2> heatmap;  // channel 0 = centers, 1 = vertices
    std::array<Plane, 2> offset;   // subpixel dx, dy shared by both classes
    std::array<Plane, 8> cv;       // center-to-vertex, channels (2k, 2k+1)
    std::array<Plane, 8> vc;       // vertex-to-center, channels (2k, 2k+1)
    Plane cv_mask;                 // 1 at annotated center pixels
    std::array<Plane, 4> vc_mask;  // 1 per valid incident slot at vertex pixels

    // Derived during encoding; not part of the binary format.
    std::vector<PairTarget> pairs;
    int offset_collisions = 0;  // center offsets overridden by a vertex on the same pixel
};

struct EncodeConfig {
    double merge_tol = 3.0;           // image px; corner merge tolerance
    double gaussian_radius_floor = 2.0;  // map cells
};

/// Raises plane values under a Gaussian bump centered at the pixel nearest
/// to `center` (map-scale coordinates): value = max(old, exp(-d^2/(2 sigma^2)))
/// with sigma = radius/3 inside a square window of half-width ceil(radius).
/// The rounded center pixel gets exactly 1. Contributions outside the plane
/// are clipped. Throws std::invalid_argument on radius < 1.
void splat_gaussian(Plane& plane, geometry::Point center, double radius);

/// Encodes ground-truth cells (grouped per table; shared vertices are
/// collected within each table) into dense maps at the given stride. Cell
/// indices run in flattened (table-major) order. Throws std::runtime_error
/// when two centers or two vertices quantize to the same map pixel, and
/// std::invalid_argument when a cell lies outside the image.
TargetMaps encode_targets(const std::vector<std::vector<geometry::CellQuad>>& tables,
                          int image_width, int image_height, int stride,
                          const EncodeConfig& cfg = {});

/// Per-cell heatmap radius: half the smaller cell side in map cells,
/// floored at cfg.gaussian_radius_floor.
double gaussian_radius(const geometry::CellQuad& q, int stride, const EncodeConfig& cfg = {});

/// Binary serialization, magic "CCTM": version u16, stride u16, height u32,
/// width u32 (all little-endian), then every plane in declared order
/// (heatmap, offset, cv, vc, cv_mask, vc_mask) as row-major little-endian
/// float32. The pair table is not serialized.
void write_target_maps(const TargetMaps& maps, const std::string& path);
TargetMaps read_target_maps(const std::string& path);

}  // namespace tablekit::targets
