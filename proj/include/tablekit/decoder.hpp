#pragma once

#include <array>
#include <vector>

#include "tablekit/geometry.hpp"
#include "tablekit/structure.hpp"
#include "tablekit/targets.hpp"

namespace tablekit::decoder {

enum class PeakClass { center, vertex };

struct Peak {
    geometry::Point position;  // image pixels, offset-refined
    double score = 0.0;
    PeakClass cls = PeakClass::center;
    int px = 0, py = 0;  // source map pixel
};

struct DecodeConfig {
    double center_threshold = 0.3;
    double vertex_threshold = 0.3;
    int max_peaks = 2000;       // per class
    double tau_factor = 0.75;   // match tolerance = tau_factor * stride, image px
};

/// A cell regressed from one center peak. Corners are in canonical quad
/// order. After snapping, `vertex_ids[k]` holds the matched vertex peak (or
/// -1 where the corner kept its regressed position).
struct DecodedCell {
    int id = -1;
    Peak center;
    std::array<geometry::Point, 4> corners{};
    std::array<int, 4> vertex_ids{-1, -1, -1, -1};
};

/// One accepted mutual match between a cell corner and a vertex peak.
struct CornerMatch {
    int cell_id = -1;
    int corner = -1;
    int vertex_id = -1;
};

/// A connected component of cells under shared matched vertices: one table.
struct CellGroup {
    int table_id = -1;
    std::vector<int> cell_ids;    // sorted
    std::vector<int> vertex_ids;  // sorted, vertices matched by group members
};

/// 3x3 local maxima of `heatmap` at or above `threshold`, refined by the
/// subpixel offset head and scaled to image pixels. Plateau ties go to the
/// first pixel in raster order. Returns at most `max_peaks` peaks, highest
/// score first (ties in raster order); peak ids are indices into the result.
std::vector<Peak> extract_peaks(const targets::Plane& heatmap, const targets::Plane& off_x,
                                const targets::Plane& off_y, int stride, double threshold,
                                int max_peaks, PeakClass cls);

/// Builds cells from center peaks and the cv map sampled at each peak's
/// source pixel. Corner k sits at center - cv_k (image px). Centers whose
/// corners fail convex validation are dropped and counted in *discarded.
std::vector<DecodedCell> decode_cells(const std::vector<Peak>& center_peaks,
                                      const std::array<targets::Plane, 8>& cv, int stride,
                                      int* discarded = nullptr);

/// Mutual matching: corner k of a cell matches vertex v when (i) v lies
/// within tau of the corner and (ii) some vc slot at v points back within
/// tau of the cell's center. Each corner takes the nearest such vertex,
/// ties by higher score then lower vertex id. Unmatched corners are simply
/// absent from the result.
std::vector<CornerMatch> cycle_match(const std::vector<DecodedCell>& cells,
                                     const std::vector<Peak>& vertex_peaks,
                                     const std::array<targets::Plane, 8>& vc, int stride,
                                     double tau);

struct GroupResult {
    std::vector<DecodedCell> cells;  // snapped
    std::vector<CellGroup> groups;   // ordered by smallest member cell id
};

/// Unions cells that share a matched vertex and snaps every matched corner
/// to the mean of all corner positions matched to that vertex. Idempotent:
/// re-running on its own output changes nothing. Cells without matches form
/// singleton groups.
GroupResult group_and_snap(std::vector<DecodedCell> cells,
                           const std::vector<CornerMatch>& matches);

struct DecodeOutput {
    std::vector<DecodedCell> cells;
    std::vector<CellGroup> groups;
    std::vector<Peak> center_peaks;
    std::vector<Peak> vertex_peaks;
    int discarded_cells = 0;
};

/// Full decoding pipeline over prediction maps shaped like TargetMaps.
DecodeOutput decode_maps(const targets::TargetMaps& maps, const DecodeConfig& cfg = {});

/// Structure-parser input for one group. Matched corners share their vertex
/// id as the grid key; unmatched corners get fresh keys no other corner can
/// share.
std::vector<structure::StructCell> to_struct_cells(const CellGroup& group,
                                                   const std::vector<DecodedCell>& cells);

}  // namespace tablekit::decoder
