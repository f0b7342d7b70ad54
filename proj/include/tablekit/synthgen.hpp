#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tablekit/decoder.hpp"
#include "tablekit/geometry.hpp"
#include "tablekit/targets.hpp"

namespace tablekit::synth {

/// One annotated cell: quad plus (optional) known row/column spans,
/// inclusive on both ends.
struct AnnotatedCell {
    int id = -1;
    geometry::CellQuad quad;
    bool has_span = false;
    int start_row = 0, end_row = 0;
    int start_col = 0, end_col = 0;
};

struct AnnotatedTable {
    int id = 0;
    std::vector<AnnotatedCell> cells;
};

/// An annotated image: canvas size and its tables. Cell ids are unique
/// across the whole annotation.
struct Annotation {
    int width = 0;
    int height = 0;
    std::string generator;  // RNG algorithm id for generated fixtures, else empty
    std::vector<AnnotatedTable> tables;
};

struct SynthConfig {
    int rows = 3;
    int cols = 3;
    double merge_prob = 0.0;
    double cell_min = 24.0;  // px
    double cell_max = 64.0;  // px
    double margin = 32.0;    // px border around the grid
    /// Gaussian sigma displacing each grid vertex (irregular tables). Every
    /// corner incident to a vertex moves together, so corners stay shared.
    double corner_jitter = 0.0;
    geometry::Deformation deformation;  // applied by roundtrip(), not by generate_table()
    std::uint64_t seed = 0;
    /// Merges applied before any random ones; each entry is
    /// {row_a, col_a, row_b, col_b} of two slots whose cells merge.
    std::vector<std::array<int, 4>> forced_merges;
};

/// Deterministic axis-aligned wired table: per-row heights and per-column
/// widths drawn from [cell_min, cell_max], then neighbor merges. Random
/// merge attempts draw exactly two variates per slot regardless of outcome,
/// so layouts with equal seeds are comparable across merge_prob values. A
/// merge only happens when the union stays rectangular. Layouts whose spans
/// the structure parser cannot recover from geometry alone are redrawn
/// deterministically; std::runtime_error after too many redraws. Throws
/// std::invalid_argument on infeasible configs.
Annotation generate_table(const SynthConfig& cfg);

/// Applies `d` to every vertex, then refits the canvas with a 16 px pad.
/// Spans are preserved; an identity deformation returns the input
/// unchanged. Throws std::invalid_argument naming the first cell that
/// degenerates: non-convex after mapping, or (for curves) amplitude above
/// half the smallest cell extent along the displaced axis.
Annotation deform_annotation(const Annotation& a, const geometry::Deformation& d);

/// Grid of one annotated table: trusts spans when every cell carries them,
/// otherwise recovers structure from corner geometry (corner merge
/// tolerance `tol`, image px).
structure::TableGrid table_grid(const AnnotatedTable& t, double tol = 3.0);

/// Shifts every vertex by (dx, dy) and grows the canvas to fit.
Annotation translate_annotation(const Annotation& a, double dx, double dy);

/// Side-by-side union of two annotations on one canvas; tables and cells
/// of `b` are re-identified above those of `a`.
Annotation merge_annotations(const Annotation& a, const Annotation& b);

/// Deformation fleet for roundtrip batches, cycling through identity,
/// rotation (up to max_rotation degrees), mild perspective, and sinusoidal
/// curves. Curve amplitude stays within 5% of the table height and within
/// what the smallest cell tolerates. Parameters derive from `seed` alone.
geometry::Deformation sample_deformation(const Annotation& base, std::uint64_t seed,
                                         double max_rotation = 30.0);

struct PipelineParams {
    int stride = 4;
    targets::EncodeConfig encode;
    decoder::DecodeConfig decode;
    double corner_tol = 0.5;  // px; max corner error an ok verdict tolerates
    /// Robustness knobs: uniform noise injected into the encoded maps
    /// before decoding, amplitude in map value / map cell units.
    double heatmap_noise = 0.0;
    double map_noise = 0.0;  // offset, cv, and vc planes
    std::uint64_t noise_seed = 1;
};

struct RoundtripVerdict {
    bool ok = false;
    std::string error;  // stage-tagged message when a pipeline stage threw
    double adjacency_f1 = 0.0;
    double mean_teds = 0.0;           // over ground-truth tables
    double max_corner_err = std::numeric_limits<double>::infinity();
    int gt_cells = 0;
    int decoded_cells = 0;
    int decoded_groups = 0;
};

/// generate -> deform -> encode -> decode -> group -> parse -> compare.
RoundtripVerdict roundtrip(const SynthConfig& cfg, const PipelineParams& params = {});

/// Same comparison for an externally supplied ground truth.
RoundtripVerdict roundtrip_annotation(const Annotation& gt, const PipelineParams& params = {});

}  // namespace tablekit::synth
