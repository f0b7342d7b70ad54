#pragma once

#include <string>
#include <vector>

#include "tablekit/metrics.hpp"
#include "tablekit/synthgen.hpp"

namespace tablekit::eval {

inline constexpr const char* kReportSchema = "wtw-kit-report/1";

struct EvalOptions {
    std::vector<double> iou_grid{0.6, 0.7, 0.8, 0.9};
    bool do_physical = true;
    bool do_adjacency = true;
    bool do_teds = true;
    double merge_tol = 3.0;  // corner merge when structure must be recovered
    /// Worker threads; 0 means hardware concurrency. The TABLEKIT_THREADS
    /// environment variable caps the effective count.
    int threads = 0;
};

struct EvalPair {
    std::string name;
    synth::Annotation pred;
    synth::Annotation gt;
};

struct ImageEval {
    std::string name;
    /// Per-table structure failures on the prediction side; such tables are
    /// scored as empty predictions. Ground-truth failures abort evaluation.
    std::string error;
    std::vector<metrics::MatchStats> physical;   // per iou_grid entry
    std::vector<metrics::MatchStats> adjacency;  // per iou_grid entry
    double teds_sum = 0.0;
    int gt_tables = 0;
};

struct EvalReport {
    std::vector<double> iou_grid;
    bool has_physical = false;
    bool has_adjacency = false;
    bool has_teds = false;
    std::vector<ImageEval> images;

    // Micro-averaged over the corpus (counts pooled, then PRF).
    std::vector<metrics::Prf> physical;
    std::vector<metrics::Prf> adjacency;
    double teds_mean = 0.0;
    /// IoU-weighted mean of the adjacency F1 at thresholds 0.6/0.7/0.8/0.9;
    /// present only when the grid covers all four.
    bool has_weighted_avg = false;
    double weighted_avg_f1 = 0.0;
};

/// Evaluates one prediction/ground-truth annotation pair. Throws on invalid
/// ground truth; prediction-side structure failures degrade to empty
/// predictions and are recorded in the result.
ImageEval evaluate_image(const EvalPair& pair, const EvalOptions& opt = {});

/// Parallel map over images plus a deterministic sequential fold.
EvalReport evaluate_corpus(const std::vector<EvalPair>& pairs, const EvalOptions& opt = {});

std::string report_to_json(const EvalReport& r);
void write_report(const EvalReport& r, const std::string& path);

}  // namespace tablekit::eval
