#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tablekit/targets.hpp"

namespace tablekit::loss {

struct LossConfig {
    double lambda_cv = 1.0;
    double lambda_vc = 0.5;
    double lambda_off = 1.0;
    double focal_alpha = 2.0;
    double focal_beta = 4.0;
    double eps_denominator = 1.0;  // map cells; floors the pair-distance denominator
};

/// Predicted and ground-truth offsets of one center-vertex pair, both
/// directions, in map-cell units.
struct PairObservation {
    std::array<double, 2> pred_cv{};
    std::array<double, 2> gt_cv{};
    std::array<double, 2> pred_vc{};
    std::array<double, 2> gt_vc{};
};

/// Regression error score of a pair: l1 error of both directions over the
/// magnitude of the true center-to-vertex offset, clamped to [0, 1].
double pair_distance(const PairObservation& o, const LossConfig& cfg = {});

/// Focusing weight 1 - exp(-pi*d); 0 at d = 0, saturating at 1 - e^-pi.
double pair_weight(double d);

/// All prediction heads, shaped like the target maps they regress.
struct Prediction {
    std::array<targets::Plane, 2> heatmap;
    std::array<targets::Plane, 2> offset;
    std::array<targets::Plane, 8> cv;
    std::array<targets::Plane, 8> vc;

    static Prediction zeros_like(const targets::TargetMaps& tm);
    /// Targets reinterpreted as a perfect prediction, heatmap clamped into
    /// (0,1) by `heatmap_clamp`.
    static Prediction from_targets(const targets::TargetMaps& tm, double heatmap_clamp = 1e-4);
};

struct PairingLossResult {
    double value = 0.0;
    std::array<targets::Plane, 8> grad_cv;
    std::array<targets::Plane, 8> grad_vc;
};

/// Focusing weight of every pair at the given predictions, in pair-table
/// order.
std::vector<double> pair_weights(const std::array<targets::Plane, 8>& pred_cv,
                                 const std::array<targets::Plane, 8>& pred_vc,
                                 const targets::TargetMaps& tm, const LossConfig& cfg = {});

/// Pairing loss with externally fixed focusing weights. This is the
/// stop-gradient objective: the weights do not vary with the predictions,
/// so it is also what the finite-difference oracle probes.
double pairing_loss_with_weights(const std::array<targets::Plane, 8>& pred_cv,
                                 const std::array<targets::Plane, 8>& pred_vc,
                                 const targets::TargetMaps& tm, const LossConfig& cfg,
                                 const std::vector<double>& weights);

/// Weighted pairwise l1 loss over both branch maps, normalized by the pair
/// count, plus its gradients. Gradients are exactly zero outside supervised
/// (pixel, slot) positions; the focusing weight is treated as constant.
/// Empty masks give value 0 and zero gradients. Throws std::runtime_error
/// when the targets carry supervision but no pair table.
PairingLossResult pairing_loss(const std::array<targets::Plane, 8>& pred_cv,
                               const std::array<targets::Plane, 8>& pred_vc,
                               const targets::TargetMaps& tm, const LossConfig& cfg = {});

struct TotalLossResult {
    double value = 0.0;
    double keypoint = 0.0;  // penalty-reduced focal over both heatmap channels
    double offset = 0.0;    // l1 at keypoint pixels
    double pairing = 0.0;
    Prediction grad;
};

/// Full detection loss: focal keypoint loss + lambda_off * offset l1 +
/// pairing loss, each with analytic gradients. Heatmap predictions must lie
/// strictly inside (0, 1); throws std::invalid_argument otherwise.
TotalLossResult total_loss(const Prediction& pred, const targets::TargetMaps& tm,
                           const LossConfig& cfg = {});

struct GradCheckReport {
    double max_rel_err = 0.0;
    int coords_checked = 0;
};

/// Central finite differences against the analytic pairing-loss gradient on
/// a noise-perturbed prediction built from `tm` (noise seeded by `seed`,
/// kept away from l1 kinks). The difference quotient probes the
/// stop-gradient objective.
GradCheckReport check_pairing_gradients(const targets::TargetMaps& tm, std::uint64_t seed,
                                        double step, const LossConfig& cfg = {});

/// Same check for the full detection loss, covering heatmap, offset, and
/// both pairing heads.
GradCheckReport check_total_gradients(const targets::TargetMaps& tm, std::uint64_t seed,
                                      double step, const LossConfig& cfg = {});

}  // namespace tablekit::loss
