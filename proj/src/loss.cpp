#include "tablekit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "tablekit/rng.hpp"

namespace tablekit::loss {

namespace {

double l1(double a, double b) { return std::abs(a - b); }

double sgn(double d) {
    if (d > 0.0) return 1.0;
    if (d < 0.0) return -1.0;
    return 0.0;
}

bool any_supervision(const targets::TargetMaps& tm) {
    for (double v : tm.cv_mask.data)
        if (v != 0.0) return true;
    for (const auto& m : tm.vc_mask)
        for (double v : m.data)
            if (v != 0.0) return true;
    return false;
}

PairObservation observe(const std::array<targets::Plane, 8>& pred_cv,
                        const std::array<targets::Plane, 8>& pred_vc,
                        const targets::TargetMaps& tm, const targets::PairTarget& p) {
    PairObservation o;
    const int cx = 2 * p.corner, cy = 2 * p.corner + 1;
    const int vx = 2 * p.slot, vy = 2 * p.slot + 1;
    o.pred_cv = {pred_cv[cx].at(p.center_x, p.center_y), pred_cv[cy].at(p.center_x, p.center_y)};
    o.gt_cv = {tm.cv[cx].at(p.center_x, p.center_y), tm.cv[cy].at(p.center_x, p.center_y)};
    o.pred_vc = {pred_vc[vx].at(p.vertex_x, p.vertex_y), pred_vc[vy].at(p.vertex_x, p.vertex_y)};
    o.gt_vc = {tm.vc[vx].at(p.vertex_x, p.vertex_y), tm.vc[vy].at(p.vertex_x, p.vertex_y)};
    return o;
}

std::vector<std::pair<int, int>> keypoint_pixels(const targets::TargetMaps& tm) {
    std::vector<std::pair<int, int>> px;
    for (int y = 0; y < tm.height; ++y) {
        for (int x = 0; x < tm.width; ++x) {
            bool on = tm.cv_mask.at(x, y) != 0.0;
            for (int s = 0; s < 4 && !on; ++s) on = tm.vc_mask[s].at(x, y) != 0.0;
            if (on) px.emplace_back(x, y);
        }
    }
    return px;
}

}  // namespace

double pair_distance(const PairObservation& o, const LossConfig& cfg) {
    const double err = l1(o.pred_cv[0], o.gt_cv[0]) + l1(o.pred_cv[1], o.gt_cv[1]) +
                       l1(o.pred_vc[0], o.gt_vc[0]) + l1(o.pred_vc[1], o.gt_vc[1]);
    const double denom = std::max(std::abs(o.gt_cv[0]) + std::abs(o.gt_cv[1]), cfg.eps_denominator);
    return std::min(err / denom, 1.0);
}

double pair_weight(double d) { return 1.0 - std::exp(-std::numbers::pi * d); }

Prediction Prediction::zeros_like(const targets::TargetMaps& tm) {
    Prediction p;
    targets::Plane zero(tm.width, tm.height);
    p.heatmap = {zero, zero};
    p.offset = {zero, zero};
    p.cv.fill(zero);
    p.vc.fill(zero);
    return p;
}

Prediction Prediction::from_targets(const targets::TargetMaps& tm, double heatmap_clamp) {
    Prediction p;
    p.heatmap = tm.heatmap;
    for (auto& h : p.heatmap)
        for (double& v : h.data) v = std::clamp(v, heatmap_clamp, 1.0 - heatmap_clamp);
    p.offset = tm.offset;
    p.cv = tm.cv;
    p.vc = tm.vc;
    return p;
}

std::vector<double> pair_weights(const std::array<targets::Plane, 8>& pred_cv,
                                 const std::array<targets::Plane, 8>& pred_vc,
                                 const targets::TargetMaps& tm, const LossConfig& cfg) {
    std::vector<double> w;
    w.reserve(tm.pairs.size());
    for (const auto& p : tm.pairs)
        w.push_back(pair_weight(pair_distance(observe(pred_cv, pred_vc, tm, p), cfg)));
    return w;
}

double pairing_loss_with_weights(const std::array<targets::Plane, 8>& pred_cv,
                                 const std::array<targets::Plane, 8>& pred_vc,
                                 const targets::TargetMaps& tm, const LossConfig& cfg,
                                 const std::vector<double>& weights) {
    if (weights.size() != tm.pairs.size())
        throw std::invalid_argument("pairing_loss_with_weights: weight count mismatch");
    if (tm.pairs.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < tm.pairs.size(); ++i) {
        const PairObservation o = observe(pred_cv, pred_vc, tm, tm.pairs[i]);
        const double l_cv = l1(o.pred_cv[0], o.gt_cv[0]) + l1(o.pred_cv[1], o.gt_cv[1]);
        const double l_vc = l1(o.pred_vc[0], o.gt_vc[0]) + l1(o.pred_vc[1], o.gt_vc[1]);
        sum += weights[i] * (cfg.lambda_cv * l_cv + cfg.lambda_vc * l_vc);
    }
    return sum / static_cast<double>(tm.pairs.size());
}

PairingLossResult pairing_loss(const std::array<targets::Plane, 8>& pred_cv,
                               const std::array<targets::Plane, 8>& pred_vc,
                               const targets::TargetMaps& tm, const LossConfig& cfg) {
    PairingLossResult r;
    targets::Plane zero(tm.width, tm.height);
    r.grad_cv.fill(zero);
    r.grad_vc.fill(zero);
    if (tm.pairs.empty()) {
        if (any_supervision(tm))
            throw std::runtime_error(
                "pairing_loss: targets carry supervision but no pair table; "
                "targets must come from encode_targets, not from deserialization");
        return r;
    }

    const double n = static_cast<double>(tm.pairs.size());
    for (const auto& p : tm.pairs) {
        const PairObservation o = observe(pred_cv, pred_vc, tm, p);
        const double w = pair_weight(pair_distance(o, cfg));
        const double l_cv = l1(o.pred_cv[0], o.gt_cv[0]) + l1(o.pred_cv[1], o.gt_cv[1]);
        const double l_vc = l1(o.pred_vc[0], o.gt_vc[0]) + l1(o.pred_vc[1], o.gt_vc[1]);
        r.value += w * (cfg.lambda_cv * l_cv + cfg.lambda_vc * l_vc) / n;

        const int cx = 2 * p.corner, cy = 2 * p.corner + 1;
        const int vx = 2 * p.slot, vy = 2 * p.slot + 1;
        r.grad_cv[cx].at(p.center_x, p.center_y) +=
            w * cfg.lambda_cv * sgn(o.pred_cv[0] - o.gt_cv[0]) / n;
        r.grad_cv[cy].at(p.center_x, p.center_y) +=
            w * cfg.lambda_cv * sgn(o.pred_cv[1] - o.gt_cv[1]) / n;
        r.grad_vc[vx].at(p.vertex_x, p.vertex_y) +=
            w * cfg.lambda_vc * sgn(o.pred_vc[0] - o.gt_vc[0]) / n;
        r.grad_vc[vy].at(p.vertex_x, p.vertex_y) +=
            w * cfg.lambda_vc * sgn(o.pred_vc[1] - o.gt_vc[1]) / n;
    }
    return r;
}

TotalLossResult total_loss(const Prediction& pred, const targets::TargetMaps& tm,
                           const LossConfig& cfg) {
    for (int c = 0; c < 2; ++c) {
        if (pred.heatmap[c].width != tm.width || pred.heatmap[c].height != tm.height)
            throw std::invalid_argument("total_loss: heatmap shape mismatch");
        for (double v : pred.heatmap[c].data)
            if (!(v > 0.0 && v < 1.0))
                throw std::invalid_argument(
                    "total_loss: heatmap prediction outside (0,1); apply the squashing "
                    "nonlinearity before calling");
    }

    TotalLossResult r;
    r.grad = Prediction::zeros_like(tm);

    // Penalty-reduced focal loss, normalized by the number of peak pixels.
    long n_pos = 0;
    for (int c = 0; c < 2; ++c)
        for (double y : tm.heatmap[c].data)
            if (y == 1.0) ++n_pos;
    const double n_k = static_cast<double>(std::max<long>(n_pos, 1));
    const double a = cfg.focal_alpha, b = cfg.focal_beta;
    for (int c = 0; c < 2; ++c) {
        for (int yy = 0; yy < tm.height; ++yy) {
            for (int xx = 0; xx < tm.width; ++xx) {
                const double y = tm.heatmap[c].at(xx, yy);
                const double p = pred.heatmap[c].at(xx, yy);
                double term, grad;
                if (y == 1.0) {
                    term = -std::pow(1.0 - p, a) * std::log(p);
                    grad = a * std::pow(1.0 - p, a - 1.0) * std::log(p) -
                           std::pow(1.0 - p, a) / p;
                } else {
                    const double damp = std::pow(1.0 - y, b);
                    term = -damp * std::pow(p, a) * std::log(1.0 - p);
                    grad = -damp *
                           (a * std::pow(p, a - 1.0) * std::log(1.0 - p) - std::pow(p, a) / (1.0 - p));
                }
                r.keypoint += term / n_k;
                r.grad.heatmap[c].at(xx, yy) = grad / n_k;
            }
        }
    }

    // l1 offset loss at supervised keypoint pixels.
    const auto kp = keypoint_pixels(tm);
    const double n_off = static_cast<double>(std::max<std::size_t>(kp.size(), 1));
    for (auto [x, y] : kp) {
        for (int c = 0; c < 2; ++c) {
            const double d = pred.offset[c].at(x, y) - tm.offset[c].at(x, y);
            r.offset += std::abs(d) / n_off;
            r.grad.offset[c].at(x, y) = cfg.lambda_off * sgn(d) / n_off;
        }
    }

    PairingLossResult pairing = pairing_loss(pred.cv, pred.vc, tm, cfg);
    r.pairing = pairing.value;
    r.grad.cv = std::move(pairing.grad_cv);
    r.grad.vc = std::move(pairing.grad_vc);

    r.value = r.keypoint + cfg.lambda_off * r.offset + r.pairing;
    return r;
}

namespace {

// Additive noise that stays clear of the l1 kink at pred == gt. The kink
// margin must dominate the difference step by orders of magnitude for the
// two-sided quotient to see a single linear piece.
double kink_safe_noise(Rng& rng) {
    const double mag = rng.next_in(0.25, 0.75);
    return rng.next_unit() < 0.5 ? -mag : mag;
}

struct CoordRef {
    targets::Plane* plane;
    int x, y;
};

GradCheckReport run_fd(const std::vector<CoordRef>& coords,
                       const std::vector<const targets::Plane*>& grads, double step,
                       const std::function<double()>& frozen_value) {
    GradCheckReport rep;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        double& v = coords[i].plane->at(coords[i].x, coords[i].y);
        const double saved = v;
        v = saved + step;
        const double up = frozen_value();
        v = saved - step;
        const double down = frozen_value();
        v = saved;
        const double fd = (up - down) / (2.0 * step);
        const double an = grads[i]->at(coords[i].x, coords[i].y);
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        rep.max_rel_err = std::max(rep.max_rel_err, std::abs(fd - an) / denom);
        ++rep.coords_checked;
    }
    return rep;
}

}  // namespace

GradCheckReport check_pairing_gradients(const targets::TargetMaps& tm, std::uint64_t seed,
                                        double step, const LossConfig& cfg) {
    Rng rng(seed);
    auto pred_cv = tm.cv;
    auto pred_vc = tm.vc;

    std::vector<CoordRef> coords;
    for (const auto& p : tm.pairs) {
        for (int c = 0; c < 2; ++c) {
            auto& plane = pred_cv[2 * p.corner + c];
            plane.at(p.center_x, p.center_y) += kink_safe_noise(rng);
            coords.push_back({&plane, p.center_x, p.center_y});
        }
        for (int c = 0; c < 2; ++c) {
            auto& plane = pred_vc[2 * p.slot + c];
            plane.at(p.vertex_x, p.vertex_y) += kink_safe_noise(rng);
            coords.push_back({&plane, p.vertex_x, p.vertex_y});
        }
    }
    // A few unsupervised positions, to confirm the gradient is exactly zero
    // there. Noise at these spots must not leak into the loss either.
    for (int k = 0; k < 8; ++k) {
        const int x = static_cast<int>(rng.next_below(tm.width));
        const int y = static_cast<int>(rng.next_below(tm.height));
        const int ch = static_cast<int>(rng.next_below(8));
        if (tm.cv_mask.at(x, y) == 0.0) {
            pred_cv[ch].at(x, y) += kink_safe_noise(rng);
            coords.push_back({&pred_cv[ch], x, y});
        }
    }

    const auto weights = pair_weights(pred_cv, pred_vc, tm, cfg);
    const auto analytic = pairing_loss(pred_cv, pred_vc, tm, cfg);

    std::vector<const targets::Plane*> grads;
    grads.reserve(coords.size());
    for (const auto& c : coords) {
        const targets::Plane* g = nullptr;
        for (int ch = 0; ch < 8; ++ch) {
            if (c.plane == &pred_cv[ch]) g = &analytic.grad_cv[ch];
            if (c.plane == &pred_vc[ch]) g = &analytic.grad_vc[ch];
        }
        grads.push_back(g);
    }

    auto frozen = [&]() { return pairing_loss_with_weights(pred_cv, pred_vc, tm, cfg, weights); };
    return run_fd(coords, grads, step, frozen);
}

GradCheckReport check_total_gradients(const targets::TargetMaps& tm, std::uint64_t seed,
                                      double step, const LossConfig& cfg) {
    Rng rng(seed);
    Prediction pred = Prediction::from_targets(tm);

    std::vector<CoordRef> coords;
    // Heatmaps: every pixel participates in the focal term. Uniform scores
    // keep the prediction strictly inside (0,1) and far from saturation.
    for (int c = 0; c < 2; ++c) {
        for (int y = 0; y < tm.height; ++y) {
            for (int x = 0; x < tm.width; ++x) {
                pred.heatmap[c].at(x, y) = rng.next_in(0.05, 0.95);
                coords.push_back({&pred.heatmap[c], x, y});
            }
        }
    }
    for (auto [x, y] : keypoint_pixels(tm)) {
        for (int c = 0; c < 2; ++c) {
            pred.offset[c].at(x, y) += kink_safe_noise(rng);
            coords.push_back({&pred.offset[c], x, y});
        }
    }
    for (const auto& p : tm.pairs) {
        for (int c = 0; c < 2; ++c) {
            pred.cv[2 * p.corner + c].at(p.center_x, p.center_y) += kink_safe_noise(rng);
            coords.push_back({&pred.cv[2 * p.corner + c], p.center_x, p.center_y});
        }
        for (int c = 0; c < 2; ++c) {
            pred.vc[2 * p.slot + c].at(p.vertex_x, p.vertex_y) += kink_safe_noise(rng);
            coords.push_back({&pred.vc[2 * p.slot + c], p.vertex_x, p.vertex_y});
        }
    }

    const auto weights = pair_weights(pred.cv, pred.vc, tm, cfg);
    const auto analytic = total_loss(pred, tm, cfg);

    std::vector<const targets::Plane*> grads;
    grads.reserve(coords.size());
    for (const auto& c : coords) {
        const targets::Plane* g = nullptr;
        for (int ch = 0; ch < 2; ++ch) {
            if (c.plane == &pred.heatmap[ch]) g = &analytic.grad.heatmap[ch];
            if (c.plane == &pred.offset[ch]) g = &analytic.grad.offset[ch];
        }
        for (int ch = 0; ch < 8; ++ch) {
            if (c.plane == &pred.cv[ch]) g = &analytic.grad.cv[ch];
            if (c.plane == &pred.vc[ch]) g = &analytic.grad.vc[ch];
        }
        grads.push_back(g);
    }

    // The frozen objective: focal and offset terms as-is (both smooth or
    // piecewise linear with fixed structure), pairing with weights pinned at
    // the linearization point.
    auto frozen = [&]() {
        double v = 0.0;
        long n_pos = 0;
        for (int c = 0; c < 2; ++c)
            for (double y : tm.heatmap[c].data)
                if (y == 1.0) ++n_pos;
        const double n_k = static_cast<double>(std::max<long>(n_pos, 1));
        for (int c = 0; c < 2; ++c) {
            for (int i = 0; i < tm.width * tm.height; ++i) {
                const double y = tm.heatmap[c].data[i];
                const double p = pred.heatmap[c].data[i];
                if (y == 1.0)
                    v += -std::pow(1.0 - p, cfg.focal_alpha) * std::log(p) / n_k;
                else
                    v += -std::pow(1.0 - y, cfg.focal_beta) * std::pow(p, cfg.focal_alpha) *
                         std::log(1.0 - p) / n_k;
            }
        }
        const auto kp = keypoint_pixels(tm);
        const double n_off = static_cast<double>(std::max<std::size_t>(kp.size(), 1));
        double off = 0.0;
        for (auto [x, y] : kp)
            for (int c = 0; c < 2; ++c)
                off += std::abs(pred.offset[c].at(x, y) - tm.offset[c].at(x, y)) / n_off;
        v += cfg.lambda_off * off;
        v += pairing_loss_with_weights(pred.cv, pred.vc, tm, cfg, weights);
        return v;
    };
    return run_fd(coords, grads, step, frozen);
}

}  // namespace tablekit::loss
