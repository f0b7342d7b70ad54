// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "tablekit/decoder.hpp"
#include "tablekit/geometry.hpp"
#include "tablekit/loss.hpp"
#include "tablekit/metrics.hpp"
#include "tablekit/rng.hpp"
#include "tablekit/structure.hpp"
#include "tablekit/synthgen.hpp"
#include "tablekit/targets.hpp"

#include "oracles.hpp"

using namespace tablekit;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what, const std::string& detail = "") {
    std::printf("%s criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

// --- criterion 1: round-trip structural fidelity ---------------------------

void criterion_roundtrip() {
    constexpr int kSeeds = 200;
    constexpr double kMinPerfectFraction = 0.95;
    constexpr double kMaxCornerErr = 0.5;  // px
    constexpr double kMaxSeconds = 60.0;

    const auto t0 = std::chrono::steady_clock::now();
    int perfect = 0, undeformed = 0, undeformed_perfect = 0;
    double worst_corner = 0.0;
    std::string first_fail;

    for (int seed = 1; seed <= kSeeds; ++seed) {
        Rng dims(static_cast<std::uint64_t>(seed) ^ 0xacce97ull);
        synth::SynthConfig cfg;
        cfg.rows = 2 + static_cast<int>(dims.next_below(9));
        cfg.cols = 2 + static_cast<int>(dims.next_below(9));
        cfg.merge_prob = 0.2;
        cfg.seed = static_cast<std::uint64_t>(seed);
        const auto base = synth::generate_table(cfg);
        cfg.deformation = synth::sample_deformation(base, static_cast<std::uint64_t>(seed));
        const bool is_identity =
            cfg.deformation.kind == geometry::Deformation::Kind::identity;

        const auto v = synth::roundtrip(cfg);
        const bool ok = v.ok && v.adjacency_f1 == 1.0 && v.mean_teds == 1.0 &&
                        v.max_corner_err <= kMaxCornerErr;
        perfect += ok ? 1 : 0;
        if (ok) worst_corner = std::max(worst_corner, v.max_corner_err);
        if (is_identity) {
            ++undeformed;
            undeformed_perfect += ok ? 1 : 0;
        }
        if (!ok && first_fail.empty())
            first_fail = "seed " + std::to_string(seed) +
                         (v.error.empty() ? "" : ": " + v.error);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "%d/%d perfect (undeformed %d/%d), worst corner err %.4f px, %.1f s%s%s",
                  perfect, kSeeds, undeformed_perfect, undeformed, worst_corner, secs,
                  first_fail.empty() ? "" : ", first failure ", first_fail.c_str());
    const bool ok = perfect >= static_cast<int>(kMinPerfectFraction * kSeeds) &&
                    undeformed > 0 && undeformed_perfect == undeformed &&
                    worst_corner <= kMaxCornerErr && secs <= kMaxSeconds;
    report(1, ok, "encode/decode/parse round trip on 200 seeded tables", detail);
}

// --- criterion 2: analytic gradients vs finite differences -----------------

void criterion_gradients() {
    constexpr int kInstances = 20;
    constexpr double kStep = 1e-4;
    constexpr double kTol = 1e-4;

    double worst = 0.0;
    int checked = 0;
    for (int i = 1; i <= kInstances; ++i) {
        synth::SynthConfig cfg;
        cfg.rows = 2;
        cfg.cols = 2;
        cfg.merge_prob = 0.3;
        cfg.cell_min = 12.0;
        cfg.cell_max = 20.0;
        cfg.margin = 8.0;
        cfg.seed = static_cast<std::uint64_t>(i) * 31 + 7;
        const auto ann = synth::generate_table(cfg);
        std::vector<std::vector<geometry::CellQuad>> tables;
        for (const auto& t : ann.tables) {
            tables.emplace_back();
            for (const auto& c : t.cells) tables.back().push_back(c.quad);
        }
        const auto maps = targets::encode_targets(tables, ann.width, ann.height, 4);

        const auto pg = loss::check_pairing_gradients(maps, cfg.seed, kStep);
        const auto tg = loss::check_total_gradients(maps, cfg.seed + 1, kStep);
        worst = std::max({worst, pg.max_rel_err, tg.max_rel_err});
        checked += pg.coords_checked + tg.coords_checked;
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "%d coordinates, max rel err %.3g", checked, worst);
    report(2, worst <= kTol && checked > 0,
           "pairing and total loss gradients match central differences", detail);
}

// --- criterion 3: focusing weight values ------------------------------------

void criterion_weight_function() {
    constexpr double kEndpointTol = 1e-9;
    bool ok = loss::pair_weight(0.0) == 0.0;
    ok = ok && std::abs(loss::pair_weight(1.0) - (1.0 - std::exp(-std::numbers::pi))) <=
                   kEndpointTol;
    for (int i = 0; ok && i < 1000; ++i)
        ok = loss::pair_weight((i + 1) * 1e-3) > loss::pair_weight(i * 1e-3);
    report(3, ok, "pair weight is 0 at 0, 1-e^-pi at 1, monotone on a 1e-3 grid");
}

// --- criterion 4: weighted-average F1 arithmetic ----------------------------

void criterion_weighted_avg() {
    constexpr double kTolPct = 0.05;
    const double got = 100.0 * metrics::weighted_avg_f1({0.808, 0.511, 0.319, 0.112});
    char detail[64];
    std::snprintf(detail, sizeof(detail), "got %.4f, want 40.0 +/- %.2f", got, kTolPct);
    report(4, std::abs(got - 40.0) <= kTolPct,
           "weighted_avg_f1(80.8, 51.1, 31.9, 11.2) reproduces 40.0", detail);
}

// --- criterion 5: tree edit distance vs brute force -------------------------

void criterion_teds_oracle() {
    constexpr int kPairs = 100;
    constexpr int kMaxNodes = 12;
    int agree = 0;
    for (int i = 1; i <= kPairs; ++i) {
        const auto a = oracle::random_tree(static_cast<std::uint64_t>(i), kMaxNodes);
        const auto b = oracle::random_tree(static_cast<std::uint64_t>(i) + 90000, kMaxNodes);
        agree += metrics::tree_edit_distance(a, b) == oracle::tree_edit_distance(a, b) ? 1 : 0;
    }
    char detail[64];
    std::snprintf(detail, sizeof(detail), "%d/%d exact", agree, kPairs);
    report(5, agree == kPairs, "tree edit distance equals the brute-force oracle", detail);
}

// --- criterion 6: adjacency relations vs brute force ------------------------

void criterion_adjacency_oracle() {
    constexpr int kGrids = 100;
    int agree = 0;
    for (int i = 1; i <= kGrids; ++i) {
        const auto g = oracle::random_merged_grid(static_cast<std::uint64_t>(i), 6, 6);
        agree += metrics::adjacency_relations(g) == oracle::adjacency_relations(g) ? 1 : 0;
    }
    char detail[64];
    std::snprintf(detail, sizeof(detail), "%d/%d exact", agree, kGrids);
    report(6, agree == kGrids, "adjacency relations equal the occupancy-scan oracle", detail);
}

// --- criterion 7: polygon IoU vs Monte-Carlo ---------------------------------

void criterion_iou_oracle() {
    constexpr int kPairs = 50;
    constexpr int kSamples = 1000000;
    constexpr double kTol = 1e-2;
    constexpr double kExactTol = 1e-12;

    double worst = 0.0;
    for (int i = 1; i <= kPairs; ++i) {
        const auto a = oracle::random_convex_quad(static_cast<std::uint64_t>(i));
        const auto b = oracle::random_convex_quad(static_cast<std::uint64_t>(i) + 777);
        const double exact = geometry::quad_iou(a, b);
        const double mc = oracle::mc_iou(a, b, kSamples, static_cast<std::uint64_t>(i) * 3 + 1);
        worst = std::max(worst, std::abs(exact - mc));
    }

    const auto sq = geometry::CellQuad::from_points({{{0, 0}, {1, 0}, {1, 1}, {0, 1}}});
    const auto off = geometry::CellQuad::from_points({{{0.5, 0}, {1.5, 0}, {1.5, 1}, {0.5, 1}}});
    const auto far = geometry::CellQuad::from_points({{{5, 5}, {6, 5}, {6, 6}, {5, 6}}});
    const bool fixtures = std::abs(geometry::quad_iou(sq, sq) - 1.0) <= kExactTol &&
                          std::abs(geometry::quad_iou(sq, off) - 1.0 / 3.0) <= kExactTol &&
                          geometry::quad_iou(sq, far) == 0.0;

    char detail[96];
    std::snprintf(detail, sizeof(detail), "max |exact - mc| = %.4g, fixtures %s", worst,
                  fixtures ? "exact" : "off");
    report(7, worst <= kTol && fixtures, "quad IoU against Monte-Carlo and analytic fixtures",
           detail);
}

// --- criterion 8: external map ingestion through the binary format ----------

void criterion_map_ingestion() {
    synth::SynthConfig cfg;
    cfg.rows = 4;
    cfg.cols = 4;
    cfg.merge_prob = 0.25;
    cfg.seed = 77;
    const auto ann = synth::generate_table(cfg);

    std::vector<std::vector<geometry::CellQuad>> tables;
    for (const auto& t : ann.tables) {
        tables.emplace_back();
        for (const auto& c : t.cells) tables.back().push_back(c.quad);
    }
    const auto encoded = targets::encode_targets(tables, ann.width, ann.height, 4);

    // Round through the on-disk format twice, with noise injected between
    // the passes the way an imperfect network head would deliver them.
    const std::string path = "/tmp/tablekit-acceptance-maps.cctm";
    targets::write_target_maps(encoded, path);
    auto maps = targets::read_target_maps(path);

    Rng noise(4242);
    auto jitter = [&](targets::Plane& p, double amp, double lo, double hi) {
        for (double& v : p.data)
            v = std::clamp(v + noise.next_in(-amp, amp), lo, hi);
    };
    for (auto& p : maps.heatmap) jitter(p, 0.02, 0.0, 1.0);
    for (auto& p : maps.offset) jitter(p, 0.02, -1.0, 1.0);
    for (auto& p : maps.cv) jitter(p, 0.02, -1e9, 1e9);
    for (auto& p : maps.vc) jitter(p, 0.02, -1e9, 1e9);
    targets::write_target_maps(maps, path);
    maps = targets::read_target_maps(path);
    std::remove(path.c_str());

    const auto out = decoder::decode_maps(maps);
    std::vector<structure::TableGrid> pred;
    bool parse_ok = true;
    try {
        for (const auto& grp : out.groups)
            pred.push_back(structure::parse_group(decoder::to_struct_cells(grp, out.cells),
                                                  grp.table_id));
    } catch (const std::exception&) {
        parse_ok = false;
    }

    bool ok = parse_ok && !pred.empty();
    double adj_f1 = 0.0, t = 0.0;
    if (ok) {
        std::vector<structure::TableGrid> gt;
        for (const auto& tab : ann.tables) gt.push_back(synth::table_grid(tab));
        adj_f1 = metrics::adjacency_prf(pred, gt).f1;
        t = metrics::teds(metrics::tree_from_grid(pred[0]), metrics::tree_from_grid(gt[0]));
        ok = adj_f1 == 1.0 && t == 1.0 && pred.size() == gt.size();
    }
    char detail[96];
    std::snprintf(detail, sizeof(detail), "adjacency F1 %.3f, TEDS %.3f on noisy reread maps",
                  adj_f1, t);
    report(8, ok, "decoder consumes serialized maps (network-output path) losslessly", detail);
}

}  // namespace

int main() {
    criterion_roundtrip();
    criterion_gradients();
    criterion_weight_function();
    criterion_weighted_avg();
    criterion_teds_oracle();
    criterion_adjacency_oracle();
    criterion_iou_oracle();
    criterion_map_ingestion();

    if (g_failures > 0) {
        std::printf("acceptance: %d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("acceptance: all criteria passed\n");
    return 0;
}
