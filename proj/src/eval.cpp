#include "tablekit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "tablekit/structure.hpp"

namespace tablekit::eval {

using nlohmann::json;

namespace {

std::vector<metrics::MetricCell> annotation_cells(const synth::Annotation& a) {
    std::vector<metrics::MetricCell> cells;
    for (const auto& t : a.tables)
        for (const auto& c : t.cells) cells.push_back({c.id, c.quad});
    return cells;
}

std::vector<metrics::MetricCell> grid_cells(const structure::TableGrid& g) {
    std::vector<metrics::MetricCell> cells;
    for (const auto& c : g.cells) cells.push_back({c.cell_id, c.quad});
    return cells;
}

}  // namespace

ImageEval evaluate_image(const EvalPair& pair, const EvalOptions& opt) {
    ImageEval out;
    out.name = pair.name;

    std::vector<structure::TableGrid> gt_grids;
    for (const auto& t : pair.gt.tables) {
        try {
            gt_grids.push_back(synth::table_grid(t, opt.merge_tol));
        } catch (const std::exception& e) {
            throw std::runtime_error(pair.name + ": ground-truth table " + std::to_string(t.id) +
                                     ": " + e.what());
        }
    }

    std::vector<structure::TableGrid> pred_grids;
    const bool need_grids = opt.do_adjacency || opt.do_teds;
    if (need_grids) {
        for (const auto& t : pair.pred.tables) {
            try {
                pred_grids.push_back(synth::table_grid(t, opt.merge_tol));
            } catch (const std::exception& e) {
                if (!out.error.empty()) out.error += "; ";
                out.error += "table " + std::to_string(t.id) + ": " + e.what();
            }
        }
    }

    if (opt.do_physical) {
        const auto pred_cells = annotation_cells(pair.pred);
        const auto gt_cells = annotation_cells(pair.gt);
        for (double iou : opt.iou_grid)
            out.physical.push_back(metrics::physical_stats(pred_cells, gt_cells, iou));
    }
    if (opt.do_adjacency) {
        for (double iou : opt.iou_grid)
            out.adjacency.push_back(metrics::adjacency_stats(pred_grids, gt_grids, iou));
    }
    if (opt.do_teds) {
        out.gt_tables = static_cast<int>(gt_grids.size());
        const metrics::StructureTree empty_tree = metrics::tree_from_grid(structure::TableGrid{});
        for (const auto& gg : gt_grids) {
            const auto gcells = grid_cells(gg);
            const structure::TableGrid* best = nullptr;
            std::size_t best_matched = 0;
            for (const auto& pg : pred_grids) {
                const auto m = metrics::match_cells(grid_cells(pg), gcells, 0.5);
                if (m.size() > best_matched) {
                    best = &pg;
                    best_matched = m.size();
                }
            }
            out.teds_sum += metrics::teds(metrics::tree_from_grid(gg),
                                          best ? metrics::tree_from_grid(*best) : empty_tree);
        }
    }
    return out;
}

namespace {

int effective_threads(int requested, std::size_t jobs) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* cap = std::getenv("TABLEKIT_THREADS")) {
        const int c = std::atoi(cap);
        if (c >= 1) n = std::min(n, c);
    }
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

}  // namespace

EvalReport evaluate_corpus(const std::vector<EvalPair>& pairs, const EvalOptions& opt) {
    EvalReport rep;
    rep.iou_grid = opt.iou_grid;
    rep.has_physical = opt.do_physical;
    rep.has_adjacency = opt.do_adjacency;
    rep.has_teds = opt.do_teds;
    rep.images.resize(pairs.size());

    const int workers = effective_threads(opt.threads, pairs.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(pairs.size());
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pairs.size()) return;
            try {
                rep.images[i] = evaluate_image(pairs[i], opt);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);

    // Deterministic fold in input order.
    std::vector<metrics::MatchStats> phys(opt.iou_grid.size());
    std::vector<metrics::MatchStats> adj(opt.iou_grid.size());
    double teds_sum = 0.0;
    long gt_tables = 0;
    for (const auto& img : rep.images) {
        for (std::size_t i = 0; i < img.physical.size(); ++i) {
            phys[i].matched += img.physical[i].matched;
            phys[i].pred_total += img.physical[i].pred_total;
            phys[i].gt_total += img.physical[i].gt_total;
        }
        for (std::size_t i = 0; i < img.adjacency.size(); ++i) {
            adj[i].matched += img.adjacency[i].matched;
            adj[i].pred_total += img.adjacency[i].pred_total;
            adj[i].gt_total += img.adjacency[i].gt_total;
        }
        teds_sum += img.teds_sum;
        gt_tables += img.gt_tables;
    }
    if (opt.do_physical)
        for (const auto& s : phys) rep.physical.push_back(metrics::prf_from_stats(s));
    if (opt.do_adjacency)
        for (const auto& s : adj) rep.adjacency.push_back(metrics::prf_from_stats(s));
    if (opt.do_teds) rep.teds_mean = gt_tables > 0 ? teds_sum / gt_tables : 1.0;

    if (opt.do_adjacency) {
        constexpr std::array<double, 4> canonical{0.6, 0.7, 0.8, 0.9};
        std::array<double, 4> f1{};
        bool all = true;
        for (std::size_t k = 0; k < 4 && all; ++k) {
            bool found = false;
            for (std::size_t i = 0; i < rep.iou_grid.size(); ++i) {
                if (std::abs(rep.iou_grid[i] - canonical[k]) < 1e-9) {
                    f1[k] = rep.adjacency[i].f1;
                    found = true;
                    break;
                }
            }
            all = found;
        }
        if (all) {
            rep.has_weighted_avg = true;
            rep.weighted_avg_f1 = metrics::weighted_avg_f1(f1);
        }
    }
    return rep;
}

namespace {

json prf_json(double iou, const metrics::Prf& p) {
    return json{{"iou", iou},
                {"precision", p.precision},
                {"recall", p.recall},
                {"f1", p.f1},
                {"precision_pct", 100.0 * p.precision},
                {"recall_pct", 100.0 * p.recall},
                {"f1_pct", 100.0 * p.f1}};
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
    json doc;
    doc["schema"] = kReportSchema;
    doc["images"] = r.images.size();
    doc["iou_grid"] = r.iou_grid;
    if (r.has_physical) {
        doc["physical"] = json::array();
        for (std::size_t i = 0; i < r.physical.size(); ++i)
            doc["physical"].push_back(prf_json(r.iou_grid[i], r.physical[i]));
    }
    if (r.has_adjacency) {
        doc["adjacency"] = json::array();
        for (std::size_t i = 0; i < r.adjacency.size(); ++i)
            doc["adjacency"].push_back(prf_json(r.iou_grid[i], r.adjacency[i]));
    }
    if (r.has_teds) doc["teds"] = {{"mean", r.teds_mean}, {"mean_pct", 100.0 * r.teds_mean}};
    if (r.has_weighted_avg) {
        doc["weighted_avg_f1"] = r.weighted_avg_f1;
        doc["weighted_avg_f1_pct"] = 100.0 * r.weighted_avg_f1;
    }
    doc["per_image"] = json::array();
    for (const auto& img : r.images) {
        json ji;
        ji["name"] = img.name;
        if (!img.error.empty()) ji["error"] = img.error;
        if (r.has_teds)
            ji["teds"] = img.gt_tables > 0 ? img.teds_sum / img.gt_tables : 1.0;
        if (r.has_physical) {
            ji["physical_f1"] = json::array();
            for (const auto& s : img.physical)
                ji["physical_f1"].push_back(metrics::prf_from_stats(s).f1);
        }
        if (r.has_adjacency) {
            ji["adjacency_f1"] = json::array();
            for (const auto& s : img.adjacency)
                ji["adjacency_f1"].push_back(metrics::prf_from_stats(s).f1);
        }
        doc["per_image"].push_back(std::move(ji));
    }
    return doc.dump(2) + "\n";
}

void write_report(const EvalReport& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << report_to_json(r);
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace tablekit::eval
