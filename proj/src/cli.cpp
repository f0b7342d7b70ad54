#include "tablekit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "tablekit/decoder.hpp"
#include "tablekit/eval.hpp"
#include "tablekit/io.hpp"
#include "tablekit/loss.hpp"
#include "tablekit/metrics.hpp"
#include "tablekit/rng.hpp"
#include "tablekit/structure.hpp"
#include "tablekit/synthgen.hpp"
#include "tablekit/targets.hpp"

namespace tablekit::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kExitFailure = 1;  // metric or selftest failure
constexpr int kExitUsage = 2;    // input or usage error

struct DeformFlags {
    std::string kind = "identity";  // identity|rotate|perspective|curve|mix
    double angle = 15.0;            // degrees, rotate
    double persp_x = 2e-5;          // homography row 3
    double persp_y = 2e-5;
    double curve_amplitude = 8.0;  // px
    double curve_period = 256.0;   // px
};

geometry::Deformation build_deformation(const DeformFlags& f, const synth::Annotation& base,
                                        std::uint64_t seed) {
    if (f.kind == "identity") return geometry::Deformation::identity();
    if (f.kind == "rotate")
        return geometry::Deformation::rotation(f.angle,
                                               {base.width / 2.0, base.height / 2.0});
    if (f.kind == "perspective")
        return geometry::Deformation::perspective({1, 0, 0, 0, 1, 0, f.persp_x, f.persp_y, 1});
    if (f.kind == "curve")
        return geometry::Deformation::curve(f.curve_amplitude, f.curve_period);
    if (f.kind == "mix") return synth::sample_deformation(base, seed);
    throw std::runtime_error("unknown deformation kind: " + f.kind);
}

std::string deformation_case_name(const geometry::Deformation& d) {
    switch (d.kind) {
        case geometry::Deformation::Kind::identity: return "identity";
        case geometry::Deformation::Kind::affine: return "rotate";
        case geometry::Deformation::Kind::perspective: return "perspective";
        case geometry::Deformation::Kind::curve: return "curve";
    }
    return "unknown";
}

void check_stride(int stride) {
    if (stride != 1 && stride != 2 && stride != 4 && stride != 8)
        throw std::runtime_error("stride must be one of 1, 2, 4, 8");
}

decoder::DecodeConfig decode_config(const RunConfig& rc) {
    decoder::DecodeConfig cfg;
    cfg.center_threshold = rc.center_threshold;
    cfg.vertex_threshold = rc.vertex_threshold;
    cfg.max_peaks = rc.max_peaks;
    cfg.tau_factor = rc.tau_factor;
    return cfg;
}

/// The predicted annotation for decoded maps: one table per group, spans
/// filled in when the group's structure parses. Groups that do not parse
/// keep their cells span-less; their ids are reported in *unparsed.
synth::Annotation decoded_annotation(const targets::TargetMaps& maps,
                                     const decoder::DecodeOutput& out,
                                     std::vector<int>* unparsed) {
    synth::Annotation a;
    a.width = maps.width * maps.stride;
    a.height = maps.height * maps.stride;
    std::map<int, const decoder::DecodedCell*> by_id;
    for (const auto& c : out.cells) by_id[c.id] = &c;

    for (const auto& g : out.groups) {
        synth::AnnotatedTable table;
        table.id = g.table_id;
        bool parsed = false;
        try {
            const auto grid =
                structure::parse_group(decoder::to_struct_cells(g, out.cells), g.table_id);
            for (const auto& s : grid.cells) {
                synth::AnnotatedCell cell;
                cell.id = s.cell_id;
                cell.quad = s.quad;
                cell.has_span = true;
                cell.start_row = s.start_row;
                cell.end_row = s.end_row;
                cell.start_col = s.start_col;
                cell.end_col = s.end_col;
                table.cells.push_back(std::move(cell));
            }
            parsed = true;
        } catch (const std::exception&) {
            if (unparsed) unparsed->push_back(g.table_id);
        }
        if (!parsed) {
            for (int id : g.cell_ids) {
                synth::AnnotatedCell cell;
                cell.id = id;
                cell.quad = geometry::CellQuad::from_points(by_id.at(id)->corners);
                table.cells.push_back(std::move(cell));
            }
        }
        a.tables.push_back(std::move(table));
    }
    return a;
}

std::vector<std::vector<geometry::CellQuad>> annotation_quads(const synth::Annotation& a) {
    std::vector<std::vector<geometry::CellQuad>> tables;
    for (const auto& t : a.tables) {
        tables.emplace_back();
        for (const auto& c : t.cells) tables.back().push_back(c.quad);
    }
    return tables;
}

// ---------------------------------------------------------------- generate

struct GenerateOpts {
    std::string out;
    std::string fixtures;
    int count = 1;
    std::uint64_t seed = 0;
    int rows = 3, cols = 3;
    double merge_prob = 0.0;
    double cell_min = 24.0, cell_max = 64.0, margin = 32.0, jitter = 0.0;
    int stride = 4;
    double merge_tol = 3.0;
    DeformFlags deform;
};

int cmd_generate(const GenerateOpts& o) {
    check_stride(o.stride);
    synth::SynthConfig cfg;
    cfg.rows = o.rows;
    cfg.cols = o.cols;
    cfg.merge_prob = o.merge_prob;
    cfg.cell_min = o.cell_min;
    cfg.cell_max = o.cell_max;
    cfg.margin = o.margin;
    cfg.corner_jitter = o.jitter;

    if (o.fixtures.empty()) {
        if (o.out.empty()) throw std::runtime_error("generate: need --out or --fixtures");
        cfg.seed = o.seed;
        const auto base = synth::generate_table(cfg);
        const auto ann =
            synth::deform_annotation(base, build_deformation(o.deform, base, o.seed));
        io::save_annotation(ann, o.out);
        std::cout << "wrote " << o.out << " (" << ann.tables.size() << " table, "
                  << ann.tables[0].cells.size() << " cells)\n";
        return 0;
    }

    for (int i = 0; i < o.count; ++i) {
        const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
        cfg.seed = seed;
        const auto base = synth::generate_table(cfg);
        const auto d = build_deformation(o.deform, base, seed);
        const auto ann = synth::deform_annotation(base, d);

        const fs::path dir = fs::path(o.fixtures) / std::to_string(seed) / deformation_case_name(d);
        fs::create_directories(dir);
        io::save_annotation(ann, (dir / "annotation.json").string());

        const auto maps =
            targets::encode_targets(annotation_quads(ann), ann.width, ann.height, o.stride,
                                    {.merge_tol = o.merge_tol});
        targets::write_target_maps(maps, (dir / "maps.cctm").string());

        const auto decoded = decoder::decode_maps(maps);
        const auto pred = decoded_annotation(maps, decoded, nullptr);
        const auto report = eval::evaluate_corpus({{std::to_string(seed), pred, ann}}, {});
        eval::write_report(report, (dir / "expected-report.json").string());
        std::cout << "wrote " << dir.string() << "\n";
    }
    return 0;
}

// ------------------------------------------------------------------ encode

struct EncodeOpts {
    std::string annotation;
    std::string out;
    int stride = 4;
    double merge_tol = 3.0;
};

int cmd_encode(const EncodeOpts& o) {
    check_stride(o.stride);
    const auto ann = io::load_annotation(o.annotation);
    const auto maps = targets::encode_targets(annotation_quads(ann), ann.width, ann.height,
                                              o.stride, {.merge_tol = o.merge_tol});
    targets::write_target_maps(maps, o.out);
    std::cout << "wrote " << o.out << " (" << maps.width << "x" << maps.height << " map, stride "
              << maps.stride << ", " << maps.pairs.size() << " pairs)\n";
    return 0;
}

// ------------------------------------------------------------------ decode

struct DecodeOpts {
    std::string maps;
    std::string out;
    RunConfig rc;
};

int cmd_decode(const DecodeOpts& o) {
    const auto maps = targets::read_target_maps(o.maps);
    const auto decoded = decoder::decode_maps(maps, decode_config(o.rc));
    std::vector<int> unparsed;
    const auto ann = decoded_annotation(maps, decoded, &unparsed);
    io::save_annotation(ann, o.out);
    std::cout << "wrote " << o.out << " (" << decoded.cells.size() << " cells, "
              << decoded.groups.size() << " groups";
    if (decoded.discarded_cells > 0) std::cout << ", " << decoded.discarded_cells << " discarded";
    std::cout << ")\n";
    for (int id : unparsed)
        std::cerr << "tablekit: warning: group " << id << " has no consistent structure; "
                  << "emitted without spans\n";
    return 0;
}

// -------------------------------------------------------------------- eval

struct EvalCmdOpts {
    std::string pred;
    std::string gt;
    std::string out;
    std::string metrics = "all";
    std::vector<double> iou_grid{0.6, 0.7, 0.8, 0.9};
    double merge_tol = 3.0;
    int threads = 0;
};

std::vector<eval::EvalPair> collect_pairs(const std::string& pred_path,
                                          const std::string& gt_path) {
    std::vector<eval::EvalPair> pairs;
    if (fs::is_directory(gt_path) != fs::is_directory(pred_path))
        throw std::runtime_error("eval: --pred and --gt must both be files or both directories");
    if (!fs::is_directory(gt_path)) {
        pairs.push_back({fs::path(gt_path).stem().string(), io::load_annotation(pred_path),
                         io::load_annotation(gt_path)});
        return pairs;
    }
    std::vector<fs::path> gt_files;
    for (const auto& e : fs::directory_iterator(gt_path))
        if (e.is_regular_file() && e.path().extension() == ".json") gt_files.push_back(e.path());
    std::sort(gt_files.begin(), gt_files.end());
    if (gt_files.empty()) throw std::runtime_error("eval: no .json files in " + gt_path);
    for (const auto& g : gt_files) {
        const fs::path p = fs::path(pred_path) / g.filename();
        if (!fs::exists(p))
            throw std::runtime_error("eval: missing prediction for " + g.filename().string());
        pairs.push_back({g.stem().string(), io::load_annotation(p.string()),
                         io::load_annotation(g.string())});
    }
    return pairs;
}

int cmd_eval(const EvalCmdOpts& o) {
    eval::EvalOptions opt;
    opt.iou_grid = o.iou_grid;
    opt.merge_tol = o.merge_tol;
    opt.threads = o.threads;
    for (double t : opt.iou_grid)
        if (!(t > 0.0 && t <= 1.0)) throw std::runtime_error("eval: IoU thresholds must be in (0,1]");
    if (o.metrics != "all") {
        opt.do_physical = opt.do_adjacency = opt.do_teds = false;
        std::stringstream ss(o.metrics);
        std::string m;
        while (std::getline(ss, m, ',')) {
            if (m == "physical") opt.do_physical = true;
            else if (m == "adjacency") opt.do_adjacency = true;
            else if (m == "teds") opt.do_teds = true;
            else throw std::runtime_error("eval: unknown metric \"" + m + "\"");
        }
    }

    const auto pairs = collect_pairs(o.pred, o.gt);
    const auto report = eval::evaluate_corpus(pairs, opt);
    const std::string text = eval::report_to_json(report);
    if (o.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw std::runtime_error(o.out + ": cannot open for writing");
        f << text;
        std::cout << "wrote " << o.out << "\n";
    }
    return 0;
}

// --------------------------------------------------------------- roundtrip

struct RoundtripOpts {
    int count = 200;
    std::uint64_t seed = 7;
    int rows_min = 2, rows_max = 10;
    int cols_min = 2, cols_max = 10;
    double merge_prob = 0.2;
    double cell_min = 24.0, cell_max = 64.0;
    double jitter = 0.0;
    int stride = 4;
    std::string deform = "mix";
    double heatmap_noise = 0.0, map_noise = 0.0;
    bool verbose = false;
};

int cmd_roundtrip(const RoundtripOpts& o) {
    check_stride(o.stride);
    if (o.rows_min < 1 || o.rows_min > o.rows_max || o.cols_min < 1 || o.cols_min > o.cols_max)
        throw std::runtime_error("roundtrip: invalid row/col ranges");

    synth::PipelineParams params;
    params.stride = o.stride;
    params.heatmap_noise = o.heatmap_noise;
    params.map_noise = o.map_noise;

    DeformFlags dflags;
    dflags.kind = o.deform;

    int failures = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < o.count; ++i) {
        const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
        Rng dims(seed ^ 0xd1a5ull);
        synth::SynthConfig cfg;
        cfg.rows = o.rows_min + static_cast<int>(dims.next_below(
                                    static_cast<std::uint64_t>(o.rows_max - o.rows_min + 1)));
        cfg.cols = o.cols_min + static_cast<int>(dims.next_below(
                                    static_cast<std::uint64_t>(o.cols_max - o.cols_min + 1)));
        cfg.merge_prob = o.merge_prob;
        cfg.cell_min = o.cell_min;
        cfg.cell_max = o.cell_max;
        cfg.corner_jitter = o.jitter;
        cfg.seed = seed;
        params.noise_seed = seed ^ 0x0153ull;

        const auto base = synth::generate_table(cfg);
        cfg.deformation = build_deformation(dflags, base, seed);
        const auto v = synth::roundtrip(cfg, params);

        if (!v.ok) ++failures;
        if (!v.ok || o.verbose) {
            std::printf("seed=%llu rows=%d cols=%d deform=%s cells=%d adjF1=%.4f teds=%.4f "
                        "corner=%.4g %s%s%s\n",
                        static_cast<unsigned long long>(seed), cfg.rows, cfg.cols,
                        deformation_case_name(cfg.deformation).c_str(), v.gt_cells,
                        v.adjacency_f1, v.mean_teds, v.max_corner_err, v.ok ? "ok" : "FAIL",
                        v.error.empty() ? "" : " ", v.error.c_str());
        }
    }
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("roundtrip: %d/%d ok in %.2fs\n", o.count - failures, o.count, dt);
    return failures == 0 ? 0 : kExitFailure;
}

// ---------------------------------------------------------------- selftest

targets::TargetMaps selftest_instance(std::uint64_t seed) {
    synth::SynthConfig cfg;
    cfg.rows = 2;
    cfg.cols = 2;
    cfg.cell_min = 12.0;
    cfg.cell_max = 20.0;
    cfg.margin = 8.0;
    cfg.seed = seed;
    const auto ann = synth::generate_table(cfg);
    return targets::encode_targets(annotation_quads(ann), 64, 64, 4, {});
}

int cmd_selftest() {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
        std::printf("selftest: %-34s %s%s%s\n", name.c_str(), ok ? "ok" : "FAIL",
                    detail.empty() ? "" : "  ", detail.c_str());
        if (!ok) ++failures;
    };

    {
        const double w0 = loss::pair_weight(0.0);
        const double w1 = loss::pair_weight(1.0);
        const double expect1 = 1.0 - std::exp(-std::numbers::pi);
        bool monotone = true;
        double prev = -1.0;
        for (int i = 0; i <= 1000; ++i) {
            const double w = loss::pair_weight(i / 1000.0);
            if (w < prev) monotone = false;
            prev = w;
        }
        check("pair weight endpoints+monotone",
              w0 == 0.0 && std::abs(w1 - expect1) <= 1e-9 && monotone);
    }
    {
        double worst = 0.0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto tm = selftest_instance(1000 + s);
            worst = std::max(worst, loss::check_pairing_gradients(tm, s, 1e-4).max_rel_err);
            worst = std::max(worst, loss::check_total_gradients(tm, s, 1e-4).max_rel_err);
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "max rel err %.3g", worst);
        check("gradient finite differences", worst <= 1e-4, buf);
    }
    {
        const double w = metrics::weighted_avg_f1({0.808, 0.511, 0.319, 0.112});
        check("weighted average f1", std::abs(100.0 * w - 40.0) <= 0.05);
    }
    {
        const auto unit = geometry::CellQuad::from_points({{{0, 0}, {1, 0}, {1, 1}, {0, 1}}});
        const auto half = geometry::CellQuad::from_points({{{0.5, 0}, {1.5, 0}, {1.5, 1}, {0.5, 1}}});
        const auto far_q = geometry::CellQuad::from_points({{{5, 5}, {6, 5}, {6, 6}, {5, 6}}});
        check("quad iou fixtures", geometry::quad_iou(unit, unit) == 1.0 &&
                                       std::abs(geometry::quad_iou(unit, half) - 1.0 / 3.0) < 1e-12 &&
                                       geometry::quad_iou(unit, far_q) == 0.0);
    }
    {
        synth::SynthConfig cfg;
        cfg.rows = 3;
        cfg.cols = 3;
        cfg.seed = 11;
        const auto plain = synth::roundtrip(cfg, {});
        cfg.rows = 4;
        cfg.cols = 4;
        cfg.seed = 12;
        cfg.forced_merges = {{0, 0, 0, 1}};
        const auto base = synth::generate_table(cfg);
        cfg.deformation = geometry::Deformation::rotation(15.0, {base.width / 2.0, base.height / 2.0});
        const auto rotated = synth::roundtrip(cfg, {});
        check("roundtrip 3x3 + rotated merged 4x4", plain.ok && rotated.ok,
              plain.error + rotated.error);
    }
    std::printf("selftest: %s\n", failures == 0 ? "all ok" : "FAILURES");
    return failures == 0 ? 0 : kExitFailure;
}

// ------------------------------------------------------------------ render

struct RenderOpts {
    std::string annotation;
    std::string out;
    double scale = 1.0;
};

int cmd_render(const RenderOpts& o) {
    const auto ann = io::load_annotation(o.annotation);
    static const char* palette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                                    "#956cb4", "#8c613c", "#dc7ec0", "#797979"};
    std::ostringstream svg;
    const double w = ann.width * o.scale, h = ann.height * o.scale;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << ann.width << " " << ann.height << "\">\n"
        << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& t : ann.tables) {
        const char* color = palette[static_cast<size_t>(t.id) % std::size(palette)];
        for (const auto& c : t.cells) {
            svg << "  <polygon points=\"";
            for (const auto& p : c.quad.vertices()) svg << p.x << "," << p.y << " ";
            svg << "\" fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"" << color
                << "\" stroke-width=\"1\"/>\n";
            const auto center = geometry::quad_center(c.quad);
            svg << "  <circle cx=\"" << center.x << "\" cy=\"" << center.y
                << "\" r=\"1.5\" fill=\"" << color << "\"/>\n";
            svg << "  <text x=\"" << center.x + 3 << "\" y=\"" << center.y - 3
                << "\" font-size=\"8\" fill=\"#333\">" << c.id;
            if (c.has_span)
                svg << " [" << c.start_row << "-" << c.end_row << "," << c.start_col << "-"
                    << c.end_col << "]";
            svg << "</text>\n";
        }
        for (const auto& c : t.cells)
            for (const auto& p : c.quad.vertices())
                svg << "  <circle cx=\"" << p.x << "\" cy=\"" << p.y
                    << "\" r=\"1\" fill=\"#222\"/>\n";
    }
    svg << "</svg>\n";
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw std::runtime_error(o.out + ": cannot open for writing");
    f << svg.str();
    std::cout << "wrote " << o.out << "\n";
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& argv) {
    CLI::App app{"wired-table structure parsing toolkit"};
    app.name("tablekit");
    app.require_subcommand(1);

    GenerateOpts gen;
    auto* g = app.add_subcommand("generate", "Generate synthetic table annotations or fixtures");
    g->add_option("--out", gen.out, "Annotation output path (single file mode)");
    g->add_option("--fixtures", gen.fixtures, "Fixture corpus root (writes <seed>/<case>/...)");
    g->add_option("--count", gen.count, "Fixture count (consecutive seeds)")->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "Base seed");
    g->add_option("--rows", gen.rows, "Grid rows")->check(CLI::PositiveNumber);
    g->add_option("--cols", gen.cols, "Grid columns")->check(CLI::PositiveNumber);
    g->add_option("--merge-prob", gen.merge_prob, "Per-slot merge probability")
        ->check(CLI::Range(0.0, 1.0));
    g->add_option("--cell-min", gen.cell_min, "Min cell side (px)");
    g->add_option("--cell-max", gen.cell_max, "Max cell side (px)");
    g->add_option("--margin", gen.margin, "Canvas margin (px)");
    g->add_option("--jitter", gen.jitter, "Grid vertex jitter sigma (px)");
    g->add_option("--stride", gen.stride, "Map stride for fixture maps");
    g->add_option("--merge-tol", gen.merge_tol, "Corner merge tolerance (px)");
    g->add_option("--deform", gen.deform.kind, "identity|rotate|perspective|curve|mix");
    g->add_option("--angle", gen.deform.angle, "Rotation angle (degrees)");
    g->add_option("--persp-x", gen.deform.persp_x, "Homography third-row x coefficient");
    g->add_option("--persp-y", gen.deform.persp_y, "Homography third-row y coefficient");
    g->add_option("--curve-amplitude", gen.deform.curve_amplitude, "Curve amplitude (px)");
    g->add_option("--curve-period", gen.deform.curve_period, "Curve period (px)");

    EncodeOpts enc;
    auto* e = app.add_subcommand("encode", "Encode an annotation into dense target maps");
    e->add_option("--annotation", enc.annotation, "Annotation JSON")->required();
    e->add_option("--out", enc.out, "Output .cctm path")->required();
    e->add_option("--stride", enc.stride, "Map stride");
    e->add_option("--merge-tol", enc.merge_tol, "Corner merge tolerance (px)");

    DecodeOpts dec;
    auto* d = app.add_subcommand("decode", "Decode target maps into a predicted annotation");
    d->add_option("--maps", dec.maps, "Input .cctm path")->required();
    d->add_option("--out", dec.out, "Predicted annotation JSON")->required();
    d->add_option("--center-thresh", dec.rc.center_threshold, "Center peak threshold")
        ->check(CLI::Range(0.0, 1.0));
    d->add_option("--vertex-thresh", dec.rc.vertex_threshold, "Vertex peak threshold")
        ->check(CLI::Range(0.0, 1.0));
    d->add_option("--max-peaks", dec.rc.max_peaks, "Peak cap per class")->check(CLI::PositiveNumber);
    d->add_option("--tau-factor", dec.rc.tau_factor, "Match tolerance in strides");

    EvalCmdOpts ev;
    auto* v = app.add_subcommand("eval", "Score predictions against ground truth");
    v->add_option("--pred", ev.pred, "Prediction file or directory")->required();
    v->add_option("--gt", ev.gt, "Ground-truth file or directory")->required();
    v->add_option("--out", ev.out, "Report path (stdout when omitted)");
    v->add_option("--metrics", ev.metrics, "all or a comma list of physical,adjacency,teds");
    v->add_option("--iou-grid", ev.iou_grid, "IoU thresholds")->delimiter(',');
    v->add_option("--merge-tol", ev.merge_tol, "Corner merge tolerance (px)");
    v->add_option("--threads", ev.threads, "Worker threads (0 = auto)");

    RoundtripOpts rt;
    auto* r = app.add_subcommand("roundtrip", "Batch synthetic encode/decode fidelity check");
    r->add_option("--count", rt.count, "Number of seeds")->check(CLI::PositiveNumber);
    r->add_option("--seed", rt.seed, "Base seed");
    r->add_option("--rows-min", rt.rows_min, "Min rows");
    r->add_option("--rows-max", rt.rows_max, "Max rows");
    r->add_option("--cols-min", rt.cols_min, "Min cols");
    r->add_option("--cols-max", rt.cols_max, "Max cols");
    r->add_option("--merge-prob", rt.merge_prob, "Per-slot merge probability")
        ->check(CLI::Range(0.0, 1.0));
    r->add_option("--cell-min", rt.cell_min, "Min cell side (px)");
    r->add_option("--cell-max", rt.cell_max, "Max cell side (px)");
    r->add_option("--jitter", rt.jitter, "Grid vertex jitter sigma (px)");
    r->add_option("--stride", rt.stride, "Map stride");
    r->add_option("--deform", rt.deform, "identity|rotate|perspective|curve|mix");
    r->add_option("--heatmap-noise", rt.heatmap_noise, "Uniform heatmap noise amplitude");
    r->add_option("--map-noise", rt.map_noise, "Uniform offset/cv/vc noise amplitude");
    r->add_flag("--verbose", rt.verbose, "Print every seed, not only failures");

    auto* s = app.add_subcommand("selftest", "Gradient checks and oracle fixtures");

    RenderOpts ren;
    auto* rd = app.add_subcommand("render", "Render an annotation as SVG");
    rd->add_option("--annotation", ren.annotation, "Annotation JSON")->required();
    rd->add_option("--out", ren.out, "SVG output path")->required();
    rd->add_option("--scale", ren.scale, "Display scale factor")->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> args(argv.rbegin(), argv.rend());
        app.parse(args);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*g) return cmd_generate(gen);
        if (*e) return cmd_encode(enc);
        if (*d) return cmd_decode(dec);
        if (*v) return cmd_eval(ev);
        if (*r) return cmd_roundtrip(rt);
        if (*s) return cmd_selftest();
        if (*rd) return cmd_render(ren);
    } catch (const std::exception& ex) {
        std::cerr << "tablekit: error: " << ex.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace tablekit::cli
