#include "doctest.h"

#include "tablekit/cli.hpp"
#include "tablekit/io.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

using tablekit::cli::run_command;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::path("/tmp") / ("tablekit-cli-" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string operator/(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate/encode/decode/eval chain") {
    TempDir dir;
    const auto ann = dir / "gt.json";
    const auto maps = dir / "maps.cctm";
    const auto pred = dir / "pred.json";
    const auto report = dir / "report.json";

    CHECK(run_command({"generate", "--out", ann, "--rows", "4", "--cols", "3",
                       "--merge-prob", "0.3", "--seed", "42"}) == 0);
    CHECK(run_command({"encode", "--annotation", ann, "--out", maps, "--stride", "4"}) == 0);
    CHECK(run_command({"decode", "--maps", maps, "--out", pred}) == 0);
    CHECK(run_command({"eval", "--pred", pred, "--gt", ann, "--out", report}) == 0);

    const auto doc = nlohmann::json::parse(slurp(report));
    CHECK(doc.at("schema") == "wtw-kit-report/1");
    for (const auto& row : doc.at("adjacency"))
        CHECK(row.at("f1").get<double>() == doctest::Approx(1.0));
    for (const auto& row : doc.at("physical"))
        CHECK(row.at("f1").get<double>() == doctest::Approx(1.0));
    CHECK(doc.at("teds").at("mean").get<double>() == doctest::Approx(1.0));

    // The decoded annotation reloads cleanly and keeps the cell count.
    const auto p = tablekit::io::load_annotation(pred);
    const auto g = tablekit::io::load_annotation(ann);
    REQUIRE(p.tables.size() == 1);
    CHECK(p.tables[0].cells.size() == g.tables[0].cells.size());
}

TEST_CASE("roundtrip subcommand") {
    CHECK(run_command({"roundtrip", "--count", "3", "--seed", "5", "--rows-max", "4",
                       "--cols-max", "4"}) == 0);
}

TEST_CASE("selftest passes") { CHECK(run_command({"selftest"}) == 0); }

TEST_CASE("render writes svg") {
    TempDir dir;
    const auto ann = dir / "gt.json";
    const auto svg = dir / "out.svg";
    REQUIRE(run_command({"generate", "--out", ann, "--seed", "1"}) == 0);
    CHECK(run_command({"render", "--annotation", ann, "--out", svg}) == 0);
    const auto body = slurp(svg);
    CHECK(body.find("<svg") != std::string::npos);
    CHECK(body.find("</svg>") != std::string::npos);
}

TEST_CASE("fixture corpus layout") {
    TempDir dir;
    const auto root = dir / "fx";
    CHECK(run_command({"generate", "--fixtures", root, "--count", "2", "--seed", "3"}) == 0);
    int cases = 0;
    for (const auto& seed_dir : fs::directory_iterator(root)) {
        REQUIRE(seed_dir.is_directory());
        for (const auto& case_dir : fs::directory_iterator(seed_dir)) {
            ++cases;
            CHECK(fs::exists(case_dir.path() / "annotation.json"));
            CHECK(fs::exists(case_dir.path() / "maps.cctm"));
            CHECK(fs::exists(case_dir.path() / "expected-report.json"));
        }
    }
    CHECK(cases > 0);
}

TEST_CASE("usage and input errors exit 2") {
    TempDir dir;
    CHECK(run_command({"no-such-command"}) == 2);
    CHECK(run_command({"encode"}) == 2);  // missing required flags
    CHECK(run_command({"decode", "--maps", dir / "missing.cctm",
                       "--out", dir / "x.json"}) == 2);
    CHECK(run_command({"eval", "--pred", dir / "nope.json",
                       "--gt", dir / "nope.json"}) == 2);
    // Stride must be one of {1, 2, 4, 8}.
    const auto ann = dir / "a.json";
    REQUIRE(run_command({"generate", "--out", ann, "--seed", "2"}) == 0);
    CHECK(run_command({"encode", "--annotation", ann, "--out", dir / "m.cctm",
                       "--stride", "3"}) == 2);
}

TEST_CASE("--help exits 0") {
    CHECK(run_command({"--help"}) == 0);
    CHECK(run_command({"generate", "--help"}) == 0);
}

}  // TEST_SUITE
