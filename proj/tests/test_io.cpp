#include "doctest.h"

#include "tablekit/io.hpp"
#include "tablekit/synthgen.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

using namespace tablekit;
using namespace tablekit::io;

namespace {

const char* kMinimalDoc = R"({
  "schema": "wtw-kit/1",
  "image": {"width": 100, "height": 80},
  "tables": [
    {"id": 0, "cells": [
      {"id": 0, "quad": [[10, 10], [50, 10], [50, 40], [10, 40]]},
      {"id": 1, "quad": [[50, 10], [90, 10], [90, 40], [50, 40]],
       "row": [0, 0], "col": [1, 1]}
    ]}
  ]
})";

std::string with(const std::string& needle, const std::string& replacement) {
    std::string doc = kMinimalDoc;
    const auto pos = doc.find(needle);
    REQUIRE(pos != std::string::npos);
    doc.replace(pos, needle.size(), replacement);
    return doc;
}

void expect_error(const std::string& doc, const std::string& fragment) {
    try {
        parse_annotation(doc, "<test>");
        FAIL_CHECK("expected std::runtime_error mentioning " << fragment);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("minimal document parses") {
    const auto a = parse_annotation(kMinimalDoc);
    CHECK(a.width == 100);
    CHECK(a.height == 80);
    REQUIRE(a.tables.size() == 1);
    REQUIRE(a.tables[0].cells.size() == 2);
    CHECK_FALSE(a.tables[0].cells[0].has_span);
    CHECK(a.tables[0].cells[1].has_span);
    CHECK(a.tables[0].cells[1].start_col == 1);
    CHECK(a.tables[0].cells[0].quad.vertex(0).x == doctest::Approx(10));
}

TEST_CASE("validation errors carry the document location") {
    SUBCASE("wrong schema") { expect_error(with("wtw-kit/1", "wtw-kit/9"), "/schema"); }
    SUBCASE("missing tables") {
        expect_error(R"({"schema": "wtw-kit/1", "image": {"width": 1, "height": 1}})",
                     "/tables");
    }
    SUBCASE("non-convex quad names the cell") {
        expect_error(with("[[10, 10], [50, 10], [50, 40], [10, 40]]",
                          "[[10, 10], [50, 10], [15, 15], [10, 40]]"),
                     "cell 0 is not a convex quad");
    }
    SUBCASE("quad location in the message") {
        expect_error(with("[[10, 10], [50, 10], [50, 40], [10, 40]]",
                          "[[10, 10], [50, 10], [15, 15], [10, 40]]"),
                     "/tables/0/cells/0/quad");
    }
    SUBCASE("duplicate cell ids") { expect_error(with("\"id\": 1,", "\"id\": 0,"), "duplicate"); }
    SUBCASE("row span without col span") {
        expect_error(with(", \"col\": [1, 1]", ""), "must come together");
    }
    SUBCASE("bad span order") { expect_error(with("\"row\": [0, 0]", "\"row\": [2, 1]"), "/row"); }
    SUBCASE("origin appears in the message") {
        try {
            parse_annotation("{", "my-file.json");
            FAIL_CHECK("expected a parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("my-file.json") != std::string::npos);
        }
    }
}

TEST_CASE("save/load roundtrip") {
    synth::SynthConfig cfg;
    cfg.rows = 3;
    cfg.cols = 4;
    cfg.merge_prob = 0.3;
    cfg.corner_jitter = 1.0;
    cfg.seed = 17;
    const auto a = synth::generate_table(cfg);

    const std::string path = "/tmp/tablekit-test-ann.json";
    save_annotation(a, path);
    const auto b = load_annotation(path);

    CHECK(b.width == a.width);
    CHECK(b.generator == a.generator);
    REQUIRE(b.tables.size() == a.tables.size());
    REQUIRE(b.tables[0].cells.size() == a.tables[0].cells.size());
    for (size_t i = 0; i < a.tables[0].cells.size(); ++i) {
        const auto& ca = a.tables[0].cells[i];
        const auto& cb = b.tables[0].cells[i];
        CHECK(cb.id == ca.id);
        CHECK(cb.has_span == ca.has_span);
        CHECK(cb.start_row == ca.start_row);
        CHECK(cb.end_col == ca.end_col);
        for (int k = 0; k < 4; ++k) {
            // Coordinates are rounded to 3 digits on write.
            CHECK(cb.quad.vertex(k).x == doctest::Approx(ca.quad.vertex(k).x).epsilon(1e-3));
            CHECK(cb.quad.vertex(k).y == doctest::Approx(ca.quad.vertex(k).y).epsilon(1e-3));
        }
    }

    // Serialization is deterministic.
    CHECK(annotation_to_json(a) == annotation_to_json(a));
    CHECK(annotation_to_json(b) == annotation_to_json(load_annotation(path)));
    std::remove(path.c_str());
}

TEST_CASE("load_annotation on a missing file") {
    try {
        load_annotation("/tmp/tablekit-does-not-exist.json");
        FAIL_CHECK("expected std::runtime_error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
    }
}

}  // TEST_SUITE
