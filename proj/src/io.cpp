#include "tablekit/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace tablekit::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& path, const std::string& msg) {
    throw std::runtime_error(origin + ":" + path + ": " + msg);
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

int require_int(const json& j, const std::string& origin, const std::string& path) {
    if (!j.is_number_integer()) fail(origin, path, "expected an integer");
    return j.get<int>();
}

double require_num(const json& j, const std::string& origin, const std::string& path) {
    if (!j.is_number()) fail(origin, path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(origin, path, "expected a finite number");
    return v;
}

const json& require_key(const json& j, const char* key, const std::string& origin,
                        const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(origin, path + "/" + key, "missing");
    return j.at(key);
}

}  // namespace

synth::Annotation parse_annotation(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }

    if (!doc.is_object()) fail(origin, "", "document must be an object");
    const auto& schema = require_key(doc, "schema", origin, "");
    if (!schema.is_string() || schema.get<std::string>() != kAnnotationSchema)
        fail(origin, "/schema", std::string("expected \"") + kAnnotationSchema + "\"");

    synth::Annotation a;
    const auto& image = require_key(doc, "image", origin, "");
    a.width = require_int(require_key(image, "width", origin, "/image"), origin, "/image/width");
    a.height = require_int(require_key(image, "height", origin, "/image"), origin, "/image/height");
    if (a.width <= 0 || a.height <= 0) fail(origin, "/image", "width and height must be positive");
    if (doc.contains("generator")) {
        if (!doc["generator"].is_string()) fail(origin, "/generator", "expected a string");
        a.generator = doc["generator"].get<std::string>();
    }

    const auto& tables = require_key(doc, "tables", origin, "");
    if (!tables.is_array()) fail(origin, "/tables", "expected an array");

    std::set<int> table_ids, cell_ids;
    for (std::size_t ti = 0; ti < tables.size(); ++ti) {
        const std::string tpath = "/tables/" + std::to_string(ti);
        const json& jt = tables[ti];
        synth::AnnotatedTable table;
        table.id = require_int(require_key(jt, "id", origin, tpath), origin, tpath + "/id");
        if (!table_ids.insert(table.id).second) fail(origin, tpath + "/id", "duplicate table id");

        const auto& cells = require_key(jt, "cells", origin, tpath);
        if (!cells.is_array()) fail(origin, tpath + "/cells", "expected an array");
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const std::string cpath = tpath + "/cells/" + std::to_string(ci);
            const json& jc = cells[ci];
            synth::AnnotatedCell cell;
            cell.id = require_int(require_key(jc, "id", origin, cpath), origin, cpath + "/id");
            if (!cell_ids.insert(cell.id).second) fail(origin, cpath + "/id", "duplicate cell id");

            const auto& quad = require_key(jc, "quad", origin, cpath);
            if (!quad.is_array() || quad.size() != 4)
                fail(origin, cpath + "/quad", "expected an array of 4 points");
            std::array<geometry::Point, 4> pts;
            for (std::size_t k = 0; k < 4; ++k) {
                const std::string ppath = cpath + "/quad/" + std::to_string(k);
                const json& jp = quad[k];
                if (!jp.is_array() || jp.size() != 2) fail(origin, ppath, "expected [x, y]");
                pts[k] = {require_num(jp[0], origin, ppath + "/0"),
                          require_num(jp[1], origin, ppath + "/1")};
            }
            auto q = geometry::CellQuad::try_from_points(pts);
            if (!q)
                fail(origin, cpath + "/quad",
                     "cell " + std::to_string(cell.id) + " is not a convex quad");
            cell.quad = *q;

            const bool has_row = jc.contains("row"), has_col = jc.contains("col");
            if (has_row != has_col)
                fail(origin, cpath, "\"row\" and \"col\" spans must come together");
            if (has_row) {
                auto read_span = [&](const char* key, int& start, int& end) {
                    const std::string spath = cpath + "/" + key;
                    const json& js = jc.at(key);
                    if (!js.is_array() || js.size() != 2)
                        fail(origin, spath, "expected [start, end]");
                    start = require_int(js[0], origin, spath + "/0");
                    end = require_int(js[1], origin, spath + "/1");
                    if (start < 0 || end < start)
                        fail(origin, spath, "expected 0 <= start <= end");
                };
                read_span("row", cell.start_row, cell.end_row);
                read_span("col", cell.start_col, cell.end_col);
                cell.has_span = true;
            }
            table.cells.push_back(std::move(cell));
        }
        a.tables.push_back(std::move(table));
    }
    return a;
}

synth::Annotation load_annotation(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_annotation(text, path);
}

std::string annotation_to_json(const synth::Annotation& a) {
    json doc;
    doc["schema"] = kAnnotationSchema;
    doc["image"] = {{"width", a.width}, {"height", a.height}};
    if (!a.generator.empty()) doc["generator"] = a.generator;
    doc["tables"] = json::array();
    for (const auto& t : a.tables) {
        json jt;
        jt["id"] = t.id;
        jt["cells"] = json::array();
        for (const auto& c : t.cells) {
            json jc;
            jc["id"] = c.id;
            json quad = json::array();
            for (const auto& p : c.quad.vertices())
                quad.push_back(json::array({round3(p.x), round3(p.y)}));
            jc["quad"] = std::move(quad);
            if (c.has_span) {
                jc["row"] = json::array({c.start_row, c.end_row});
                jc["col"] = json::array({c.start_col, c.end_col});
            }
            jt["cells"].push_back(std::move(jc));
        }
        doc["tables"].push_back(std::move(jt));
    }
    return doc.dump(2) + "\n";
}

void save_annotation(const synth::Annotation& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << annotation_to_json(a);
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace tablekit::io
