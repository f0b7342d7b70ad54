#pragma once

#include <string>

#include "tablekit/synthgen.hpp"

namespace tablekit::io {

inline constexpr const char* kAnnotationSchema = "wtw-kit/1";

/// Parses and validates an annotation document (schema kAnnotationSchema).
/// Violations raise std::runtime_error carrying the file path and a
/// JSON-pointer-style location, e.g. "/tables/0/cells/2/quad".
synth::Annotation load_annotation(const std::string& path);

/// Same validation applied to an in-memory document.
synth::Annotation parse_annotation(const std::string& text, const std::string& origin = "<string>");

/// Serializes with schema tag and coordinates rounded to 3 fractional
/// digits. Spans are emitted only for cells that carry them.
void save_annotation(const synth::Annotation& a, const std::string& path);

std::string annotation_to_json(const synth::Annotation& a);

}  // namespace tablekit::io
