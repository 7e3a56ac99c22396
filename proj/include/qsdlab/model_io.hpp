#pragma once

#include "qsdlab/chain_model.hpp"

#include <filesystem>
#include <string>

namespace qsd {

// Model files are JSON objects with the keys
//
//   "states"       optional list of labels
//   "generator"    row-major sub-generator, list of rows         } exactly
//   "birth_death"  {"n": int, "birth": [...], "death": [...]}    } one of
//   "psi1"         optional weight (default all ones)
//   "mu"           optional initial law (default uniform)
//   "observable"   optional f with |f| <= 1 (default indicator of the first state)
//
// See docs/model_format.md.

/// Throws Error(ParseError) for malformed input, with line/column or field
/// diagnostics, and Error(ValidationError) when the model violates an invariant.
ModelBundle parse_model_config(const std::string& text);

ModelBundle load_model_config(const std::filesystem::path& path);

/// Writes the bundle with the generator in explicit form and doubles at 17
/// significant digits, so that parse_model_config(emit_model_config(b)) == b.
std::string emit_model_config(const ModelBundle& bundle);

/// A fixture name ("m2sym", "m2asym", "bd5") or a path to a model file.
ModelBundle resolve_model(const std::string& name_or_path);

}  // namespace qsd
