#pragma once

#include <string>

#include "json.hpp"

namespace facecloak {

// Minimal TOML subset sufficient for the documented config schema:
// [section] / [section.sub] headers, bare keys, basic "strings", integers,
// floats, booleans, homogeneous flat arrays, and # comments. Parse errors
// raise ConfigInvalid with a line number.
nlohmann::ordered_json parse_toml(const std::string& text);

nlohmann::ordered_json parse_toml_file(const std::string& path);

}  // namespace facecloak
