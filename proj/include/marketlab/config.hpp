#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "marketlab/analysis_harness.hpp"

namespace marketlab {

/// A parsed run configuration document (schema_version 1).
///
/// `analysis` carries the sim, sweep and analysis sections; its scenario
/// fields only matter to the sweep commands.
struct RunConfig {
  int schema_version = 1;
  Experiment experiment;
  DesignSpec design = design::GlobalControl{};
  SweepSpec analysis;
};

/// Parses and validates a JSON document. Unknown keys, wrong types and
/// invalid markets raise MarketError.
RunConfig parse_config(std::string_view json_text);

RunConfig load_config(const std::string& path);

std::vector<std::string> preset_names();

/// The JSON document behind a named preset; InvalidConfig for unknown names.
std::string preset_text(std::string_view name);

RunConfig preset_config(std::string_view name);

}  // namespace marketlab
