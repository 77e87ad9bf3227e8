#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cuot/problem.hpp"

namespace cuot {

const std::vector<std::string>& scenario_names();

/// The declarative JSON document behind a preset. Throws ConfigError for an unknown name.
std::string scenario_document(const std::string& name);

/// Directory holding the shipped data files referenced by presets.
std::filesystem::path default_data_dir();

/// Turns "a.b.0.c=VALUE" assignments into edits of a JSON document. VALUE is
/// parsed as JSON when possible and kept as a string otherwise; numeric path
/// segments index arrays.
std::string apply_overrides(const std::string& document, const std::vector<std::string>& assignments);

/// Expands a preset, applies the overrides and parses the result with file
/// references resolved against `data_dir`.
ProblemSpec build_scenario(const std::string& name, const std::vector<std::string>& overrides = {},
                           const std::filesystem::path& data_dir = default_data_dir());

}  // namespace cuot
