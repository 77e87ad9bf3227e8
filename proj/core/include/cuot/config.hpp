#pragma once

#include <filesystem>
#include <string>

#include "cuot/problem.hpp"

namespace cuot {

/// Parses a JSON problem document. Relative file references resolve against
/// `base_dir`. Throws ConfigError whose message starts with the JSON path of
/// the offending field; InvalidField and InfeasibleConstraint propagate from
/// validation of the assembled problem.
ProblemSpec parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

ProblemSpec load_config(const std::filesystem::path& path);

/// Fully resolved document: endpoints, weights and bounds as inline values.
/// parse_config(serialize_config(p)) == p.
std::string serialize_config(const ProblemSpec& problem, int indent = 2);

}  // namespace cuot
