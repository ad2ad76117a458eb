#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "difflim/analysis.hpp"
#include "difflim/problem.hpp"
#include "difflim/transport.hpp"

namespace difflim {

// Subset of TOML: [section] and [a.b] headers, key = value with value a number,
// a "string", true/false, or a flat [array] of numbers; # starts a comment.
using ConfigValue = std::variant<double, std::string, bool, std::vector<double>>;

struct ConfigEntry {
    ConfigValue value;
    int line = 0;
};

struct ConfigDocument {
    /// Keys before the first header live in section "".
    std::map<std::string, std::map<std::string, ConfigEntry>> sections;
};

/// Throws ValidationError naming the offending line.
ConfigDocument parse_config(const std::string& text);

struct RunConfig {
    ProblemSpec problem;
    std::optional<std::string> manufactured;  ///< case name when [source] kind = "manufactured"
    double eps = 1.0;
    int ordinates = 8;
    int sphere_polar = 8;
    int sphere_azimuth = 16;
    SolverOptions solver;
    std::optional<StudyOptions> study;  ///< present iff the file has a [study] section
};

/// Builds and validates a run configuration; unknown sections or keys are errors.
/// Relative table paths resolve against base_dir.
RunConfig build_config(const ConfigDocument& doc, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// The case object for cfg.manufactured, sized to the configured domain.
std::optional<ManufacturedCase> manufactured_case_of(const RunConfig& cfg);

}  // namespace difflim
