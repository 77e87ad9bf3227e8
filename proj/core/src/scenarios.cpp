#include "cuot/scenarios.hpp"

#include <map>

#include "cuot/config.hpp"
#include "json.hpp"

#ifndef CUOT_DEFAULT_DATA_DIR
#define CUOT_DEFAULT_DATA_DIR "data"
#endif

namespace cuot {

namespace {

using json = nlohmann::json;

// Coordinates: x is spatial axis 0, y is spatial axis 1. Regions test cell centers.
const std::map<std::string, const char*>& documents() {
    static const std::map<std::string, const char*> docs = {
        {"shk", R"doc({
  "name": "shk",
  "description": "Unit total mass at every time between two Gaussian bumps",
  "grid": {"time_cells": 15, "cells": [256], "lengths": [1.0], "boundary": ["neumann"]},
  "delta": 1.0,
  "rho0": {"gaussian": {"center": 0.25, "sigma": 0.05}, "normalize": 1.0},
  "rho1": {"gaussian": {"center": 0.75, "sigma": 0.05}, "normalize": 1.0},
  "constraints": [
    {"name": "total_mass", "rho": {"unit": true}, "equals": 1.0}
  ],
  "solver": {"iterations": 10000, "snapshot_stride": 10}
})doc"},
        {"total_mass_ineq", R"doc({
  "name": "total_mass_ineq",
  "description": "Total mass bounded below by c (set constraints.0.lower to 1.0 for the second run)",
  "grid": {"time_cells": 15, "cells": [256], "lengths": [1.0], "boundary": ["neumann"]},
  "delta": "1/(2pi)",
  "rho0": {"gaussian": {"center": 0.25, "sigma": 0.05}, "normalize": 1.0},
  "rho1": {"gaussian": {"center": 0.75, "sigma": 0.05}, "normalize": 1.0},
  "constraints": [
    {"name": "total_mass_lower", "rho": {"unit": true}, "lower": 0.8}
  ],
  "solver": {"iterations": 3000, "snapshot_stride": 10}
})doc"},
        {"total_mass_2d", R"doc({
  "name": "total_mass_2d",
  "description": "Total mass following F(t) = 3 - 8(t - 0.5)^2 from a central bump to two bumps",
  "grid": {"time_cells": 15, "cells": [30, 30], "lengths": [1.0, 1.0], "boundary": ["neumann", "neumann"]},
  "delta": 1.0,
  "rho0": {"gaussian": {"center": [0.5, 0.5], "sigma": 0.1}, "normalize": 1.0},
  "rho1": {"sum": [
    {"gaussian": {"center": [0.25, 0.25], "sigma": 0.1, "mass": 0.5}},
    {"gaussian": {"center": [0.75, 0.75], "sigma": 0.1, "mass": 0.5}}
  ], "normalize": 1.0},
  "constraints": [
    {"name": "total_mass", "rho": {"unit": true}, "equals": "3 - 8(t - 0.5)^2"}
  ],
  "solver": {"iterations": 3000, "snapshot_stride": 10}
})doc"},
        {"barrier_static", R"doc({
  "name": "barrier_static",
  "description": "No mass inside a fixed wall; the bump has to go around it",
  "grid": {"time_cells": 30, "cells": [30, 30], "lengths": [1.0, 1.0], "boundary": ["neumann", "neumann"]},
  "delta": 10.0,
  "rho0": {"gaussian": {"center": [0.2, 0.8], "sigma": 0.07},
           "zero_in": {"box": {"min": [0.43, 0.3], "max": [0.57, 1.0]}}, "normalize": 1.0},
  "rho1": {"gaussian": {"center": [0.8, 0.2], "sigma": 0.07},
           "zero_in": {"box": {"min": [0.43, 0.3], "max": [0.57, 1.0]}}, "normalize": 1.0},
  "constraints": [
    {"name": "barrier", "rho": {"region_indicator": {"box": {"min": [0.43, 0.3], "max": [0.57, 1.0]}}}, "equals": 0.0}
  ],
  "solver": {"iterations": 7000, "snapshot_stride": 10}
})doc"},
        {"barrier_moving", R"doc({
  "name": "barrier_moving",
  "description": "No mass inside a wall whose opening shrinks to nothing at t = 1",
  "grid": {"time_cells": 30, "cells": [30, 30], "lengths": [1.0, 1.0], "boundary": ["neumann", "neumann"]},
  "delta": 10.0,
  "rho0": {"gaussian": {"center": [0.2, 0.8], "sigma": 0.07},
           "zero_in": {"box": {"min": [0.43, "0.6(1 - t)"], "max": [0.57, 1.0]}}, "normalize": 1.0},
  "rho1": {"gaussian": {"center": [0.8, 0.2], "sigma": 0.07},
           "zero_in": {"box": {"min": [0.43, "0.6(1 - t)"], "max": [0.57, 1.0]}}, "normalize": 1.0},
  "constraints": [
    {"name": "barrier", "rho": {"region_indicator": {"box": {"min": [0.43, "0.6(1 - t)"], "max": [0.57, 1.0]}}},
     "equals": 0.0}
  ],
  "solver": {"iterations": 7000, "snapshot_stride": 10}
})doc"},
        {"convex_curve_sym", R"doc({
  "name": "convex_curve_sym",
  "description": "Closed convex curves: zero first moment on the circle, antipodally symmetric endpoints",
  "grid": {"time_cells": 15, "cells": [256], "lengths": ["2pi"], "boundary": ["periodic"]},
  "delta": 0.01,
  "rho0": {"sum": [
    {"gaussian": {"center": 0.0, "sigma": 0.3}},
    {"gaussian": {"center": "pi", "sigma": 0.3}}
  ]},
  "rho1": {"sum": [
    {"gaussian": {"center": "pi/2", "sigma": 0.3}},
    {"gaussian": {"center": "3pi/2", "sigma": 0.3}}
  ]},
  "constraints": [
    {"name": "moment_cos", "rho": {"expression": "cos(x)"}, "equals": 0.0},
    {"name": "moment_sin", "rho": {"expression": "sin(x)"}, "equals": 0.0}
  ],
  "solver": {"iterations": 10000, "snapshot_stride": 10}
})doc"},
        {"convex_curve_nonsym", R"doc({
  "name": "convex_curve_nonsym",
  "description": "Closed convex curves: zero first moment on the circle, target without antipodal symmetry",
  "grid": {"time_cells": 15, "cells": [256], "lengths": ["2pi"], "boundary": ["periodic"]},
  "delta": 0.01,
  "rho0": {"sum": [
    {"gaussian": {"center": 0.0, "sigma": 0.3}},
    {"gaussian": {"center": "pi", "sigma": 0.3}}
  ]},
  "rho1": {"sum": [
    {"gaussian": {"center": 0.0, "sigma": 0.3, "mass": "2/3"}},
    {"gaussian": {"center": "2pi/3", "sigma": 0.3, "mass": "2/3"}},
    {"gaussian": {"center": "4pi/3", "sigma": 0.3, "mass": "2/3"}}
  ]},
  "constraints": [
    {"name": "moment_cos", "rho": {"expression": "cos(x)"}, "equals": 0.0},
    {"name": "moment_sin", "rho": {"expression": "sin(x)"}, "equals": 0.0}
  ],
  "solver": {"iterations": 10000, "snapshot_stride": 10}
})doc"},
        {"river", R"doc({
  "name": "river",
  "description": "Momentum in a horizontal band must have a nonnegative component along (1, -1)/sqrt(2)",
  "grid": {"time_cells": 15, "cells": [30, 30], "lengths": [1.0, 1.0], "boundary": ["neumann", "neumann"]},
  "delta": 2.0,
  "rho0": {"gaussian": {"center": [0.3, 0.2], "sigma": 0.08}, "normalize": 1.0},
  "rho1": {"gaussian": {"center": [0.7, 0.8], "sigma": 0.08}, "normalize": 1.0},
  "constraints": [
    {"name": "current",
     "omega": {"vector_field": {"components": ["1/sqrt(2)", "-1/sqrt(2)"]},
               "mask": {"box": {"min": [0.0, 0.35], "max": [1.0, 0.65]}}},
     "lower": 0.0}
  ],
  "solver": {"iterations": 3000, "snapshot_stride": 10}
})doc"},
        {"budget", R"doc({
  "name": "budget",
  "description": "Net mass creation in the right half limited to [0, 0.1] per unit time",
  "grid": {"time_cells": 15, "cells": [256], "lengths": [1.0], "boundary": ["neumann"]},
  "delta": "1/(2pi)",
  "rho0": {"gaussian": {"center": 0.25, "sigma": 0.05}, "normalize": 1.0},
  "rho1": {"gaussian": {"center": 0.75, "sigma": 0.05}, "normalize": 1.5},
  "constraints": [
    {"name": "source_budget", "zeta": {"region_indicator": {"box": {"min": 0.5, "max": 1.0}}}, "lower": 0.0, "upper": 0.1}
  ],
  "solver": {"iterations": 3000, "snapshot_stride": 10}
})doc"},
        {"population", R"doc({
  "name": "population",
  "description": "Population maps: mass kept inside the region and total following the census schedule",
  "grid": {"time_cells": 12, "cells": [64, 64], "lengths": [1.0, 1.0], "boundary": ["neumann", "neumann"]},
  "delta": 1.0,
  "rho0": {"file": "population/density_start.csv"},
  "rho1": {"file": "population/density_end.csv"},
  "constraints": [
    {"name": "outside_region", "rho": {"region_indicator": {"complement": {"raster": "population/region_mask.csv"}}},
     "equals": 0.0},
    {"name": "total_population", "rho": {"unit": true}, "equals": {"schedule": "population/total_population.csv"}}
  ],
  "solver": {"iterations": 10000, "snapshot_stride": 10}
})doc"},
    };
    return docs;
}

json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

}  // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"shk",          "total_mass_ineq",  "total_mass_2d",
                                                   "barrier_static", "barrier_moving", "convex_curve_sym",
                                                   "convex_curve_nonsym", "river",     "budget",
                                                   "population"};
    return names;
}

std::string scenario_document(const std::string& name) {
    const auto it = documents().find(name);
    if (it == documents().end()) {
        std::string known;
        for (const auto& n : scenario_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown scenario '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

std::filesystem::path default_data_dir() { return CUOT_DEFAULT_DATA_DIR; }

std::string apply_overrides(const std::string& document, const std::vector<std::string>& assignments) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("$: invalid JSON: ") + e.what());
    }
    for (const std::string& a : assignments) {
        const std::size_t eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + a + "': expected key=value");
        const std::string key = a.substr(0, eq);
        json* node = &doc;
        std::size_t start = 0;
        for (;;) {
            const std::size_t dot = key.find('.', start);
            const std::string seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (seg.empty()) throw ConfigError("override '" + a + "': empty path segment");
            if (node->is_array()) {
                std::size_t idx = 0;
                try {
                    idx = std::stoul(seg);
                } catch (const std::exception&) {
                    throw ConfigError("override '" + a + "': '" + seg + "' is not an array index");
                }
                if (idx >= node->size()) throw ConfigError("override '" + a + "': index " + seg + " out of range");
                node = &(*node)[idx];
            } else {
                if (node->is_null()) *node = json::object();
                if (!node->is_object()) throw ConfigError("override '" + a + "': '" + seg + "' is not an object key");
                node = &(*node)[seg];
            }
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        *node = parse_override_value(a.substr(eq + 1));
    }
    return doc.dump(2);
}

ProblemSpec build_scenario(const std::string& name, const std::vector<std::string>& overrides,
                           const std::filesystem::path& data_dir) {
    return parse_config(apply_overrides(scenario_document(name), overrides), data_dir);
}

}  // namespace cuot
