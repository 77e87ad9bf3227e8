#include "cuot/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "cuot/expression.hpp"
#include "cuot/io.hpp"
#include "json.hpp"

namespace cuot {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

std::string child(const std::string& path, const std::string& key) { return path + "." + key; }
std::string child(const std::string& path, std::size_t index) { return path + "[" + std::to_string(index) + "]"; }

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) fail(child(path, it.key()), "unknown key");
    }
}

/// Numbers may also be written as constant expressions ("2pi").
double number(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            return Expression::parse(j.get<std::string>()).evaluate(0.0);
        } catch (const ConfigError& e) {
            fail(path, e.what());
        }
    }
    fail(path, "expected a number");
}

double positive(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be a positive number");
    return v;
}

long integer(const json& j, const std::string& path, long min) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    const long v = j.get<long>();
    if (v < min) fail(path, "must be >= " + std::to_string(min));
    return v;
}

Expression expression(const json& j, const std::string& path) {
    try {
        return Expression::parse(j.get<std::string>());
    } catch (const ConfigError& e) {
        fail(path, e.what());
    }
}

/// A scalar that may depend on t (number or expression string).
std::function<double(double)> time_function(const json& j, const std::string& path) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return [v](double) { return v; };
    }
    if (j.is_string()) {
        const Expression e = expression(j, path);
        return [e](double t) { return e.evaluate(t); };
    }
    fail(path, "expected a number or an expression in t");
}

std::vector<double> per_axis(const json& j, const std::string& path, std::size_t dim) {
    std::vector<double> out;
    if (!j.is_array()) {
        if (dim != 1) fail(path, "expected an array with one entry per spatial axis");
        out.push_back(number(j, path));
        return out;
    }
    if (j.size() != dim) fail(path, "expected " + std::to_string(dim) + " entries");
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], child(path, i)));
    return out;
}

void flatten_values(const json& j, const std::string& path, std::vector<double>& out) {
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten_values(j[i], child(path, i), out);
    } else {
        out.push_back(number(j, path));
    }
}

struct Context {
    fs::path base;
    const GridSpec* grid = nullptr;

    fs::path resolve(const json& j, const std::string& path) const {
        if (!j.is_string()) fail(path, "expected a file path");
        fs::path p = j.get<std::string>();
        return p.is_absolute() ? p : base / p;
    }
};

/// Spatial cell centers, row-major.
std::vector<std::vector<double>> spatial_points(const GridSpec& grid) {
    const std::size_t s = grid.spatial_size();
    std::vector<std::vector<double>> pts(s, std::vector<double>(grid.dim()));
    for (std::size_t flat = 0; flat < s; ++flat) {
        std::size_t rem = flat;
        for (std::size_t k = grid.dim(); k-- > 0;) {
            pts[flat][k] = grid.cell_center(k, rem % grid.cells[k]);
            rem /= grid.cells[k];
        }
    }
    return pts;
}

using Region = std::function<bool(double t, std::size_t flat, const std::vector<double>& x)>;

Region parse_region(const json& j, const std::string& path, const Context& ctx) {
    if (!j.is_object()) fail(path, "expected a region object");
    allow_keys(j, path, {"box", "disk", "raster", "union", "intersection", "complement", "t_min", "t_max"});
    const GridSpec& grid = *ctx.grid;
    const std::size_t dim = grid.dim();
    Region shape;
    int shapes = 0;
    if (j.contains("box")) {
        ++shapes;
        const json& b = j["box"];
        const std::string bp = child(path, "box");
        if (!b.is_object() || !b.contains("min") || !b.contains("max")) fail(bp, "box needs min and max");
        allow_keys(b, bp, {"min", "max"});
        std::vector<std::function<double(double)>> lo, hi;
        for (const char* key : {"min", "max"}) {
            const json& v = b[key];
            const std::string vp = child(bp, key);
            std::vector<std::function<double(double)>>& dst = std::string(key) == "min" ? lo : hi;
            if (v.is_array()) {
                if (v.size() != dim) fail(vp, "expected " + std::to_string(dim) + " entries");
                for (std::size_t k = 0; k < dim; ++k) dst.push_back(time_function(v[k], child(vp, k)));
            } else {
                if (dim != 1) fail(vp, "expected an array with one entry per spatial axis");
                dst.push_back(time_function(v, vp));
            }
        }
        shape = [lo, hi](double t, std::size_t, const std::vector<double>& x) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                if (x[k] < lo[k](t) || x[k] > hi[k](t)) return false;
            }
            return true;
        };
    }
    if (j.contains("disk")) {
        ++shapes;
        const json& d = j["disk"];
        const std::string dp = child(path, "disk");
        if (!d.is_object() || !d.contains("center") || !d.contains("radius")) fail(dp, "disk needs center and radius");
        allow_keys(d, dp, {"center", "radius"});
        std::vector<std::function<double(double)>> center;
        const json& c = d["center"];
        if (c.is_array()) {
            if (c.size() != dim) fail(child(dp, "center"), "expected " + std::to_string(dim) + " entries");
            for (std::size_t k = 0; k < dim; ++k) center.push_back(time_function(c[k], child(child(dp, "center"), k)));
        } else {
            if (dim != 1) fail(child(dp, "center"), "expected an array");
            center.push_back(time_function(c, child(dp, "center")));
        }
        const auto radius = time_function(d["radius"], child(dp, "radius"));
        shape = [center, radius](double t, std::size_t, const std::vector<double>& x) {
            double r2 = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - center[k](t)) * (x[k] - center[k](t));
            const double r = radius(t);
            return r2 <= r * r;
        };
    }
    if (j.contains("raster")) {
        ++shapes;
        const Array mask = ingest_raster(ctx.resolve(j["raster"], child(path, "raster")), grid.spatial_shape());
        shape = [mask](double, std::size_t flat, const std::vector<double>&) { return mask[flat] != 0.0; };
    }
    for (const char* key : {"union", "intersection"}) {
        if (!j.contains(key)) continue;
        ++shapes;
        const json& list = j[key];
        const std::string lp = child(path, key);
        if (!list.is_array() || list.empty()) fail(lp, "expected a non-empty array of regions");
        std::vector<Region> parts;
        for (std::size_t i = 0; i < list.size(); ++i) parts.push_back(parse_region(list[i], child(lp, i), ctx));
        const bool any = std::string(key) == "union";
        shape = [parts, any](double t, std::size_t flat, const std::vector<double>& x) {
            for (const auto& p : parts) {
                if (p(t, flat, x) == any) return any;
            }
            return !any;
        };
    }
    if (j.contains("complement")) {
        ++shapes;
        const Region inner = parse_region(j["complement"], child(path, "complement"), ctx);
        shape = [inner](double t, std::size_t flat, const std::vector<double>& x) { return !inner(t, flat, x); };
    }
    if (shapes != 1) fail(path, "a region needs exactly one of box, disk, raster, union, intersection, complement");
    const double t_min = j.contains("t_min") ? number(j["t_min"], child(path, "t_min")) : -kInf;
    const double t_max = j.contains("t_max") ? number(j["t_max"], child(path, "t_max")) : kInf;
    return [shape, t_min, t_max](double t, std::size_t flat, const std::vector<double>& x) {
        return t >= t_min && t <= t_max && shape(t, flat, x);
    };
}

// ---- endpoint densities ----------------------------------------------------

double gaussian_density(const GridSpec& grid, const std::vector<double>& x, const std::vector<double>& center,
                        const std::vector<double>& sigma) {
    double v = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double d = x[k] - center[k];
        if (grid.periodic(k)) {
            const double l = grid.lengths[k];
            d -= l * std::round(d / l);
        }
        v *= std::exp(-0.5 * d * d / (sigma[k] * sigma[k])) / (sigma[k] * std::sqrt(2.0 * std::numbers::pi));
    }
    return v;
}

Array parse_density(const json& j, const std::string& path, const Context& ctx, double t_end) {
    const GridSpec& grid = *ctx.grid;
    const Shape shape = grid.spatial_shape();
    const auto points = spatial_points(grid);
    Array out(shape);
    if (j.is_number() || (j.is_string())) {
        if (j.is_number()) {
            out.fill(j.get<double>());
        } else {
            const Expression e = expression(j, path);
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = e.evaluate(t_end, points[i][0], grid.dim() > 1 ? points[i][1] : 0.0);
            }
        }
        return out;
    }
    if (j.is_array()) {
        std::vector<double> v;
        flatten_values(j, path, v);
        if (v.size() != out.size()) fail(path, "expected " + std::to_string(out.size()) + " values");
        return Array(shape, std::move(v));
    }
    if (!j.is_object()) fail(path, "expected a density specification");
    allow_keys(j, path, {"values", "file", "gaussian", "sum", "constant", "expression", "zero_in", "normalize", "scale"});
    int generators = 0;
    if (j.contains("values")) {
        ++generators;
        std::vector<double> v;
        flatten_values(j["values"], child(path, "values"), v);
        if (v.size() != out.size()) fail(child(path, "values"), "expected " + std::to_string(out.size()) + " values");
        out = Array(shape, std::move(v));
    }
    if (j.contains("file")) {
        ++generators;
        try {
            out = ingest_raster(ctx.resolve(j["file"], child(path, "file")), shape);
        } catch (const InvalidField& e) {
            fail(child(path, "file"), e.what());
        }
    }
    if (j.contains("constant")) {
        ++generators;
        out.fill(number(j["constant"], child(path, "constant")));
    }
    if (j.contains("expression")) {
        ++generators;
        const Expression e = expression(j["expression"], child(path, "expression"));
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = e.evaluate(t_end, points[i][0], grid.dim() > 1 ? points[i][1] : 0.0);
        }
    }
    if (j.contains("gaussian")) {
        ++generators;
        const json& g = j["gaussian"];
        const std::string gp = child(path, "gaussian");
        if (!g.is_object() || !g.contains("center") || !g.contains("sigma")) fail(gp, "gaussian needs center and sigma");
        allow_keys(g, gp, {"center", "sigma", "mass"});
        const auto center = per_axis(g["center"], child(gp, "center"), grid.dim());
        std::vector<double> sigma;
        if (g["sigma"].is_array()) {
            sigma = per_axis(g["sigma"], child(gp, "sigma"), grid.dim());
        } else {
            sigma.assign(grid.dim(), number(g["sigma"], child(gp, "sigma")));
        }
        for (std::size_t k = 0; k < sigma.size(); ++k) {
            if (!(sigma[k] > 0.0)) fail(child(gp, "sigma"), "must be positive");
        }
        const double mass = g.contains("mass") ? number(g["mass"], child(gp, "mass")) : 1.0;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, mass * gaussian_density(grid, points[i], center, sigma));
    }
    if (j.contains("sum")) {
        ++generators;
        const json& list = j["sum"];
        if (!list.is_array() || list.empty()) fail(child(path, "sum"), "expected a non-empty array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const Array part = parse_density(list[i], child(child(path, "sum"), i), ctx, t_end);
            for (std::size_t c = 0; c < out.size(); ++c) out[c] += part[c];
        }
    }
    if (generators != 1) {
        fail(path, "a density needs exactly one of values, file, constant, expression, gaussian, sum");
    }
    if (j.contains("scale")) {
        const double s = number(j["scale"], child(path, "scale"));
        for (double& v : out.values()) v *= s;
    }
    if (j.contains("zero_in")) {
        const Region r = parse_region(j["zero_in"], child(path, "zero_in"), ctx);
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (r(t_end, i, points[i])) out[i] = 0.0;
        }
    }
    if (j.contains("normalize")) {
        const double target = number(j["normalize"], child(path, "normalize"));
        double mass = 0.0;
        for (double v : out.values()) mass += v;
        mass *= grid.spatial_volume();
        if (!(mass > 0.0)) fail(child(path, "normalize"), "cannot normalize a density with zero mass");
        for (double& v : out.values()) v *= target / mass;
    }
    return out;
}

// ---- constraint weights ----------------------------------------------------

Array broadcast_spatial(const GridSpec& grid, const Array& spatial) {
    Array out(grid.centered_shape());
    const std::size_t s = grid.spatial_size();
    for (std::size_t j0 = 0; j0 < grid.time_cells; ++j0) {
        std::copy(spatial.data(), spatial.data() + s, out.data() + j0 * s);
    }
    return out;
}

Array weight_from_values(const GridSpec& grid, std::vector<double> v, const std::string& path) {
    if (v.size() == grid.centered_size()) return Array(grid.centered_shape(), std::move(v));
    if (v.size() == grid.spatial_size()) return broadcast_spatial(grid, Array(grid.spatial_shape(), std::move(v)));
    fail(path, "expected " + std::to_string(grid.centered_size()) + " (time x space) or " +
                   std::to_string(grid.spatial_size()) + " (space) values");
}

Array parse_weight(const json& j, const std::string& path, const Context& ctx) {
    const GridSpec& grid = *ctx.grid;
    const auto points = spatial_points(grid);
    const std::size_t s = grid.spatial_size();
    auto fill = [&](const std::function<double(double, std::size_t)>& f) {
        Array out(grid.centered_shape());
        for (std::size_t j0 = 0; j0 < grid.time_cells; ++j0) {
            const double t = grid.time_center(j0);
            for (std::size_t i = 0; i < s; ++i) out[j0 * s + i] = f(t, i);
        }
        return out;
    };
    auto from_expression = [&](const Expression& e) {
        return fill([&](double t, std::size_t i) {
            return e.evaluate(t, points[i][0], grid.dim() > 1 ? points[i][1] : 0.0);
        });
    };
    if (j.is_number()) {
        const double v = j.get<double>();
        return fill([v](double, std::size_t) { return v; });
    }
    if (j.is_string()) return from_expression(expression(j, path));
    if (j.is_array()) {
        std::vector<double> v;
        flatten_values(j, path, v);
        return weight_from_values(grid, std::move(v), path);
    }
    if (!j.is_object()) fail(path, "expected a weight specification");
    allow_keys(j, path,
               {"unit", "constant", "values", "file", "expression", "coordinate", "region_indicator", "scale", "mask"});
    Array out;
    int generators = 0;
    if (j.contains("unit")) {
        ++generators;
        if (!j["unit"].is_boolean() || !j["unit"].get<bool>()) fail(child(path, "unit"), "expected true");
        out = fill([](double, std::size_t) { return 1.0; });
    }
    if (j.contains("constant")) {
        ++generators;
        const double v = number(j["constant"], child(path, "constant"));
        out = fill([v](double, std::size_t) { return v; });
    }
    if (j.contains("values")) {
        ++generators;
        std::vector<double> v;
        flatten_values(j["values"], child(path, "values"), v);
        out = weight_from_values(grid, std::move(v), child(path, "values"));
    }
    if (j.contains("file")) {
        ++generators;
        const fs::path p = ctx.resolve(j["file"], child(path, "file"));
        try {
            Array a = p.extension() == ".bin" ? read_array(p) : ingest_raster(p);
            out = weight_from_values(grid, std::move(a.storage()), child(path, "file"));
        } catch (const InvalidField& e) {
            fail(child(path, "file"), e.what());
        }
    }
    if (j.contains("expression")) {
        ++generators;
        out = from_expression(expression(j["expression"], child(path, "expression")));
    }
    if (j.contains("coordinate")) {
        ++generators;
        const long axis = integer(j["coordinate"], child(path, "coordinate"), 0);
        if (static_cast<std::size_t>(axis) >= grid.dim()) fail(child(path, "coordinate"), "axis out of range");
        out = fill([&](double, std::size_t i) { return points[i][static_cast<std::size_t>(axis)]; });
    }
    if (j.contains("region_indicator")) {
        ++generators;
        const Region r = parse_region(j["region_indicator"], child(path, "region_indicator"), ctx);
        out = fill([&](double t, std::size_t i) { return r(t, i, points[i]) ? 1.0 : 0.0; });
    }
    if (generators != 1) {
        fail(path, "a weight needs exactly one of unit, constant, values, file, expression, coordinate, region_indicator");
    }
    if (j.contains("scale")) {
        const double k = number(j["scale"], child(path, "scale"));
        for (double& v : out.values()) v *= k;
    }
    if (j.contains("mask")) {
        const Region r = parse_region(j["mask"], child(path, "mask"), ctx);
        for (std::size_t j0 = 0; j0 < grid.time_cells; ++j0) {
            const double t = grid.time_center(j0);
            for (std::size_t i = 0; i < s; ++i) {
                if (!r(t, i, points[i])) out[j0 * s + i] = 0.0;
            }
        }
    }
    return out;
}

std::vector<Array> parse_momentum_weights(const json& j, const std::string& path, const Context& ctx) {
    const GridSpec& grid = *ctx.grid;
    std::vector<Array> out;
    if (j.is_array()) {
        if (j.size() > grid.dim()) fail(path, "more components than spatial axes");
        for (std::size_t k = 0; k < j.size(); ++k) {
            out.push_back(j[k].is_null() ? Array() : parse_weight(j[k], child(path, k), ctx));
        }
        return out;
    }
    if (!j.is_object() || !j.contains("vector_field")) fail(path, "expected a list of weights or a vector_field");
    allow_keys(j, path, {"vector_field", "mask", "scale"});
    const json& vf = j["vector_field"];
    const std::string vp = child(path, "vector_field");
    if (vf.is_object() && vf.contains("file")) {
        allow_keys(vf, vp, {"file"});
        const Array field = read_array(ctx.resolve(vf["file"], child(vp, "file")));
        if (field.rank() < 1 || field.extent(0) != grid.dim()) {
            fail(child(vp, "file"), "leading extent must equal the number of spatial axes");
        }
        const std::size_t per = field.size() / grid.dim();
        for (std::size_t k = 0; k < grid.dim(); ++k) {
            std::vector<double> v(field.data() + k * per, field.data() + (k + 1) * per);
            out.push_back(weight_from_values(grid, std::move(v), child(vp, "file")));
        }
    } else if (vf.is_object() && vf.contains("components")) {
        allow_keys(vf, vp, {"components"});
        const json& comps = vf["components"];
        if (!comps.is_array() || comps.size() != grid.dim()) {
            fail(child(vp, "components"), "expected one weight per spatial axis");
        }
        for (std::size_t k = 0; k < comps.size(); ++k) out.push_back(parse_weight(comps[k], child(child(vp, "components"), k), ctx));
    } else {
        fail(vp, "expected {\"file\": ...} or {\"components\": [...]}");
    }
    // Shared modifiers apply to every component.
    json mods = json::object();
    if (j.contains("scale")) mods["scale"] = j["scale"];
    if (j.contains("mask")) mods["mask"] = j["mask"];
    if (!mods.empty()) {
        mods["unit"] = true;
        const Array factor = parse_weight(mods, path, ctx);
        for (Array& a : out) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] *= factor[i];
        }
    }
    return out;
}

// ---- bounds -------------------------------------------------------------------

std::vector<double> parse_bound(const json& j, const std::string& path, const Context& ctx, double missing) {
    const GridSpec& grid = *ctx.grid;
    const std::size_t n0 = grid.time_cells;
    std::vector<double> out(n0, missing);
    if (j.is_null()) return out;
    if (j.is_number() || j.is_string()) {
        const auto f = time_function(j, path);
        for (std::size_t j0 = 0; j0 < n0; ++j0) out[j0] = f(grid.time_center(j0));
        return out;
    }
    if (j.is_array()) {
        if (j.size() != n0) fail(path, "expected " + std::to_string(n0) + " entries (one per time cell)");
        for (std::size_t j0 = 0; j0 < n0; ++j0) out[j0] = j[j0].is_null() ? missing : number(j[j0], child(path, j0));
        return out;
    }
    if (j.is_object() && j.contains("schedule")) {
        allow_keys(j, path, {"schedule", "scale"});
        try {
            out = ingest_schedule(ctx.resolve(j["schedule"], child(path, "schedule")), n0);
        } catch (const InvalidField& e) {
            fail(child(path, "schedule"), e.what());
        }
        if (j.contains("scale")) {
            const double s = number(j["scale"], child(path, "scale"));
            for (double& v : out) v *= s;
        }
        return out;
    }
    fail(path, "expected null, a number, an expression in t, an array or {\"schedule\": ...}");
}

AffineBoxConstraint parse_constraint(const json& j, const std::string& path, const Context& ctx, std::size_t index) {
    if (!j.is_object()) fail(path, "expected an object");
    allow_keys(j, path, {"name", "rho", "omega", "zeta", "lower", "upper", "equals"});
    AffineBoxConstraint c;
    c.name = j.contains("name") ? j["name"].get<std::string>() : "constraint" + std::to_string(index);
    if (j.contains("rho") && !j["rho"].is_null()) c.rho_weight = parse_weight(j["rho"], child(path, "rho"), ctx);
    if (j.contains("omega") && !j["omega"].is_null()) c.omega_weight = parse_momentum_weights(j["omega"], child(path, "omega"), ctx);
    if (j.contains("zeta") && !j["zeta"].is_null()) c.zeta_weight = parse_weight(j["zeta"], child(path, "zeta"), ctx);
    if (j.contains("equals")) {
        if (j.contains("lower") || j.contains("upper")) fail(path, "equals excludes lower and upper");
        c.lower = parse_bound(j["equals"], child(path, "equals"), ctx, kInf);
        for (double v : c.lower) {
            if (!std::isfinite(v)) fail(child(path, "equals"), "equality bounds must be finite");
        }
        c.upper = c.lower;
    } else {
        c.lower = parse_bound(j.contains("lower") ? j["lower"] : json(), child(path, "lower"), ctx, -kInf);
        c.upper = parse_bound(j.contains("upper") ? j["upper"] : json(), child(path, "upper"), ctx, kInf);
    }
    return c;
}

GridSpec parse_grid(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    allow_keys(j, path, {"time_cells", "cells", "lengths", "boundary"});
    if (!j.contains("time_cells")) fail(child(path, "time_cells"), "required");
    if (!j.contains("cells")) fail(child(path, "cells"), "required");
    GridSpec g;
    g.time_cells = static_cast<std::size_t>(integer(j["time_cells"], child(path, "time_cells"), 2));
    const json& cells = j["cells"];
    if (cells.is_array()) {
        if (cells.empty()) fail(child(path, "cells"), "at least one spatial axis is required");
        for (std::size_t k = 0; k < cells.size(); ++k) {
            g.cells.push_back(static_cast<std::size_t>(integer(cells[k], child(child(path, "cells"), k), 2)));
        }
    } else {
        g.cells.push_back(static_cast<std::size_t>(integer(cells, child(path, "cells"), 2)));
    }
    const std::size_t dim = g.cells.size();
    if (j.contains("lengths")) {
        const json& l = j["lengths"];
        const std::string lp = child(path, "lengths");
        if (l.is_array()) {
            if (l.size() != dim) fail(lp, "expected " + std::to_string(dim) + " entries");
            for (std::size_t k = 0; k < dim; ++k) g.lengths.push_back(positive(l[k], child(lp, k)));
        } else {
            g.lengths.assign(dim, positive(l, lp));
        }
    } else {
        g.lengths.assign(dim, 1.0);
    }
    auto boundary = [&](const json& b, const std::string& bp) {
        if (!b.is_string()) fail(bp, "expected \"neumann\" or \"periodic\"");
        const std::string s = b.get<std::string>();
        if (s == "neumann") return Boundary::neumann;
        if (s == "periodic") return Boundary::periodic;
        fail(bp, "expected \"neumann\" or \"periodic\"");
    };
    if (j.contains("boundary")) {
        const json& b = j["boundary"];
        const std::string bp = child(path, "boundary");
        if (b.is_array()) {
            if (b.size() != dim) fail(bp, "expected " + std::to_string(dim) + " entries");
            for (std::size_t k = 0; k < dim; ++k) g.boundary.push_back(boundary(b[k], child(bp, k)));
        } else {
            g.boundary.assign(dim, boundary(b, bp));
        }
    } else {
        g.boundary.assign(dim, Boundary::neumann);
    }
    return g;
}

SolverConfig parse_solver(const json& j, const std::string& path) {
    SolverConfig s;
    if (j.is_null()) return s;
    if (!j.is_object()) fail(path, "expected an object");
    allow_keys(j, path,
               {"alpha", "gamma", "iterations", "snapshot_stride", "ce_tolerance", "residual_target", "threads", "init",
                "snapshot_memory_bytes"});
    if (j.contains("alpha")) {
        s.alpha = number(j["alpha"], child(path, "alpha"));
        if (!(s.alpha > 0.0 && s.alpha < 2.0)) fail(child(path, "alpha"), "must lie in (0, 2)");
    }
    if (j.contains("gamma")) {
        const json& g = j["gamma"];
        if (g.is_string() && g.get<std::string>() == "auto") s.gamma.reset();
        else s.gamma = positive(g, child(path, "gamma"));
    }
    if (j.contains("iterations")) s.iterations = integer(j["iterations"], child(path, "iterations"), 1);
    if (j.contains("snapshot_stride")) s.snapshot_stride = integer(j["snapshot_stride"], child(path, "snapshot_stride"), 1);
    if (j.contains("ce_tolerance")) s.ce_tolerance = positive(j["ce_tolerance"], child(path, "ce_tolerance"));
    if (j.contains("residual_target")) {
        s.residual_target = number(j["residual_target"], child(path, "residual_target"));
        if (s.residual_target < 0.0) fail(child(path, "residual_target"), "must be >= 0");
    }
    if (j.contains("threads")) s.thread_count = static_cast<std::size_t>(integer(j["threads"], child(path, "threads"), 1));
    if (j.contains("init")) {
        const json& m = j["init"];
        const std::string mode = m.is_string() ? m.get<std::string>() : "";
        if (mode == "linear") s.init = InitMode::linear;
        else if (mode == "hellinger") s.init = InitMode::hellinger;
        else fail(child(path, "init"), "expected \"linear\" or \"hellinger\"");
    }
    if (j.contains("snapshot_memory_bytes")) {
        s.snapshot_memory_limit =
            static_cast<std::size_t>(integer(j["snapshot_memory_bytes"], child(path, "snapshot_memory_bytes"), 1));
    }
    return s;
}

json bound_json(const std::vector<double>& b) {
    json out = json::array();
    for (double v : b) out.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    return out;
}

json values_json(const Array& a) { return json{{"values", a.storage()}}; }

}  // namespace

ProblemSpec parse_config(const std::string& text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("$: invalid JSON: ") + e.what());
    }
    const std::string root = "$";
    if (!doc.is_object()) fail(root, "expected an object");
    allow_keys(doc, root, {"name", "description", "grid", "delta", "rho0", "rho1", "constraints", "solver"});
    for (const char* key : {"grid", "rho0", "rho1"}) {
        if (!doc.contains(key)) fail(child(root, key), "required");
    }
    ProblemSpec p;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) fail(child(root, "name"), "expected a string");
        p.name = doc["name"].get<std::string>();
    }
    p.grid = parse_grid(doc["grid"], child(root, "grid"));
    try {
        p.grid.validate();
    } catch (const InvalidField& e) {
        fail(child(root, "grid"), e.what());
    }
    p.delta = doc.contains("delta") ? positive(doc["delta"], child(root, "delta")) : 1.0;
    Context ctx{base_dir, &p.grid};
    p.rho0 = parse_density(doc["rho0"], child(root, "rho0"), ctx, 0.0);
    p.rho1 = parse_density(doc["rho1"], child(root, "rho1"), ctx, 1.0);
    for (const char* key : {"rho0", "rho1"}) {
        const Array& r = std::string(key) == "rho0" ? p.rho0 : p.rho1;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (!(r[i] >= 0.0) || !std::isfinite(r[i])) {
                fail(child(root, key), "density must be finite and nonnegative (index " + std::to_string(i) + ")");
            }
        }
    }
    if (doc.contains("constraints")) {
        const json& list = doc["constraints"];
        if (!list.is_array()) fail(child(root, "constraints"), "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            p.constraints.push_back(parse_constraint(list[i], child(child(root, "constraints"), i), ctx, i));
        }
    }
    p.solver = parse_solver(doc.contains("solver") ? doc["solver"] : json(), child(root, "solver"));
    validate_problem(p);
    return p;
}

ProblemSpec load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string serialize_config(const ProblemSpec& p, int indent) {
    json doc;
    doc["name"] = p.name;
    json grid;
    grid["time_cells"] = p.grid.time_cells;
    grid["cells"] = p.grid.cells;
    grid["lengths"] = p.grid.lengths;
    json boundary = json::array();
    for (Boundary b : p.grid.boundary) boundary.push_back(b == Boundary::periodic ? "periodic" : "neumann");
    grid["boundary"] = boundary;
    doc["grid"] = grid;
    doc["delta"] = p.delta;
    doc["rho0"] = values_json(p.rho0);
    doc["rho1"] = values_json(p.rho1);
    json constraints = json::array();
    for (const auto& c : p.constraints) {
        json cj;
        cj["name"] = c.name;
        if (!c.rho_weight.empty()) cj["rho"] = values_json(c.rho_weight);
        if (!c.omega_weight.empty()) {
            json om = json::array();
            for (const Array& w : c.omega_weight) om.push_back(w.empty() ? json(nullptr) : values_json(w));
            cj["omega"] = om;
        }
        if (!c.zeta_weight.empty()) cj["zeta"] = values_json(c.zeta_weight);
        cj["lower"] = bound_json(c.lower);
        cj["upper"] = bound_json(c.upper);
        constraints.push_back(cj);
    }
    doc["constraints"] = constraints;
    json solver;
    solver["alpha"] = p.solver.alpha;
    solver["gamma"] = p.solver.gamma ? json(*p.solver.gamma) : json("auto");
    solver["iterations"] = p.solver.iterations;
    solver["snapshot_stride"] = p.solver.snapshot_stride;
    solver["ce_tolerance"] = p.solver.ce_tolerance;
    solver["residual_target"] = p.solver.residual_target;
    solver["threads"] = p.solver.thread_count;
    solver["init"] = init_mode_name(p.solver.init);
    solver["snapshot_memory_bytes"] = p.solver.snapshot_memory_limit;
    doc["solver"] = solver;
    return doc.dump(indent);
}

}  // namespace cuot
