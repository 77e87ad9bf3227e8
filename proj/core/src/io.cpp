#include "cuot/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cuot/config.hpp"
#include "json.hpp"

namespace cuot {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kMagic = "CUOTARR";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t byteswap64(std::uint64_t v) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xffu);
    return r;
}

void put_double(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

double get_double(const char* p) {
    std::uint64_t bits;
    std::memcpy(&bits, p, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidField(path.string() + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',' || c == ';' || c == ' ' || c == '\t' || c == '\r') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& v) {
    const char* b = s.c_str();
    char* e = nullptr;
    v = std::strtod(b, &e);
    return e != b && *e == '\0';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << text << '\n';
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

json finite_or_null(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(std::isfinite(x) ? json(x) : json(nullptr));
    return out;
}

json scalar(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void write_array(const fs::path& path, const Array& a) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << kMagic << " 1 f64 " << a.rank();
    for (std::size_t e : a.shape()) out << ' ' << e;
    out << '\n';
    for (double v : a.values()) put_double(out, v);
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

Array read_array(const fs::path& path) {
    const std::string bytes = read_file(path);
    const std::size_t nl = bytes.find('\n');
    if (nl == std::string::npos) throw InvalidField(path.string() + ": missing array header");
    std::istringstream header(bytes.substr(0, nl));
    std::string magic, dtype;
    int version = 0;
    std::size_t rank = 0;
    header >> magic >> version >> dtype >> rank;
    if (magic != kMagic || version != 1 || dtype != "f64" || !header) {
        throw InvalidField(path.string() + ": not a CUOTARR v1 f64 file");
    }
    Shape shape(rank);
    for (auto& e : shape) {
        if (!(header >> e)) throw InvalidField(path.string() + ": truncated shape in header");
    }
    const std::size_t n = shape_size(shape);
    if (bytes.size() - nl - 1 != n * sizeof(double)) {
        throw InvalidField(path.string() + ": payload size does not match shape " + shape_string(shape));
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = get_double(bytes.data() + nl + 1 + i * sizeof(double));
    return Array(shape, std::move(values));
}

Array ingest_raster(const fs::path& path) {
    Array a;
    if (path.extension() == ".bin") {
        a = read_array(path);
    } else {
        std::istringstream in(read_file(path));
        std::string line;
        std::vector<std::vector<double>> rows;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto fields = split_fields(line);
            if (fields.empty() || fields[0][0] == '#') continue;
            std::vector<double> row;
            for (const auto& f : fields) {
                double v;
                if (!parse_double(f, v)) {
                    throw InvalidField(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + f + "'");
                }
                row.push_back(v);
            }
            if (!rows.empty() && row.size() != rows.front().size()) {
                throw InvalidField(path.string() + ":" + std::to_string(line_no) + ": ragged row");
            }
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw InvalidField(path.string() + ": empty raster");
        std::vector<double> flat;
        for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
        const std::size_t nr = rows.size();
        const std::size_t nc = rows.front().size();
        Shape shape = nr == 1 ? Shape{nc} : nc == 1 ? Shape{nr} : Shape{nr, nc};
        a = Array(shape, std::move(flat));
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] >= 0.0) || !std::isfinite(a[i])) {
            throw InvalidField(path.string() + ": raster values must be finite and nonnegative (index " +
                               std::to_string(i) + ")");
        }
    }
    return a;
}

Array ingest_raster(const fs::path& path, const Shape& expected) {
    Array a = ingest_raster(path);
    if (a.shape() != expected) {
        throw InvalidField(path.string() + ": raster shape " + shape_string(a.shape()) + " does not match grid " +
                           shape_string(expected));
    }
    return a;
}

std::vector<std::pair<double, double>> read_schedule(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<std::pair<double, double>> pairs;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty() || fields[0][0] == '#') continue;
        double t, m;
        if (fields.size() != 2 || !parse_double(fields[0], t) || !parse_double(fields[1], m)) {
            if (pairs.empty() && line_no == 1) continue;  // header
            throw InvalidField(path.string() + ":" + std::to_string(line_no) + ": expected 'time, mass'");
        }
        if (!pairs.empty() && !(t > pairs.back().first)) {
            throw InvalidField(path.string() + ":" + std::to_string(line_no) + ": times must be strictly increasing");
        }
        if (!(m >= 0.0)) throw InvalidField(path.string() + ":" + std::to_string(line_no) + ": negative mass");
        pairs.emplace_back(t, m);
    }
    if (pairs.size() < 2) throw InvalidField(path.string() + ": a schedule needs at least two entries");
    return pairs;
}

std::vector<double> resample_schedule(const std::vector<std::pair<double, double>>& pairs, std::size_t time_cells) {
    if (pairs.size() < 2) throw InvalidField("schedule: at least two entries are required");
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        if (!(pairs[i].first > pairs[i - 1].first)) throw InvalidField("schedule: times must be strictly increasing");
    }
    const double t0 = pairs.front().first;
    const double span = pairs.back().first - t0;
    std::vector<double> out(time_cells);
    std::size_t seg = 0;
    for (std::size_t j0 = 0; j0 < time_cells; ++j0) {
        const double t = (static_cast<double>(j0) + 0.5) / static_cast<double>(time_cells);
        auto at = [&](std::size_t i) { return (pairs[i].first - t0) / span; };
        while (seg + 2 < pairs.size() && at(seg + 1) < t) ++seg;
        const double a = at(seg);
        const double b = at(seg + 1);
        const double w = (t - a) / (b - a);
        out[j0] = (1.0 - w) * pairs[seg].second + w * pairs[seg + 1].second;
    }
    return out;
}

std::vector<double> ingest_schedule(const fs::path& path, std::size_t time_cells) {
    return resample_schedule(read_schedule(path), time_cells);
}

std::vector<double> mass_trace(const GridSpec& grid, const Array& rho) {
    const Shape& shape = rho.shape();
    if (shape.empty() || shape_size(Shape(shape.begin() + 1, shape.end())) != grid.spatial_size()) {
        throw InvalidField("mass_trace: density does not match the spatial grid");
    }
    const std::size_t s = grid.spatial_size();
    std::vector<double> out(shape[0]);
    for (std::size_t j = 0; j < shape[0]; ++j) {
        double acc = 0.0;
        for (std::size_t i = j * s; i < (j + 1) * s; ++i) acc += rho[i];
        out[j] = acc * grid.spatial_volume();
    }
    return out;
}

void export_result(const ProblemSpec& problem, const SolveResult& result, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error(dir.string() + ": cannot create directory: " + ec.message());
    const GridSpec& grid = problem.grid;
    const Iterate& x = result.x;

    write_array(dir / "rho_bar.bin", x.u.rho_bar);
    write_array(dir / "rho.bin", x.v.rho);
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        write_array(dir / ("omega_" + std::to_string(k) + ".bin"), x.v.omega[k]);
        write_array(dir / ("omega_bar_" + std::to_string(k) + ".bin"), x.u.omega_bar[k]);
    }
    write_array(dir / "zeta.bin", x.v.zeta);
    write_array(dir / "zeta_bar.bin", x.u.zeta_bar);

    const Diagnostics& d = result.diagnostics;
    json diag;
    diag["stride"] = d.stride;
    diag["iterations"] = d.iterations;
    diag["energy"] = finite_or_null(d.energy);
    json viol = json::array();
    for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
        std::vector<double> trace;
        for (const auto& snap : d.violations) trace.push_back(snap[c]);
        viol.push_back({{"name", problem.constraints[c].name}, {"max_violation", finite_or_null(trace)}});
    }
    diag["violations"] = viol;
    diag["ce_residual"] = finite_or_null(d.ce_residual);
    diag["relative_error"] = finite_or_null(d.relative_error);
    diag["rate"] = {{"q", scalar(d.rate.q)}, {"r_squared", scalar(d.rate.r_squared)}, {"points", d.rate.points}};
    diag["wall_seconds"] = result.wall_seconds;
    write_text(dir / "diagnostics.json", diag.dump(2));

    json summary;
    summary["problem"] = json::parse(serialize_config(problem, -1));
    summary["gamma"] = result.gamma;
    summary["alpha"] = result.alpha;
    summary["iterations_run"] = result.iterations_run;
    summary["cancelled"] = result.cancelled;
    summary["wall_seconds"] = result.wall_seconds;
    summary["energy"] = scalar(result.energy);
    summary["init_energy"] = scalar(result.init_energy);
    summary["ce_residual"] = scalar(result.ce_residual);
    summary["consistency_residual"] = scalar(result.consistency_residual);
    summary["mass"] = finite_or_null(mass_trace(grid, x.v.rho));
    summary["mass_faces"] = finite_or_null(mass_trace(grid, x.u.rho_bar));
    json cons = json::array();
    for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
        cons.push_back({{"name", problem.constraints[c].name},
                        {"values", finite_or_null(result.constraints.values[c])},
                        {"violations", finite_or_null(result.constraints.violations[c])}});
    }
    summary["constraints"] = cons;
    summary["max_violation"] = result.constraints.max_violation;
    summary["files"] = {{"time_axis", "leading"}, {"format", "CUOTARR 1 f64"}};
    write_text(dir / "summary.json", summary.dump(2));
}

}  // namespace cuot
