#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cuot/array.hpp"
#include "cuot/ppxa.hpp"

namespace cuot {

/// Flat binary array: the ASCII line "CUOTARR 1 f64 <rank> <extent>...\n"
/// followed by the row-major values as little-endian IEEE doubles.
void write_array(const std::filesystem::path& path, const Array& a);
Array read_array(const std::filesystem::path& path);

/// Dense grid of nonnegative values from a ".bin" array file or from
/// delimited text (commas, semicolons or whitespace; one row per line;
/// blank lines and lines starting with '#' ignored). Text rasters are 1-D
/// when they hold a single row or a single column.
Array ingest_raster(const std::filesystem::path& path);

/// Same as ingest_raster but checks the result against `expected`.
Array ingest_raster(const std::filesystem::path& path, const Shape& expected);

/// (time, mass) pairs from a two-column delimited file. A header line is
/// allowed. Times must be strictly increasing.
std::vector<std::pair<double, double>> read_schedule(const std::filesystem::path& path);

/// Maps the pair times affinely onto [0, 1] and linearly interpolates the
/// masses at the centered times (j0 + 1/2) / time_cells.
std::vector<double> resample_schedule(const std::vector<std::pair<double, double>>& pairs, std::size_t time_cells);

std::vector<double> ingest_schedule(const std::filesystem::path& path, std::size_t time_cells);

/// Per-slice total mass: constraint_value with unit density weight.
std::vector<double> mass_trace(const GridSpec& grid, const Array& rho);

/// Writes rho_bar.bin, rho.bin, omega_<k>.bin, zeta.bin, omega_bar_<k>.bin,
/// zeta_bar.bin, diagnostics.json and summary.json into `dir`. Throws
/// std::runtime_error naming the path on I/O failure.
void export_result(const ProblemSpec& problem, const SolveResult& result, const std::filesystem::path& dir);

}  // namespace cuot
