#include "cuot/wfr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cuot/parallel.hpp"

namespace cuot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxNewton = 200;
constexpr double kNewtonTol = 1e-12;

ProxScales scales_from_density(double gamma, double delta, double rho) {
    if (rho <= 0.0) return {};
    return {rho, rho / (rho + gamma), rho / (rho + gamma * delta * delta)};
}

// The prox is the origin exactly when rho~ + |omega~|^2/(2 gamma) + zeta~^2/(2 gamma delta^2) <= 0.
bool prox_is_origin(double gamma, double delta, double rho_in, double omega_sq, double zeta_in) {
    return rho_in + omega_sq / (2.0 * gamma) + zeta_in * zeta_in / (2.0 * gamma * delta * delta) <= 0.0;
}

void check_params(double gamma, double delta) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("prox step gamma must be positive");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ParameterError("delta must be positive");
}

}  // namespace

double infinitesimal_cost(double delta, double rho, std::span<const double> omega, double zeta) {
    double omega_sq = 0.0;
    for (double w : omega) omega_sq += w * w;
    if (rho > 0.0) return (omega_sq + delta * delta * zeta * zeta) / (2.0 * rho);
    if (rho == 0.0 && omega_sq == 0.0 && zeta == 0.0) return 0.0;
    return kInf;
}

double total_cost(const GridSpec& grid, double delta, const CenteredField& v) {
    check_field(grid, v);
    const std::size_t n = v.rho.size();
    const std::size_t dim = v.omega.size();
    std::vector<double> omega(dim);
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t k = 0; k < dim; ++k) omega[k] = v.omega[k][c];
        const double f = infinitesimal_cost(delta, v.rho[c], omega, v.zeta[c]);
        if (f == kInf) return kInf;
        sum += f;
    }
    return sum * grid.cell_volume();
}

ProxScales prox_scales_newton(double gamma, double delta, double rho_in, double omega_sq, double zeta_in) {
    if (prox_is_origin(gamma, delta, rho_in, omega_sq, zeta_in)) return {};
    const double d2 = delta * delta;
    const double gd2 = gamma * d2;
    const double wa = 0.5 * gamma * omega_sq;
    const double wz = 0.5 * gamma * d2 * zeta_in * zeta_in;

    // g is increasing and concave for rho > 0, so Newton started left of the
    // root climbs monotonically; the bracket only guards against roundoff.
    auto g = [&](double r) {
        const double a = r + gamma;
        const double b = r + gd2;
        return r - rho_in - wa / (a * a) - wz / (b * b);
    };
    auto dg = [&](double r) {
        const double a = r + gamma;
        const double b = r + gd2;
        return 1.0 + 2.0 * wa / (a * a * a) + 2.0 * wz / (b * b * b);
    };

    double lo = std::max(rho_in, 0.0);
    double hi = lo + omega_sq / (2.0 * gamma) + zeta_in * zeta_in / (2.0 * gd2);
    if (wa == 0.0 && wz == 0.0) return scales_from_density(gamma, delta, lo);

    double x = lo;
    for (int it = 0; it < kMaxNewton; ++it) {
        const double gx = g(x);
        if (gx == 0.0) break;
        if (gx < 0.0) lo = x;
        else hi = x;
        double next = x - gx / dg(x);
        if (std::abs(next - x) <= kNewtonTol * std::max(1.0, x)) {
            x = next;
            break;
        }
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
        if (hi - lo <= kNewtonTol * std::max(1.0, x)) break;
    }
    return scales_from_density(gamma, delta, x);
}

ProxScales prox_scales_cubic(double gamma, double rho_in, double omega_sq, double zeta_in) {
    if (prox_is_origin(gamma, 1.0, rho_in, omega_sq, zeta_in)) return {};
    // s = rho + gamma solves s^3 - B s^2 - c = 0.
    const double big_b = rho_in + gamma;
    const double c = 0.5 * gamma * (omega_sq + zeta_in * zeta_in);
    if (c == 0.0) return scales_from_density(gamma, 1.0, rho_in);

    const double p = -big_b * big_b / 3.0;
    const double q = -2.0 * big_b * big_b * big_b / 27.0 - c;
    const double disc = 0.25 * q * q + p * p * p / 27.0;
    double y;
    if (disc > 0.0) {
        const double a = -0.5 * q;
        const double t = std::cbrt(a >= 0.0 ? a + std::sqrt(disc) : a - std::sqrt(disc));
        y = t - p / (3.0 * t);
    } else {
        const double r = std::sqrt(-p / 3.0);
        const double arg = std::clamp((3.0 * q / (2.0 * p)) * std::sqrt(-3.0 / p), -1.0, 1.0);
        y = 2.0 * r * std::cos(std::acos(arg) / 3.0);
    }
    double s = y + big_b / 3.0;
    for (int it = 0; it < 2; ++it) {
        const double h = s * s * (s - big_b) - c;
        const double dh = s * (3.0 * s - 2.0 * big_b);
        if (dh <= 0.0) break;
        s -= h / dh;
    }
    return scales_from_density(gamma, 1.0, s - gamma);
}

ProxScales prox_scales(double gamma, double delta, double rho_in, double omega_sq, double zeta_in) {
    if (delta == 1.0) return prox_scales_cubic(gamma, rho_in, omega_sq, zeta_in);
    return prox_scales_newton(gamma, delta, rho_in, omega_sq, zeta_in);
}

PointValue prox_pointwise(double gamma, double delta, double rho_in, std::span<const double> omega_in,
                          double zeta_in) {
    check_params(gamma, delta);
    double omega_sq = 0.0;
    for (double w : omega_in) omega_sq += w * w;
    const ProxScales s = prox_scales(gamma, delta, rho_in, omega_sq, zeta_in);
    PointValue out;
    out.rho = s.rho;
    out.omega.reserve(omega_in.size());
    for (double w : omega_in) out.omega.push_back(w * s.omega_scale);
    out.zeta = zeta_in * s.zeta_scale;
    return out;
}

void prox_cost_field_into(const GridSpec& grid, double gamma, double delta, const CenteredField& v,
                          CenteredField& out, ThreadPool* pool) {
    check_params(gamma, delta);
    check_field(grid, v);
    check_field(grid, out);
    const std::size_t n = v.rho.size();
    const std::size_t dim = v.omega.size();
    parallel_for(pool, n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            double omega_sq = 0.0;
            for (std::size_t k = 0; k < dim; ++k) omega_sq += v.omega[k][c] * v.omega[k][c];
            const ProxScales s = prox_scales(gamma, delta, v.rho[c], omega_sq, v.zeta[c]);
            out.rho[c] = s.rho;
            for (std::size_t k = 0; k < dim; ++k) out.omega[k][c] = v.omega[k][c] * s.omega_scale;
            out.zeta[c] = v.zeta[c] * s.zeta_scale;
        }
    });
}

CenteredField prox_cost_field(const GridSpec& grid, double gamma, double delta, const CenteredField& v) {
    check_field(grid, v);
    CenteredField out = CenteredField::zeros(grid);
    prox_cost_field_into(grid, gamma, delta, v, out, nullptr);
    return out;
}

}  // namespace cuot
