#pragma once

#include <span>
#include <vector>

#include "cuot/errors.hpp"
#include "cuot/grid.hpp"

namespace cuot {

class ThreadPool;

/// f_delta(rho, omega, zeta) = (|omega|^2 + delta^2 zeta^2) / (2 rho) for rho > 0,
/// 0 at the origin and +inf elsewhere.
double infinitesimal_cost(double delta, double rho, std::span<const double> omega, double zeta);

/// sum over centered cells of f_delta times h0 * prod_k h_k. +inf if any cell is infeasible.
double total_cost(const GridSpec& grid, double delta, const CenteredField& v);

struct PointValue {
    double rho = 0.0;
    std::vector<double> omega;
    double zeta = 0.0;
};

/// Result of the scalar reduction of the prox: the density and the factors
/// that map the input momentum and source onto the output ones.
struct ProxScales {
    double rho = 0.0;
    double omega_scale = 0.0;
    double zeta_scale = 0.0;
};

/// Prox of gamma * f_delta reduced to its density. `omega_sq` = |omega~|^2.
/// Uses the closed-form cubic when delta == 1 and safeguarded Newton otherwise.
ProxScales prox_scales(double gamma, double delta, double rho_in, double omega_sq, double zeta_in);

/// Safeguarded Newton on the stationarity equation, valid for any delta > 0.
ProxScales prox_scales_newton(double gamma, double delta, double rho_in, double omega_sq, double zeta_in);

/// Largest real root of (rho - rho~)(rho + gamma)^2 = gamma (|omega~|^2 + zeta~^2) / 2 (delta = 1).
ProxScales prox_scales_cubic(double gamma, double rho_in, double omega_sq, double zeta_in);

/// argmin_(rho, omega, zeta) 1/2 |(rho, omega, zeta) - input|^2 + gamma f_delta(rho, omega, zeta).
PointValue prox_pointwise(double gamma, double delta, double rho_in, std::span<const double> omega_in,
                          double zeta_in);

/// Applies prox_pointwise independently at every centered cell. gamma acts on
/// the unweighted cell sum of f_delta; the cell volume only enters total_cost.
CenteredField prox_cost_field(const GridSpec& grid, double gamma, double delta, const CenteredField& v);
void prox_cost_field_into(const GridSpec& grid, double gamma, double delta, const CenteredField& v,
                          CenteredField& out, ThreadPool* pool = nullptr);

}  // namespace cuot
