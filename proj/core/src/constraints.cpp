#include "cuot/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cuot/parallel.hpp"

namespace cuot {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixed work-unit sizes keep the floating-point evaluation order independent
// of how many threads pick up the units.
constexpr std::size_t kRowChunk = 32;
constexpr std::size_t kColChunk = 64;

// Face-to-cell averaging along one axis: n cells, n+1 faces (or n periodic).
Eigen::MatrixXd interpolation_matrix(std::size_t n, bool periodic) {
    const std::size_t faces = periodic ? n : n + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(faces));
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t jn = periodic ? (j + 1) % n : j + 1;
        m(j, j) += 0.5;
        m(j, jn) += 0.5;
    }
    return m;
}

// Forward differences restricted to the faces left free by the boundary
// operator: interior faces for Neumann-type axes, every face for periodic ones.
Eigen::MatrixXd free_difference_matrix(std::size_t n, bool periodic, double h) {
    const std::size_t free = periodic ? n : n - 1;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(free));
    for (std::size_t col = 0; col < free; ++col) {
        const std::size_t face = periodic ? col : col + 1;
        const std::size_t below = periodic ? (face + n - 1) % n : face - 1;
        d(face % n, col) -= 1.0 / h;
        d(below, col) += 1.0 / h;
    }
    return d;
}

template <class Fn>
void for_each_weight(const AffineBoxConstraint& c, Fn&& fn) {
    if (!c.rho_weight.empty()) fn(c.rho_weight, 0, std::size_t{0});
    for (std::size_t k = 0; k < c.omega_weight.size(); ++k) {
        if (!c.omega_weight[k].empty()) fn(c.omega_weight[k], 1, k);
    }
    if (!c.zeta_weight.empty()) fn(c.zeta_weight, 2, std::size_t{0});
}

const Array& component(const CenteredField& v, int which, std::size_t k) {
    if (which == 0) return v.rho;
    if (which == 1) return v.omega[k];
    return v.zeta;
}

Array& component(CenteredField& v, int which, std::size_t k) {
    if (which == 0) return v.rho;
    if (which == 1) return v.omega[k];
    return v.zeta;
}

}  // namespace

double bound_violation(double value, double lower, double upper) {
    if (value < lower) return lower - value;
    if (value > upper) return value - upper;
    return 0.0;
}

void validate_constraint(const GridSpec& grid, const AffineBoxConstraint& c) {
    const std::string who = "constraint '" + c.name + "'";
    const Shape shape = grid.centered_shape();
    if (c.omega_weight.size() > grid.dim()) throw InvalidField(who + ": more momentum weights than spatial axes");
    for_each_weight(c, [&](const Array& w, int, std::size_t) { require_shape(w, shape, who.c_str()); });
    if (c.lower.size() != grid.time_cells || c.upper.size() != grid.time_cells) {
        throw InvalidField(who + ": bounds must have one entry per time cell (" + std::to_string(grid.time_cells) +
                           ")");
    }
    const std::vector<double> norms = constraint_weight_norms(grid, c);
    for (std::size_t j0 = 0; j0 < grid.time_cells; ++j0) {
        const double lo = c.lower[j0];
        const double hi = c.upper[j0];
        if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf) {
            throw InfeasibleConstraint(who + ": empty bound interval at time index " + std::to_string(j0));
        }
        if (norms[j0] == 0.0 && (lo > 0.0 || hi < 0.0)) {
            throw InfeasibleConstraint(who + ": zero weights cannot meet the bound at time index " +
                                       std::to_string(j0));
        }
    }
}

std::vector<double> constraint_weight_norms(const GridSpec& grid, const AffineBoxConstraint& c) {
    const std::size_t s = grid.spatial_size();
    std::vector<double> norms(grid.time_cells, 0.0);
    for_each_weight(c, [&](const Array& w, int, std::size_t) {
        for (std::size_t j0 = 0; j0 < grid.time_cells; ++j0) {
            double acc = 0.0;
            for (std::size_t i = j0 * s; i < (j0 + 1) * s; ++i) acc += w[i] * w[i];
            norms[j0] += acc;
        }
    });
    for (double& n : norms) n *= grid.spatial_volume();
    return norms;
}

double constraint_value(const GridSpec& grid, const AffineBoxConstraint& c, const CenteredField& v,
                        std::size_t j0) {
    const std::size_t s = grid.spatial_size();
    double total = 0.0;
    for_each_weight(c, [&](const Array& w, int which, std::size_t k) {
        const Array& x = component(v, which, k);
        double acc = 0.0;
        for (std::size_t i = j0 * s; i < (j0 + 1) * s; ++i) acc += w[i] * x[i];
        total += acc;
    });
    return total * grid.spatial_volume();
}

ConstraintReport evaluate_constraints(const GridSpec& grid, const std::vector<AffineBoxConstraint>& constraints,
                                      const CenteredField& v) {
    ConstraintReport r;
    for (const auto& c : constraints) {
        std::vector<double> values(grid.time_cells), viol(grid.time_cells);
        for (std::size_t j0 = 0; j0 < grid.time_cells; ++j0) {
            values[j0] = constraint_value(grid, c, v, j0);
            viol[j0] = bound_violation(values[j0], c.lower[j0], c.upper[j0]);
            r.max_violation = std::max(r.max_violation, viol[j0]);
        }
        r.values.push_back(std::move(values));
        r.violations.push_back(std::move(viol));
    }
    return r;
}

BoxProjector::BoxProjector(const GridSpec& grid, AffineBoxConstraint constraint)
    : grid_(grid), constraint_(std::move(constraint)) {
    validate_constraint(grid_, constraint_);
    norms_ = constraint_weight_norms(grid_, constraint_);
}

void BoxProjector::project(CenteredField& v) const {
    const std::size_t s = grid_.spatial_size();
    const auto& c = constraint_;
    for (std::size_t j0 = 0; j0 < grid_.time_cells; ++j0) {
        if (norms_[j0] == 0.0) continue;
        const double lo = c.lower[j0];
        const double hi = c.upper[j0];
        if (lo == -kInf && hi == kInf) continue;
        const double value = constraint_value(grid_, c, v, j0);
        double lambda = 0.0;
        if (value > hi) lambda = value - hi;
        else if (value < lo) lambda = value - lo;
        if (lambda == 0.0) continue;
        const double coef = lambda / norms_[j0];
        for_each_weight(c, [&](const Array& w, int which, std::size_t k) {
            Array& x = component(v, which, k);
            for (std::size_t i = j0 * s; i < (j0 + 1) * s; ++i) x[i] -= coef * w[i];
        });
    }
}

CenteredField project_box(const GridSpec& grid, const AffineBoxConstraint& c, const CenteredField& v) {
    check_field(grid, v);
    CenteredField out = v;
    BoxProjector(grid, c).project(out);
    return out;
}

void apply_along_axis(const Eigen::MatrixXd& m, std::size_t axis, const Array& in, Array& out, ThreadPool* pool) {
    const AxisLayout l = axis_layout(in.shape(), axis);
    const auto len = static_cast<Eigen::Index>(l.len);
    if (l.inner == 1) {
        Eigen::Map<const RowMatrix> x(in.data(), static_cast<Eigen::Index>(l.outer), len);
        Eigen::Map<RowMatrix> y(out.data(), static_cast<Eigen::Index>(l.outer), len);
        const std::size_t units = (l.outer + kRowChunk - 1) / kRowChunk;
        parallel_for(pool, units, [&](std::size_t b, std::size_t e) {
            for (std::size_t u = b; u < e; ++u) {
                const auto r0 = static_cast<Eigen::Index>(u * kRowChunk);
                const auto rows = static_cast<Eigen::Index>(std::min(kRowChunk, l.outer - u * kRowChunk));
                y.middleRows(r0, rows).noalias() = x.middleRows(r0, rows) * m.transpose();
            }
        });
        return;
    }
    const std::size_t col_units = (l.inner + kColChunk - 1) / kColChunk;
    parallel_for(pool, l.outer * col_units, [&](std::size_t b, std::size_t e) {
        for (std::size_t u = b; u < e; ++u) {
            const std::size_t o = u / col_units;
            const std::size_t cu = u % col_units;
            Eigen::Map<const RowMatrix> x(in.data() + o * l.len * l.inner, len, static_cast<Eigen::Index>(l.inner));
            Eigen::Map<RowMatrix> y(out.data() + o * l.len * l.inner, len, static_cast<Eigen::Index>(l.inner));
            const auto c0 = static_cast<Eigen::Index>(cu * kColChunk);
            const auto cols = static_cast<Eigen::Index>(std::min(kColChunk, l.inner - cu * kColChunk));
            y.middleCols(c0, cols).noalias() = m * x.middleCols(c0, cols);
        }
    });
}

ConsistencyProjector::ConsistencyProjector(const GridSpec& grid) : grid_(grid) {
    auto normal_inverse = [](std::size_t n, bool periodic) {
        const Eigen::MatrixXd i = interpolation_matrix(n, periodic);
        Eigen::MatrixXd a = i.transpose() * i;
        a.diagonal().array() += 1.0;
        return Eigen::MatrixXd(a.llt().solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
    };
    time_inverse_ = normal_inverse(grid_.time_cells, false);
    for (std::size_t k = 0; k < grid_.dim(); ++k) space_inverse_.push_back(normal_inverse(grid_.cells[k], grid_.periodic(k)));
}

void ConsistencyProjector::project(const StaggeredField& u, const CenteredField& v, StaggeredField& u_out,
                                   CenteredField& v_out, ThreadPool* pool) const {
    StaggeredField rhs = interpolate_adjoint(grid_, v);
    for (std::size_t i = 0; i < rhs.rho_bar.size(); ++i) rhs.rho_bar[i] += u.rho_bar[i];
    for (std::size_t k = 0; k < grid_.dim(); ++k) {
        for (std::size_t i = 0; i < rhs.omega_bar[k].size(); ++i) rhs.omega_bar[k][i] += u.omega_bar[k][i];
    }
    apply_along_axis(time_inverse_, 0, rhs.rho_bar, u_out.rho_bar, pool);
    for (std::size_t k = 0; k < grid_.dim(); ++k) {
        apply_along_axis(space_inverse_[k], k + 1, rhs.omega_bar[k], u_out.omega_bar[k], pool);
    }
    for (std::size_t i = 0; i < u_out.zeta_bar.size(); ++i) u_out.zeta_bar[i] = 0.5 * (u.zeta_bar[i] + v.zeta[i]);
    v_out = interpolate(grid_, u_out);
}

std::pair<StaggeredField, CenteredField> project_consistency(const GridSpec& grid, const StaggeredField& u,
                                                             const CenteredField& v) {
    check_field(grid, u);
    check_field(grid, v);
    StaggeredField u_out = StaggeredField::zeros(grid);
    CenteredField v_out = CenteredField::zeros(grid);
    ConsistencyProjector(grid).project(u, v, u_out, v_out);
    return {std::move(u_out), std::move(v_out)};
}

ContinuityProjector::ContinuityProjector(const GridSpec& grid) : grid_(grid) {
    std::vector<Eigen::VectorXd> spectra;
    auto add_axis = [&](std::size_t n, bool periodic, double h) {
        const Eigen::MatrixXd d = free_difference_matrix(n, periodic, h);
        const Eigen::MatrixXd lap = d * d.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
        basis_.push_back(eig.eigenvectors());
        spectra.push_back(eig.eigenvalues().cwiseMax(0.0));
    };
    add_axis(grid_.time_cells, false, grid_.time_step());
    for (std::size_t k = 0; k < grid_.dim(); ++k) add_axis(grid_.cells[k], grid_.periodic(k), grid_.step(k));

    const Shape shape = grid_.centered_shape();
    inverse_spectrum_ = Array(shape);
    std::vector<std::size_t> idx(shape.size(), 0);
    for (std::size_t flat = 0; flat < inverse_spectrum_.size(); ++flat) {
        double s = 1.0;
        for (std::size_t a = 0; a < shape.size(); ++a) s += spectra[a](static_cast<Eigen::Index>(idx[a]));
        inverse_spectrum_[flat] = 1.0 / s;
        for (std::size_t a = shape.size(); a-- > 0;) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
}

void ContinuityProjector::project(const StaggeredField& u, const BoundaryValues& b0, StaggeredField& out,
                                  ThreadPool* pool) const {
    out = apply_boundary(grid_, u, b0);
    Array r = continuity_residual(grid_, out);
    Array tmp(r.shape());
    for (std::size_t a = 0; a < basis_.size(); ++a) {
        apply_along_axis(basis_[a].transpose(), a, r, tmp, pool);
        std::swap(r, tmp);
    }
    for (std::size_t i = 0; i < r.size(); ++i) r[i] *= inverse_spectrum_[i];
    for (std::size_t a = 0; a < basis_.size(); ++a) {
        apply_along_axis(basis_[a], a, r, tmp, pool);
        std::swap(r, tmp);
    }
    // U' = U_fixed - (div - s_z)^T p on the free slots only.
    const StaggeredField corr = divergence_adjoint(grid_, r);
    for (std::size_t i = 0; i < out.rho_bar.size(); ++i) out.rho_bar[i] -= corr.rho_bar[i];
    for (std::size_t k = 0; k < grid_.dim(); ++k) {
        for (std::size_t i = 0; i < out.omega_bar[k].size(); ++i) out.omega_bar[k][i] -= corr.omega_bar[k][i];
    }
    for (std::size_t i = 0; i < out.zeta_bar.size(); ++i) out.zeta_bar[i] += r[i];
    out = apply_boundary(grid_, std::move(out), b0);
}

StaggeredField project_continuity(const GridSpec& grid, const StaggeredField& u, const BoundaryValues& b0) {
    check_field(grid, u);
    StaggeredField out;
    ContinuityProjector(grid).project(u, b0, out);
    return out;
}

double continuity_residual_norm(const GridSpec& grid, const StaggeredField& u) {
    const Array r = continuity_residual(grid, u);
    double m = 0.0;
    for (double x : r.values()) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace cuot
