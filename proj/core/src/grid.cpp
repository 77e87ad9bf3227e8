#include "cuot/grid.hpp"

#include <cmath>
#include <string>

namespace cuot {

double GridSpec::spatial_volume() const {
    double v = 1.0;
    for (std::size_t k = 0; k < dim(); ++k) v *= step(k);
    return v;
}

std::size_t GridSpec::spatial_size() const { return shape_size(spatial_shape()); }

Shape GridSpec::centered_shape() const {
    Shape s{time_cells};
    s.insert(s.end(), cells.begin(), cells.end());
    return s;
}

Shape GridSpec::time_staggered_shape() const {
    Shape s = centered_shape();
    s[0] += 1;
    return s;
}

Shape GridSpec::space_staggered_shape(std::size_t k) const {
    Shape s = centered_shape();
    s[k + 1] = face_count(k);
    return s;
}

double GridSpec::time_center(std::size_t j0) const {
    return (static_cast<double>(j0) + 0.5) / static_cast<double>(time_cells);
}

double GridSpec::cell_center(std::size_t k, std::size_t j) const {
    return (static_cast<double>(j) + 0.5) * lengths[k] / static_cast<double>(cells[k]);
}

void GridSpec::validate() const {
    if (time_cells < 2) throw InvalidField("grid: time cell count must be >= 2");
    if (cells.empty()) throw InvalidField("grid: at least one spatial axis is required");
    if (lengths.size() != cells.size() || boundary.size() != cells.size()) {
        throw InvalidField("grid: cells, lengths and boundary must have one entry per spatial axis");
    }
    for (std::size_t k = 0; k < dim(); ++k) {
        if (cells[k] < 2) throw InvalidField("grid: spatial cell count must be >= 2 on axis " + std::to_string(k));
        if (!(lengths[k] > 0.0) || !std::isfinite(lengths[k])) {
            throw InvalidField("grid: length must be positive on axis " + std::to_string(k));
        }
    }
}

CenteredField CenteredField::zeros(const GridSpec& grid) {
    CenteredField v;
    v.rho = Array(grid.centered_shape());
    v.omega.assign(grid.dim(), Array(grid.centered_shape()));
    v.zeta = Array(grid.centered_shape());
    return v;
}

StaggeredField StaggeredField::zeros(const GridSpec& grid) {
    StaggeredField u;
    u.rho_bar = Array(grid.time_staggered_shape());
    u.omega_bar.reserve(grid.dim());
    for (std::size_t k = 0; k < grid.dim(); ++k) u.omega_bar.emplace_back(grid.space_staggered_shape(k));
    u.zeta_bar = Array(grid.centered_shape());
    return u;
}

void check_field(const GridSpec& grid, const CenteredField& v) {
    const Shape c = grid.centered_shape();
    require_shape(v.rho, c, "centered rho");
    if (v.omega.size() != grid.dim()) throw InvalidField("centered omega: wrong number of components");
    for (const auto& w : v.omega) require_shape(w, c, "centered omega");
    require_shape(v.zeta, c, "centered zeta");
}

void check_field(const GridSpec& grid, const StaggeredField& u) {
    require_shape(u.rho_bar, grid.time_staggered_shape(), "staggered rho_bar");
    if (u.omega_bar.size() != grid.dim()) throw InvalidField("staggered omega_bar: wrong number of components");
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        require_shape(u.omega_bar[k], grid.space_staggered_shape(k), "staggered omega_bar");
    }
    require_shape(u.zeta_bar, grid.centered_shape(), "staggered zeta_bar");
}

namespace axis_ops {

void average(const Array& in, std::size_t axis, bool periodic, Array& out) {
    const AxisLayout li = axis_layout(in.shape(), axis);
    const AxisLayout lo = axis_layout(out.shape(), axis);
    const std::size_t n = lo.len;
    for (std::size_t o = 0; o < lo.outer; ++o) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jn = (periodic && j + 1 == n) ? 0 : j + 1;
            const double* a = in.data() + li.index(o, j, 0);
            const double* b = in.data() + li.index(o, jn, 0);
            double* r = out.data() + lo.index(o, j, 0);
            for (std::size_t i = 0; i < lo.inner; ++i) r[i] = 0.5 * (a[i] + b[i]);
        }
    }
}

void average_adjoint(const Array& in, std::size_t axis, bool periodic, Array& out) {
    const AxisLayout li = axis_layout(in.shape(), axis);
    const AxisLayout lo = axis_layout(out.shape(), axis);
    const std::size_t n = li.len;
    for (std::size_t o = 0; o < lo.outer; ++o) {
        for (std::size_t f = 0; f < lo.len; ++f) {
            double* r = out.data() + lo.index(o, f, 0);
            const double* right = (f < n) ? in.data() + li.index(o, f, 0) : nullptr;
            const double* left = nullptr;
            if (f > 0) left = in.data() + li.index(o, f - 1, 0);
            else if (periodic) left = in.data() + li.index(o, n - 1, 0);
            for (std::size_t i = 0; i < lo.inner; ++i) {
                double s = 0.0;
                if (left) s += left[i];
                if (right) s += right[i];
                r[i] = 0.5 * s;
            }
        }
    }
}

void add_difference(const Array& in, std::size_t axis, bool periodic, double h, Array& out) {
    const AxisLayout li = axis_layout(in.shape(), axis);
    const AxisLayout lo = axis_layout(out.shape(), axis);
    const std::size_t n = lo.len;
    const double inv_h = 1.0 / h;
    for (std::size_t o = 0; o < lo.outer; ++o) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jn = (periodic && j + 1 == n) ? 0 : j + 1;
            const double* a = in.data() + li.index(o, j, 0);
            const double* b = in.data() + li.index(o, jn, 0);
            double* r = out.data() + lo.index(o, j, 0);
            for (std::size_t i = 0; i < lo.inner; ++i) r[i] += (b[i] - a[i]) * inv_h;
        }
    }
}

void difference_adjoint(const Array& p, std::size_t axis, bool periodic, double h, Array& out) {
    const AxisLayout lp = axis_layout(p.shape(), axis);
    const AxisLayout lo = axis_layout(out.shape(), axis);
    const std::size_t n = lp.len;
    const double inv_h = 1.0 / h;
    for (std::size_t o = 0; o < lo.outer; ++o) {
        for (std::size_t f = 0; f < lo.len; ++f) {
            double* r = out.data() + lo.index(o, f, 0);
            const double* right = (f < n) ? p.data() + lp.index(o, f, 0) : nullptr;
            const double* left = nullptr;
            if (f > 0) left = p.data() + lp.index(o, f - 1, 0);
            else if (periodic) left = p.data() + lp.index(o, n - 1, 0);
            for (std::size_t i = 0; i < lo.inner; ++i) {
                double s = 0.0;
                if (left) s += left[i];
                if (right) s -= right[i];
                r[i] = s * inv_h;
            }
        }
    }
}

}  // namespace axis_ops

CenteredField interpolate(const GridSpec& grid, const StaggeredField& u) {
    check_field(grid, u);
    CenteredField v = CenteredField::zeros(grid);
    axis_ops::average(u.rho_bar, 0, false, v.rho);
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        axis_ops::average(u.omega_bar[k], k + 1, grid.periodic(k), v.omega[k]);
    }
    v.zeta = u.zeta_bar;
    return v;
}

StaggeredField interpolate_adjoint(const GridSpec& grid, const CenteredField& v) {
    check_field(grid, v);
    StaggeredField u = StaggeredField::zeros(grid);
    axis_ops::average_adjoint(v.rho, 0, false, u.rho_bar);
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        axis_ops::average_adjoint(v.omega[k], k + 1, grid.periodic(k), u.omega_bar[k]);
    }
    u.zeta_bar = v.zeta;
    return u;
}

Array divergence(const GridSpec& grid, const StaggeredField& u) {
    check_field(grid, u);
    Array div(grid.centered_shape());
    axis_ops::add_difference(u.rho_bar, 0, false, grid.time_step(), div);
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        axis_ops::add_difference(u.omega_bar[k], k + 1, grid.periodic(k), grid.step(k), div);
    }
    return div;
}

StaggeredField divergence_adjoint(const GridSpec& grid, const Array& p) {
    require_shape(p, grid.centered_shape(), "divergence adjoint input");
    StaggeredField u = StaggeredField::zeros(grid);
    axis_ops::difference_adjoint(p, 0, false, grid.time_step(), u.rho_bar);
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        axis_ops::difference_adjoint(p, k + 1, grid.periodic(k), grid.step(k), u.omega_bar[k]);
    }
    return u;
}

Array extract_source(const StaggeredField& u) { return u.zeta_bar; }

Array continuity_residual(const GridSpec& grid, const StaggeredField& u) {
    Array r = divergence(grid, u);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= u.zeta_bar[i];
    return r;
}

namespace {

// Visits every boundary slot of u in BoundaryValues order; fn(slot_value&, position).
template <class Field, class Fn>
void for_each_boundary_slot(const GridSpec& grid, Field& u, Fn&& fn) {
    std::size_t pos = 0;
    const std::size_t s = grid.spatial_size();
    const std::size_t last = grid.time_cells * s;
    for (std::size_t i = 0; i < s; ++i) fn(u.rho_bar[i], pos++);
    for (std::size_t i = 0; i < s; ++i) fn(u.rho_bar[last + i], pos++);
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        if (grid.periodic(k)) continue;
        auto& w = u.omega_bar[k];
        const AxisLayout l = axis_layout(w.shape(), k + 1);
        for (std::size_t face : {std::size_t{0}, l.len - 1}) {
            for (std::size_t o = 0; o < l.outer; ++o) {
                for (std::size_t i = 0; i < l.inner; ++i) fn(w[l.index(o, face, i)], pos++);
            }
        }
    }
}

}  // namespace

std::size_t boundary_size(const GridSpec& grid) {
    std::size_t n = 2 * grid.spatial_size();
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        if (!grid.periodic(k)) n += 2 * grid.centered_size() / grid.cells[k];
    }
    return n;
}

BoundaryValues boundary_extract(const GridSpec& grid, const StaggeredField& u) {
    check_field(grid, u);
    BoundaryValues b;
    b.values.resize(boundary_size(grid));
    for_each_boundary_slot(grid, u, [&](const double& x, std::size_t pos) { b.values[pos] = x; });
    return b;
}

StaggeredField apply_boundary(const GridSpec& grid, StaggeredField u, const BoundaryValues& b0) {
    check_field(grid, u);
    if (b0.values.size() != boundary_size(grid)) {
        throw InvalidField("boundary values: expected " + std::to_string(boundary_size(grid)) + " entries, got " +
                           std::to_string(b0.values.size()));
    }
    for_each_boundary_slot(grid, u, [&](double& x, std::size_t pos) { x = b0.values[pos]; });
    return u;
}

BoundaryValues endpoint_boundary(const GridSpec& grid, const Array& rho0, const Array& rho1) {
    require_shape(rho0, grid.spatial_shape(), "rho0");
    require_shape(rho1, grid.spatial_shape(), "rho1");
    BoundaryValues b;
    b.values.assign(boundary_size(grid), 0.0);
    const std::size_t s = grid.spatial_size();
    for (std::size_t i = 0; i < s; ++i) {
        b.values[i] = rho0[i];
        b.values[s + i] = rho1[i];
    }
    return b;
}

double weighted_inner_slice(const GridSpec& grid, std::span<const double> v, std::span<const double> w) {
    if (v.size() != w.size()) throw InvalidField("weighted inner product: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
    return s * grid.spatial_volume();
}

double dot(const Array& a, const Array& b) {
    if (a.shape() != b.shape()) throw InvalidField("dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double dot(const CenteredField& a, const CenteredField& b) {
    double s = dot(a.rho, b.rho) + dot(a.zeta, b.zeta);
    for (std::size_t k = 0; k < a.omega.size(); ++k) s += dot(a.omega[k], b.omega[k]);
    return s;
}

double dot(const StaggeredField& a, const StaggeredField& b) {
    double s = dot(a.rho_bar, b.rho_bar) + dot(a.zeta_bar, b.zeta_bar);
    for (std::size_t k = 0; k < a.omega_bar.size(); ++k) s += dot(a.omega_bar[k], b.omega_bar[k]);
    return s;
}

double weighted_inner(const GridSpec& grid, const CenteredField& a, const CenteredField& b) {
    check_field(grid, a);
    check_field(grid, b);
    return dot(a, b) * grid.cell_volume();
}

}  // namespace cuot
