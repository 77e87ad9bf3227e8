#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cuot/constraints.hpp"
#include "fields.hpp"
#include "properties.hpp"

namespace cuot {
namespace {

using testing::make_grid;
using testing::Random;

constexpr double kInf = std::numeric_limits<double>::infinity();

AffineBoxConstraint mass_constraint(const GridSpec& g, double lower, double upper) {
    AffineBoxConstraint c;
    c.name = "mass";
    c.rho_weight = Array(g.centered_shape(), 1.0);
    c.lower.assign(g.time_cells, lower);
    c.upper.assign(g.time_cells, upper);
    return c;
}

TEST(ConstraintValue, HandValues) {
    const GridSpec g = make_grid(2, {4}, {Boundary::neumann}, {3.0});
    CenteredField v = CenteredField::zeros(g);
    v.rho.fill(1.0);
    const AffineBoxConstraint mass = mass_constraint(g, 0.0, kInf);
    EXPECT_NEAR(constraint_value(g, mass, v, 0), 3.0, 1e-14);

    AffineBoxConstraint none;
    none.lower.assign(2, -kInf);
    none.upper.assign(2, kInf);
    EXPECT_EQ(constraint_value(g, none, v, 1), 0.0);

    const GridSpec h = make_grid(2, {2}, {Boundary::neumann});
    CenteredField w = CenteredField::zeros(h);
    w.rho.fill(2.0);
    EXPECT_DOUBLE_EQ(constraint_value(h, mass_constraint(h, 0, 1), w, 0), 2.0);
}

TEST(ConstraintValue, MomentumAndSourceWeights) {
    const GridSpec g = make_grid(2, {2}, {Boundary::neumann});
    CenteredField v = CenteredField::zeros(g);
    v.omega[0] = Array(g.centered_shape(), std::vector<double>{1, 2, 3, 4});
    v.zeta = Array(g.centered_shape(), std::vector<double>{5, 6, 7, 8});
    AffineBoxConstraint c;
    c.omega_weight = {Array(g.centered_shape(), std::vector<double>{1, 0, 0, 1})};
    c.zeta_weight = Array(g.centered_shape(), std::vector<double>{0, 1, 1, 0});
    c.lower.assign(2, -kInf);
    c.upper.assign(2, kInf);
    EXPECT_DOUBLE_EQ(constraint_value(g, c, v, 0), 0.5 * (1 + 6));
    EXPECT_DOUBLE_EQ(constraint_value(g, c, v, 1), 0.5 * (4 + 7));
}

TEST(BoxProjection, InsideIsUnchanged) {
    const GridSpec g = make_grid(3, {4}, {Boundary::neumann});
    CenteredField v = CenteredField::zeros(g);
    v.rho.fill(0.2);
    EXPECT_EQ(project_box(g, mass_constraint(g, 0.0, 1.0), v), v);
}

TEST(BoxProjection, HandExample) {
    const GridSpec g = make_grid(1, {2}, {Boundary::neumann});
    CenteredField v = CenteredField::zeros(g);
    v.rho.fill(2.0);
    const AffineBoxConstraint c = mass_constraint(g, -kInf, 1.0);
    const CenteredField p = project_box(g, c, v);
    EXPECT_DOUBLE_EQ(p.rho[0], 1.0);
    EXPECT_DOUBLE_EQ(p.rho[1], 1.0);
    EXPECT_DOUBLE_EQ(constraint_value(g, c, p, 0), 1.0);
}

TEST(BoxProjection, MatchesLeastSquaresOracle) {
    const GridSpec g = make_grid(3, {4}, {Boundary::neumann});
    Random rng(31);
    AffineBoxConstraint c;
    c.rho_weight = rng.array(g.centered_shape());
    c.omega_weight = {rng.array(g.centered_shape())};
    c.zeta_weight = rng.array(g.centered_shape());
    c.lower = {-kInf, 0.3, -0.1};
    c.upper = {-0.2, 0.3, 0.1};
    const CenteredField v = rng.centered(g, -3.0, 3.0);
    const CenteredField p = project_box(g, c, v);

    // Per slice: the active bound, if any, becomes an equality row a^T x = b.
    const Eigen::VectorXd x = testing::flatten(v);
    Eigen::VectorXd expected = x;
    const std::size_t n = g.centered_size(), s = g.spatial_size();
    for (std::size_t t = 0; t < 3; ++t) {
        Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(3 * n));
        for (std::size_t j = 0; j < s; ++j) {
            const std::size_t i = t * s + j;
            a(static_cast<Eigen::Index>(i)) = c.rho_weight[i] * g.spatial_volume();
            a(static_cast<Eigen::Index>(n + i)) = c.omega_weight[0][i] * g.spatial_volume();
            a(static_cast<Eigen::Index>(2 * n + i)) = c.zeta_weight[i] * g.spatial_volume();
        }
        const double value = a.dot(x);
        double target = value;
        if (value < c.lower[t]) target = c.lower[t];
        if (value > c.upper[t]) target = c.upper[t];
        if (target == value) continue;
        const Eigen::VectorXd proj = testing::dense_affine_projection(a, Eigen::VectorXd::Constant(1, target), x);
        for (std::size_t j = 0; j < s; ++j) {
            for (std::size_t comp = 0; comp < 3; ++comp) {
                const auto i = static_cast<Eigen::Index>(comp * n + t * s + j);
                expected(i) = proj(i);
            }
        }
    }
    EXPECT_LT((testing::flatten(p) - expected).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_LE(bound_violation(constraint_value(g, c, p, t), c.lower[t], c.upper[t]), 1e-12);
    }
}

TEST(BoxProjection, RegionEqualityZeroesRegionMass) {
    const GridSpec g = make_grid(2, {6}, {Boundary::neumann});
    Random rng(32);
    AffineBoxConstraint c;
    c.rho_weight = Array(g.centered_shape());
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t j = 2; j < 4; ++j) c.rho_weight[t * 6 + j] = 1.0;
    }
    c.lower.assign(2, 0.0);
    c.upper.assign(2, 0.0);
    const CenteredField p = project_box(g, c, rng.centered(g, 0.0, 1.0));
    for (std::size_t t = 0; t < 2; ++t) EXPECT_NEAR(constraint_value(g, c, p, t), 0.0, 1e-15);
}

TEST(BoxProjection, ProjectionProperties) {
    const testing::ProjectionCheck c = testing::check_box_projection(
        make_grid(4, {5, 3}, {Boundary::neumann, Boundary::periodic}), 1000, 33);
    EXPECT_LE(c.idempotence, 1e-9);
    EXPECT_LE(c.nonexpansion, 1e-9);
}

TEST(Validation, ZeroWeightInfeasibleBound) {
    const GridSpec g = make_grid(3, {4}, {Boundary::neumann});
    AffineBoxConstraint c = mass_constraint(g, 1.0, 1.0);
    c.rho_weight.fill(0.0);
    EXPECT_THROW(validate_constraint(g, c), InfeasibleConstraint);
    EXPECT_THROW(BoxProjector(g, c), InfeasibleConstraint);
    c.lower.assign(3, -1.0);
    EXPECT_NO_THROW(validate_constraint(g, c));
    EXPECT_THROW(validate_constraint(g, mass_constraint(g, 2.0, 1.0)), InfeasibleConstraint);
    AffineBoxConstraint bad = mass_constraint(g, 0.0, 1.0);
    bad.rho_weight = Array({3, 5});
    EXPECT_THROW(validate_constraint(g, bad), InvalidField);
    bad = mass_constraint(g, 0.0, 1.0);
    bad.upper.pop_back();
    EXPECT_THROW(validate_constraint(g, bad), InvalidField);
}

TEST(Report, ViolationsPerSlice) {
    const GridSpec g = make_grid(2, {2}, {Boundary::neumann});
    CenteredField v = CenteredField::zeros(g);
    v.rho = Array(g.centered_shape(), std::vector<double>{1, 1, 3, 3});
    const ConstraintReport r = evaluate_constraints(g, {mass_constraint(g, 0.5, 2.0)}, v);
    EXPECT_DOUBLE_EQ(r.values[0][0], 1.0);
    EXPECT_DOUBLE_EQ(r.values[0][1], 3.0);
    EXPECT_EQ(r.violations[0][0], 0.0);
    EXPECT_DOUBLE_EQ(r.violations[0][1], 1.0);
    EXPECT_DOUBLE_EQ(r.max_violation, 1.0);
    EXPECT_DOUBLE_EQ(bound_violation(-1.0, 0.0, kInf), 1.0);
}

TEST(Consistency, FeasiblePairUnchanged) {
    Random rng(34);
    const GridSpec g = make_grid(3, {4}, {Boundary::periodic});
    const StaggeredField u = rng.staggered(g);
    const auto [u2, v2] = project_consistency(g, u, interpolate(g, u));
    EXPECT_LT(testing::max_abs_diff(u2, u), 1e-13);
    EXPECT_LT(testing::max_abs_diff(v2, interpolate(g, u)), 1e-13);
}

TEST(Consistency, SourceMidpoint) {
    const GridSpec g = make_grid(2, {2}, {Boundary::neumann});
    StaggeredField u = StaggeredField::zeros(g);
    CenteredField v = CenteredField::zeros(g);
    u.zeta_bar.fill(4.0);
    v.zeta.fill(2.0);
    const auto [u2, v2] = project_consistency(g, u, v);
    for (double x : u2.zeta_bar.values()) EXPECT_DOUBLE_EQ(x, 3.0);
    for (double x : v2.zeta.values()) EXPECT_DOUBLE_EQ(x, 3.0);
}

TEST(Consistency, MatchesDenseKkt) {
    Random rng(35);
    for (const GridSpec& g : {make_grid(3, {3}, {Boundary::neumann}), make_grid(3, {3, 3}, {Boundary::periodic, Boundary::neumann})}) {
        const StaggeredField u = rng.staggered(g);
        const CenteredField v = rng.centered(g);
        const auto [u2, v2] = project_consistency(g, u, v);
        const Eigen::MatrixXd interp = testing::dense_interpolation(g);
        Eigen::MatrixXd a(interp.rows(), interp.cols() + interp.rows());
        a << interp, -Eigen::MatrixXd::Identity(interp.rows(), interp.rows());
        Eigen::VectorXd x(a.cols());
        x << testing::flatten(u), testing::flatten(v);
        const Eigen::VectorXd p = testing::dense_affine_projection(a, Eigen::VectorXd::Zero(a.rows()), x);
        Eigen::VectorXd got(a.cols());
        got << testing::flatten(u2), testing::flatten(v2);
        EXPECT_LT((got - p).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Consistency, ProjectionProperties) {
    const testing::ProjectionCheck c =
        testing::check_consistency_projection(make_grid(4, {5, 3}, {Boundary::neumann, Boundary::periodic}), 1000, 36);
    EXPECT_LE(c.idempotence, 1e-9);
    EXPECT_LE(c.nonexpansion, 1e-9);
}

TEST(Continuity, FeasibleFieldUnchanged) {
    Random rng(37);
    const GridSpec g = make_grid(3, {4}, {Boundary::neumann});
    StaggeredField u = rng.staggered(g);
    u.zeta_bar = divergence(g, u);
    const StaggeredField p = project_continuity(g, u, boundary_extract(g, u));
    EXPECT_LT(testing::max_abs_diff(p, u), 1e-12);
}

TEST(Continuity, MatchesDenseKkt) {
    Random rng(38);
    for (const GridSpec& g : {make_grid(3, {3}, {Boundary::neumann}), make_grid(3, {3}, {Boundary::periodic}),
                              make_grid(3, {3, 3}, {Boundary::neumann, Boundary::periodic}, {1.0, 2.0})}) {
        const StaggeredField u = rng.staggered(g);
        BoundaryValues b0;
        for (std::size_t i = 0; i < boundary_size(g); ++i) b0.values.push_back(rng.uniform());
        const StaggeredField p = project_continuity(g, u, b0);

        const Eigen::MatrixXd div = testing::dense_divergence(g);
        const Eigen::MatrixXd sel = testing::dense_boundary_selector(g);
        const auto m = div.rows(), n = div.cols();
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + sel.rows(), n);
        a.topRows(m) = div;
        a.block(0, n - m, m, m) -= Eigen::MatrixXd::Identity(m, m);
        a.bottomRows(sel.rows()) = sel;
        Eigen::VectorXd b = Eigen::VectorXd::Zero(a.rows());
        for (std::size_t i = 0; i < b0.values.size(); ++i) b(m + static_cast<Eigen::Index>(i)) = b0.values[i];
        const Eigen::VectorXd expected = testing::dense_affine_projection(a, b, testing::flatten(u));
        EXPECT_LT((testing::flatten(p) - expected).cwiseAbs().maxCoeff(), 1e-11);
        EXPECT_LT(continuity_residual_norm(g, p), 1e-11);
        EXPECT_EQ(boundary_extract(g, p), b0);
    }
}

TEST(Continuity, ProjectionProperties) {
    for (const GridSpec& g : {make_grid(4, {5, 3}, {Boundary::neumann, Boundary::periodic}),
                              make_grid(6, {8}, {Boundary::periodic}, {6.28})}) {
        const testing::ProjectionCheck c = testing::check_continuity_projection(g, 1000, 39);
        EXPECT_LE(c.idempotence, 1e-9);
        EXPECT_LE(c.nonexpansion, 1e-9);
    }
}

TEST(ApplyAlongAxis, MatchesExplicitProduct) {
    Random rng(40);
    const Array in = rng.array({3, 4, 2});
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 4);
    Array out({3, 4, 2});
    apply_along_axis(m, 1, in, out);
    for (std::size_t o = 0; o < 3; ++o) {
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t i = 0; i < 2; ++i) {
                double s = 0.0;
                for (std::size_t c = 0; c < 4; ++c) s += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * in[(o * 4 + c) * 2 + i];
                EXPECT_NEAR(out[(o * 4 + r) * 2 + i], s, 1e-14);
            }
        }
    }
}

}  // namespace
}  // namespace cuot
