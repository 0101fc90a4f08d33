#include "csbp/kernels.hpp"
#include "csbp/levymeasure.hpp"
#include "csbp/linalg.hpp"

#include <doctest.h>

#include <cmath>

using namespace csbp;

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double x : r)
            m(i, j++) = x;
        ++i;
    }
    return m;
}

MatrixGridFunctiond indicator_table(double lo, double hi, double h, Eigen::Index n)
{
    // 1 on (lo, hi] sampled on the grid.
    const GridFunctiond g = sample<double>([=](double t) { return (t > lo + 1e-12 && t <= hi + 1e-12) ? 1.0 : 0.0; },
                                           h, n);
    return MatrixGridFunctiond(1, 1, {g});
}

PowerMatrix cancellation_matrix()
{
    PowerMatrix m(2);
    m(0, 0) = PowerSum::monomial(2.0, 1.0);
    m(0, 1) = PowerSum::monomial(1.0, 2.0);
    m(1, 0) = PowerSum::monomial(3.0, 2.0);
    m(1, 1) = PowerSum::monomial(1.0, 3.0);
    return m;
}

}  // namespace

TEST_CASE("MVN normalizing constant")
{
    // Pinned with mpmath: sqrt(2H sin(pi H) Gamma(2H)) / Gamma(H + 1/2).
    CHECK(mvn_constant(0.25) == doctest::Approx(0.645998003740752).epsilon(1e-13));
    CHECK(mvn_constant(0.5) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mvn_constant(0.75) == doctest::Approx(1.06964463503199).epsilon(1e-13));
}

TEST_CASE("MVN kernel values")
{
    const Kernel k = mvn_kernel(0.75);
    CHECK(k.dim() == 1);
    CHECK(k.psi_is_mirror());
    CHECK(k.phi(0.5)(0, 0) == doctest::Approx(1.06964463503199 * std::pow(0.5, 0.25)));
    CHECK(k.phi(-0.5)(0, 0) == 0.0);
    CHECK(k.k(1.0, -1.0)(0, 0) == doctest::Approx(1.06964463503199 * (std::pow(2.0, 0.25) - 1.0)));
    CHECK(k.phi_at_zero().has_value());
    CHECK_FALSE(mvn_kernel(0.25).phi_at_zero().has_value());
    CHECK(mvn_kernel(0.5).phi_constant());
    CHECK_FALSE(k.phi_constant());
    CHECK_THROWS_AS(mvn_kernel(1.0), std::invalid_argument);
    CHECK_THROWS_AS(mvn_kernel(0.0), std::invalid_argument);
}

TEST_CASE("exponential kernel lag table matches the matrix exponential")
{
    const Eigen::MatrixXd A = mat({{-1, 2}, {0, -3}});
    const Eigen::MatrixXd S = mat({{1, 0.5}, {0, 2}});
    const Kernel k = exp_kernel(A, S);
    const auto lags = k.phi_lags(0.01, 101);
    CHECK(lags[0].isZero(0.0));
    for (int i : {1, 17, 100})
        CHECK((lags[static_cast<size_t>(i)] - expm(A * (0.01 * i)) * S).norm() <= 1e-12);
    CHECK((k.phi(0.3) - expm(A * 0.3) * S).norm() <= 1e-14);
}

TEST_CASE("left limits vanish at the origin")
{
    const Kernel k = mvn_kernel(0.5);
    CHECK(k.phi_left(0.0)(0, 0) == 0.0);
    CHECK(k.phi_left(1e-9)(0, 0) == 1.0);
    const auto psi = k.psi_lags(0.1, 4);
    CHECK(psi[0](0, 0) == 0.0);
    CHECK(psi[3](0, 0) == 1.0);
    CHECK(power_kernel(cancellation_matrix()).psi_lags(0.1, 3)[2].isZero(0.0));
}

TEST_CASE("tabulated kernel interpolates and holds its last value")
{
    const GridFunctiond g = sample<double>([](double t) { return t * t; }, 0.5, 3);
    const Kernel k = tabulated_kernel(MatrixGridFunctiond(1, 1, {g}));
    CHECK(k.phi(0.5)(0, 0) == doctest::Approx(0.25));
    CHECK(k.phi(0.75)(0, 0) == doctest::Approx(0.625));
    CHECK(k.phi(7.0)(0, 0) == doctest::Approx(1.0));
    const Kernel deg = tabulated_kernel(indicator_table(1.0, 2.0, 0.25, 13), TabulatedPhi{indicator_table(0.0, 1.0, 0.25, 13)});
    CHECK(deg.phi(1.0)(0, 0) == 0.0);
    CHECK(deg.phi(1.25)(0, 0) == 1.0);
    CHECK(deg.phi(2.0)(0, 0) == 1.0);
    CHECK(deg.phi(2.25)(0, 0) == 0.0);
    CHECK(deg.phi(10.0)(0, 0) == 0.0);
}

TEST_CASE("kernel construction validates shapes")
{
    CHECK_THROWS_AS(exp_kernel(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)), std::invalid_argument);
    PowerMatrix upper(2);
    upper(0, 0) = PowerSum::monomial(1.0, 0.0);
    upper(0, 1) = PowerSum::monomial(1.0, 1.0);
    upper(1, 1) = PowerSum::monomial(1.0, 0.0);
    CHECK_THROWS_AS(triangular_kernel(upper, Triangle::Lower), std::invalid_argument);
    CHECK_NOTHROW(triangular_kernel(upper, Triangle::Upper));
}

TEST_CASE("det* verdicts across kernel families")
{
    CHECK(check_detstar(mvn_kernel(0.75)).status == DetStarStatus::Holds);
    CHECK(check_detstar(mvn_kernel(0.25)).status == DetStarStatus::Holds);

    const Eigen::MatrixXd A = mat({{-1, 2}, {0, -3}});
    CHECK(check_detstar(exp_kernel(A, Eigen::MatrixXd::Identity(2, 2))).status == DetStarStatus::Holds);
    CHECK(check_detstar(exp_kernel(A, mat({{1, 1}, {1, 1}}))).status == DetStarStatus::FailsNumerically);

    const DetStarVerdict zero = check_detstar(power_kernel(cancellation_matrix()));
    CHECK(zero.status == DetStarStatus::FailsNumerically);
    CHECK(zero.evidence.find("coefficient 0") != std::string::npos);

    PowerMatrix ok(2);
    ok(0, 0) = PowerSum::monomial(1.0, 0.0);
    ok(0, 1) = PowerSum::monomial(1.0, 1.0);
    ok(1, 0) = PowerSum::monomial(1.0, 1.0);
    ok(1, 1) = PowerSum::monomial(1.0, 0.0);
    CHECK(check_detstar(power_kernel(ok)).status == DetStarStatus::Holds);

    PowerMatrix tri(2);
    tri(0, 0) = PowerSum::monomial(1.0, 0.5);
    tri(1, 0) = PowerSum::monomial(1.0, 1.0);
    CHECK(check_detstar(triangular_kernel(tri, Triangle::Lower)).status == DetStarStatus::FailsNumerically);
}

TEST_CASE("numeric det* probe on tabulated kernels")
{
    const double h = 1e-3;
    const Eigen::Index n = 1001;
    auto pw = [&](double c, double a) { return sample<double>([=](double t) { return c * std::pow(t, a); }, h, n); };
    const Kernel cancel = tabulated_kernel(MatrixGridFunctiond(2, 2, {pw(2, 1), pw(1, 2), pw(3, 2), pw(1, 3)}));
    CHECK(check_detstar(cancel).status == DetStarStatus::FailsNumerically);

    const Kernel id = tabulated_kernel(MatrixGridFunctiond(2, 2, {pw(1, 0), pw(0, 0), pw(0, 0), pw(1, 0)}));
    const DetStarVerdict v = check_detstar(id);
    CHECK(v.status == DetStarStatus::Holds);
    CHECK_FALSE(v.probe_windows.empty());

    // Phi = 1_{(1,2]} vanishes near 0, so det* does too.
    CHECK(check_detstar(tabulated_kernel(indicator_table(1.0, 2.0, h, 3001))).status == DetStarStatus::FailsNumerically);
}

TEST_CASE("regular-variation index criterion")
{
    const RvIndices r = rv_index_criterion(mat({{0, 1}, {1, 0}}));
    CHECK(r.alpha_plus == doctest::Approx(0.0));
    CHECK(r.alpha_minus == doctest::Approx(2.0));
    CHECK(r.verdict == RvVerdict::True);
    CHECK(rv_index_criterion(mat({{1, 2}, {3, 4}})).verdict == RvVerdict::InconclusiveEqualIndices);
    CHECK(rv_index_criterion(mat({{0.5}})).alpha_plus == doctest::Approx(0.5));
    CHECK_THROWS_AS(rv_index_criterion(mat({{-1.5, 0}, {0, 0}})), std::invalid_argument);
}

TEST_CASE("integrability of standard kernels")
{
    const LevyModel bm = brownian_model(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1));
    // MVN normalization gives Var(X_1) = int K(1,u)^2 du = 1.
    const IntegrabilityReport mvn = check_integrability(mvn_kernel(0.75), bm, {1.0});
    CHECK(mvn.status == IntegrabilityStatus::Finite);
    CHECK(mvn.rows[0].l2 == doctest::Approx(1.0).epsilon(1e-5));

    // OU: int_{-inf}^1 e^{-2(1-u)} du = 1/2.
    const IntegrabilityReport ou = check_integrability(exp_kernel(-Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1)), bm, {1.0, 2.0});
    CHECK(ou.status == IntegrabilityStatus::Finite);
    CHECK(ou.rows[1].l2 == doctest::Approx(0.5).epsilon(1e-6));

    PowerMatrix c(1);
    c(0, 0) = PowerSum::monomial(1.0, 0.25);
    const IntegrabilityReport bad = check_integrability(power_kernel(c), bm, {1.0});
    CHECK(bad.status == IntegrabilityStatus::Divergent);

    const LevyModel stable = independent_components({tempered_stable_1d(1.0, 1.0, 1.5, 0.0, 0.0)});
    CHECK(check_integrability(mvn_kernel(0.75), stable, {1.0}).status == IntegrabilityStatus::Unsupported);
}

TEST_CASE("regularity moduli add up to the MVN variance scaling")
{
    // Q1(h) + Q2(h) = h^{2H} for the normalized MVN kernel.
    for (double H : {0.3, 0.75})
        for (const ModulusRow& r : regularity_moduli(mvn_kernel(H), {0.1, 0.01})) {
            CHECK_FALSE(r.divergent);
            CHECK(r.q1 == doctest::Approx(std::pow(mvn_constant(H), 2) * std::pow(r.h, 2 * H) / (2 * H)).epsilon(1e-8));
            CHECK(r.q1 + r.q2 == doctest::Approx(std::pow(r.h, 2 * H)).epsilon(1e-4));
        }
}
