#include "csbp/gridfn.hpp"
#include "csbp/linalg.hpp"
#include "csbp/powersum.hpp"
#include "csbp/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace csbp;

namespace {

GridFunctiond power_fn(double c, double a, double h, Eigen::Index n)
{
    std::optional<double> sing;
    if (a < 0.0)
        sing = a;
    return sample<double>([=](double t) { return c * std::pow(t, a); }, h, n, sing);
}

// Smooth random function: a + b t + c sin(w t).
GridFunctiond random_fn(Rng& rng, double h, Eigen::Index n)
{
    const double a = 2.0 * rng.uniform() - 1.0;
    const double b = 2.0 * rng.uniform() - 1.0;
    const double c = 2.0 * rng.uniform() - 1.0;
    const double w = 1.0 + 5.0 * rng.uniform();
    return sample<double>([=](double t) { return a + b * t + c * std::sin(w * t); }, h, n);
}

MatrixGridFunctiond random_matrix_fn(Rng& rng, int d, double h, Eigen::Index n)
{
    std::vector<GridFunctiond> e;
    for (int i = 0; i < d * d; ++i)
        e.push_back(random_fn(rng, h, n));
    return MatrixGridFunctiond(d, d, std::move(e));
}

double sup_abs(const GridFunctiond& f)
{
    return f.values.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("grid function rejects invalid grids")
{
    CHECK_THROWS_AS(GridFunctiond(0.0, Eigen::VectorXd::Ones(3)), std::invalid_argument);
    CHECK_THROWS_AS(GridFunctiond(0.1, Eigen::VectorXd::Ones(1)), std::invalid_argument);
    CHECK_THROWS_AS(GridFunctiond(0.1, Eigen::VectorXd::Ones(3), -1.5), std::invalid_argument);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(3);
    v[2] = std::nan("");
    CHECK_THROWS_AS(GridFunctiond(0.1, v), std::invalid_argument);
}

TEST_CASE("grid function interpolation")
{
    const GridFunctiond f = sample<double>([](double t) { return 2.0 * t; }, 0.1, 11);
    CHECK(f.horizon() == doctest::Approx(1.0));
    CHECK(f(0.35) == doctest::Approx(0.7));
    CHECK_THROWS_AS(f(1.5), std::out_of_range);
}

TEST_CASE("convolution of constants is exact")
{
    const double h = 1e-3;
    const GridFunctiond one = sample<double>([](double) { return 1.0; }, h, 1001);
    const GridFunctiond c = conv_scalar(one, one);
    for (Eigen::Index i = 1; i < c.size(); ++i)
        REQUIRE(c.values[i] == doctest::Approx(c.time(i)).epsilon(1e-12));
    CHECK(c.values[0] == doctest::Approx(h / 2.0));
}

TEST_CASE("power convolution matches the Beta constant")
{
    // t^a * t^b = B(a+1, b+1) t^{a+b+1}; B(1.25, 1.5) and B(0.75, 2) pinned with mpmath.
    const double h = 1e-3;
    const Eigen::Index n = 1001;
    const GridFunctiond c1 = conv_scalar(power_fn(1.0, 0.25, h, n), power_fn(1.0, 0.5, h, n));
    CHECK(c1.values[n - 1] == doctest::Approx(0.499439534150880).epsilon(1e-3));
    const GridFunctiond c2 = conv_scalar(power_fn(1.0, -0.25, h, n), power_fn(1.0, 1.0, h, n));
    CHECK(c2.values[n - 1] == doctest::Approx(0.761904761904762).epsilon(1e-3));
    CHECK(c2.values[500] == doctest::Approx(0.761904761904762 * std::pow(0.5, 1.75)).epsilon(1e-3));
}

TEST_CASE("convolution is commutative and associative on random inputs")
{
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const GridFunctiond f = random_fn(rng, 0.01, 101);
        const GridFunctiond g = random_fn(rng, 0.01, 101);
        const GridFunctiond k = random_fn(rng, 0.01, 101);
        const GridFunctiond fg = conv_scalar(f, g);
        const GridFunctiond gf = conv_scalar(g, f);
        REQUIRE((fg.values - gf.values).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + sup_abs(fg)));
        const GridFunctiond left = conv_scalar(fg, k);
        const GridFunctiond right = conv_scalar(f, conv_scalar(g, k));
        REQUIRE((left.values - right.values).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + sup_abs(left)));
    }
}

TEST_CASE("convolution rejects mismatched grids")
{
    CHECK_THROWS_AS(conv_scalar(GridFunctiond::zeros(0.1, 5), GridFunctiond::zeros(0.1, 6)), std::invalid_argument);
    CHECK_THROWS_AS(conv_scalar(GridFunctiond::zeros(0.1, 5), GridFunctiond::zeros(0.2, 5)), std::invalid_argument);
}

TEST_CASE("Beta cancellation kernel has vanishing det*")
{
    // Phi = [[2t, t^2], [3t^2, t^3]]: 2 B(2,4) = 3 B(3,3) so det* = 0.
    PowerMatrix m(2);
    m(0, 0) = PowerSum::monomial(2.0, 1.0);
    m(0, 1) = PowerSum::monomial(1.0, 2.0);
    m(1, 0) = PowerSum::monomial(3.0, 2.0);
    m(1, 1) = PowerSum::monomial(1.0, 3.0);
    CHECK(power_conv_determinant(m).empty());

    const double h = 1e-3;
    const Eigen::Index n = 1001;
    const MatrixGridFunctiond phi(2, 2, {power_fn(2, 1, h, n), power_fn(1, 2, h, n), power_fn(3, 2, h, n),
                                         power_fn(1, 3, h, n)});
    CHECK(sup_abs(conv_determinant(phi)) <= 1e-6);
}

TEST_CASE("Beta identities")
{
    CHECK(std::abs(2.0 * beta_fn(2, 4) - 0.1) <= 1e-12);
    CHECK(std::abs(3.0 * beta_fn(3, 3) - 0.1) <= 1e-12);
    CHECK(std::abs(beta_fn(3, 3) - beta_fn(2, 4) + 1.0 / 60.0) <= 1e-12);
    CHECK_THROWS_AS(beta_fn(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("PowerSum algebra")
{
    const PowerSum a({{1.0, 0.5}, {2.0, 1.0}});
    const PowerSum b = PowerSum::monomial(3.0, 0.0);
    const PowerSum c = power_conv(a, b);
    // t^0.5 * 3 = 3 B(1.5, 1) t^1.5 = 2 t^1.5; 2t * 3 = 6 B(2,1) t^2 = 3 t^2.
    REQUIRE(c.terms().size() == 2);
    CHECK(c.terms()[0].coeff == doctest::Approx(2.0));
    CHECK(c.terms()[0].exponent == doctest::Approx(1.5));
    CHECK(c.terms()[1].coeff == doctest::Approx(3.0));
    CHECK((a - a).empty());
    CHECK(a(4.0) == doctest::Approx(2.0 + 8.0));
    CHECK(a.leading().exponent == 0.5);
    CHECK_THROWS_AS(PowerSum::monomial(1.0, -1.5), std::invalid_argument);
}

TEST_CASE("det* of a 1x1 kernel is the kernel")
{
    const GridFunctiond f = power_fn(1.5, 0.3, 0.01, 51);
    const GridFunctiond d = conv_determinant(MatrixGridFunctiond(1, 1, {f}));
    CHECK((d.values - f.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("det* of a diagonal kernel is the convolution of the diagonal")
{
    Rng rng(3);
    const GridFunctiond f = random_fn(rng, 0.01, 101);
    const GridFunctiond g = random_fn(rng, 0.01, 101);
    const MatrixGridFunctiond phi(2, 2, {f, GridFunctiond::zeros(0.01, 101), GridFunctiond::zeros(0.01, 101), g});
    const GridFunctiond d = conv_determinant(phi);
    CHECK((d.values - conv_scalar(f, g).values).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("det* is multiplicative under constant matrices")
{
    Rng rng(5);
    for (int d = 2; d <= 3; ++d)
        for (int trial = 0; trial < 10; ++trial) {
            const MatrixGridFunctiond phi = random_matrix_fn(rng, d, 0.01, 81);
            Eigen::MatrixXd A(d, d);
            for (int i = 0; i < d * d; ++i)
                A(i) = 2.0 * rng.uniform() - 1.0;
            const GridFunctiond lhs = conv_determinant(A * phi);
            const GridFunctiond rhs = A.determinant() * conv_determinant(phi);
            REQUIRE((lhs.values - rhs.values).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + sup_abs(rhs)));
            const GridFunctiond rt = conv_determinant(phi * A);
            REQUIRE((rt.values - rhs.values).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + sup_abs(rhs)));
        }
}

TEST_CASE("cofactor expansion and adjugate identities")
{
    Rng rng(7);
    for (int d = 2; d <= 4; ++d) {
        const MatrixGridFunctiond phi = random_matrix_fn(rng, d, 0.02, 51);
        const GridFunctiond det = conv_determinant(phi);
        const double scale = 1.0 + sup_abs(det);
        for (int i = 0; i < d; ++i) {
            GridFunctiond row = GridFunctiond::zeros(0.02, 51);
            GridFunctiond col = GridFunctiond::zeros(0.02, 51);
            for (int j = 0; j < d; ++j) {
                row = row + conv_scalar(phi(i, j), conv_cofactor(phi, i, j));
                col = col + conv_scalar(phi(j, i), conv_cofactor(phi, j, i));
            }
            REQUIRE((row.values - det.values).cwiseAbs().maxCoeff() <= 1e-10 * scale);
            REQUIRE((col.values - det.values).cwiseAbs().maxCoeff() <= 1e-10 * scale);
        }
        const MatrixGridFunctiond prod = conv_matrix(phi, conv_adjugate(phi));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const Eigen::VectorXd want = i == j ? det.values : Eigen::VectorXd::Zero(det.size());
                REQUIRE((prod(i, j).values - want).cwiseAbs().maxCoeff() <= 1e-10 * scale);
            }
    }
}

TEST_CASE("permutation sum and cofactor recursion agree")
{
    Rng rng(9);
    for (int d = 3; d <= 6; ++d) {
        const MatrixGridFunctiond phi = random_matrix_fn(rng, d, 0.05, 21);
        const GridFunctiond a = conv_determinant(phi, 12);
        const GridFunctiond b = conv_determinant(phi, 1);
        REQUIRE((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-11 * (1.0 + sup_abs(a)));
    }
}

TEST_CASE("det* matches the exponential resolvent in Laplace space")
{
    // det*(e^{A.}) has Laplace transform 1/det(sI - A); at s = 5 for A = [[-1,2],[0,-3]] this is 1/48.
    Eigen::MatrixXd A(2, 2);
    A << -1, 2, 0, -3;
    const double h = 1e-3;
    const Eigen::Index n = 8001;
    std::vector<GridFunctiond> e;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            e.push_back(sample<double>([&, i, j](double t) { return expm(A * t)(i, j); }, h, n));
    const GridFunctiond det = conv_determinant(MatrixGridFunctiond(2, 2, std::move(e)));
    const auto lt = laplace(det, 5.0);
    CHECK_FALSE(lt.truncation_warning);
    CHECK(lt.value == doctest::Approx(1.0 / 48.0).epsilon(1e-5));
}

TEST_CASE("Laplace transform of an exponential")
{
    const GridFunctiond f = sample<double>([](double t) { return std::exp(-t); }, 1e-3, 20001);
    const auto r = laplace(f, 2.0);
    CHECK(r.value == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK_FALSE(r.truncation_warning);
    const GridFunctiond short_f = sample<double>([](double t) { return std::exp(-t); }, 1e-3, 1001);
    CHECK(laplace(short_f, 2.0).truncation_warning);
    CHECK_THROWS_AS(laplace(f, 0.0), std::invalid_argument);
}

TEST_CASE("Laplace transform is multiplicative for the discrete convolution")
{
    Rng rng(13);
    const GridFunctiond f = random_fn(rng, 0.01, 401);
    const GridFunctiond g = random_fn(rng, 0.01, 401);
    const GridFunctiond c = conv_scalar(f, g);
    // Sums over the full (untruncated) weight sequences factor exactly; compare on a fast decay.
    const double s = 200.0;
    CHECK(laplace(c, s).value == doctest::Approx(laplace(f, s).value * laplace(g, s).value).epsilon(1e-8));
}

TEST_CASE("CSV round trip")
{
    const GridFunctiond f = power_fn(1.0, 1.5, 0.125, 9);
    std::stringstream ss;
    write_csv(ss, f);
    const GridFunctiond g = read_grid_csv(ss);
    CHECK(g.step == doctest::Approx(0.125));
    CHECK((g.values - f.values).cwiseAbs().maxCoeff() == 0.0);

    const MatrixGridFunctiond m(2, 2, {f, 2.0 * f, 3.0 * f, 4.0 * f});
    std::stringstream ms;
    write_csv(ms, m);
    const MatrixGridFunctiond back = read_matrix_grid_csv(ms);
    REQUIRE(back.dim() == 2);
    CHECK((back(1, 0).values - m(1, 0).values).cwiseAbs().maxCoeff() == 0.0);

    std::stringstream bad("t,value\n0,1\n0.1,2\n0.25,3\n");
    CHECK_THROWS_AS(read_grid_csv(bad), std::invalid_argument);
}

TEST_CASE("linear algebra helpers")
{
    Eigen::MatrixXd A(2, 2);
    A << -1, 2, 0, -3;
    const Eigen::MatrixXd E = expm(A);
    CHECK(E(0, 0) == doctest::Approx(std::exp(-1.0)));
    CHECK(E(1, 1) == doctest::Approx(std::exp(-3.0)));
    CHECK(E(0, 1) == doctest::Approx(std::exp(-1.0) - std::exp(-3.0)));
    CHECK(spectral_abscissa(A) == doctest::Approx(-1.0));
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd P = lyapunov(A, Q);
    CHECK((A.transpose() * P + P * A + Q).norm() <= 1e-12);
    Eigen::MatrixXd S(2, 2);
    S << 2, 1, 1, 2;
    const Eigen::MatrixXd R = psd_sqrt(S);
    CHECK((R * R - S).norm() <= 1e-12);
}
