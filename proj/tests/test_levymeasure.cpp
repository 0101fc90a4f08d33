#include "csbp/levymeasure.hpp"
#include "csbp/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

using namespace csbp;

namespace {

Eigen::VectorXd v2(double a, double b)
{
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

Jump1D two_point()
{
    return atoms_1d({-1.0, 1.0}, {0.5, 0.5});
}

// e^{-|x|} |x|^{-1.2} on both half-lines.
Jump1D two_sided_density()
{
    return tempered_stable_1d(1.0, 1.0, 0.2, 1.0, 1.0);
}

Rectangle box(double x0, double x1, double y0, double y1)
{
    return Rectangle{v2(x0, y0), v2(x1, y1)};
}

}  // namespace

TEST_CASE("tempered stable masses and moments")
{
    // Pinned with mpmath for c = 1, alpha = 0.5, lambda = 1 on the positive side.
    const Jump1D ts = tempered_stable_1d(1.0, 0.0, 0.5, 1.0, 0.0);
    CHECK(side_mass(ts, 1, 0.1, INFINITY) == doctest::Approx(3.40176933669162).epsilon(1e-9));
    CHECK(side_mass(ts, 1, 0.1, 1.0) == doctest::Approx(3.22362162491005).epsilon(1e-9));
    CHECK(side_mass(ts, -1, 0.1, 1.0) == 0.0);
    CHECK(side_moment(ts, 1, 1.0, 0.0, INFINITY) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-8));
    CHECK(side_moment(ts, 1, 2.0, 0.0, INFINITY) == doctest::Approx(0.886226925452758).epsilon(1e-8));
    CHECK(std::isinf(total_mass(ts)));
    CHECK_FALSE(finite_activity(ts));

    const Jump1D neg = tempered_stable_1d(3.0, 0.0, -0.5, 2.0, 0.0);
    CHECK(side_mass(neg, 1, 0.3, INFINITY) == doctest::Approx(1.02767377031561).epsilon(1e-9));
    const Jump1D inf_var = tempered_stable_1d(1.0, 0.0, 1.5, 0.5, 0.0);
    CHECK(side_mass(inf_var, 1, 0.2, INFINITY) == doctest::Approx(5.94245519571030).epsilon(1e-9));
}

TEST_CASE("one-dimensional specs are validated")
{
    CHECK_THROWS_AS(atoms_1d({0.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(atoms_1d({1.0}, {-1.0}), std::invalid_argument);
    CHECK_THROWS_AS(atoms_1d({1.0, 2.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(tempered_stable_1d(1.0, 0.0, 2.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(tempered_stable_1d(-1.0, 0.0, 0.5, 1.0, 0.0), std::invalid_argument);
    // Untempered alpha <= 0 has a non-integrable tail.
    CHECK_THROWS_AS(tempered_stable_1d(1.0, 0.0, -0.5, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("tail integral and its inverse")
{
    const Jump1D e = exponential_1d(2.0, 1.0, 1.0, 3.0);
    // J(x) = lambda((x, inf)) = 2 e^{-x} for x > 0, -lambda((-inf, x]) = -(1/3) e^{3x} for x < 0.
    CHECK(tail_integral(e, 0.5) == doctest::Approx(2.0 * std::exp(-0.5)));
    CHECK(tail_integral(e, -0.5) == doctest::Approx(-std::exp(-1.5) / 3.0));
    for (double x : {0.1, 0.7, 3.0, -0.2, -1.0})
        CHECK(inverse_tail(e, tail_integral(e, x)) == doctest::Approx(x).epsilon(1e-9));

    const Jump1D a = two_point();
    // J is closed at x on the negative side.
    CHECK(tail_integral(a, -1.0) == doctest::Approx(-0.5));
    CHECK(tail_integral(a, -1.5) == 0.0);
    CHECK(tail_integral(a, 0.5) == doctest::Approx(0.5));
    CHECK(tail_integral(a, 1.0) == 0.0);
}

TEST_CASE("independent components live on the axes")
{
    const LevyModel m = independent_components({two_point(), two_point()});
    CHECK(m.dim() == 2);
    CHECK(m.mass(box(0.2, 0.8, 0.2, 0.8)).value == 0.0);
    CHECK(m.mass(Annulus{0.1, INFINITY}).value == doctest::Approx(2.0));
    CHECK(m.finite_activity());
    // The box (0.5, 1.5] x (-0.5, 0.5] catches the atom at e_1 only.
    CHECK(m.mass(box(0.5, 1.5, -0.5, 0.5)).value == doctest::Approx(0.5));

    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const Eigen::VectorXd x = m.sample_jump(0.1, rng);
        CHECK(((x.array() == 0.0).count() == 1));
    }
    CHECK_THROWS_AS(independent_components({}), std::invalid_argument);
}

TEST_CASE("atom masses and sampling frequencies")
{
    const LevyModel m = atoms_model({v2(1.0, 0.0), v2(0.0, -2.0), v2(-1.0, 1.0)}, {2.0, 1.0, 1.0});
    CHECK(m.mass(box(0.5, 1.5, -0.5, 0.5)).value == 2.0);
    CHECK(m.mass(box(0.5, 1.5, -0.5, 0.5)).error == 0.0);
    CHECK(m.mass(Annulus{0.5, 1.2}).value == doctest::Approx(2.0));
    CHECK(m.mass(Annulus{0.5, INFINITY}).value == doctest::Approx(4.0));
    CHECK_THROWS_AS(atoms_model({v2(0.0, 0.0)}, {1.0}), std::invalid_argument);

    Rng rng(3);
    const int n = 40000;
    int first = 0;
    for (int i = 0; i < n; ++i)
        first += m.sample_jump(0.1, rng).isApprox(v2(1.0, 0.0)) ? 1 : 0;
    const double p = 0.5, sd = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(first / static_cast<double>(n) - p) <= 3.0 * sd);
}

TEST_CASE("isotropic stable polar measure")
{
    const double alpha = 1.5, zeta = 2.0 * M_PI;
    const LevyModel m = polar_uniform(2, zeta, tempered_stable_1d(1.0, 0.0, alpha, 0.0, 0.0));
    for (double eps : {0.1, 0.5}) {
        const double expect = zeta * (std::pow(eps, -alpha) - 1.0) / alpha;
        CHECK(m.mass(Annulus{eps, 1.0}).value == doctest::Approx(expect).epsilon(1e-8));
    }
    CHECK_THROWS_AS(m.mass(Annulus{0.0, 1.0}), std::domain_error);

    // Radial CDF on [delta, R]: (delta^-a - r^-a) / (delta^-a - R^-a), R = inf.
    const double delta = 0.2;
    Rng rng(5);
    std::vector<double> r;
    for (int i = 0; i < 100000; ++i)
        r.push_back(m.sample_jump(delta, rng).norm());
    std::sort(r.begin(), r.end());
    double ks = 0.0;
    for (size_t i = 0; i < r.size(); ++i) {
        const double F = 1.0 - std::pow(r[i] / delta, -alpha);
        ks = std::max({ks, std::abs(F - static_cast<double>(i) / r.size()),
                       std::abs(F - static_cast<double>(i + 1) / r.size())});
    }
    CHECK(ks < 0.02);
}

TEST_CASE("single-direction polar measure stays on its ray")
{
    const LevyModel m = polar_measure({v2(1.0, 0.0)}, {1.0}, {tempered_stable_1d(1.0, 0.0, 0.5, 1.0, 0.0)});
    CHECK(m.mass(box(-2.0, -0.1, -1.0, 1.0)).value == 0.0);
    CHECK(m.mass(box(0.1, 1.0, -1.0, 1.0)).value == doctest::Approx(3.22362162491005).epsilon(1e-6));
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd x = m.sample_jump(0.05, rng);
        CHECK(x[0] >= 0.05);
        CHECK(x[1] == 0.0);
    }
    // r^{-3} is not integrable against min(1, r^2).
    CHECK_THROWS_AS(polar_measure({v2(1.0, 0.0)}, {1.0}, {tempered_stable_1d(1.0, 0.0, 2.0, 0.0, 0.0)}),
                    std::invalid_argument);
}

TEST_CASE("subordination without rho is a weighted axis measure")
{
    const std::vector<Triplet1D> marg{{0.0, atoms_1d({1.0}, {1.0})}, {0.0, atoms_1d({-2.0}, {3.0})}};
    const LevyModel m = subordinate(marg, v2(1.0, 2.0), {}, {});
    CHECK(m.mass(box(0.5, 1.5, -0.5, 0.5)).value == doctest::Approx(1.0));
    CHECK(m.mass(box(-0.5, 0.5, -2.5, -1.5)).value == doctest::Approx(6.0));
    CHECK(m.mass(box(0.5, 1.5, -2.5, -1.5)).value == 0.0);
    CHECK_THROWS_AS(subordinate(marg, v2(-1.0, 1.0), {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(subordinate(marg, v2(1.0, 1.0), {v2(-1.0, 1.0)}, {1.0}), std::invalid_argument);
}

TEST_CASE("subordinated jumps match the direct two-stage draw")
{
    // Drift 2 cancels the compensator of the unit atom, leaving a plain Poisson(2) count.
    const std::vector<Triplet1D> marg{{2.0, atoms_1d({1.0}, {2.0})}, {0.0, atoms_1d({-1.0, 1.0}, {1.0, 1.0})}};
    const LevyModel m = subordinate(marg, v2(0.0, 0.0), {v2(1.0, 1.0)}, {1.0});
    Rng a(21), b(22);
    const int n = 20000;
    double sa = 0.0, sb = 0.0, qa = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = m.sample_jump(1e-9, a)[0];
        sa += x;
        qa += x * x;
        sb += subordinated_marginal_draw(marg, v2(1.0, 1.0), b)[0];
    }
    // Draws of 0 are rejected by the model, so compare on the conditional law: the first
    // coordinate is Poisson(2) and the draw is kept unless both coordinates vanish.
    const double mean_a = sa / n, var_a = qa / n - mean_a * mean_a;
    CHECK(mean_a > 0.0);
    CHECK(sb / n == doctest::Approx(2.0).epsilon(0.05));
    // P(both zero) = e^{-2} e^{-2} I_0(2), so E[X | kept] = 2 / (1 - e^{-4} I_0(2)).
    const double keep = 1.0 - std::exp(-4.0) * 2.27958530233607;
    CHECK(std::abs(mean_a - 2.0 / keep) <= 4.0 * std::sqrt(var_a / n));
}

TEST_CASE("Upsilon transformation")
{
    const auto base = std::make_shared<const LevyModel>(independent_components({two_sided_density(), two_sided_density()}));
    const LevyModel id = upsilon(base, {1.0}, {Eigen::MatrixXd::Identity(2, 2)});
    const Rectangle b = box(0.3, 2.0, -0.5, 0.5);
    const MassEstimate mi = id.mass(b);
    CHECK(std::abs(mi.value - base->mass(b).value) <= mi.error + 1e-9);

    const LevyModel zero = upsilon(base, {1.0, 2.0}, {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)});
    CHECK(zero.zero_measure());
    CHECK(zero.mass(Annulus{0.1, INFINITY}).value == 0.0);

    Eigen::MatrixXd rot(2, 2);
    rot << 0.0, -1.0, 1.0, 0.0;
    JumpsConfig jc;
    jc.epsilons = {0.5};
    CHECK(check_jumps(*base, jc).overall() == JumpsStatus::Holds);
    CHECK(check_jumps(upsilon(base, {1.0}, {2.0 * rot}), jc).overall() == JumpsStatus::Holds);
}

TEST_CASE("drift conventions")
{
    const LevyModel raw = atoms_model({v2(2.0, 0.0)}, {1.5});
    CHECK(raw.convention() == DriftConvention::Raw);
    CHECK(raw.mean().isApprox(v2(3.0, 0.0)));
    // Raw drift with finite activity: nothing is compensated.
    CHECK(raw.truncated_drift(0.1).isApprox(v2(0.0, 0.0)));

    const LevyModel tr = with_triplet(raw, v2(0.0, 0.0), Eigen::MatrixXd::Zero(2, 2), DriftConvention::Truncated);
    // Jumps beyond the unit ball are not compensated, so the mean is the drift plus their moment.
    CHECK(tr.mean().isApprox(v2(3.0, 0.0)));
    CHECK_FALSE(tr.is_centered());
    CHECK(brownian_model(Eigen::MatrixXd::Identity(2, 2), v2(0.0, 0.0)).is_centered());
}

TEST_CASE("JUMPS verdicts")
{
    JumpsConfig jc;
    jc.epsilons = {0.1, 1.0};
    const LevyModel two_sided = independent_components({two_sided_density(), two_sided_density()});
    const JumpsVerdict ok = check_jumps(two_sided, jc);
    CHECK(ok.overall() == JumpsStatus::Holds);
    for (const auto& e : ok.per_epsilon)
        CHECK(e.min_margin >= 0.01 * e.epsilon);

    const LevyModel pos = independent_components({tempered_stable_1d(1.0, 0.0, 0.5, 1.0, 0.0),
                                                  tempered_stable_1d(1.0, 0.0, 0.5, 1.0, 0.0)});
    const JumpsVerdict bad = check_jumps(pos, jc);
    CHECK(bad.overall() == JumpsStatus::Fails);
    for (const auto& e : bad.per_epsilon) {
        REQUIRE(e.witness.size() == 2);
        CHECK(e.witness[0] <= 0.0);
        CHECK(e.witness[1] <= 0.0);
    }

    const LevyModel far = atoms_model({v2(1, 0), v2(-1, 0), v2(0, 1), v2(0, -1)}, {1, 1, 1, 1});
    jc.epsilons = {0.5};
    CHECK(check_jumps(far, jc).overall() == JumpsStatus::Fails);
    jc.epsilons = {2.0};
    CHECK(check_jumps(far, jc).overall() == JumpsStatus::Holds);
}

TEST_CASE("JUMPS verdicts are monotone in epsilon")
{
    // Hand-rolled generator: random atom clouds in the plane.
    Rng gen(77);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Eigen::VectorXd> pts;
        std::vector<double> rates;
        const int n = 3 + static_cast<int>(gen() % 6);
        for (int i = 0; i < n; ++i) {
            const double r = 0.2 + 2.0 * gen.uniform(), th = 2.0 * M_PI * gen.uniform();
            pts.push_back(v2(r * std::cos(th), r * std::sin(th)));
            rates.push_back(0.5 + gen.uniform());
        }
        const LevyModel m = atoms_model(pts, rates);
        JumpsConfig jc;
        jc.epsilons = {0.3, 0.8, 1.5, 2.5};
        const JumpsVerdict v = check_jumps(m, jc);
        bool held = false;
        for (const auto& e : v.per_epsilon) {
            if (held)
                CHECK(e.status == JumpsStatus::Holds);
            held = held || e.status == JumpsStatus::Holds;
        }
    }
}

TEST_CASE("one-dimensional JUMPS and independent marginals")
{
    JumpsConfig jc;
    jc.epsilons = {0.5};
    CHECK(check_jumps(independent_components({two_sided_density()}), jc).overall() == JumpsStatus::Holds);
    CHECK(check_jumps(independent_components({tempered_stable_1d(1.0, 0.0, 0.5, 1.0, 0.0)}), jc).overall() ==
          JumpsStatus::Fails);
    // Independent components hold iff every marginal is two-sided inside the ball.
    const Jump1D one_sided = atoms_1d({0.2}, {1.0});
    const Jump1D both = atoms_1d({-0.2, 0.3}, {1.0, 1.0});
    CHECK(check_jumps(independent_components({both, both}), jc).overall() == JumpsStatus::Holds);
    CHECK(check_jumps(independent_components({both, one_sided}), jc).overall() == JumpsStatus::Fails);
}

TEST_CASE("direction nets are unit and deterministic")
{
    for (int d : {2, 3, 4}) {
        const auto net = direction_net(d, 64);
        CHECK(net.size() == 64);
        for (const auto& u : net)
            CHECK(u.norm() == doctest::Approx(1.0));
        CHECK(direction_net(d, 64)[5].isApprox(net[5]));
    }
}
