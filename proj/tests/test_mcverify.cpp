#include "csbp/kernels.hpp"
#include "csbp/levymeasure.hpp"
#include "csbp/mcverify.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace csbp;

namespace {

Eigen::MatrixXd I1()
{
    return Eigen::MatrixXd::Identity(1, 1);
}

LevyModel bm1()
{
    return brownian_model(I1(), Eigen::VectorXd::Zero(1));
}

LevyModel up_jumps()
{
    return atoms_model({Eigen::VectorXd::Constant(1, 1.0)}, {2.0});
}

SimConfig sim(double h, double M, double T)
{
    SimConfig s;
    s.h = h;
    s.history = M;
    s.horizon = T;
    return s;
}

McConfig mc(long n, std::uint64_t seed, int threads = 1)
{
    McConfig c;
    c.trials = n;
    c.seed = seed;
    c.threads = threads;
    return c;
}

Eigen::MatrixXd linear_target(double slope, double h, Eigen::Index n)
{
    Eigen::MatrixXd f(1, n + 1);
    for (Eigen::Index m = 0; m <= n; ++m)
        f(0, m) = slope * h * static_cast<double>(m);
    return f;
}

bool contains(const TubeEstimate& e, double p)
{
    return e.ci_lo <= p && p <= e.ci_hi;
}

}  // namespace

TEST_CASE("Wilson interval")
{
    const Interval w = wilson95(50, 100);
    CHECK(w.lo == doctest::Approx(0.403830).epsilon(1e-5));
    CHECK(w.hi == doctest::Approx(0.596170).epsilon(1e-5));
    const Interval z = wilson95(0, 100);
    CHECK(z.lo == 0.0);
    CHECK(z.hi == doctest::Approx(0.03));
    const Interval all = wilson95(100, 100);
    CHECK(all.hi == doctest::Approx(1.0));
    CHECK(all.lo < 1.0);
    // Hand-rolled sweep: the interval always brackets p_hat inside [0, 1].
    for (long n : {1L, 7L, 100L, 12345L})
        for (long k = 0; k <= n; k += std::max(1L, n / 13)) {
            const Interval i = wilson95(k, n);
            const double p = static_cast<double>(k) / static_cast<double>(n);
            CHECK(0.0 <= i.lo);
            CHECK(i.lo <= p + 1e-15);
            CHECK(p <= i.hi + 1e-15);
            CHECK(i.hi <= 1.0);
        }
    CHECK_THROWS_AS(wilson95(3, 2), std::invalid_argument);
    CHECK_THROWS_AS(wilson95(0, 0), std::invalid_argument);
}

TEST_CASE("reachable targets")
{
    const double h = 1e-3;
    const Eigen::Index n = 1000;
    CHECK(reachable_target(mvn_kernel(0.75), h, Eigen::MatrixXd::Zero(1, n + 1)).isZero(0.0));

    const Eigen::MatrixXd one = reachable_target(mvn_kernel(0.5), h, Eigen::MatrixXd::Ones(1, n + 1));
    CHECK(one(0, 0) == 0.0);
    CHECK(one(0, n) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one(0, 250) == doctest::Approx(0.25).epsilon(1e-12));

    // MVN H = 0.75 with unit control: f(t) = C_H t^{5/4} / (5/4), pinned with mpmath.
    const Eigen::MatrixXd f = reachable_target(mvn_kernel(0.75), h, Eigen::MatrixXd::Ones(1, n + 1));
    CHECK(f(0, n) == doctest::Approx(0.855715708025592).epsilon(2e-3));
    CHECK(f(0, n / 2) == doctest::Approx(0.359784135677507).epsilon(2e-3));
    CHECK_THROWS_AS(reachable_target(mvn_kernel(0.75), h, Eigen::MatrixXd::Ones(2, n + 1)), std::invalid_argument);
}

TEST_CASE("Brownian tube matches the reflection series")
{
    const TubeSpec spec{0.0, 1.0, 1.0, {}};
    const TubeEstimate e = tube_probability(mvn_kernel(0.5), bm1(), spec, sim(1e-3, 0.0, 1.0), mc(20000, 3));
    CHECK(e.trials == 20000);
    CHECK(contains(e, 0.370777429799524));
    CHECK(e.p_hat == doctest::Approx(static_cast<double>(e.hits) / e.trials));
}

TEST_CASE("one-sided driver cannot follow a descending target")
{
    const double h = 1e-3;
    const TubeSpec spec{0.0, 1.0, 0.4, linear_target(-1.0, h, 1000)};
    const TubeEstimate e = tube_probability(exp_kernel(-I1(), I1()), up_jumps(), spec, sim(h, 2.0, 1.0), mc(5000, 1));
    CHECK(e.hits == 0);
    CHECK(e.ci_hi == doctest::Approx(3.0 / 5000));
}

TEST_CASE("nested tubes are monotone on common random numbers")
{
    const LevyModel L = independent_components({atoms_1d({-0.3, 0.3}, {4.0, 4.0})});
    const Kernel k = mvn_kernel(0.75);
    long prev = 0;
    for (double eps : {0.25, 0.5, 1.0}) {
        const TubeSpec spec{0.0, 1.0, eps, {}};
        const TubeEstimate e = tube_probability(k, L, spec, sim(1e-2, 4.0, 1.0), mc(3000, 9));
        CHECK(e.hits >= prev);
        prev = e.hits;
    }
    CHECK(prev > 0);
}

TEST_CASE("estimates are reproducible across thread counts")
{
    const TubeSpec spec{0.0, 1.0, 0.8, {}};
    const Kernel k = mvn_kernel(0.3);
    const SimConfig s = sim(1e-2, 3.0, 1.0);
    const TubeEstimate a = tube_probability(k, bm1(), spec, s, mc(2000, 5, 1));
    const TubeEstimate b = tube_probability(k, bm1(), spec, s, mc(2000, 5, 4));
    const TubeEstimate c = tube_probability(k, bm1(), spec, s, mc(2000, 6, 1));
    CHECK(a.hits == b.hits);
    CHECK(a.hits != c.hits);
    std::ostringstream ra, rb;
    write_results_row(ra, a);
    write_results_row(rb, b);
    CHECK(ra.str() == rb.str());
}

TEST_CASE("confidence width scales like N^-1/2")
{
    const TubeSpec spec{0.0, 1.0, 1.0, {}};
    const SimConfig s = sim(1e-2, 0.0, 1.0);
    const TubeEstimate a = tube_probability(mvn_kernel(0.5), bm1(), spec, s, mc(2500, 2));
    const TubeEstimate b = tube_probability(mvn_kernel(0.5), bm1(), spec, s, mc(10000, 2));
    CHECK((a.ci_hi - a.ci_lo) / (b.ci_hi - b.ci_lo) == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("constant Phi makes the conditional tube unconditional")
{
    const TubeSpec spec{0.0, 1.0, 0.7, {}};
    const SimConfig s = sim(1e-2, 2.0, 1.0);
    const TubeEstimate u = tube_probability(mvn_kernel(0.5), bm1(), spec, s, mc(3000, 12));
    for (std::uint64_t past : {1u, 2u, 3u}) {
        const TubeEstimate c = conditional_tube(mvn_kernel(0.5), bm1(), past, spec, s, mc(3000, 12));
        CHECK(c.hits == u.hits);
    }
}

TEST_CASE("conditional tubes are positive for every frozen past")
{
    const TubeSpec spec{0.0, 1.0, 1.0, {}};
    for (std::uint64_t past = 1; past <= 10; ++past) {
        const TubeEstimate e = conditional_tube(mvn_kernel(0.75), bm1(), past, spec, sim(1e-2, 5.0, 1.0), mc(1000, 4));
        CHECK(e.ci_lo > 0.0);
    }
}

TEST_CASE("degenerate kernel rules out tubes away from zero at time one")
{
    const double h = 1e-3;
    const auto tab = [&](double lo, double hi) {
        const GridFunctiond g = sample<double>([=](double t) { return (t > lo + 1e-12 && t <= hi + 1e-12) ? 1.0 : 0.0; },
                                               h, 4001);
        return MatrixGridFunctiond(1, 1, {g});
    };
    const Kernel k = tabulated_kernel(tab(1.0, 2.0), TabulatedPhi{tab(0.0, 1.0)});
    const LevyModel L = independent_components({atoms_1d({-0.2, 0.2}, {5.0, 5.0})});
    const TubeSpec spec{0.0, 1.0, 0.1, linear_target(0.5, h, 1000)};
    const TubeEstimate e = tube_probability(k, L, spec, sim(h, 2.0, 1.0), mc(2000, 1));
    CHECK(e.hits == 0);
}

TEST_CASE("Brownian level hit")
{
    // Entering the ball B(101, 100) before t = 1 is hitting level 1.
    const HitSpec spec{Eigen::VectorXd::Constant(1, 101.0), 100.0, 0.0, 1.0};
    const TubeEstimate e = hitting_probability(mvn_kernel(0.5), bm1(), 1, spec, sim(1e-3, 0.0, 1.0), mc(20000, 7));
    CHECK(contains(e, 0.317310507862914));
}

TEST_CASE("hitting a ball for the Brownian OU")
{
    const HitSpec spec{Eigen::VectorXd::Zero(1), 0.5, 0.0, 1.0};
    for (std::uint64_t past = 1; past <= 3; ++past) {
        const TubeEstimate e =
            hitting_probability(exp_kernel(-I1(), I1()), bm1(), past, spec, sim(1e-2, 10.0, 1.0), mc(1000, 2));
        CHECK(e.ci_lo > 0.0);
    }
    // A nonnegative process never reaches B(-5, 1).
    const HitSpec far{Eigen::VectorXd::Constant(1, -5.0), 1.0, 0.0, 1.0};
    const TubeEstimate z =
        hitting_probability(exp_kernel(-I1(), I1()), up_jumps(), 1, far, sim(1e-2, 5.0, 1.0), mc(1000, 2));
    CHECK(z.hits == 0);
}

TEST_CASE("invalid Monte Carlo inputs")
{
    const SimConfig s = sim(1e-2, 1.0, 1.0);
    CHECK_THROWS_AS(tube_probability(mvn_kernel(0.5), bm1(), TubeSpec{0.0, 1.0, 1.0, {}}, s, mc(0, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(tube_probability(mvn_kernel(0.5), bm1(), TubeSpec{0.0, 1.0, -1.0, {}}, s, mc(10, 1)),
                    std::invalid_argument);
    Eigen::MatrixXd f = linear_target(1.0, 1e-2, 100);
    f(0, 0) = 0.5;
    CHECK_THROWS_AS(tube_probability(mvn_kernel(0.5), bm1(), TubeSpec{0.0, 1.0, 1.0, f}, s, mc(10, 1)),
                    std::invalid_argument);
    const HitSpec late{Eigen::VectorXd::Zero(1), 1.0, 0.5, 1.0};
    CHECK_THROWS_AS(hitting_probability(mvn_kernel(0.5), bm1(), 1, late, s, mc(10, 1)), std::invalid_argument);
}

TEST_CASE("results CSV")
{
    std::ostringstream os;
    write_results_header(os);
    CHECK(os.str() == "experiment,epsilon,t0,T,N,hits,p_hat,ci_lo,ci_hi,seed,runtime_s\n");
    TubeEstimate e;
    e.experiment = "tube";
    e.epsilon = 1.0;
    e.T = 1.0;
    e.trials = 4;
    e.hits = 1;
    e.p_hat = 0.25;
    e.ci_lo = 0.1;
    e.ci_hi = 0.5;
    e.seed = 9;
    e.runtime_s = 1.5;
    std::ostringstream a, b;
    write_results_row(a, e);
    write_results_row(b, e, true);
    CHECK(a.str() == "tube,1,0,1,4,1,0.25,0.10000000000000001,0.5,9,NA\n");
    CHECK(b.str() == "tube,1,0,1,4,1,0.25,0.10000000000000001,0.5,9,1.500\n");
}
