#include "csbp/levymeasure.hpp"

#include "csbp/copula.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace csbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMassSamples = 200000;
constexpr int kMomentSamples = 100000;

// Gamma(s, z) for real s and z > 0, by upward recurrence for s < 0.
double upper_gamma(double s, double z)
{
    if (s > 0.0)
        return boost::math::tgamma(s, z);
    if (s == 0.0)
        return boost::math::expint(1, z);
    return (upper_gamma(s + 1.0, z) - std::pow(z, s) * std::exp(-z)) / s;
}

// int_a^b r^p e^{-lambda r} dr for 0 <= a < b <= inf.
double power_exp_integral(double p, double lambda, double a, double b)
{
    if (!(b > a))
        return 0.0;
    if (a == 0.0 && p <= -1.0)
        return kInf;
    if (lambda == 0.0) {
        if (std::isinf(b))
            return p >= -1.0 ? kInf : -std::pow(a, p + 1.0) / (p + 1.0);
        if (p == -1.0)
            return std::log(b / a);
        return (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
    }
    if (std::isfinite(b) && a > 0.0 && b < 4.0 * a) {
        const auto f = [&](double r) { return std::pow(r, p) * std::exp(-lambda * r); };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-14);
    }
    const double s = p + 1.0;
    const double lo = a == 0.0 ? boost::math::tgamma(s) : upper_gamma(s, lambda * a);
    const double hi = std::isinf(b) ? 0.0 : upper_gamma(s, lambda * b);
    return std::pow(lambda, -s) * (lo - hi);
}

struct SideDensity {
    double c;
    double lambda;
};

SideDensity side_of(const TemperedStable1D& t, int side)
{
    return side > 0 ? SideDensity{t.c_pos, t.lambda_pos} : SideDensity{t.c_neg, t.lambda_neg};
}

bool in_range(double r, double lo, double hi, bool lo_closed, bool hi_closed)
{
    const bool above = lo_closed ? r >= lo : r > lo;
    const bool below = hi_closed ? r <= hi : r < hi;
    return above && below;
}

void check_side(int side)
{
    if (side != 1 && side != -1)
        throw std::invalid_argument("side must be +1 or -1");
}

}  // namespace

// ---- one-dimensional measures ------------------------------------------------------

Jump1D atoms_1d(std::vector<double> points, std::vector<double> rates)
{
    Jump1D j = Atoms1D{std::move(points), std::move(rates)};
    validate(j);
    return j;
}

Jump1D tempered_stable_1d(double c_pos, double c_neg, double alpha, double lambda_pos, double lambda_neg)
{
    Jump1D j = TemperedStable1D{c_pos, c_neg, alpha, lambda_pos, lambda_neg};
    validate(j);
    return j;
}

Jump1D exponential_1d(double c_pos, double lambda_pos, double c_neg, double lambda_neg)
{
    return tempered_stable_1d(c_pos, c_neg, -1.0, lambda_pos, lambda_neg);
}

void validate(const Jump1D& j)
{
    if (const auto* a = std::get_if<Atoms1D>(&j)) {
        if (a->points.size() != a->rates.size())
            throw std::invalid_argument("atoms: points and rates differ in length");
        for (size_t i = 0; i < a->points.size(); ++i) {
            if (!std::isfinite(a->points[i]) || a->points[i] == 0.0)
                throw std::invalid_argument("atoms: points must be finite and nonzero");
            if (!std::isfinite(a->rates[i]) || !(a->rates[i] > 0.0))
                throw std::invalid_argument("atoms: rates must be positive and finite");
        }
        return;
    }
    const auto& t = std::get<TemperedStable1D>(j);
    if (!(t.alpha >= -1.0 && t.alpha < 2.0))
        throw std::invalid_argument("tempered stable: alpha must lie in [-1, 2)");
    if (!(t.c_pos >= 0.0) || !(t.c_neg >= 0.0) || !std::isfinite(t.c_pos) || !std::isfinite(t.c_neg))
        throw std::invalid_argument("tempered stable: intensities must be nonnegative and finite");
    if (!(t.lambda_pos >= 0.0) || !(t.lambda_neg >= 0.0))
        throw std::invalid_argument("tempered stable: tempering rates must be nonnegative");
    for (int side : {1, -1}) {
        const SideDensity s = side_of(t, side);
        if (s.c == 0.0)
            continue;
        // min(1, x^2) integrability: near 0 needs alpha < 2, at infinity alpha > 0 or tempering.
        const double near = power_exp_integral(1.0 - t.alpha, s.lambda, 0.0, 1.0);
        const double far = power_exp_integral(-1.0 - t.alpha, s.lambda, 1.0, kInf);
        if (!std::isfinite(near) || !std::isfinite(far))
            throw std::invalid_argument("tempered stable: density fails the min(1, x^2) integrability test");
    }
}

double side_mass(const Jump1D& j, int side, double lo, double hi, bool lo_closed, bool hi_closed)
{
    check_side(side);
    if (!(hi > lo))
        return 0.0;
    lo = std::max(lo, 0.0);
    if (const auto* a = std::get_if<Atoms1D>(&j)) {
        double m = 0.0;
        for (size_t i = 0; i < a->points.size(); ++i) {
            const double p = a->points[i];
            if ((p > 0.0) == (side > 0) && in_range(std::abs(p), lo, hi, lo_closed, hi_closed))
                m += a->rates[i];
        }
        return m;
    }
    const auto& t = std::get<TemperedStable1D>(j);
    const SideDensity s = side_of(t, side);
    if (s.c == 0.0)
        return 0.0;
    return s.c * power_exp_integral(-1.0 - t.alpha, s.lambda, lo, hi);
}

double interval_mass(const Jump1D& j, double lo, double hi)
{
    if (!(hi > lo))
        return 0.0;
    double m = 0.0;
    if (hi > 0.0)
        m += side_mass(j, 1, std::max(lo, 0.0), hi, false, true);
    if (lo < 0.0) {
        // x in (lo, min(hi,0)) with x < 0 means |x| in [|min(hi,0)|, |lo|).
        const double top = std::min(hi, 0.0);
        m += side_mass(j, -1, -top, -lo, true, false);
    }
    return m;
}

double total_mass(const Jump1D& j)
{
    return side_mass(j, 1, 0.0, kInf) + side_mass(j, -1, 0.0, kInf);
}

bool finite_activity(const Jump1D& j)
{
    return std::isfinite(total_mass(j));
}

double side_moment(const Jump1D& j, int side, double p, double lo, double hi, bool lo_closed, bool hi_closed)
{
    check_side(side);
    if (!(hi > lo))
        return 0.0;
    lo = std::max(lo, 0.0);
    if (const auto* a = std::get_if<Atoms1D>(&j)) {
        double m = 0.0;
        for (size_t i = 0; i < a->points.size(); ++i) {
            const double x = a->points[i];
            if ((x > 0.0) == (side > 0) && in_range(std::abs(x), lo, hi, lo_closed, hi_closed))
                m += a->rates[i] * std::pow(std::abs(x), p);
        }
        return m;
    }
    const auto& t = std::get<TemperedStable1D>(j);
    const SideDensity s = side_of(t, side);
    if (s.c == 0.0)
        return 0.0;
    return s.c * power_exp_integral(p - 1.0 - t.alpha, s.lambda, lo, hi);
}

double tail_integral(const Jump1D& j, double x)
{
    if (x == 0.0 || std::isnan(x))
        throw std::invalid_argument("tail_integral: x must be nonzero");
    if (x > 0.0)
        return side_mass(j, 1, x, kInf, false, false);
    // (-inf, x] for x < 0 is |y| >= |x| on the negative side.
    return -side_mass(j, -1, -x, kInf, true, false);
}

double inverse_tail(const Jump1D& j, double xt)
{
    if (xt == 0.0 || std::isnan(xt))
        return 0.0;
    const int side = xt > 0.0 ? 1 : -1;
    const double target = std::abs(xt);
    const double total = side_mass(j, side, 0.0, kInf, false, false);
    if (target >= total)
        return 0.0;
    if (const auto* a = std::get_if<Atoms1D>(&j)) {
        std::vector<std::pair<double, double>> pts;
        for (size_t i = 0; i < a->points.size(); ++i)
            if ((a->points[i] > 0.0) == (side > 0))
                pts.emplace_back(std::abs(a->points[i]), a->rates[i]);
        std::sort(pts.begin(), pts.end(), [](const auto& p, const auto& q) { return p.first > q.first; });
        double cum = 0.0;
        for (const auto& [r, w] : pts) {
            cum += w;
            if (target <= cum)
                return side * r;
        }
        return side * pts.back().first;
    }
    // Continuous strictly decreasing G(r) = lambda(|x| >= r) on the side; solve G(r) = target.
    const auto G = [&](double r) { return side_mass(j, side, r, kInf, true, false); };
    double lo = 1.0, hi = 1.0;
    while (G(lo) < target)
        lo *= 0.5;
    while (G(hi) > target)
        hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        (G(mid) > target ? lo : hi) = mid;
    }
    return side * std::sqrt(lo * hi);
}

double sample_radius(const Jump1D& j, int side, double delta, Rng& rng)
{
    check_side(side);
    if (const auto* a = std::get_if<Atoms1D>(&j)) {
        double total = 0.0;
        for (size_t i = 0; i < a->points.size(); ++i)
            if ((a->points[i] > 0.0) == (side > 0) && std::abs(a->points[i]) >= delta)
                total += a->rates[i];
        if (!(total > 0.0))
            throw std::invalid_argument("sample_radius: zero-mass region");
        double u = rng.uniform() * total;
        double r = 0.0;
        for (size_t i = 0; i < a->points.size(); ++i) {
            if ((a->points[i] > 0.0) != (side > 0) || std::abs(a->points[i]) < delta)
                continue;
            r = std::abs(a->points[i]);
            u -= a->rates[i];
            if (u <= 0.0)
                break;
        }
        return r;
    }
    const auto& t = std::get<TemperedStable1D>(j);
    const SideDensity s = side_of(t, side);
    if (s.c == 0.0 || (delta <= 0.0 && t.alpha >= 0.0))
        throw std::invalid_argument("sample_radius: zero-mass or infinite-mass region");
    if (t.alpha > 0.0) {
        // Pareto proposal r = delta U^{-1/alpha}, accepted with probability e^{-lambda (r - delta)}.
        for (;;) {
            const double r = delta * std::pow(rng.uniform(), -1.0 / t.alpha);
            if (s.lambda == 0.0 || rng.uniform() <= std::exp(-s.lambda * (r - delta)))
                return r;
        }
    }
    // alpha <= 0: density r^{beta-1} e^{-lambda r}, beta = -alpha in [0, 1].
    if (delta <= 0.0) {
        // Gamma(beta, lambda) law; beta = 0 is impossible here since the mass would be infinite.
        std::gamma_distribution<double> g(-t.alpha, 1.0 / s.lambda);
        return g(rng);
    }
    for (;;) {
        const double r = delta + rng.exponential(s.lambda);
        if (t.alpha == -1.0 || rng.uniform() <= std::pow(r / delta, -1.0 - t.alpha))
            return r;
    }
}

double sample_1d(const Jump1D& j, double delta, Rng& rng)
{
    const double mp = side_mass(j, 1, delta, kInf, true, false);
    const double mn = side_mass(j, -1, delta, kInf, true, false);
    if (!(mp + mn > 0.0) || !std::isfinite(mp + mn))
        throw std::invalid_argument("sample_1d: region must have finite positive mass");
    const int side = rng.uniform() * (mp + mn) < mp ? 1 : -1;
    return side * sample_radius(j, side, delta, rng);
}

// ---- multivariate models -------------------------------------------------------------

namespace {

Eigen::VectorXd uniform_direction(int d, Rng& rng)
{
    Eigen::VectorXd g(d);
    double n = 0.0;
    while (n < 1e-12) {
        for (int i = 0; i < d; ++i)
            g[i] = rng.normal();
        n = g.norm();
    }
    return g / n;
}

bool in_rect(const Eigen::VectorXd& x, const Rectangle& r)
{
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] > r.lo[i] && x[i] <= r.hi[i]))
            return false;
    return true;
}

bool in_region(const Eigen::VectorXd& x, const Region& region)
{
    if (const auto* r = std::get_if<Rectangle>(&region))
        return in_rect(x, *r);
    const auto& a = std::get<Annulus>(region);
    const double n = x.norm();
    return n >= a.r_lo && n < a.r_hi;
}

// Infimum of ||x|| over the region.
double inner_radius(const Region& region)
{
    if (const auto* a = std::get_if<Annulus>(&region))
        return a->r_lo;
    const auto& r = std::get<Rectangle>(region);
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.lo.size(); ++i) {
        double c = 0.0;
        if (r.lo[i] >= 0.0)
            c = r.lo[i];
        else if (r.hi[i] < 0.0)
            c = -r.hi[i];
        s += c * c;
    }
    return std::sqrt(s);
}

// {r > 0 : r u in (lo, hi]} as an interval with endpoint flags.
struct Ray {
    double lo = 0.0, hi = kInf;
    bool lo_closed = false, hi_closed = false;
    bool empty = false;
};

Ray ray_in_rect(const Eigen::VectorXd& u, const Rectangle& r)
{
    Ray ray;
    const auto raise_lo = [&](double v, bool closed) {
        if (v > ray.lo || (v == ray.lo && !closed)) {
            ray.lo_closed = v == ray.lo ? (ray.lo_closed && closed) : closed;
            ray.lo = v;
        }
    };
    const auto drop_hi = [&](double v, bool closed) {
        if (v < ray.hi || (v == ray.hi && !closed)) {
            ray.hi_closed = v == ray.hi ? (ray.hi_closed && closed) : closed;
            ray.hi = v;
        }
    };
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        if (u[j] > 0.0) {
            raise_lo(r.lo[j] / u[j], false);
            drop_hi(r.hi[j] / u[j], true);
        } else if (u[j] < 0.0) {
            raise_lo(r.hi[j] / u[j], true);
            drop_hi(r.lo[j] / u[j], false);
        } else if (!(r.lo[j] < 0.0 && 0.0 <= r.hi[j])) {
            ray.empty = true;
        }
    }
    if (ray.lo < 0.0) {
        ray.lo = 0.0;
        ray.lo_closed = false;
    }
    if (!(ray.hi > ray.lo) && !(ray.hi == ray.lo && ray.lo_closed && ray.hi_closed))
        ray.empty = true;
    return ray;
}

double ray_mass(const Jump1D& rho, const Ray& ray)
{
    if (ray.empty)
        return 0.0;
    if (ray.hi == ray.lo)
        return side_mass(rho, 1, std::nextafter(ray.lo, 0.0), ray.hi, false, true);
    return side_mass(rho, 1, ray.lo, ray.hi, ray.lo_closed, ray.hi_closed);
}

double min1sq(const Jump1D& j, int side)
{
    return side_moment(j, side, 2.0, 0.0, 1.0) + side_mass(j, side, 1.0, kInf);
}

MassEstimate require_finite(MassEstimate m)
{
    if (!std::isfinite(m.value))
        throw std::domain_error("mass: region touches 0 and the Levy measure has infinite activity");
    return m;
}

// Fraction-of-proposal estimate of Lambda(region) with the proposal at the region's inner radius.
MassEstimate mc_mass(const LevyModel& L, const Region& region, std::uint64_t tag)
{
    const double r0 = inner_radius(region);
    if (r0 == 0.0 && !L.finite_activity())
        throw std::domain_error("mass: region touches 0 and the Levy measure has infinite activity");
    const JumpProposal prop = L.proposal(r0);
    if (prop.rate == 0.0)
        return {0.0, 0.0};
    Rng rng = make_stream(tag, {kMassTag});
    long hits = 0;
    for (int i = 0; i < kMassSamples; ++i) {
        const Eigen::VectorXd x = prop.draw(rng);
        const double n = x.norm();
        if (n > 0.0 && n >= r0 && in_region(x, region))
            ++hits;
    }
    const double p = static_cast<double>(hits) / kMassSamples;
    const double err = hits == 0 ? 3.0 / kMassSamples : 1.96 * std::sqrt(p * (1.0 - p) / kMassSamples);
    return {prop.rate * p, prop.rate * err};
}

// Rate-weighted categorical choice among proposal components.
JumpProposal mixture(std::vector<double> rates, std::vector<std::function<Eigen::VectorXd(Rng&)>> draws, int dim)
{
    JumpProposal p;
    p.rate = std::accumulate(rates.begin(), rates.end(), 0.0);
    if (p.rate == 0.0) {
        p.draw = [dim](Rng&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(dim); };
        return p;
    }
    std::vector<double> cum(rates.size());
    std::partial_sum(rates.begin(), rates.end(), cum.begin());
    p.draw = [cum = std::move(cum), draws = std::move(draws)](Rng& rng) {
        const double u = rng.uniform() * cum.back();
        size_t k = static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        k = std::min(k, cum.size() - 1);
        return draws[k](rng);
    };
    return p;
}

std::uint64_t region_tag(const Region& region)
{
    std::uint64_t h = 0x8badf00dULL;
    const auto add = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = mix64(h ^ bits);
    };
    if (const auto* r = std::get_if<Rectangle>(&region)) {
        for (Eigen::Index i = 0; i < r->lo.size(); ++i) {
            add(r->lo[i]);
            add(r->hi[i]);
        }
    } else {
        add(std::get<Annulus>(region).r_lo);
        add(std::get<Annulus>(region).r_hi);
    }
    return h;
}

double effective_marginal_drift(const Triplet1D& m)
{
    // Finite-activity marginal: L_s = s (b - int_{0<|x|<=1} x lambda(dx)) + compound Poisson sum.
    return m.drift - (side_moment(m.jumps, 1, 1.0, 0.0, 1.0) - side_moment(m.jumps, -1, 1.0, 0.0, 1.0));
}

}  // namespace

Eigen::VectorXd subordinated_marginal_draw(const std::vector<Triplet1D>& marginals, const Eigen::VectorXd& s,
                                           Rng& rng)
{
    const Eigen::Index d = static_cast<Eigen::Index>(marginals.size());
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto& m = marginals[static_cast<size_t>(i)];
        double v = s[i] * effective_marginal_drift(m);
        const long n = rng.poisson(s[i] * total_mass(m.jumps));
        for (long k = 0; k < n; ++k)
            v += sample_1d(m.jumps, 0.0, rng);
        x[i] = v;
    }
    return x;
}

LevyModel::LevyModel(int dim, Eigen::VectorXd drift, Eigen::MatrixXd gaussian, JumpPart jumps,
                     DriftConvention convention)
    : dim_(dim), drift_(std::move(drift)), gaussian_(std::move(gaussian)), jumps_(std::move(jumps)),
      convention_(convention)
{
    if (dim < 1)
        throw std::invalid_argument("LevyModel: dim must be positive");
    if (drift_.size() != dim)
        throw std::invalid_argument("LevyModel: drift has the wrong length");
    if (gaussian_.rows() != dim || gaussian_.cols() != dim)
        throw std::invalid_argument("LevyModel: gaussian matrix has the wrong shape");
    if (!drift_.allFinite() || !gaussian_.allFinite())
        throw std::invalid_argument("LevyModel: non-finite drift or gaussian entries");
    const double scale = std::max(1.0, gaussian_.norm());
    if ((gaussian_ - gaussian_.transpose()).norm() > 1e-12 * scale)
        throw std::invalid_argument("LevyModel: gaussian matrix must be symmetric");
    if (dim > 0 && Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gaussian_).eigenvalues().minCoeff() < -1e-12 * scale)
        throw std::invalid_argument("LevyModel: gaussian matrix must be positive semidefinite");

    const auto check_vec = [&](const Eigen::VectorXd& v, const char* what) {
        if (v.size() != dim || !v.allFinite())
            throw std::invalid_argument(std::string("LevyModel: ") + what + " has the wrong length or is not finite");
    };
    std::visit(
        [&](auto& J) {
            using T = std::decay_t<decltype(J)>;
            if constexpr (std::is_same_v<T, AtomJumps>) {
                if (J.points.size() != J.rates.size())
                    throw std::invalid_argument("atoms: points and rates differ in length");
                for (size_t i = 0; i < J.points.size(); ++i) {
                    check_vec(J.points[i], "atom");
                    if (J.points[i].norm() == 0.0)
                        throw std::invalid_argument("atoms: an atom at the origin is not allowed");
                    if (!(J.rates[i] > 0.0) || !std::isfinite(J.rates[i]))
                        throw std::invalid_argument("atoms: rates must be positive and finite");
                }
                zero_measure_ = J.points.empty();
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                if (static_cast<int>(J.marginals.size()) != dim)
                    throw std::invalid_argument("independent components: need one marginal per coordinate");
                for (const auto& m : J.marginals)
                    validate(m);
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (J.uniform) {
                    if (dim < 2 || dim > 3)
                        throw std::invalid_argument("polar: uniform sphere measure supported for d = 2, 3");
                    if (!(J.uniform_mass >= 0.0) || !std::isfinite(J.uniform_mass))
                        throw std::invalid_argument("polar: zeta must be finite");
                    validate(J.uniform_radial);
                } else {
                    if (J.directions.size() != J.weights.size() || J.directions.size() != J.radial.size())
                        throw std::invalid_argument("polar: directions, weights and radial specs differ in length");
                    for (size_t k = 0; k < J.directions.size(); ++k) {
                        check_vec(J.directions[k], "direction");
                        if (std::abs(J.directions[k].norm() - 1.0) > 1e-9)
                            throw std::invalid_argument("polar: directions must be unit vectors");
                        if (!(J.weights[k] >= 0.0) || !std::isfinite(J.weights[k]))
                            throw std::invalid_argument("polar: zeta must be finite and nonnegative");
                        validate(J.radial[k]);
                    }
                }
            } else if constexpr (std::is_same_v<T, SubordinatedJumps>) {
                if (static_cast<int>(J.marginals.size()) != dim)
                    throw std::invalid_argument("subordinate: need one marginal triplet per coordinate");
                check_vec(J.c, "subordinator drift");
                if ((J.c.array() < 0.0).any())
                    throw std::invalid_argument("subordinate: subordinator drift must be nonnegative");
                for (const auto& m : J.marginals) {
                    validate(m.jumps);
                    if (!csbp::finite_activity(m.jumps))
                        throw std::invalid_argument(
                            "subordinate: infinite-activity marginal is unsupported for exact queries");
                }
                if (J.rho_points.size() != J.rho_weights.size())
                    throw std::invalid_argument("subordinate: rho points and weights differ in length");
                for (size_t k = 0; k < J.rho_points.size(); ++k) {
                    check_vec(J.rho_points[k], "rho atom");
                    if ((J.rho_points[k].array() < 0.0).any() || J.rho_points[k].norm() == 0.0)
                        throw std::invalid_argument("subordinate: rho must live on the nonnegative orthant minus 0");
                    if (!(J.rho_weights[k] > 0.0) || !std::isfinite(J.rho_weights[k]))
                        throw std::invalid_argument("subordinate: rho weights must be positive and finite");
                }
            } else if constexpr (std::is_same_v<T, UpsilonJumps>) {
                if (!J.base)
                    throw std::invalid_argument("upsilon: missing base model");
                if (J.weights.size() != J.matrices.size())
                    throw std::invalid_argument("upsilon: weights and matrices differ in length");
                bool any = false;
                double total = 0.0;
                for (size_t k = 0; k < J.matrices.size(); ++k) {
                    if (J.matrices[k].rows() != dim || J.matrices[k].cols() != J.base->dim())
                        throw std::invalid_argument("upsilon: matrix shape does not match the dimensions");
                    if (!(J.weights[k] >= 0.0) || !std::isfinite(J.weights[k]))
                        throw std::invalid_argument("upsilon: weights must be nonnegative and finite");
                    total += J.weights[k] * (1.0 + J.matrices[k].squaredNorm());
                    any = any || (J.weights[k] > 0.0 && J.matrices[k].norm() > 0.0);
                }
                if (!std::isfinite(total))
                    throw std::invalid_argument("upsilon: sum of w (1 + ||A||^2) must be finite");
                zero_measure_ = !any || J.base->zero_measure();
            } else {
                if (!J.measure || J.measure->dim() != dim)
                    throw std::invalid_argument("copula model: measure dimension mismatch");
            }
        },
        jumps_);
    if (!std::isfinite(levy_integral()))
        throw std::invalid_argument("LevyModel: jump measure fails the min(1, ||x||^2) integrability test");
}

std::string LevyModel::kind() const
{
    static const char* names[] = {"atoms", "independent", "polar", "subordinated", "upsilon", "copula"};
    if (const auto* a = std::get_if<AtomJumps>(&jumps_); a && a->points.empty())
        return gaussian_.isZero(0.0) ? "drift" : "brownian";
    return names[jumps_.index()];
}

bool LevyModel::finite_activity() const
{
    return std::visit(
        [&](const auto& J) -> bool {
            using T = std::decay_t<decltype(J)>;
            if constexpr (std::is_same_v<T, AtomJumps> || std::is_same_v<T, SubordinatedJumps>) {
                return true;
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                return std::all_of(J.marginals.begin(), J.marginals.end(),
                                   [](const Jump1D& m) { return csbp::finite_activity(m); });
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (J.uniform)
                    return J.uniform_mass == 0.0 || std::isfinite(side_mass(J.uniform_radial, 1, 0.0, kInf));
                for (size_t k = 0; k < J.radial.size(); ++k)
                    if (J.weights[k] > 0.0 && !std::isfinite(side_mass(J.radial[k], 1, 0.0, kInf)))
                        return false;
                return true;
            } else if constexpr (std::is_same_v<T, UpsilonJumps>) {
                return zero_measure_ || J.base->finite_activity();
            } else {
                return J.measure->finite_activity();
            }
        },
        jumps_);
}

MassEstimate LevyModel::mass(const Region& region) const
{
    if (const auto* r = std::get_if<Rectangle>(&region)) {
        if (r->lo.size() != dim_ || r->hi.size() != dim_)
            throw std::invalid_argument("mass: rectangle dimension mismatch");
        if ((r->hi.array() < r->lo.array()).any())
            throw std::invalid_argument("mass: rectangle needs lo <= hi");
    } else {
        const auto& a = std::get<Annulus>(region);
        if (!(a.r_lo >= 0.0) || !(a.r_hi >= a.r_lo))
            throw std::invalid_argument("mass: annulus needs 0 <= r_lo <= r_hi");
    }
    if (zero_measure_)
        return {0.0, 0.0};
    return std::visit(
        [&](const auto& J) -> MassEstimate {
            using T = std::decay_t<decltype(J)>;
            if constexpr (std::is_same_v<T, AtomJumps>) {
                double m = 0.0;
                for (size_t i = 0; i < J.points.size(); ++i)
                    if (in_region(J.points[i], region))
                        m += J.rates[i];
                return {m, 0.0};
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                double m = 0.0;
                for (int i = 0; i < dim_; ++i) {
                    const Jump1D& lam = J.marginals[static_cast<size_t>(i)];
                    if (const auto* r = std::get_if<Rectangle>(&region)) {
                        bool axis = true;
                        for (int j = 0; j < dim_; ++j)
                            if (j != i && !(r->lo[j] < 0.0 && 0.0 <= r->hi[j]))
                                axis = false;
                        if (axis)
                            m += interval_mass(lam, r->lo[i], r->hi[i]);
                    } else {
                        const auto& a = std::get<Annulus>(region);
                        m += side_mass(lam, 1, a.r_lo, a.r_hi, true, false) +
                             side_mass(lam, -1, a.r_lo, a.r_hi, true, false);
                    }
                }
                return require_finite({m, 0.0});
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (const auto* a = std::get_if<Annulus>(&region)) {
                    if (J.uniform)
                        return require_finite({J.uniform_mass * side_mass(J.uniform_radial, 1, a->r_lo, a->r_hi, true, false), 0.0});
                    double m = 0.0;
                    for (size_t k = 0; k < J.directions.size(); ++k)
                        m += J.weights[k] * side_mass(J.radial[k], 1, a->r_lo, a->r_hi, true, false);
                    return require_finite({m, 0.0});
                }
                const auto& r = std::get<Rectangle>(region);
                if (!J.uniform) {
                    double m = 0.0;
                    for (size_t k = 0; k < J.directions.size(); ++k)
                        if (J.weights[k] > 0.0)
                            m += J.weights[k] * ray_mass(J.radial[k], ray_in_rect(J.directions[k], r));
                    return require_finite({m, 0.0});
                }
                if (J.uniform_mass == 0.0)
                    return {0.0, 0.0};
                if (inner_radius(region) == 0.0 && !std::isfinite(side_mass(J.uniform_radial, 1, 0.0, kInf)))
                    throw std::domain_error("mass: region touches 0 and the Levy measure has infinite activity");
                if (dim_ == 2) {
                    // Angular quadrature; the integrand is smooth between corner and axis angles.
                    std::vector<double> cuts{0.0, 0.5 * std::numbers::pi, std::numbers::pi, 1.5 * std::numbers::pi,
                                             2.0 * std::numbers::pi};
                    for (double x : {r.lo[0], r.hi[0]})
                        for (double y : {r.lo[1], r.hi[1]})
                            if (x != 0.0 || y != 0.0) {
                                double th = std::atan2(y, x);
                                cuts.push_back(th < 0.0 ? th + 2.0 * std::numbers::pi : th);
                            }
                    std::sort(cuts.begin(), cuts.end());
                    const auto f = [&](double th) {
                        Eigen::Vector2d u(std::cos(th), std::sin(th));
                        return ray_mass(J.uniform_radial, ray_in_rect(u, r));
                    };
                    double total = 0.0, err = 0.0;
                    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
                        if (cuts[i + 1] - cuts[i] < 1e-15)
                            continue;
                        double e = 0.0;
                        total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, cuts[i], cuts[i + 1],
                                                                                              10, 1e-12, &e);
                        err += e;
                    }
                    const double scale = J.uniform_mass / (2.0 * std::numbers::pi);
                    return {scale * total, scale * err};
                }
                // d = 3: Fibonacci-lattice cubature, error from the half-lattice comparison.
                const auto lattice = [&](int n) {
                    double s = 0.0;
                    for (const auto& u : direction_net(3, n))
                        s += ray_mass(J.uniform_radial, ray_in_rect(u, r));
                    return J.uniform_mass * s / n;
                };
                const double fine = lattice(40000);
                return {fine, std::abs(fine - lattice(20000))};
            } else if constexpr (std::is_same_v<T, SubordinatedJumps>) {
                double exact = 0.0;
                for (int i = 0; i < dim_; ++i) {
                    if (J.c[i] == 0.0)
                        continue;
                    const Jump1D& lam = J.marginals[static_cast<size_t>(i)].jumps;
                    if (const auto* r = std::get_if<Rectangle>(&region)) {
                        bool axis = true;
                        for (int j = 0; j < dim_; ++j)
                            if (j != i && !(r->lo[j] < 0.0 && 0.0 <= r->hi[j]))
                                axis = false;
                        if (axis)
                            exact += J.c[i] * interval_mass(lam, r->lo[i], r->hi[i]);
                    } else {
                        const auto& a = std::get<Annulus>(region);
                        exact += J.c[i] * (side_mass(lam, 1, a.r_lo, a.r_hi, true, false) +
                                           side_mass(lam, -1, a.r_lo, a.r_hi, true, false));
                    }
                }
                // Stratified MC: one stratum per atom of rho.
                Rng rng = make_stream(region_tag(region), {kMassTag, 2});
                double mc = 0.0, err = 0.0;
                for (size_t k = 0; k < J.rho_points.size(); ++k) {
                    Rng sub = rng.substream(k);
                    long hits = 0;
                    for (int n = 0; n < kMassSamples; ++n) {
                        const Eigen::VectorXd x = subordinated_marginal_draw(J.marginals, J.rho_points[k], sub);
                        if (x.norm() > 0.0 && in_region(x, region))
                            ++hits;
                    }
                    const double p = static_cast<double>(hits) / kMassSamples;
                    const double w = J.rho_weights[k];
                    mc += w * p;
                    err += w * (hits == 0 ? 3.0 / kMassSamples : 1.96 * std::sqrt(p * (1.0 - p) / kMassSamples));
                }
                return {exact + mc, err};
            } else if constexpr (std::is_same_v<T, UpsilonJumps>) {
                if (const auto* atoms = std::get_if<AtomJumps>(&J.base->jumps())) {
                    double m = 0.0;
                    for (size_t j = 0; j < J.matrices.size(); ++j)
                        for (size_t i = 0; i < atoms->points.size(); ++i) {
                            const Eigen::VectorXd y = J.matrices[j] * atoms->points[i];
                            if (y.norm() > 0.0 && in_region(y, region))
                                m += J.weights[j] * atoms->rates[i];
                        }
                    return {m, 0.0};
                }
                return mc_mass(*this, region, region_tag(region));
            } else {
                if (const auto* r = std::get_if<Rectangle>(&region))
                    return require_finite({J.measure->rect_mass(r->lo, r->hi), 0.0});
                return mc_mass(*this, region, region_tag(region));
            }
        },
        jumps_);
}

JumpProposal LevyModel::proposal(double delta) const
{
    if (!(delta >= 0.0))
        throw std::invalid_argument("proposal: delta must be nonnegative");
    if (delta == 0.0 && !finite_activity())
        throw std::invalid_argument("proposal: delta = 0 needs a finite-activity Levy measure");
    const int d = dim_;
    if (zero_measure_)
        return mixture({}, {}, d);
    return std::visit(
        [&](const auto& J) -> JumpProposal {
            using T = std::decay_t<decltype(J)>;
            std::vector<double> rates;
            std::vector<std::function<Eigen::VectorXd(Rng&)>> draws;
            if constexpr (std::is_same_v<T, AtomJumps>) {
                for (size_t i = 0; i < J.points.size(); ++i) {
                    if (J.points[i].norm() < delta)
                        continue;
                    rates.push_back(J.rates[i]);
                    draws.push_back([p = J.points[i]](Rng&) { return p; });
                }
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                for (int i = 0; i < d; ++i) {
                    const Jump1D lam = J.marginals[static_cast<size_t>(i)];
                    const double m = side_mass(lam, 1, delta, kInf, true, false) + side_mass(lam, -1, delta, kInf, true, false);
                    if (m == 0.0)
                        continue;
                    rates.push_back(m);
                    draws.push_back([lam, i, d, delta](Rng& rng) {
                        Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
                        x[i] = sample_1d(lam, delta, rng);
                        return x;
                    });
                }
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (J.uniform) {
                    const double m = J.uniform_mass * side_mass(J.uniform_radial, 1, delta, kInf, true, false);
                    if (m > 0.0) {
                        rates.push_back(m);
                        draws.push_back([rho = J.uniform_radial, d, delta](Rng& rng) {
                            const Eigen::VectorXd u = uniform_direction(d, rng);
                            return Eigen::VectorXd(sample_radius(rho, 1, delta, rng) * u);
                        });
                    }
                } else {
                    for (size_t k = 0; k < J.directions.size(); ++k) {
                        const double m = J.weights[k] * side_mass(J.radial[k], 1, delta, kInf, true, false);
                        if (!(m > 0.0))
                            continue;
                        rates.push_back(m);
                        draws.push_back([rho = J.radial[k], u = J.directions[k], delta](Rng& rng) {
                            return Eigen::VectorXd(sample_radius(rho, 1, delta, rng) * u);
                        });
                    }
                }
            } else if constexpr (std::is_same_v<T, SubordinatedJumps>) {
                for (int i = 0; i < d; ++i) {
                    if (J.c[i] == 0.0)
                        continue;
                    const Jump1D lam = J.marginals[static_cast<size_t>(i)].jumps;
                    const double m = side_mass(lam, 1, delta, kInf, true, false) + side_mass(lam, -1, delta, kInf, true, false);
                    if (m == 0.0)
                        continue;
                    rates.push_back(J.c[i] * m);
                    draws.push_back([lam, i, d, delta](Rng& rng) {
                        Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
                        x[i] = sample_1d(lam, delta, rng);
                        return x;
                    });
                }
                for (size_t k = 0; k < J.rho_points.size(); ++k) {
                    rates.push_back(J.rho_weights[k]);
                    draws.push_back([marg = J.marginals, s = J.rho_points[k]](Rng& rng) {
                        return subordinated_marginal_draw(marg, s, rng);
                    });
                }
            } else if constexpr (std::is_same_v<T, UpsilonJumps>) {
                for (size_t j = 0; j < J.matrices.size(); ++j) {
                    const double an = J.matrices[j].operatorNorm();
                    if (J.weights[j] == 0.0 || an == 0.0)
                        continue;
                    JumpProposal base = J.base->proposal(delta / an);
                    if (base.rate == 0.0)
                        continue;
                    rates.push_back(J.weights[j] * base.rate);
                    draws.push_back([A = J.matrices[j], draw = std::move(base.draw)](Rng& rng) {
                        return Eigen::VectorXd(A * draw(rng));
                    });
                }
            } else {
                return J.measure->proposal(delta);
            }
            return mixture(std::move(rates), std::move(draws), d);
        },
        jumps_);
}

Eigen::VectorXd LevyModel::sample_jump(double delta, Rng& rng) const
{
    const JumpProposal p = proposal(delta);
    if (!(p.rate > 0.0))
        throw std::invalid_argument("sample_jump: zero-mass region");
    for (long it = 0; it < 10000000; ++it) {
        Eigen::VectorXd x = p.draw(rng);
        const double n = x.norm();
        if (n > 0.0 && n >= delta)
            return x;
    }
    throw std::runtime_error("sample_jump: proposal exhausted without an accepted point");
}

bool LevyModel::tail_moment_finite(double p) const
{
    const auto tail_ok = [p](const Jump1D& j) {
        return std::isfinite(side_moment(j, 1, p, 1.0, kInf)) && std::isfinite(side_moment(j, -1, p, 1.0, kInf));
    };
    return std::visit(
        [&](const auto& J) -> bool {
            using T = std::decay_t<decltype(J)>;
            if constexpr (std::is_same_v<T, AtomJumps>) {
                return true;
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                return std::all_of(J.marginals.begin(), J.marginals.end(), tail_ok);
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (J.uniform)
                    return tail_ok(J.uniform_radial);
                return std::all_of(J.radial.begin(), J.radial.end(), tail_ok);
            } else if constexpr (std::is_same_v<T, SubordinatedJumps>) {
                return std::all_of(J.marginals.begin(), J.marginals.end(),
                                   [&](const Triplet1D& m) { return tail_ok(m.jumps); });
            } else if constexpr (std::is_same_v<T, UpsilonJumps>) {
                return zero_measure_ || J.base->tail_moment_finite(p);
            } else {
                return std::all_of(J.measure->marginals().begin(), J.measure->marginals().end(), tail_ok);
            }
        },
        jumps_);
}

Eigen::VectorXd LevyModel::moment_vec(double lo, double hi, bool lo_closed, bool hi_closed) const
{
    const int d = dim_;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    if (zero_measure_ || !(hi > lo))
        return out;
    const auto signed_moment = [&](const Jump1D& j) {
        return side_moment(j, 1, 1.0, lo, hi, lo_closed, hi_closed) -
               side_moment(j, -1, 1.0, lo, hi, lo_closed, hi_closed);
    };
    const bool exact = std::visit(
        [&](const auto& J) -> bool {
            using T = std::decay_t<decltype(J)>;
            if constexpr (std::is_same_v<T, AtomJumps>) {
                for (size_t i = 0; i < J.points.size(); ++i)
                    if (in_range(J.points[i].norm(), lo, hi, lo_closed, hi_closed))
                        out += J.rates[i] * J.points[i];
                return true;
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                for (int i = 0; i < d; ++i)
                    out[i] = signed_moment(J.marginals[static_cast<size_t>(i)]);
                return true;
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (J.uniform) {
                    if (!std::isfinite(side_moment(J.uniform_radial, 1, 1.0, lo, hi, lo_closed, hi_closed)))
                        out.setConstant(kNaN);
                    return true;   // zero by rotational symmetry
                }
                for (size_t k = 0; k < J.directions.size(); ++k)
                    out += J.weights[k] * side_moment(J.radial[k], 1, 1.0, lo, hi, lo_closed, hi_closed) *
                           J.directions[k];
                return true;
            } else {
                return false;
            }
        },
        jumps_);
    if (exact)
        return out;
    if (std::isinf(hi) && !tail_moment_finite(1.0)) {
        out.setConstant(kNaN);
        return out;
    }
    if (lo == 0.0 && !finite_activity())
        throw std::domain_error("first moment near 0 is not available for this infinite-activity model");
    const JumpProposal prop = proposal(lo);
    if (prop.rate == 0.0)
        return out;
    Rng rng = make_stream(0x6d6f6d656e74ULL, {kMassTag, 3});
    for (int i = 0; i < kMomentSamples; ++i) {
        const Eigen::VectorXd x = prop.draw(rng);
        const double n = x.norm();
        if (n > 0.0 && in_range(n, lo, hi, lo_closed, hi_closed))
            out += x;
    }
    return out * (prop.rate / kMomentSamples);
}

Eigen::VectorXd LevyModel::first_moment(double r_lo, double r_hi) const
{
    return moment_vec(r_lo, r_hi, false, true);
}

double LevyModel::second_moment_outside_unit() const
{
    if (zero_measure_)
        return 0.0;
    if (!tail_moment_finite(2.0))
        return kInf;
    const double v = std::visit(
        [&](const auto& J) -> double {
            using T = std::decay_t<decltype(J)>;
            if constexpr (std::is_same_v<T, AtomJumps>) {
                double m = 0.0;
                for (size_t i = 0; i < J.points.size(); ++i)
                    if (J.points[i].norm() > 1.0)
                        m += J.rates[i] * J.points[i].squaredNorm();
                return m;
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                double m = 0.0;
                for (const auto& j : J.marginals)
                    m += side_moment(j, 1, 2.0, 1.0, kInf) + side_moment(j, -1, 2.0, 1.0, kInf);
                return m;
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (J.uniform)
                    return J.uniform_mass * side_moment(J.uniform_radial, 1, 2.0, 1.0, kInf);
                double m = 0.0;
                for (size_t k = 0; k < J.radial.size(); ++k)
                    m += J.weights[k] * side_moment(J.radial[k], 1, 2.0, 1.0, kInf);
                return m;
            } else {
                return kNaN;
            }
        },
        jumps_);
    if (!std::isnan(v))
        return v;
    const JumpProposal prop = proposal(1.0);
    if (prop.rate == 0.0)
        return 0.0;
    Rng rng = make_stream(0x7365636f6e64ULL, {kMassTag, 4});
    double s = 0.0;
    for (int i = 0; i < kMomentSamples; ++i) {
        const Eigen::VectorXd x = prop.draw(rng);
        if (x.norm() > 1.0)
            s += x.squaredNorm();
    }
    return s * prop.rate / kMomentSamples;
}

double LevyModel::levy_integral() const
{
    if (zero_measure_)
        return 0.0;
    return std::visit(
        [&](const auto& J) -> double {
            using T = std::decay_t<decltype(J)>;
            if constexpr (std::is_same_v<T, AtomJumps>) {
                double m = 0.0;
                for (size_t i = 0; i < J.points.size(); ++i)
                    m += J.rates[i] * std::min(1.0, J.points[i].squaredNorm());
                return m;
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                double m = 0.0;
                for (const auto& j : J.marginals)
                    m += min1sq(j, 1) + min1sq(j, -1);
                return m;
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (J.uniform)
                    return J.uniform_mass * min1sq(J.uniform_radial, 1);
                double m = 0.0;
                for (size_t k = 0; k < J.radial.size(); ++k)
                    m += J.weights[k] * min1sq(J.radial[k], 1);
                return m;
            } else if constexpr (std::is_same_v<T, SubordinatedJumps>) {
                double m = std::accumulate(J.rho_weights.begin(), J.rho_weights.end(), 0.0);
                for (int i = 0; i < dim_; ++i) {
                    const Jump1D& j = J.marginals[static_cast<size_t>(i)].jumps;
                    m += J.c[i] * (min1sq(j, 1) + min1sq(j, -1));
                }
                return m;
            } else if constexpr (std::is_same_v<T, UpsilonJumps>) {
                double w = 0.0;
                for (size_t k = 0; k < J.matrices.size(); ++k)
                    w += J.weights[k] * std::max(1.0, J.matrices[k].squaredNorm());
                return w * J.base->levy_integral();
            } else {
                double m = 0.0;
                for (const auto& j : J.measure->marginals())
                    m += min1sq(j, 1) + min1sq(j, -1);
                return m;
            }
        },
        jumps_);
}

Eigen::VectorXd LevyModel::mean() const
{
    if (convention_ == DriftConvention::Truncated)
        return drift_ + first_moment(1.0, kInf);
    // Raw: b + int x Lambda(dx); needs a finite first moment near the origin as well.
    Eigen::VectorXd m = drift_ + first_moment(1.0, kInf);
    try {
        m += moment_vec(0.0, 1.0, false, true);
    } catch (const std::domain_error&) {
        m.setConstant(kNaN);
    }
    return m;
}

bool LevyModel::is_centered() const
{
    const Eigen::VectorXd m = mean();
    if (!m.allFinite())
        return false;
    return m.norm() <= 1e-12 * std::max(1.0, drift_.norm());
}

Eigen::VectorXd LevyModel::truncated_drift(double delta) const
{
    if (!(delta >= 0.0))
        throw std::invalid_argument("truncated_drift: delta must be nonnegative");
    if (convention_ == DriftConvention::Raw)
        return drift_ + moment_vec(0.0, delta, false, false);
    // b - int_{delta <= |x| <= 1} x + int_{1 < |x| < delta} x.
    Eigen::VectorXd b = drift_;
    if (delta <= 1.0)
        b -= moment_vec(delta, 1.0, true, true);
    else
        b += moment_vec(1.0, delta, false, false);
    return b;
}

Eigen::MatrixXd LevyModel::small_jump_covariance(double delta) const
{
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim_, dim_);
    if (zero_measure_ || delta <= 0.0)
        return S;
    std::visit(
        [&](const auto& J) {
            using T = std::decay_t<decltype(J)>;
            if constexpr (std::is_same_v<T, AtomJumps>) {
                for (size_t i = 0; i < J.points.size(); ++i)
                    if (J.points[i].norm() < delta)
                        S += J.rates[i] * J.points[i] * J.points[i].transpose();
            } else if constexpr (std::is_same_v<T, IndependentJumps>) {
                for (int i = 0; i < dim_; ++i) {
                    const Jump1D& j = J.marginals[static_cast<size_t>(i)];
                    S(i, i) = side_moment(j, 1, 2.0, 0.0, delta, false, false) +
                              side_moment(j, -1, 2.0, 0.0, delta, false, false);
                }
            } else if constexpr (std::is_same_v<T, PolarJumps>) {
                if (J.uniform) {
                    S = Eigen::MatrixXd::Identity(dim_, dim_) * J.uniform_mass *
                        side_moment(J.uniform_radial, 1, 2.0, 0.0, delta, false, false) / dim_;
                } else {
                    for (size_t k = 0; k < J.directions.size(); ++k)
                        S += J.weights[k] * side_moment(J.radial[k], 1, 2.0, 0.0, delta, false, false) *
                             J.directions[k] * J.directions[k].transpose();
                }
            } else {
                throw std::invalid_argument("small_jump_covariance: unsupported for the " + kind() + " family");
            }
        },
        jumps_);
    return S;
}

// ---- constructors ------------------------------------------------------------------

LevyModel atoms_model(std::vector<Eigen::VectorXd> points, std::vector<double> rates, DriftConvention convention)
{
    if (points.empty())
        throw std::invalid_argument("atoms_model: need at least one atom to fix the dimension");
    const int d = static_cast<int>(points.front().size());
    return LevyModel(d, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d),
                     AtomJumps{std::move(points), std::move(rates)}, convention);
}

LevyModel brownian_model(const Eigen::MatrixXd& gaussian, const Eigen::VectorXd& drift)
{
    const int d = static_cast<int>(gaussian.rows());
    return LevyModel(d, drift, gaussian, AtomJumps{}, DriftConvention::Raw);
}

LevyModel independent_components(std::vector<Jump1D> marginals)
{
    if (marginals.empty())
        throw std::invalid_argument("independent_components: empty marginal list");
    const int d = static_cast<int>(marginals.size());
    return LevyModel(d, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), IndependentJumps{std::move(marginals)});
}

LevyModel polar_measure(std::vector<Eigen::VectorXd> directions, std::vector<double> weights, std::vector<Jump1D> radial)
{
    if (directions.empty())
        throw std::invalid_argument("polar_measure: zeta needs at least one direction");
    const int d = static_cast<int>(directions.front().size());
    PolarJumps p;
    p.directions = std::move(directions);
    p.weights = std::move(weights);
    p.radial = std::move(radial);
    return LevyModel(d, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), std::move(p));
}

LevyModel polar_uniform(int dim, double zeta_mass, Jump1D radial)
{
    PolarJumps p;
    p.uniform = true;
    p.uniform_mass = zeta_mass;
    p.uniform_radial = std::move(radial);
    return LevyModel(dim, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim), std::move(p));
}

LevyModel subordinate(std::vector<Triplet1D> marginals, Eigen::VectorXd c, std::vector<Eigen::VectorXd> rho_points,
                      std::vector<double> rho_weights)
{
    const int d = static_cast<int>(marginals.size());
    if (d < 1)
        throw std::invalid_argument("subordinate: empty marginal list");
    SubordinatedJumps s{std::move(marginals), std::move(c), std::move(rho_points), std::move(rho_weights)};
    // Validate before the drift computation below touches the marginals.
    LevyModel probe(d, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), s);
    // b = (c_i b~_i)_i + int rho(ds) int_{||x|| <= 1} x mu_s(dx).
    Eigen::VectorXd b(d);
    for (int i = 0; i < d; ++i)
        b[i] = s.c[i] * s.marginals[static_cast<size_t>(i)].drift;
    Rng rng = make_stream(0x7375626f7264ULL, {kMassTag, 5});
    for (size_t k = 0; k < s.rho_points.size(); ++k) {
        Rng sub = rng.substream(k);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
        for (int n = 0; n < kMomentSamples; ++n) {
            const Eigen::VectorXd x = subordinated_marginal_draw(s.marginals, s.rho_points[k], sub);
            if (x.norm() <= 1.0)
                acc += x;
        }
        b += s.rho_weights[k] * acc / kMomentSamples;
    }
    return LevyModel(d, b, Eigen::MatrixXd::Zero(d, d), std::move(s));
}

LevyModel upsilon(std::shared_ptr<const LevyModel> base, std::vector<double> weights, std::vector<Eigen::MatrixXd> matrices)
{
    if (!base)
        throw std::invalid_argument("upsilon: missing base model");
    if (matrices.empty())
        throw std::invalid_argument("upsilon: empty mixing list");
    const int d = static_cast<int>(matrices.front().rows());
    return LevyModel(d, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d),
                     UpsilonJumps{std::move(base), std::move(weights), std::move(matrices)});
}

LevyModel with_triplet(const LevyModel& m, Eigen::VectorXd drift, Eigen::MatrixXd gaussian, DriftConvention convention)
{
    return LevyModel(m.dim(), std::move(drift), std::move(gaussian), m.jumps(), convention);
}

// ---- (JUMPS) -------------------------------------------------------------------------

std::string to_string(JumpsStatus s)
{
    switch (s) {
    case JumpsStatus::Holds:
        return "Holds";
    case JumpsStatus::Fails:
        return "Fails";
    default:
        return "Inconclusive";
    }
}

JumpsStatus JumpsVerdict::overall() const
{
    bool inconclusive = false;
    for (const auto& v : per_epsilon) {
        if (v.status == JumpsStatus::Fails)
            return JumpsStatus::Fails;
        inconclusive = inconclusive || v.status == JumpsStatus::Inconclusive;
    }
    return inconclusive ? JumpsStatus::Inconclusive : JumpsStatus::Holds;
}

std::vector<Eigen::VectorXd> direction_net(int dim, int size, std::uint64_t seed)
{
    if (dim < 1 || size < 1)
        throw std::invalid_argument("direction_net: dim and size must be positive");
    std::vector<Eigen::VectorXd> net;
    if (dim == 1) {
        net.push_back(Eigen::VectorXd::Constant(1, 1.0));
        net.push_back(Eigen::VectorXd::Constant(1, -1.0));
        return net;
    }
    if (dim == 2) {
        for (int k = 0; k < size; ++k) {
            const double th = 2.0 * std::numbers::pi * k / size;
            net.push_back(Eigen::Vector2d(std::cos(th), std::sin(th)));
        }
        return net;
    }
    if (dim == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < size; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / size;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            net.push_back(Eigen::Vector3d(r * std::cos(golden * i), r * std::sin(golden * i), z));
        }
        return net;
    }
    Rng rng = make_stream(seed, {static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(size)});
    for (int i = 0; i < size; ++i)
        net.push_back(uniform_direction(dim, rng));
    return net;
}

namespace {

// Axis and sign-diagonal directions; the natural separating directions of orthant-supported models.
std::vector<Eigen::VectorXd> special_directions(int d)
{
    std::vector<Eigen::VectorXd> out;
    for (int i = 0; i < d; ++i)
        for (double s : {1.0, -1.0}) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
            e[i] = s;
            out.push_back(e);
        }
    if (d <= 12)
        for (unsigned mask = 0; mask < (1u << d); ++mask) {
            Eigen::VectorXd v(d);
            for (int i = 0; i < d; ++i)
                v[i] = (mask >> i) & 1u ? -1.0 : 1.0;
            out.push_back(v / std::sqrt(static_cast<double>(d)));
        }
    return out;
}

struct SupportSample {
    std::vector<Eigen::VectorXd> points;
    long proposals = 0;
};

SupportSample sample_support(const LevyModel& L, double eps, double inner, int samples, Rng rng)
{
    SupportSample out;
    const JumpProposal prop = L.proposal(inner);
    if (!(prop.rate > 0.0))
        return out;
    const long budget = 200L * samples;
    while (static_cast<int>(out.points.size()) < samples && out.proposals < budget) {
        ++out.proposals;
        Eigen::VectorXd x = prop.draw(rng);
        const double n = x.norm();
        if (n > 0.0 && n >= inner && n < eps)
            out.points.push_back(std::move(x));
    }
    return out;
}

double max_projection(const std::vector<Eigen::VectorXd>& pts, const Eigen::VectorXd& u)
{
    double m = -kInf;
    for (const auto& x : pts)
        m = std::max(m, x.dot(u));
    return m;
}

// Smallest normalized distance of the points to the separating hyperplane; larger is better.
double separation_score(const std::vector<Eigen::VectorXd>& pts, const Eigen::VectorXd& u)
{
    double s = 1.0;
    for (const auto& x : pts)
        s = std::min(s, -x.dot(u) / x.norm());
    return s;
}

bool certified_empty(const LevyModel& L, double eps)
{
    if (L.zero_measure())
        return true;
    // Monte Carlo masses carry an error and can never certify emptiness.
    const JumpPart& J = L.jumps();
    if (std::holds_alternative<CopulaJumps>(J))
        return false;
    if (const auto* u = std::get_if<UpsilonJumps>(&J); u && !std::holds_alternative<AtomJumps>(u->base->jumps()))
        return false;
    try {
        const MassEstimate m = L.mass(Annulus{0.0, eps});
        return m.value == 0.0 && m.error == 0.0;
    } catch (const std::domain_error&) {
        return false;
    }
}

std::uint64_t eps_key(double eps)
{
    std::uint64_t bits;
    std::memcpy(&bits, &eps, sizeof bits);
    return bits;
}

// (JUMPS_1): Lambda((-eps, 0)) > 0 and Lambda((0, eps)) > 0.
JumpsEpsilonVerdict check_jumps_1d(const LevyModel& L, double eps)
{
    const auto side = [&](int s) -> MassEstimate {
        const double below = std::nextafter(eps, 0.0);
        Rectangle r{Eigen::VectorXd::Constant(1, s > 0 ? 0.0 : -eps), Eigen::VectorXd::Constant(1, s > 0 ? below : 0.0)};
        try {
            return L.mass(r);
        } catch (const std::domain_error&) {
            // Infinite mass next to the origin on at least one side; probe away from it.
            const double cut = 1e-6 * eps;
            Rectangle q{Eigen::VectorXd::Constant(1, s > 0 ? cut : -eps), Eigen::VectorXd::Constant(1, s > 0 ? below : -cut)};
            return L.mass(q);
        }
    };
    const MassEstimate pos = side(1);
    const MassEstimate neg = side(-1);
    JumpsEpsilonVerdict v{eps, JumpsStatus::Inconclusive, Eigen::VectorXd(), 0.0, {}, 0, ""};
    v.note = "Lambda((0,eps)) = " + std::to_string(pos.value) + ", Lambda((-eps,0)) = " + std::to_string(neg.value);
    v.margins = {pos.value, neg.value};
    if (pos.value > 0.0 && neg.value > 0.0) {
        v.status = JumpsStatus::Holds;
        v.min_margin = std::min(pos.value, neg.value);
    } else if (pos.value == 0.0 && pos.error == 0.0) {
        v.status = JumpsStatus::Fails;
        v.witness = Eigen::VectorXd::Constant(1, 1.0);
    } else if (neg.value == 0.0 && neg.error == 0.0) {
        v.status = JumpsStatus::Fails;
        v.witness = Eigen::VectorXd::Constant(1, -1.0);
    }
    return v;
}

}  // namespace

JumpsVerdict check_jumps(const LevyModel& L, const JumpsConfig& cfg)
{
    if (cfg.epsilons.empty())
        throw std::invalid_argument("check_jumps: no epsilons given");
    for (double e : cfg.epsilons)
        if (!(e > 0.0) || !std::isfinite(e))
            throw std::invalid_argument("check_jumps: epsilons must be positive and finite");
    if (cfg.samples < 1 || cfg.net_size < 0 || !(cfg.delta_factor > 0.0 && cfg.delta_factor < 1.0))
        throw std::invalid_argument("check_jumps: invalid sampling parameters");
    const int d = L.dim();
    const int net_size = cfg.net_size > 0 ? cfg.net_size : (d == 2 ? 64 : d == 3 ? 512 : 256);

    std::vector<size_t> order(cfg.epsilons.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return cfg.epsilons[a] < cfg.epsilons[b]; });

    JumpsVerdict out;
    out.per_epsilon.resize(cfg.epsilons.size());
    double holds_at = kInf;
    for (size_t idx : order) {
        const double eps = cfg.epsilons[idx];
        JumpsEpsilonVerdict v{eps, JumpsStatus::Inconclusive, Eigen::VectorXd(), 0.0, {}, 0, ""};
        if (d == 1) {
            v = check_jumps_1d(L, eps);
        } else if (certified_empty(L, eps)) {
            v.status = JumpsStatus::Fails;
            v.witness = direction_net(d, net_size).front();
            v.note = "Lambda restricted to B(0,eps) is zero; every direction separates";
        } else {
            std::vector<Eigen::VectorXd> net = direction_net(d, net_size, cfg.seed);
            for (auto& u : special_directions(d))
                net.push_back(std::move(u));
            const double delta_min = cfg.delta_factor * eps;
            const double inner = delta_min;
            SupportSample s = sample_support(L, eps, inner, cfg.samples, make_stream(cfg.seed, {kJumpTag, eps_key(eps), 1}));
            v.support_points = static_cast<int>(s.points.size());
            if (s.points.empty()) {
                v.note = "sampler exhaustion: 0 support points in [" + std::to_string(inner) + ", eps) after " +
                         std::to_string(s.proposals) + " proposals";
            } else {
                v.margins.reserve(net.size());
                for (const auto& u : net)
                    v.margins.push_back(max_projection(s.points, u));
                v.min_margin = *std::min_element(v.margins.begin(), v.margins.end());
                if (v.min_margin >= delta_min) {
                    v.status = JumpsStatus::Holds;
                    v.note = "every net direction has a support point with <x,u> >= delta_min";
                } else if (v.min_margin <= 0.0) {
                    // Refine: 4x net density and 4x samples; keep a direction only if it still separates.
                    SupportSample more = sample_support(L, eps, inner, 4 * cfg.samples,
                                                        make_stream(cfg.seed, {kJumpTag, eps_key(eps), 2}));
                    std::vector<Eigen::VectorXd> pts = s.points;
                    pts.insert(pts.end(), more.points.begin(), more.points.end());
                    std::vector<Eigen::VectorXd> fine = direction_net(d, 4 * net_size, cfg.seed + 1);
                    for (size_t i = 0; i < net.size(); ++i)
                        if (v.margins[i] <= 0.0)
                            fine.push_back(net[i]);
                    for (auto& u : special_directions(d))
                        fine.push_back(std::move(u));
                    double best = -kInf;
                    for (const auto& u : fine) {
                        if (max_projection(pts, u) > 0.0)
                            continue;
                        const double sc = separation_score(pts, u);
                        if (sc > best) {
                            best = sc;
                            v.witness = u;
                        }
                    }
                    v.support_points = static_cast<int>(pts.size());
                    if (v.witness.size() > 0) {
                        v.status = JumpsStatus::Fails;
                        v.note = "separating direction survived 4x refinement (score " + std::to_string(best) + ")";
                    } else {
                        v.note = "candidate separating direction did not survive refinement";
                    }
                } else {
                    v.note = "smallest margin " + std::to_string(v.min_margin) + " is positive but below delta_min";
                }
            }
        }
        // Support of Lambda_eps grows with eps, so a certificate at a smaller radius carries over.
        if (v.status != JumpsStatus::Holds && holds_at < eps) {
            v.status = JumpsStatus::Holds;
            v.witness = Eigen::VectorXd();
            v.note = "certificate inherited from eps = " + std::to_string(holds_at);
        }
        if (v.status == JumpsStatus::Holds)
            holds_at = std::min(holds_at, eps);
        out.per_epsilon[idx] = std::move(v);
    }
    return out;
}

}  // namespace csbp
