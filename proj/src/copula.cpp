#include "csbp/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace csbp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNearAnchor = 1e6;
constexpr double kFarAnchor = 1e8;

double sgn(double x)
{
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

}  // namespace

double rect_increment(const CopulaEvaluator& F, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const Eigen::Index d = a.size();
    if (b.size() != d || d < 1)
        throw std::invalid_argument("rect_increment: corner dimensions differ");
    if (d > 20)
        throw std::invalid_argument("rect_increment: dimension too large for corner enumeration");
    for (Eigen::Index i = 0; i < d; ++i)
        if (!(a[i] <= b[i]))
            throw std::invalid_argument("rect_increment: need a <= b componentwise");
    Eigen::VectorXd corner(d);
    double sum = 0.0;
    for (unsigned long mask = 0; mask < (1ul << d); ++mask) {
        int upper = 0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const bool up = (mask >> i) & 1ul;
            corner[i] = up ? b[i] : a[i];
            upper += up;
        }
        const double v = F(corner);
        if (v == 0.0)
            continue;
        sum += ((d - upper) % 2 == 0) ? v : -v;
    }
    return sum;
}

Generator ratio_generator()
{
    return {"ratio", [](double x) { return x / (1.0 - std::abs(x)); }};
}

LevyCopula::LevyCopula(int dim, CopulaEvaluator eval, CopulaKind kind, std::string name)
    : dim_(dim), eval_(std::move(eval)), kind_(kind), name_(std::move(name))
{
    if (dim < 1)
        throw std::invalid_argument("LevyCopula: dim must be positive");
    if (!eval_)
        throw std::invalid_argument("LevyCopula: missing evaluator");
}

double LevyCopula::operator()(const Eigen::VectorXd& x) const
{
    if (x.size() != dim_)
        throw std::invalid_argument("LevyCopula: argument has the wrong dimension");
    return eval_(x);
}

LevyCopula archimedean_copula(int dim, const Generator& g)
{
    if (dim < 1)
        throw std::invalid_argument("archimedean_copula: dim must be positive");
    const auto phi = g.phi;
    if (!phi)
        throw std::invalid_argument("archimedean_copula: missing generator");
    if (phi(0.0) != 0.0)
        throw std::invalid_argument("archimedean_copula: generator must vanish at 0");
    double prev = -kInf;
    for (int i = -400; i <= 400; ++i) {
        const double x = i / 401.0;
        const double v = phi(x);
        if (!(v > prev))
            throw std::invalid_argument("archimedean_copula: generator is not strictly increasing on the probe grid");
        prev = v;
    }
    if (!(phi(1.0 - 1e-12) > 1e6) || !(phi(-1.0 + 1e-12) < -1e6))
        throw std::invalid_argument("archimedean_copula: generator must diverge at +-1");

    const double scale = std::ldexp(1.0, dim - 2);
    const auto tilde = [phi, scale](double x) { return scale * (phi(x) - phi(-x)); };
    // Bisection until the bracket stops shrinking in double precision (well below 1e-13).
    const auto tilde_inv = [tilde](double y) {
        if (y == 0.0)
            return 0.0;
        if (y == kInf)
            return 1.0;
        if (y == -kInf)
            return -1.0;
        double lo = -1.0 + 1e-15, hi = 1.0 - 1e-15;
        if (y >= tilde(hi))
            return hi;
        if (y <= tilde(lo))
            return lo;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi)
                break;
            (tilde(mid) < y ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    CopulaEvaluator eval = [phi, tilde_inv](const Eigen::VectorXd& x) {
        double p = 1.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x[i] == 0.0)
                return 0.0;
            p *= tilde_inv(x[i]);
        }
        if (p >= 1.0)
            return kInf;
        if (p <= -1.0)
            return -kInf;
        return phi(p);
    };
    return LevyCopula(dim, std::move(eval), CopulaKind::Archimedean, "archimedean-" + g.name);
}

LevyCopula independence_copula(int dim)
{
    CopulaEvaluator eval = [](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            bool others_inf = true;
            for (Eigen::Index j = 0; j < x.size(); ++j)
                if (j != i && x[j] != kInf)
                    others_inf = false;
            if (others_inf)
                s += x[i];
        }
        return s;
    };
    return LevyCopula(dim, std::move(eval), CopulaKind::Custom, "independence");
}

LevyCopula complete_dependence_copula(int dim)
{
    CopulaEvaluator eval = [](const Eigen::VectorXd& x) {
        const double s0 = sgn(x[0]);
        double m = kInf, sign = 1.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (sgn(x[i]) != s0 || s0 == 0.0)
                return 0.0;
            m = std::min(m, std::abs(x[i]));
            sign *= s0;
        }
        return sign * m;
    };
    return LevyCopula(dim, std::move(eval), CopulaKind::Custom, "complete-dependence");
}

Margin::Margin(LevyCopula c, std::vector<int> indices) : c_(std::move(c)), indices_(std::move(indices))
{
    if (indices_.empty())
        throw std::invalid_argument("margin: index set must be nonempty");
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
        throw std::invalid_argument("margin: repeated index");
    for (int i : indices_)
        if (i < 0 || i >= c_.dim())
            throw std::invalid_argument("margin: index out of range");
}

double Margin::at_anchor(const Eigen::VectorXd& x, double u) const
{
    const int d = c_.dim();
    std::vector<int> free;
    std::vector<bool> kept(static_cast<size_t>(d), false);
    for (int i : indices_)
        kept[static_cast<size_t>(i)] = true;
    for (int j = 0; j < d; ++j)
        if (!kept[static_cast<size_t>(j)])
            free.push_back(j);
    Eigen::VectorXd full(d);
    for (size_t k = 0; k < indices_.size(); ++k)
        full[indices_[k]] = x[static_cast<Eigen::Index>(k)];
    double s = 0.0;
    for (unsigned long mask = 0; mask < (1ul << free.size()); ++mask) {
        double sign = 1.0;
        for (size_t k = 0; k < free.size(); ++k) {
            const bool low = (mask >> k) & 1ul;
            full[free[k]] = low ? u : kInf;
            if (low)
                sign = -sign;
        }
        s += sign * c_(full);
    }
    return s;
}

MarginValue Margin::operator()(const Eigen::VectorXd& x) const
{
    if (x.size() != static_cast<Eigen::Index>(indices_.size()))
        throw std::invalid_argument("margin: argument has the wrong dimension");
    if (static_cast<int>(indices_.size()) == c_.dim()) {
        const double v = c_(x);
        return {v, std::isfinite(v), v, v};
    }
    const double near = at_anchor(x, -kNearAnchor);
    const double far = at_anchor(x, -kFarAnchor);
    // Remainders decay like 1/|u|: extrapolate and accept when the far anchor's estimated
    // error is within 1e-6 relative.
    const double value = far + (far - near) / (kFarAnchor / kNearAnchor - 1.0);
    const bool ok = std::isfinite(near) && std::isfinite(far) &&
                    std::abs(value - far) <= 1e-6 * std::max(1.0, std::abs(value));
    return {value, ok, near, far};
}

Margin margin(const LevyCopula& c, std::vector<int> indices)
{
    return Margin(c, std::move(indices));
}

IncreaseVerdict check_strict_increasing(const LevyCopula& c, int trials, const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi, std::uint64_t seed)
{
    const int d = c.dim();
    if (lo.size() != d || hi.size() != d || (hi.array() <= lo.array()).any())
        throw std::invalid_argument("check_strict_increasing: invalid sampling box");
    if (trials < 1)
        throw std::invalid_argument("check_strict_increasing: need at least one trial");
    Rng rng = make_stream(seed, {0x696e6372ULL});
    IncreaseVerdict v{IncreaseStatus::Holds, Eigen::VectorXd(), Eigen::VectorXd(), kInf, 0, ""};
    Eigen::VectorXd a(d), b(d);
    for (int t = 0; t < trials; ++t) {
        for (int i = 0; i < d; ++i) {
            double p = lo[i] + (hi[i] - lo[i]) * rng.uniform();
            double q = lo[i] + (hi[i] - lo[i]) * rng.uniform();
            if (p > q)
                std::swap(p, q);
            a[i] = p;
            b[i] = q;
        }
        const double inc = rect_increment(c.evaluator(), a, b);
        ++v.trials;
        if (inc < v.min_increment)
            v.min_increment = inc;
        if (!(inc > 0.0)) {
            v.status = IncreaseStatus::Fails;
            v.a = a;
            v.b = b;
            v.evidence = "nonpositive increment " + std::to_string(inc) + " on trial " + std::to_string(t);
            return v;
        }
    }
    v.evidence = "all " + std::to_string(trials) + " random rectangles have positive increments";
    return v;
}

// ---- copula-defined Levy measures --------------------------------------------------

CopulaMeasure::CopulaMeasure(LevyCopula c, std::vector<Jump1D> marginals, int depth)
    : c_(std::move(c)), marginals_(std::move(marginals)), depth_(depth)
{
    if (static_cast<int>(marginals_.size()) != c_.dim())
        throw std::invalid_argument("copula_measure: need one marginal per coordinate");
    if (depth_ < 1 || depth_ > 50)
        throw std::invalid_argument("copula_measure: subdivision depth must be in [1, 50]");
    for (const auto& m : marginals_) {
        validate(m);
        mass_pos_.push_back(side_mass(m, 1, 0.0, kInf, false, false));
        mass_neg_.push_back(side_mass(m, -1, 0.0, kInf, false, false));
    }
}

bool CopulaMeasure::finite_activity() const
{
    for (size_t i = 0; i < marginals_.size(); ++i)
        if (!std::isfinite(mass_pos_[i] + mass_neg_[i]))
            return false;
    return true;
}

std::vector<CopulaMeasure::Piece> CopulaMeasure::pieces(int i, double lo, double hi, bool& infinite) const
{
    const Jump1D& m = marginals_[static_cast<size_t>(i)];
    const double mp = mass_pos_[static_cast<size_t>(i)];
    const double mn = mass_neg_[static_cast<size_t>(i)];
    std::vector<Piece> out;
    if (hi > 0.0) {
        // x in (a', hi] <-> x~ in (J(hi), J(a')], J(0+) = total positive mass.
        const double a = std::max(lo, 0.0);
        const double top = a == 0.0 ? mp : tail_integral(m, a);
        if (std::isinf(top))
            infinite = true;
        const double bottom = tail_integral(m, hi);
        if (top > bottom)
            out.push_back({bottom, top});
    }
    if (lo < 0.0) {
        // x in (lo, b'] with b' = min(hi, 0) <-> x~ in (J(b'), J(lo)], J(0-) = -negative mass.
        const double b = std::min(hi, 0.0);
        const double bottom = b == 0.0 ? -mn : tail_integral(m, b);
        if (std::isinf(bottom))
            infinite = true;
        const double top = tail_integral(m, lo);
        if (top > bottom)
            out.push_back({bottom, top});
    }
    return out;
}

double CopulaMeasure::rect_mass(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) const
{
    const int d = dim();
    if (lo.size() != d || hi.size() != d)
        throw std::invalid_argument("copula_measure: box dimension mismatch");
    std::vector<std::vector<Piece>> per(static_cast<size_t>(d));
    std::vector<size_t> nonzero_count(static_cast<size_t>(d));
    bool infinite = false;
    for (int i = 0; i < d; ++i) {
        auto& p = per[static_cast<size_t>(i)];
        p = pieces(i, lo[i], hi[i], infinite);
        nonzero_count[static_cast<size_t>(i)] = p.size();
        if (lo[i] < 0.0 && 0.0 <= hi[i]) {
            // x_i = 0: tail-integral coordinates beyond the marginal's range.
            const double mp = mass_pos_[static_cast<size_t>(i)];
            const double mn = mass_neg_[static_cast<size_t>(i)];
            if (std::isfinite(mp))
                p.push_back({mp, kInf});
            if (std::isfinite(mn))
                p.push_back({-kInf, -mn});
        }
    }
    if (infinite)
        return kInf;
    double total = 0.0;
    std::vector<size_t> idx(static_cast<size_t>(d), 0);
    Eigen::VectorXd a(d), b(d);
    for (;;) {
        bool any_empty = false, all_zero = true;
        for (int i = 0; i < d; ++i) {
            const auto& p = per[static_cast<size_t>(i)];
            if (p.empty()) {
                any_empty = true;
                break;
            }
            const Piece& pc = p[idx[static_cast<size_t>(i)]];
            a[i] = pc.a;
            b[i] = pc.b;
            if (idx[static_cast<size_t>(i)] < nonzero_count[static_cast<size_t>(i)])
                all_zero = false;
        }
        if (any_empty)
            return 0.0;
        if (!all_zero)
            total += rect_increment(c_.evaluator(), a, b);
        int k = 0;
        while (k < d) {
            auto& ik = idx[static_cast<size_t>(k)];
            if (++ik < per[static_cast<size_t>(k)].size())
                break;
            ik = 0;
            ++k;
        }
        if (k == d)
            break;
    }
    return std::max(total, 0.0);
}

Eigen::VectorXd CopulaMeasure::draw_slab(int j, int side, double extent, Rng& rng) const
{
    // Coordinate j lives in tail-integral units on the slab; the others are compactified by
    // y -> y / (1 - |y|) on [-1, 1].
    const int d = dim();
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -1.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, 1.0);
    lo[j] = side > 0 ? 0.0 : -extent;
    hi[j] = side > 0 ? extent : 0.0;
    const auto to_xt = [j](int k, double u) {
        if (k == j)
            return u;
        if (u >= 1.0)
            return kInf;
        if (u <= -1.0)
            return -kInf;
        return u / (1.0 - std::abs(u));
    };
    const auto box_mass = [&](const Eigen::VectorXd& l, const Eigen::VectorXd& h) {
        Eigen::VectorXd a(d), b(d);
        for (int k = 0; k < d; ++k) {
            a[k] = to_xt(k, l[k]);
            b[k] = to_xt(k, h[k]);
        }
        return std::max(0.0, rect_increment(c_.evaluator(), a, b));
    };
    for (int level = 0; level < depth_ * d; ++level) {
        const int k = level % d;
        const double mid = 0.5 * (lo[k] + hi[k]);
        Eigen::VectorXd h_left = hi, l_right = lo;
        h_left[k] = mid;
        l_right[k] = mid;
        const double ml = box_mass(lo, h_left);
        const double mr = box_mass(l_right, hi);
        if (!(ml + mr > 0.0) || !std::isfinite(ml + mr))
            break;
        if (rng.uniform() * (ml + mr) < ml)
            hi[k] = mid;
        else
            lo[k] = mid;
    }
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) {
        const double u = lo[k] + (hi[k] - lo[k]) * rng.uniform();
        x[k] = inverse_tail(marginals_[static_cast<size_t>(k)], to_xt(k, u));
    }
    return x;
}

JumpProposal CopulaMeasure::proposal(double delta) const
{
    const int d = dim();
    if (!(delta > 0.0) && !finite_activity())
        throw std::invalid_argument("copula proposal: delta must be positive for infinite activity");
    // ||x|| >= delta forces |x_j| >= delta / sqrt(d) for some j: a union of slabs, each a
    // bounded interval of tail-integral coordinates. A point is kept only by its first slab.
    const double cut = delta / std::sqrt(static_cast<double>(d));
    struct Slab {
        int j;
        int side;
        double extent;
    };
    std::vector<Slab> slabs;
    std::vector<double> cum;
    double rate = 0.0;
    for (int j = 0; j < d; ++j)
        for (int side : {1, -1}) {
            const double m = side_mass(marginals_[static_cast<size_t>(j)], side, cut, kInf, true, false);
            if (!(m > 0.0))
                continue;
            slabs.push_back({j, side, m});
            rate += m;
            cum.push_back(rate);
        }
    JumpProposal p;
    p.rate = rate;
    p.draw = [this, slabs, cum, cut, d](Rng& rng) -> Eigen::VectorXd {
        const double u = rng.uniform() * cum.back();
        const size_t s = std::min(static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()),
                                  slabs.size() - 1);
        Eigen::VectorXd x = draw_slab(slabs[s].j, slabs[s].side, slabs[s].extent, rng);
        for (int k = 0; k < slabs[s].j; ++k)
            if (std::abs(x[k]) >= cut)
                return Eigen::VectorXd::Zero(d);
        return x;
    };
    if (rate == 0.0)
        p.draw = [d](Rng&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(d); };
    return p;
}

LevyModel copula_measure(const LevyCopula& c, std::vector<Jump1D> marginals)
{
    const int d = c.dim();
    auto m = std::make_shared<const CopulaMeasure>(c, std::move(marginals));
    return LevyModel(d, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), CopulaJumps{std::move(m)});
}

}  // namespace csbp
