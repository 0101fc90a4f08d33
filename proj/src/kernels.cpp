#include "csbp/kernels.hpp"

#include "csbp/levymeasure.hpp"
#include "csbp/linalg.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace csbp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::MatrixXd eval_power(const PowerMatrix& m, double t)
{
    const int d = m.dim();
    Eigen::MatrixXd out(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            out(i, j) = m(i, j)(t);
    return out;
}

Eigen::MatrixXd eval_table(const MatrixGridFunctiond& tab, double t)
{
    const double x = t / tab.step();
    const Eigen::Index last = tab.size() - 1;
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9 || x >= static_cast<double>(last))
        return tab.at(std::min<Eigen::Index>(static_cast<Eigen::Index>(r), last));
    const Eigen::Index i = static_cast<Eigen::Index>(x);
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * tab.at(i) + w * tab.at(i + 1);
}

std::optional<double> power_singularity(const PowerSum& p)
{
    if (!p.empty() && p.leading().exponent < 0.0)
        return p.leading().exponent;
    return std::nullopt;
}

int factorial(int d)
{
    int f = 1;
    for (int i = 2; i <= d; ++i)
        f *= i;
    return f;
}

void check_square(const MatrixGridFunctiond& m, int dim, const char* what)
{
    if (m.rows() != dim || m.cols() != dim)
        throw std::invalid_argument(std::string(what) + ": table shape does not match kernel dim");
}

}  // namespace

double mvn_constant(double H)
{
    return std::sqrt(2.0 * H * std::sin(std::numbers::pi * H) * std::tgamma(2.0 * H)) / std::tgamma(H + 0.5);
}

Kernel::Kernel(int dim, KernelFunction phi, PsiSpec psi) : dim_(dim), phi_(std::move(phi)), psi_(std::move(psi))
{
    if (dim < 1)
        throw std::invalid_argument("Kernel: dim must be positive");
    std::visit(overloaded{
                   [&](const MvnPhi& p) {
                       if (dim != 1)
                           throw std::invalid_argument("Kernel: MVN kernels are one-dimensional");
                       if (!(p.H > 0.0 && p.H < 1.0))
                           throw std::invalid_argument("Kernel: H must lie in (0,1)");
                   },
                   [&](const ExponentialPhi& p) {
                       if (p.A.rows() != dim || p.A.cols() != dim || p.Sigma.rows() != dim || p.Sigma.cols() != dim)
                           throw std::invalid_argument("Kernel: A and Sigma must be dim x dim");
                   },
                   [&](const PowerPhi& p) {
                       if (p.m.dim() != dim)
                           throw std::invalid_argument("Kernel: power matrix dim mismatch");
                   },
                   [&](const TriangularPhi& p) {
                       std::visit(overloaded{[&](const PowerMatrix& m) {
                                                 if (m.dim() != dim)
                                                     throw std::invalid_argument("Kernel: triangular dim mismatch");
                                                 for (int i = 0; i < dim; ++i)
                                                     for (int j = 0; j < dim; ++j) {
                                                         const bool off = p.shape == Triangle::Lower ? j > i : j < i;
                                                         if (off && !m(i, j).empty())
                                                             throw std::invalid_argument(
                                                                 "Kernel: entry violates the triangular zero pattern");
                                                     }
                                             },
                                             [&](const MatrixGridFunctiond& m) {
                                                 check_square(m, dim, "Kernel");
                                                 for (int i = 0; i < dim; ++i)
                                                     for (int j = 0; j < dim; ++j) {
                                                         const bool off = p.shape == Triangle::Lower ? j > i : j < i;
                                                         if (off && !m(i, j).is_zero())
                                                             throw std::invalid_argument(
                                                                 "Kernel: entry violates the triangular zero pattern");
                                                     }
                                             }},
                                  p.base);
                   },
                   [&](const TabulatedPhi& p) { check_square(p.table, dim, "Kernel"); },
               },
               phi_);
    if (const auto* t = std::get_if<TabulatedPhi>(&psi_))
        check_square(t->table, dim, "Kernel psi");
}

std::string Kernel::family() const
{
    return std::visit(overloaded{[](const MvnPhi&) { return std::string("mvn"); },
                                 [](const ExponentialPhi&) { return std::string("exponential"); },
                                 [](const PowerPhi&) { return std::string("power"); },
                                 [](const TriangularPhi&) { return std::string("triangular"); },
                                 [](const TabulatedPhi&) { return std::string("tabulated"); }},
                      phi_);
}

Eigen::MatrixXd Kernel::phi(double t) const
{
    if (t < 0.0)
        return zero();
    return std::visit(
        overloaded{[&](const MvnPhi& p) -> Eigen::MatrixXd {
                       double v;
                       if (t > 0.0)
                           v = p.c_h * std::pow(t, p.H - 0.5);
                       else if (p.H > 0.5)
                           v = 0.0;
                       else if (p.H == 0.5)
                           v = p.c_h;
                       else
                           v = std::numeric_limits<double>::infinity();
                       return Eigen::MatrixXd::Constant(1, 1, v);
                   },
                   [&](const ExponentialPhi& p) -> Eigen::MatrixXd { return expm(p.A * t) * p.Sigma; },
                   [&](const PowerPhi& p) -> Eigen::MatrixXd { return eval_power(p.m, t); },
                   [&](const TriangularPhi& p) -> Eigen::MatrixXd {
                       return std::visit(overloaded{[&](const PowerMatrix& m) { return eval_power(m, t); },
                                                    [&](const MatrixGridFunctiond& m) { return eval_table(m, t); }},
                                         p.base);
                   },
                   [&](const TabulatedPhi& p) -> Eigen::MatrixXd { return eval_table(p.table, t); }},
        phi_);
}

Eigen::MatrixXd Kernel::psi(double t) const
{
    if (t < 0.0)
        return zero();
    return std::visit(overloaded{[&](const PsiZero&) -> Eigen::MatrixXd { return zero(); },
                                 [&](const PsiMirror&) -> Eigen::MatrixXd { return phi(t); },
                                 [&](const TabulatedPhi& p) -> Eigen::MatrixXd { return eval_table(p.table, t); }},
                      psi_);
}

std::optional<Eigen::MatrixXd> Kernel::phi_at_zero() const
{
    const Eigen::MatrixXd v = phi(0.0);
    if (!v.allFinite())
        return std::nullopt;
    return v;
}

bool Kernel::phi_constant() const
{
    auto power_const = [](const PowerMatrix& m) {
        for (int i = 0; i < m.dim(); ++i)
            for (int j = 0; j < m.dim(); ++j)
                for (const auto& term : m(i, j).terms())
                    if (term.exponent != 0.0)
                        return false;
        return true;
    };
    return std::visit(overloaded{[](const MvnPhi& p) { return p.H == 0.5; },
                                 [](const ExponentialPhi& p) { return (p.A.array() == 0.0).all(); },
                                 [&](const PowerPhi& p) { return power_const(p.m); },
                                 [&](const TriangularPhi& p) {
                                     const auto* m = std::get_if<PowerMatrix>(&p.base);
                                     return m != nullptr && power_const(*m);
                                 },
                                 [](const TabulatedPhi&) { return false; }},
                      phi_);
}

MatrixGridFunctiond Kernel::sample_phi(double h, Eigen::Index n) const
{
    if (!(h > 0.0) || n < 2)
        throw std::invalid_argument("sample_phi: need h > 0 and n >= 2");
    const int d = dim_;
    std::vector<Eigen::MatrixXd> vals(static_cast<size_t>(n));
    std::vector<std::optional<double>> sing(static_cast<size_t>(d * d));
    if (const auto* e = std::get_if<ExponentialPhi>(&phi_)) {
        const Eigen::MatrixXd step = expm(e->A * h);
        Eigen::MatrixXd p = Eigen::MatrixXd::Identity(d, d);
        for (Eigen::Index k = 0; k < n; ++k) {
            vals[static_cast<size_t>(k)] = p * e->Sigma;
            p = step * p;
        }
    } else {
        for (Eigen::Index k = 1; k < n; ++k)
            vals[static_cast<size_t>(k)] = phi(h * static_cast<double>(k));
        vals[0] = phi(0.0);
        if (const auto* m = std::get_if<MvnPhi>(&phi_); m && m->H < 0.5)
            sing[0] = m->H - 0.5;
        const PowerMatrix* pm = nullptr;
        if (const auto* p = std::get_if<PowerPhi>(&phi_))
            pm = &p->m;
        if (const auto* p = std::get_if<TriangularPhi>(&phi_))
            pm = std::get_if<PowerMatrix>(&p->base);
        if (pm)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    sing[static_cast<size_t>(i * d + j)] = power_singularity((*pm)(i, j));
    }
    std::vector<GridFunctiond> entries;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd v(n);
            for (Eigen::Index k = 0; k < n; ++k)
                v[k] = vals[static_cast<size_t>(k)](i, j);
            const auto& s = sing[static_cast<size_t>(i * d + j)];
            if (s)
                v[0] = 0.0;
            entries.emplace_back(h, std::move(v), s);
        }
    return MatrixGridFunctiond(d, d, std::move(entries));
}

std::vector<Eigen::MatrixXd> Kernel::phi_lags(double h, Eigen::Index n) const
{
    std::vector<Eigen::MatrixXd> out(static_cast<size_t>(n), zero());
    if (const auto* e = std::get_if<ExponentialPhi>(&phi_)) {
        const Eigen::MatrixXd step = expm(e->A * h);
        Eigen::MatrixXd p = step;
        for (Eigen::Index k = 1; k < n; ++k) {
            out[static_cast<size_t>(k)] = p * e->Sigma;
            p = step * p;
        }
        return out;
    }
    for (Eigen::Index k = 1; k < n; ++k)
        out[static_cast<size_t>(k)] = phi_left(h * static_cast<double>(k));
    return out;
}

std::vector<Eigen::MatrixXd> Kernel::psi_lags(double h, Eigen::Index n) const
{
    if (psi_is_mirror())
        return phi_lags(h, n);
    std::vector<Eigen::MatrixXd> out(static_cast<size_t>(n), zero());
    if (psi_is_zero())
        return out;
    for (Eigen::Index k = 1; k < n; ++k)
        out[static_cast<size_t>(k)] = psi_left(h * static_cast<double>(k));
    return out;
}

Kernel mvn_kernel(double H)
{
    if (!(H > 0.0 && H < 1.0))
        throw std::invalid_argument("mvn_kernel: H must lie in (0,1)");
    return Kernel(1, MvnPhi{H, mvn_constant(H)}, PsiMirror{});
}

Kernel exp_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma)
{
    if (A.rows() != A.cols() || Sigma.rows() != Sigma.cols())
        throw std::invalid_argument("exp_kernel: A and Sigma must be square");
    if (A.rows() != Sigma.rows())
        throw std::invalid_argument("exp_kernel: A and Sigma dimensions differ");
    const bool stable = spectral_abscissa(A) < -1e-12;
    return Kernel(static_cast<int>(A.rows()), ExponentialPhi{A, Sigma, stable}, PsiZero{});
}

Kernel power_kernel(const PowerMatrix& m, PsiSpec psi)
{
    return Kernel(m.dim(), PowerPhi{m}, std::move(psi));
}

Kernel triangular_kernel(std::variant<PowerMatrix, MatrixGridFunctiond> base, Triangle shape, PsiSpec psi)
{
    const int d = std::visit(overloaded{[](const PowerMatrix& m) { return m.dim(); },
                                        [](const MatrixGridFunctiond& m) { return m.rows(); }},
                             base);
    return Kernel(d, TriangularPhi{std::move(base), shape}, std::move(psi));
}

Kernel tabulated_kernel(const MatrixGridFunctiond& table, PsiSpec psi)
{
    return Kernel(table.rows(), TabulatedPhi{table}, std::move(psi));
}

std::string to_string(DetStarStatus s)
{
    switch (s) {
    case DetStarStatus::Holds:
        return "Holds";
    case DetStarStatus::FailsNumerically:
        return "FailsNumerically";
    case DetStarStatus::Inconclusive:
        return "Inconclusive";
    }
    return "?";
}

namespace {

DetStarVerdict numeric_probe(const MatrixGridFunctiond& phi, int windows)
{
    const int d = phi.dim();
    const double h = phi.step();
    const GridFunctiond det = conv_determinant(phi);
    DetStarVerdict v{DetStarStatus::Holds, "", {}};
    bool fails = false, weak = false;
    std::ostringstream ev;
    ev.precision(6);
    ev << "grid det* on dyadic windows (h=" << h << "):";
    for (int k = 0; k <= windows; ++k) {
        const double tau = std::ldexp(1.0, -k);
        if (tau > phi.horizon() * (1.0 + 1e-12))
            continue;
        const Eigen::Index m = static_cast<Eigen::Index>(std::floor(tau / h + 1e-9));
        if (m < 8)
            break;
        double peak = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                peak = std::max(peak, phi(i, j).values.segment(1, m).cwiseAbs().maxCoeff());
        const double noise = h * factorial(d) * std::pow(peak, d) * std::pow(std::max(tau, h), d - 1);
        const double sup = det.values.segment(1, m).cwiseAbs().maxCoeff();
        v.probe_windows.push_back({tau, sup, noise});
        ev << " [tau=" << tau << " sup=" << sup << " noise=" << noise << "]";
        if (sup <= noise)
            fails = true;
        else if (sup <= 10.0 * noise)
            weak = true;
    }
    if (v.probe_windows.empty()) {
        v.status = DetStarStatus::Inconclusive;
        ev << " no window resolvable on this grid";
    } else if (fails) {
        v.status = DetStarStatus::FailsNumerically;
    } else if (weak) {
        v.status = DetStarStatus::Inconclusive;
    }
    v.evidence = ev.str();
    return v;
}

DetStarVerdict symbolic_verdict(const PowerMatrix& m)
{
    const PowerSum det = power_conv_determinant(m);
    if (det.empty())
        return {DetStarStatus::FailsNumerically, "symbolic det* is identically zero (coefficient 0)", {}};
    std::ostringstream ev;
    ev.precision(17);
    ev << "symbolic det* = " << det.to_string() << "; leading coefficient " << det.leading().coeff << " at t^"
       << det.leading().exponent;
    return {DetStarStatus::Holds, ev.str(), {}};
}

}  // namespace

DetStarVerdict check_detstar(const Kernel& k, const DetStarConfig& cfg)
{
    const int d = k.dim();
    return std::visit(
        overloaded{
            [&](const MvnPhi& p) -> DetStarVerdict {
                std::ostringstream ev;
                ev.precision(10);
                ev << "univariate power kernel C_H t^(H-1/2) with C_H = " << p.c_h << " > 0";
                return {DetStarStatus::Holds, ev.str(), {}};
            },
            [&](const ExponentialPhi& p) -> DetStarVerdict {
                const double ds = p.Sigma.determinant();
                if (std::abs(ds) <= 1e-14 * std::pow(std::max(1e-300, p.Sigma.cwiseAbs().maxCoeff()), d))
                    return {DetStarStatus::FailsNumerically, "det(Sigma) = 0, so det*(Phi) vanishes identically", {}};
                // det*(exp(A.)) on a short grid against the exact resolvent 1/det(sI - A).
                const double s = cfg.laplace_s;
                const double horizon = std::max(cfg.horizon, 40.0 / s);
                const auto n = static_cast<Eigen::Index>(std::ceil(horizon / cfg.h)) + 1;
                const Kernel bare = exp_kernel(p.A, Eigen::MatrixXd::Identity(d, d));
                const auto lap = laplace(conv_determinant(bare.sample_phi(cfg.h, n)), s);
                const Eigen::MatrixXd sa = s * Eigen::MatrixXd::Identity(d, d) - p.A;
                const double exact = 1.0 / sa.determinant();
                const double sd = std::pow(s, d);
                std::ostringstream ev;
                ev.precision(8);
                ev << "exponential kernel: det*(Phi) = det(Sigma) det*(e^{A.}), det(Sigma) = " << ds
                   << "; Laplace check at s=" << s << ": s^d L[det*] = " << sd * lap.value
                   << " vs exact s^d/det(sI-A) = " << sd * exact
                   << " (relative error " << std::abs(lap.value - exact) / std::abs(exact) << ")";
                if (!p.stable)
                    ev << "; A is not stable";
                return {DetStarStatus::Holds, ev.str(), {}};
            },
            [&](const PowerPhi& p) -> DetStarVerdict { return symbolic_verdict(p.m); },
            [&](const TriangularPhi& p) -> DetStarVerdict {
                if (const auto* m = std::get_if<PowerMatrix>(&p.base)) {
                    std::ostringstream ev;
                    for (int i = 0; i < d; ++i) {
                        const PowerSum& e = (*m)(i, i);
                        if (e.empty())
                            return {DetStarStatus::FailsNumerically,
                                    "diagonal entry " + std::to_string(i + 1) + " is identically zero",
                                    {}};
                        ev << (i ? "; " : "triangular: diagonal leading terms ") << e.leading().coeff << "*t^"
                           << e.leading().exponent;
                    }
                    return {DetStarStatus::Holds, ev.str(), {}};
                }
                const auto& tab = std::get<MatrixGridFunctiond>(p.base);
                DetStarVerdict out{DetStarStatus::Holds, "triangular: per-diagonal probes;", {}};
                for (int i = 0; i < d; ++i) {
                    DetStarVerdict v = numeric_probe(MatrixGridFunctiond(1, 1, {tab(i, i)}), cfg.windows);
                    out.evidence += " entry " + std::to_string(i + 1) + ": " + to_string(v.status) + ";";
                    out.probe_windows.insert(out.probe_windows.end(), v.probe_windows.begin(), v.probe_windows.end());
                    if (v.status == DetStarStatus::FailsNumerically)
                        out.status = DetStarStatus::FailsNumerically;
                    else if (v.status == DetStarStatus::Inconclusive && out.status == DetStarStatus::Holds)
                        out.status = DetStarStatus::Inconclusive;
                }
                return out;
            },
            [&](const TabulatedPhi& p) -> DetStarVerdict { return numeric_probe(p.table, cfg.windows); }},
        k.phi_spec());
}

RvIndices rv_index_criterion(const Eigen::MatrixXd& alpha)
{
    const auto d = static_cast<int>(alpha.rows());
    if (d < 1 || alpha.cols() != d || d > 8)
        throw std::invalid_argument("rv_index_criterion: alpha must be square with dim in [1, 8]");
    if ((alpha.array() <= -1.0).any() || !alpha.allFinite())
        throw std::invalid_argument("rv_index_criterion: entries must be finite and exceed -1");
    std::vector<int> perm(static_cast<size_t>(d));
    std::iota(perm.begin(), perm.end(), 0);
    double plus = std::numeric_limits<double>::infinity();
    double minus = std::numeric_limits<double>::infinity();
    do {
        int inv = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                inv += perm[static_cast<size_t>(i)] > perm[static_cast<size_t>(j)];
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            s += alpha(i, perm[static_cast<size_t>(i)]);
        (inv % 2 ? minus : plus) = std::min(inv % 2 ? minus : plus, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const bool equal = std::isfinite(minus) && std::abs(plus - minus) <= 1e-12 * std::max(1.0, std::abs(plus));
    return {plus, minus, equal ? RvVerdict::InconclusiveEqualIndices : RvVerdict::True};
}

std::string to_string(IntegrabilityStatus s)
{
    switch (s) {
    case IntegrabilityStatus::Finite:
        return "Finite";
    case IntegrabilityStatus::Divergent:
        return "Divergent";
    case IntegrabilityStatus::Unsupported:
        return "Unsupported";
    }
    return "?";
}

namespace {

using Integrand = std::function<double(double)>;

double gk(const Integrand& f, double a, double b)
{
    if (b <= a)
        return 0.0;
    // Shells far below the spacing of doubles around them cannot be refined usefully.
    const unsigned depth = (b - a) < 1e-6 * std::max(std::abs(a), std::abs(b)) ? 0 : 8;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, depth, 1e-9);
}

// Combines shell integrals s_k (ordered toward the singular end or infinity).
ShellIntegral close_shells(const std::vector<double>& s)
{
    ShellIntegral out;
    for (double v : s)
        out.value += v;
    if (!std::isfinite(out.value)) {
        out.divergent = true;
        return out;
    }
    const size_t n = s.size();
    const double last = s[n - 1];
    if (last <= 1e-300 * std::max(1.0, out.value) || last == 0.0)
        return out;
    double rmax = 0.0, rsum = 0.0;
    for (size_t k = n - 4; k < n; ++k) {
        const double r = s[k - 1] > 0.0 ? s[k] / s[k - 1] : 0.0;
        rmax = std::max(rmax, r);
        rsum += r;
    }
    if (rsum / 4.0 >= 0.97) {
        out.divergent = true;
        return out;
    }
    out.tail = last * rmax / (1.0 - rmax);
    out.value += out.tail;
    return out;
}

constexpr int kShells = 64;

// Later shells below this fraction of the running total are dropped.
bool negligible(const std::vector<double>& s)
{
    if (s.size() < 8)
        return false;
    double sum = 0.0;
    for (double v : s)
        sum += v;
    return std::isfinite(sum) && std::abs(s.back()) <= 1e-18 * std::abs(sum);
}

// Integral over [a, b] with a possible integrable singularity at the left end
// (toward_left) or the right end.
ShellIntegral finite_shells(const Integrand& f, double a, double b, bool toward_left)
{
    const double len = b - a;
    std::vector<double> s;
    for (int k = 0; k < kShells; ++k) {
        const double hi = len * std::ldexp(1.0, -k), lo = len * std::ldexp(1.0, -k - 1);
        s.push_back(toward_left ? gk(f, a + lo, a + hi) : gk(f, b - hi, b - lo));
        if (negligible(s))
            break;
    }
    return close_shells(s);
}

// Integral over [a, inf) (toward_plus) or (-inf, a].
ShellIntegral tail_shells(const Integrand& f, double a, bool toward_plus)
{
    std::vector<double> s;
    for (int k = 0; k < kShells; ++k) {
        const double lo = std::ldexp(1.0, k) - 1.0, hi = std::ldexp(1.0, k + 1) - 1.0;
        s.push_back(toward_plus ? gk(f, a + lo, a + hi) : gk(f, a - hi, a - lo));
        if (negligible(s))
            break;
    }
    return close_shells(s);
}

ShellIntegral add(ShellIntegral a, const ShellIntegral& b)
{
    a.value += b.value;
    a.tail += b.tail;
    a.divergent = a.divergent || b.divergent;
    return a;
}

// int_{-inf}^{t} g(u) du split at the possible singular points u = 0 and u = t.
ShellIntegral over_past(const Integrand& g, double t)
{
    if (t > 0.0) {
        ShellIntegral r = tail_shells(g, -1.0, false);
        r = add(r, finite_shells(g, -1.0, 0.0, false));
        r = add(r, finite_shells(g, 0.0, 0.5 * t, true));
        return add(r, finite_shells(g, 0.5 * t, t, false));
    }
    ShellIntegral r = tail_shells(g, t - 1.0, false);
    return add(r, finite_shells(g, t - 1.0, t, false));
}

}  // namespace

IntegrabilityReport check_integrability(const Kernel& k, const LevyModel& L, const std::vector<double>& times)
{
    if (times.empty())
        throw std::invalid_argument("check_integrability: no times requested");
    if (L.dim() != k.dim())
        throw std::invalid_argument("check_integrability: kernel and driver dimensions differ");
    IntegrabilityReport rep{IntegrabilityStatus::Finite, "", {}};
    const double m2 = L.second_moment_outside_unit();
    if (!std::isfinite(m2)) {
        rep.status = IntegrabilityStatus::Unsupported;
        rep.message = "driver has no finite second moment outside the unit ball; "
                      "the general integrability conditions are not checked for this model";
        return rep;
    }
    // For a centered square-integrable driver only int ||K||^2 is needed.
    const bool centered = L.is_centered();
    rep.message = centered ? "centered square-integrable driver: requires int ||K||^2 < inf"
                           : "square-integrable driver: requires int (||K|| + ||K||^2) < inf";
    for (double t : times) {
        const Integrand n1 = [&](double u) { return k.k(t, u).norm(); };
        const Integrand n2 = [&](double u) { return k.k(t, u).squaredNorm(); };
        const ShellIntegral i1 = over_past(n1, t);
        const ShellIntegral i2 = over_past(n2, t);
        IntegrabilityRow row{t, i1.divergent ? std::numeric_limits<double>::infinity() : i1.value,
                             i2.divergent ? std::numeric_limits<double>::infinity() : i2.value,
                             IntegrabilityStatus::Finite, ""};
        if (i2.divergent) {
            row.status = IntegrabilityStatus::Divergent;
            row.offending = "int ||K(t,u)||^2 du";
        } else if (i1.divergent && !centered) {
            row.status = IntegrabilityStatus::Divergent;
            row.offending = "int ||K(t,u)|| du";
        }
        if (row.status == IntegrabilityStatus::Divergent)
            rep.status = IntegrabilityStatus::Divergent;
        rep.rows.push_back(row);
    }
    return rep;
}

std::vector<ModulusRow> regularity_moduli(const Kernel& k, const std::vector<double>& hs)
{
    std::vector<ModulusRow> out;
    for (double h : hs) {
        if (!(h > 0.0))
            throw std::invalid_argument("regularity_moduli: h must be positive");
        const Integrand q1f = [&](double u) { return k.phi(u).squaredNorm(); };
        const Integrand q2f = [&](double u) { return (k.phi(u + h) - k.phi(u)).squaredNorm(); };
        const ShellIntegral q1 = finite_shells(q1f, 0.0, h, true);
        const ShellIntegral q2 = add(finite_shells(q2f, 0.0, h, true), tail_shells(q2f, h, true));
        out.push_back({h, q1.divergent ? std::numeric_limits<double>::infinity() : q1.value,
                       q2.divergent ? std::numeric_limits<double>::infinity() : q2.value, q2.tail,
                       q1.divergent || q2.divergent});
    }
    return out;
}

}  // namespace csbp
