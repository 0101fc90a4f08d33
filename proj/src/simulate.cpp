#include "csbp/simulate.hpp"

#include "csbp/linalg.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace csbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::Index cell_of(double time, double start, double h, Eigen::Index cells)
{
    const auto k = static_cast<Eigen::Index>(std::floor((time - start) / h));
    return std::clamp<Eigen::Index>(k, 0, cells - 1);
}

Eigen::Index steps(double length, double h, const char* what)
{
    const double x = length / h;
    const double r = std::round(x);
    if (!(r >= 0.0) || std::abs(x - r) > 1e-6 * std::max(1.0, r))
        throw std::invalid_argument(std::string("sample_driver: ") + what + " must be a multiple of h");
    return static_cast<Eigen::Index>(r);
}

// out(:, m - m_begin) = sum_{k_begin <= k < min(m, k_end)} Phi((m - k) h -) dL_k for m in [m_begin, m_end].
Eigen::MatrixXd causal_sum(const Kernel& kern, const std::vector<Eigen::MatrixXd>& lags, const Eigen::MatrixXd& inc,
                           double h, Eigen::Index k_begin, Eigen::Index k_end, Eigen::Index m_begin,
                           Eigen::Index m_end)
{
    const int d = static_cast<int>(inc.rows());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, m_end - m_begin + 1);
    if (const auto* e = std::get_if<ExponentialPhi>(&kern.phi_spec())) {
        const Eigen::MatrixXd E = expm(e->A * h);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
        for (Eigen::Index m = k_begin; m <= m_end; ++m) {
            if (m >= m_begin)
                out.col(m - m_begin) = y;
            if (m < k_end)
                y = E * (y + e->Sigma * inc.col(m));
            else
                y = E * y;
        }
        return out;
    }
    if (kern.phi_constant()) {
        const Eigen::MatrixXd C = kern.phi(1.0);
        Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
        for (Eigen::Index m = k_begin; m <= m_end; ++m) {
            if (m >= m_begin)
                out.col(m - m_begin) = C * s;
            if (m < k_end)
                s += inc.col(m);
        }
        return out;
    }
    const double* dl = inc.data();
    for (Eigen::Index m = std::max(m_begin, k_begin); m <= m_end; ++m) {
        double* o = out.col(m - m_begin).data();
        const Eigen::Index top = std::min(m, k_end);
        for (Eigen::Index k = k_begin; k < top; ++k) {
            const Eigen::MatrixXd& P = lags[static_cast<size_t>(m - k)];
            const double* x = dl + k * d;
            for (int c = 0; c < d; ++c) {
                const double xc = x[c];
                if (xc == 0.0)
                    continue;
                for (int r = 0; r < d; ++r)
                    o[r] += P(r, c) * xc;
            }
        }
    }
    return out;
}

// int_M^inf ||Phi(T + v) - Psi(v)||_F^2 dv over dyadic shells; NaN when the shells do not settle.
double history_tail(const Kernel& kern, double M, double T)
{
    auto f = [&](double v) { return (kern.phi(T + v) - kern.psi(v)).squaredNorm(); };
    double total = 0.0;
    double a = M;
    if (a <= 0.0) {
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 8, 1e-10);
        a = 1.0;
    }
    for (int j = 0; j < 60; ++j) {
        const double b = 2.0 * a;
        const double piece = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-10);
        if (!std::isfinite(piece))
            return kNaN;
        total += piece;
        if (piece <= 1e-14 * std::max(1.0, total) && j >= 2)
            return total;
        a = b;
    }
    return kNaN;
}

ProcessPath make_path(const DriverPath& drv, Eigen::Index i0, Eigen::MatrixXd values, std::string kernel_id)
{
    ProcessPath p;
    p.t0 = drv.time(i0);
    p.h = drv.h;
    p.values = std::move(values);
    p.kernel_id = std::move(kernel_id);
    p.driver_id = "seed=" + std::to_string(drv.seed);
    p.history = drv.h * static_cast<double>(drv.n_past);
    p.tail_bound = kNaN;
    return p;
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

DriverSampler::DriverSampler(const LevyModel& L, double h, double delta, bool gaussian_small_jumps)
    : dim_(L.dim()), h_(h), delta_(delta)
{
    if (!(h > 0.0))
        throw std::invalid_argument("DriverSampler: h must be positive");
    if (!(delta >= 0.0))
        throw std::invalid_argument("DriverSampler: delta must be nonnegative");
    if (delta == 0.0 && !L.finite_activity())
        throw std::invalid_argument("DriverSampler: delta = 0 is unsupported for infinite-activity drivers");
    proposal_ = L.proposal(delta);
    drift_h_ = L.truncated_drift(delta) * h;
    cov_h_ = L.gaussian() * h;
    if (gaussian_small_jumps)
        cov_h_ += L.small_jump_covariance(delta) * h;
    chol_h_ = cov_h_.isZero(0.0) ? Eigen::MatrixXd::Zero(dim_, dim_) : psd_sqrt(cov_h_);
}

void DriverSampler::sample(Eigen::Index n, const Rng& rng, Eigen::MatrixXd& diffusive,
                           std::vector<JumpEvent>& jumps) const
{
    diffusive.resize(dim_, n);
    diffusive.colwise() = drift_h_;
    if (!chol_h_.isZero(0.0)) {
        Rng g = rng.substream(kGaussTag);
        Eigen::VectorXd z(dim_);
        for (Eigen::Index k = 0; k < n; ++k) {
            for (int i = 0; i < dim_; ++i)
                z[i] = g.normal();
            diffusive.col(k) += chol_h_ * z;
        }
    }
    jumps.clear();
    if (proposal_.rate <= 0.0)
        return;
    Rng jr = rng.substream(kJumpTag);
    const double end = h_ * static_cast<double>(n);
    double t = 0.0;
    for (;;) {
        t += jr.exponential(proposal_.rate);
        if (t >= end)
            break;
        Eigen::VectorXd x = proposal_.draw(jr);
        const double r = x.norm();
        if (r == 0.0 || r < delta_)
            continue;
        jumps.push_back({t, std::move(x)});
    }
}

Eigen::Index DriverPath::index_of(double t) const
{
    const double x = t / h + static_cast<double>(n_past);
    const double r = std::round(x);
    if (!(std::abs(x - r) <= 1e-6) || r < 0.0 || r > static_cast<double>(cells()))
        throw std::invalid_argument("time " + fmt(t) + " is not on the driver grid");
    return static_cast<Eigen::Index>(r);
}

DriverPath make_driver(double h, Eigen::Index n_past, Eigen::MatrixXd diffusive, std::vector<JumpEvent> jumps)
{
    if (!(h > 0.0))
        throw std::invalid_argument("make_driver: h must be positive");
    if (n_past < 0 || n_past > diffusive.cols())
        throw std::invalid_argument("make_driver: history exceeds the number of cells");
    DriverPath p;
    p.h = h;
    p.n_past = n_past;
    p.n_future = diffusive.cols() - n_past;
    p.diffusive = std::move(diffusive);
    p.increments = p.diffusive;
    std::stable_sort(jumps.begin(), jumps.end(), [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; });
    const double start = p.start();
    for (const auto& j : jumps) {
        if (j.jump.size() != p.diffusive.rows())
            throw std::invalid_argument("make_driver: jump dimension mismatch");
        if (p.cells() > 0)
            p.increments.col(cell_of(j.time, start, h, p.cells())) += j.jump;
    }
    p.jumps = std::move(jumps);
    return p;
}

DriverPath sample_driver(const DriverSampler& s, Eigen::Index n_past, Eigen::Index n_future, const Rng& past,
                         const Rng& future)
{
    const int d = s.dim();
    Eigen::MatrixXd diffusive(d, n_past + n_future);
    std::vector<JumpEvent> jumps;
    Eigen::MatrixXd part;
    std::vector<JumpEvent> part_jumps;
    if (n_past > 0) {
        // Independent copy L' run backwards: cell [-(c+1)h, -ch] receives L' over [ch, (c+1)h].
        s.sample(n_past, past, part, part_jumps);
        for (Eigen::Index c = 0; c < n_past; ++c)
            diffusive.col(n_past - 1 - c) = part.col(c);
        for (auto& j : part_jumps)
            jumps.push_back({-j.time, std::move(j.jump)});
    }
    if (n_future > 0) {
        s.sample(n_future, future, part, part_jumps);
        diffusive.rightCols(n_future) = part;
        for (auto& j : part_jumps)
            jumps.push_back(std::move(j));
    }
    DriverPath p = make_driver(s.step(), n_past, std::move(diffusive), std::move(jumps));
    p.delta = s.delta();
    return p;
}

DriverPath sample_driver(const LevyModel& L, const SimConfig& cfg)
{
    if (!(cfg.h > 0.0))
        throw std::invalid_argument("sample_driver: h must be positive");
    if (!(cfg.history >= 0.0) || !(cfg.horizon >= 0.0))
        throw std::invalid_argument("sample_driver: history and horizon must be nonnegative");
    const DriverSampler s(L, cfg.h, cfg.delta, cfg.gaussian_small_jumps);
    DriverPath p = sample_driver(s, steps(cfg.history, cfg.h, "history"), steps(cfg.horizon, cfg.h, "horizon"),
                                 make_stream(cfg.seed, {kPastTag}), make_stream(cfg.seed, {kFutureTag}));
    p.seed = cfg.seed;
    return p;
}

DriverPath coarsen(const DriverPath& drv, int factor)
{
    if (factor < 1 || drv.n_past % factor != 0 || drv.n_future % factor != 0)
        throw std::invalid_argument("coarsen: factor must divide both halves of the grid");
    const Eigen::Index n = drv.cells() / factor;
    Eigen::MatrixXd diffusive = Eigen::MatrixXd::Zero(drv.diffusive.rows(), n);
    for (Eigen::Index k = 0; k < n; ++k)
        diffusive.col(k) = drv.diffusive.middleCols(k * factor, factor).rowwise().sum();
    DriverPath p = make_driver(drv.h * factor, drv.n_past / factor, std::move(diffusive), drv.jumps);
    p.delta = drv.delta;
    p.seed = drv.seed;
    return p;
}

ProcessPath ma_path(const Kernel& k, const DriverPath& drv, double t0)
{
    if (k.dim() != drv.dim())
        throw std::invalid_argument("ma_path: kernel and driver dimensions differ");
    const Eigen::Index i0 = drv.index_of(t0);
    const Eigen::Index N = drv.cells();
    std::vector<Eigen::MatrixXd> lags;
    if (!std::holds_alternative<ExponentialPhi>(k.phi_spec()) && !k.phi_constant())
        lags = k.phi_lags(drv.h, N + 1);
    Eigen::MatrixXd values = causal_sum(k, lags, drv.increments, drv.h, 0, N, i0, N);
    if (!k.psi_is_zero() && drv.n_past > 0) {
        const std::vector<Eigen::MatrixXd> psi = k.psi_lags(drv.h, drv.n_past + 1);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(drv.dim());
        for (Eigen::Index j = 0; j < drv.n_past; ++j)
            c += psi[static_cast<size_t>(drv.n_past - j)] * drv.increments.col(j);
        values.colwise() -= c;
    }
    if (!values.allFinite())
        throw std::runtime_error("ma_path: non-finite values");
    ProcessPath p = make_path(drv, i0, std::move(values), k.family());
    p.tail_bound = history_tail(k, p.history, drv.end());
    return p;
}

Decomposition decompose(const Kernel& k, const DriverPath& drv, double t0)
{
    if (k.dim() != drv.dim())
        throw std::invalid_argument("decompose: kernel and driver dimensions differ");
    const Eigen::Index i0 = drv.index_of(t0);
    const Eigen::Index N = drv.cells();
    std::vector<Eigen::MatrixXd> lags;
    if (!std::holds_alternative<ExponentialPhi>(k.phi_spec()) && !k.phi_constant())
        lags = k.phi_lags(drv.h, N + 1);
    Eigen::MatrixXd a = causal_sum(k, lags, drv.increments, drv.h, 0, i0, i0, N);
    const Eigen::VectorXd at_t0 = a.col(0);
    a.colwise() -= at_t0;
    Eigen::MatrixXd xbar = causal_sum(k, lags, drv.increments, drv.h, i0, N, i0, N);
    Decomposition out{make_path(drv, i0, std::move(a), k.family()), make_path(drv, i0, std::move(xbar), k.family()),
                      ma_path(k, drv, t0).values.col(0)};
    return out;
}

double ou_warmup(const Eigen::MatrixXd& A, double history)
{
    const double s = spectral_abscissa(A);
    if (!(s < 0.0))
        throw std::invalid_argument("ou_warmup: A must be stable");
    return std::max(history, 20.0 / std::abs(s));
}

ProcessPath ou_exact(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, const DriverPath& drv, double t0,
                     const Eigen::VectorXd& x_start)
{
    const int d = drv.dim();
    if (A.rows() != d || A.cols() != d || Sigma.rows() != d || Sigma.cols() != d)
        throw std::invalid_argument("ou_exact: matrix dimensions must match the driver");
    if (!(spectral_abscissa(A) < 0.0))
        throw std::invalid_argument("ou_exact: A must be stable");
    const Eigen::Index i0 = drv.index_of(t0);
    const Eigen::Index N = drv.cells();
    const Eigen::MatrixXd E = expm(A * drv.h);
    Eigen::VectorXd x = x_start.size() == 0 ? Eigen::VectorXd::Zero(d) : x_start;
    if (x.size() != d)
        throw std::invalid_argument("ou_exact: start vector has the wrong dimension");
    Eigen::MatrixXd values(d, N - i0 + 1);
    const double start = drv.start();
    size_t next = 0;
    for (Eigen::Index k = 0; k <= N; ++k) {
        if (k >= i0)
            values.col(k - i0) = x;
        if (k == N)
            break;
        Eigen::VectorXd y = E * (x + Sigma * drv.diffusive.col(k));
        const double t_end = drv.time(k + 1);
        while (next < drv.jumps.size() && cell_of(drv.jumps[next].time, start, drv.h, N) == k) {
            const auto& j = drv.jumps[next++];
            y += expm(A * (t_end - j.time)) * (Sigma * j.jump);
        }
        x = std::move(y);
    }
    ProcessPath p = make_path(drv, i0, std::move(values), "exponential");
    p.driver_id += ";ou_exact";
    return p;
}

void write_csv(std::ostream& os, const ProcessPath& p)
{
    os << "t";
    for (Eigen::Index i = 0; i < p.values.rows(); ++i)
        os << ",x_" << (i + 1);
    os << "\n";
    for (Eigen::Index m = 0; m < p.size(); ++m) {
        os << fmt(p.time(m));
        for (Eigen::Index i = 0; i < p.values.rows(); ++i)
            os << "," << fmt(p.values(i, m));
        os << "\n";
    }
}

void write_ensemble_csv(std::ostream& os, const std::vector<ProcessPath>& paths)
{
    const Eigen::Index d = paths.empty() ? 0 : paths.front().values.rows();
    os << "path_id,t";
    for (Eigen::Index i = 0; i < d; ++i)
        os << ",x_" << (i + 1);
    os << "\n";
    for (size_t id = 0; id < paths.size(); ++id) {
        const ProcessPath& p = paths[id];
        if (p.values.rows() != d)
            throw std::invalid_argument("write_ensemble_csv: paths of different dimensions");
        for (Eigen::Index m = 0; m < p.size(); ++m) {
            os << id << "," << fmt(p.time(m));
            for (Eigen::Index i = 0; i < d; ++i)
                os << "," << fmt(p.values(i, m));
            os << "\n";
        }
    }
}

}  // namespace csbp
