#include "csbp/mcverify.hpp"

#include "csbp/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace csbp {

namespace {

constexpr double kZ95 = 1.959963984540054;

Eigen::Index grid_steps(double length, double h, const char* what)
{
    const double x = length / h;
    const double r = std::round(x);
    if (!(r >= 1.0) || std::abs(x - r) > 1e-6 * r)
        throw std::invalid_argument(std::string(what) + " must be a positive multiple of h");
    return static_cast<Eigen::Index>(r);
}

enum class Mode { Tube, Hit };

// Simulates Xbar on n cells of fresh future and decides the event for Y = Xbar + offset:
// Tube: sup ||Y|| < radius; Hit: ||Y|| < radius somewhere.
class Engine {
public:
    Engine(const Kernel& k, const LevyModel& L, const SimConfig& sim, const McConfig& mc, Eigen::Index n,
           Eigen::MatrixXd offset, Mode mode, double radius)
        : sampler_(L, sim.h, sim.delta, sim.gaussian_small_jumps), n_(n), h_(sim.h), seed_(mc.seed),
          offset_(std::move(offset)), mode_(mode), radius_(radius)
    {
        const int d = k.dim();
        if (L.dim() != d)
            throw std::invalid_argument("kernel and Levy model dimensions differ");
        if (offset_.rows() != d || offset_.cols() != n + 1)
            throw std::invalid_argument("target does not match the simulation grid");
        if (const auto* e = std::get_if<ExponentialPhi>(&k.phi_spec())) {
            expo_ = true;
            E_ = expm(e->A * h_);
            sigma_ = e->Sigma;
        } else if (k.phi_constant()) {
            constant_ = true;
            C_ = k.phi(1.0);
        } else {
            lags_ = k.phi_lags(h_, n + 1);
        }
        if (mc.bridge) {
            phi0_ = k.phi_at_zero();
            if (phi0_) {
                const Eigen::MatrixXd V = *phi0_ * sampler_.cell_covariance() * phi0_->transpose() / h_;
                if (d == 1)
                    var_ = V(0, 0);
                else
                    var_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(V, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .maxCoeff();
                var_ = std::max(var_, 0.0);
            }
        }
    }

    bool trial(long i) const
    {
        const Rng base = make_stream(seed_, {kTrialTag, static_cast<std::uint64_t>(i)});
        Eigen::MatrixXd inc;
        std::vector<JumpEvent> jumps;
        sampler_.sample(n_, base.substream(kFutureTag), inc, jumps);
        std::vector<Eigen::Index> cell(jumps.size());
        for (size_t j = 0; j < jumps.size(); ++j) {
            cell[j] = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(jumps[j].time / h_)), 0, n_ - 1);
            inc.col(cell[j]) += jumps[j].jump;
        }
        const Eigen::MatrixXd y = path(inc) + offset_;

        bool inside_any = false;
        for (Eigen::Index m = 0; m <= n_; ++m) {
            const bool in = y.col(m).norm() < radius_;
            if (mode_ == Mode::Tube && !in)
                return false;
            inside_any = inside_any || in;
        }
        if (mode_ == Mode::Hit && inside_any)
            return true;
        if (!phi0_)
            return mode_ == Mode::Tube;

        // Intra-cell reconstruction: linear continuous part, jumps through Phi(0+),
        // Brownian-bridge crossing between consecutive checkpoints.
        double keep = 1.0;   // Tube: survival probability; Hit: probability of no entry
        size_t next = 0;
        for (Eigen::Index c = 0; c < n_; ++c) {
            const Eigen::VectorXd a = y.col(c);
            const Eigen::VectorXd b = y.col(c + 1);
            const double tc = h_ * static_cast<double>(c);
            if (next >= jumps.size() || cell[next] != c) {
                keep *= segment(a, b, h_);
                continue;
            }
            size_t last = next;
            Eigen::VectorXd total = Eigen::VectorXd::Zero(a.size());
            while (last < jumps.size() && cell[last] == c)
                total += *phi0_ * jumps[last++].jump;
            Eigen::VectorXd cum = Eigen::VectorXd::Zero(a.size());
            Eigen::VectorXd cur = a;
            double prev = tc;
            for (size_t j = next; j < last; ++j) {
                const double s = std::clamp(jumps[j].time, tc, tc + h_);
                const Eigen::VectorXd lin = a + (s - tc) / h_ * (b - a - total);
                const Eigen::VectorXd left = lin + cum;
                cum += *phi0_ * jumps[j].jump;
                const Eigen::VectorXd right = lin + cum;
                const bool in_l = left.norm() < radius_;
                const bool in_r = right.norm() < radius_;
                if (mode_ == Mode::Tube && !(in_l && in_r))
                    return false;
                if (mode_ == Mode::Hit && (in_l || in_r))
                    return true;
                keep *= segment(cur, left, s - prev);
                cur = right;
                prev = s;
            }
            keep *= segment(cur, b, tc + h_ - prev);
            next = last;
        }
        if (keep >= 1.0)
            return mode_ == Mode::Tube;
        Rng u = base.substream(kBridgeTag);
        const double U = u.uniform();
        return mode_ == Mode::Tube ? U < keep : U >= keep;
    }

private:
    Eigen::MatrixXd path(const Eigen::MatrixXd& inc) const
    {
        const int d = static_cast<int>(inc.rows());
        Eigen::MatrixXd out(d, n_ + 1);
        if (expo_) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
            for (Eigen::Index m = 0; m <= n_; ++m) {
                out.col(m) = v;
                if (m < n_)
                    v = E_ * (v + sigma_ * inc.col(m));
            }
            return out;
        }
        if (constant_) {
            Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
            for (Eigen::Index m = 0; m <= n_; ++m) {
                out.col(m) = C_ * s;
                if (m < n_)
                    s += inc.col(m);
            }
            return out;
        }
        out.setZero();
        for (Eigen::Index m = 1; m <= n_; ++m) {
            double* o = out.col(m).data();
            for (Eigen::Index j = 0; j < m; ++j) {
                const Eigen::MatrixXd& P = lags_[static_cast<size_t>(m - j)];
                const double* x = inc.col(j).data();
                for (int c = 0; c < d; ++c) {
                    if (x[c] == 0.0)
                        continue;
                    for (int r = 0; r < d; ++r)
                        o[r] += P(r, c) * x[c];
                }
            }
        }
        return out;
    }

    // Tube: probability that the bridge stays inside; Hit: probability that it stays outside.
    double segment(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double dt) const
    {
        if (!(var_ > 0.0) || !(dt > 0.0))
            return 1.0;
        const double s2 = var_ * dt;
        if (mode_ == Mode::Tube) {
            double q;
            if (a.size() == 1) {
                const double ya = a[0];
                const double yb = b[0];
                q = std::exp(-2.0 * (radius_ - ya) * (radius_ - yb) / s2) +
                    std::exp(-2.0 * (radius_ + ya) * (radius_ + yb) / s2);
            } else {
                q = std::exp(-2.0 * (radius_ - a.norm()) * (radius_ - b.norm()) / s2);
            }
            return std::max(0.0, 1.0 - q);
        }
        const double da = a.norm() - radius_;
        const double db = b.norm() - radius_;
        return 1.0 - std::exp(-2.0 * da * db / s2);
    }

    DriverSampler sampler_;
    Eigen::Index n_;
    double h_;
    std::uint64_t seed_;
    Eigen::MatrixXd offset_;
    Mode mode_;
    double radius_;
    bool expo_ = false;
    bool constant_ = false;
    Eigen::MatrixXd E_, sigma_, C_;
    std::vector<Eigen::MatrixXd> lags_;
    std::optional<Eigen::MatrixXd> phi0_;
    double var_ = 0.0;
};

long run_trials(const Engine& eng, const McConfig& mc)
{
    if (mc.trials < 1)
        throw std::invalid_argument("the number of trials N must be at least 1");
    const long n = mc.trials;
    std::vector<unsigned char> hit(static_cast<size_t>(n), 0);
    int threads = mc.threads > 0 ? mc.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<long>(threads, n));
    std::atomic<long> next{0};
    std::atomic<long> done{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto work = [&] {
        for (;;) {
            const long begin = next.fetch_add(64);
            if (begin >= n)
                return;
            const long end = std::min(n, begin + 64);
            try {
                for (long i = begin; i < end; ++i) {
                    hit[static_cast<size_t>(i)] = eng.trial(i) ? 1 : 0;
                    done.fetch_add(1);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure)
                    failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (failure) {
        std::string what = "unknown error";
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        throw std::runtime_error("simulation failed after " + std::to_string(done.load()) + " of " +
                                 std::to_string(n) + " trials: " + what);
    }
    long hits = 0;
    for (unsigned char c : hit)
        hits += c;
    return hits;
}

TubeEstimate finish(std::string experiment, long hits, const McConfig& mc, double eps, double t0, double T,
                    std::chrono::steady_clock::time_point start)
{
    TubeEstimate e;
    e.experiment = std::move(experiment);
    e.epsilon = eps;
    e.t0 = t0;
    e.T = T;
    e.trials = mc.trials;
    e.hits = hits;
    e.p_hat = static_cast<double>(hits) / static_cast<double>(mc.trials);
    const Interval ci = wilson95(hits, mc.trials);
    e.ci_lo = ci.lo;
    e.ci_hi = ci.hi;
    e.seed = mc.seed;
    e.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return e;
}

Eigen::MatrixXd checked_target(const TubeSpec& spec, int d, Eigen::Index n)
{
    if (!(spec.epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    if (spec.target.size() == 0)
        return Eigen::MatrixXd::Zero(d, n + 1);
    if (spec.target.rows() != d || spec.target.cols() != n + 1)
        throw std::invalid_argument("target grid does not match [t0, T] with step h");
    if (spec.target.col(0).norm() > 1e-12)
        throw std::invalid_argument("target must vanish at t0");
    return spec.target;
}

Eigen::Index tube_steps(const TubeSpec& spec, const SimConfig& sim)
{
    if (!(spec.t0 >= 0.0) || !(spec.T > spec.t0))
        throw std::invalid_argument("tube requires 0 <= t0 < T");
    return grid_steps(spec.T - spec.t0, sim.h, "T - t0");
}

struct FrozenPast {
    Eigen::VectorXd x_t0;
    Eigen::MatrixXd a_part;   // d x (n + 1)
};

FrozenPast freeze_past(const Kernel& k, const LevyModel& L, std::uint64_t past_seed, double t0, Eigen::Index n,
                       const SimConfig& sim)
{
    SimConfig cfg = sim;
    cfg.horizon = t0;
    cfg.seed = past_seed;
    const DriverPath past = sample_driver(L, cfg);
    Eigen::MatrixXd diffusive = Eigen::MatrixXd::Zero(past.dim(), past.cells() + n);
    diffusive.leftCols(past.cells()) = past.diffusive;
    const DriverPath padded = make_driver(past.h, past.n_past, std::move(diffusive), past.jumps);
    Decomposition dec = decompose(k, padded, t0);
    return {dec.x_t0, dec.a_part.values};
}

}  // namespace

Interval wilson95(long hits, long trials)
{
    if (trials < 1 || hits < 0 || hits > trials)
        throw std::invalid_argument("wilson95: need 0 <= hits <= trials and trials >= 1");
    const double n = static_cast<double>(trials);
    if (hits == 0)
        return {0.0, std::min(1.0, 3.0 / n)};
    const double p = static_cast<double>(hits) / n;
    const double z2 = kZ95 * kZ95;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = kZ95 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    return {std::clamp(centre - half, 0.0, p), std::clamp(centre + half, p, 1.0)};
}

Eigen::MatrixXd reachable_target(const Kernel& k, double h, const Eigen::MatrixXd& control)
{
    if (!(h > 0.0))
        throw std::invalid_argument("reachable_target: h must be positive");
    if (control.rows() != k.dim())
        throw std::invalid_argument("reachable_target: control dimension does not match the kernel");
    const Eigen::Index n = control.cols();
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(k.dim(), n);
    if (n == 0)
        return f;
    const std::vector<Eigen::MatrixXd> lags = k.phi_lags(h, n);
    for (Eigen::Index m = 1; m < n; ++m)
        for (Eigen::Index j = 0; j < m; ++j)
            f.col(m) += lags[static_cast<size_t>(m - j)] * control.col(j) * h;
    return f;
}

TubeEstimate tube_probability(const Kernel& k, const LevyModel& L, const TubeSpec& spec, const SimConfig& sim,
                              const McConfig& mc)
{
    const auto start = std::chrono::steady_clock::now();
    const Eigen::Index n = tube_steps(spec, sim);
    const Eigen::MatrixXd f = checked_target(spec, k.dim(), n);
    const Engine eng(k, L, sim, mc, n, -f, Mode::Tube, spec.epsilon);
    return finish("tube", run_trials(eng, mc), mc, spec.epsilon, spec.t0, spec.T, start);
}

TubeEstimate conditional_tube(const Kernel& k, const LevyModel& L, std::uint64_t past_seed, const TubeSpec& spec,
                              const SimConfig& sim, const McConfig& mc)
{
    const auto start = std::chrono::steady_clock::now();
    const Eigen::Index n = tube_steps(spec, sim);
    const Eigen::MatrixXd f = checked_target(spec, k.dim(), n);
    const FrozenPast past = freeze_past(k, L, past_seed, spec.t0, n, sim);
    const Engine eng(k, L, sim, mc, n, past.a_part - f, Mode::Tube, spec.epsilon);
    return finish("conditional-tube", run_trials(eng, mc), mc, spec.epsilon, spec.t0, spec.T, start);
}

TubeEstimate hitting_probability(const Kernel& k, const LevyModel& L, std::uint64_t past_seed, const HitSpec& spec,
                                 const SimConfig& sim, const McConfig& mc)
{
    const auto start = std::chrono::steady_clock::now();
    if (!(spec.radius > 0.0))
        throw std::invalid_argument("hitting: radius must be positive");
    if (!(spec.tau >= 0.0))
        throw std::invalid_argument("hitting: tau must be nonnegative");
    if (spec.tau + spec.window > sim.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("hitting: tau + window exceeds the horizon");
    if (spec.center.size() != k.dim())
        throw std::invalid_argument("hitting: center dimension does not match the kernel");
    const Eigen::Index n = grid_steps(spec.window, sim.h, "window");
    const FrozenPast past = freeze_past(k, L, past_seed, spec.tau, n, sim);
    Eigen::MatrixXd offset = past.a_part;
    offset.colwise() += past.x_t0 - spec.center;
    const Engine eng(k, L, sim, mc, n, std::move(offset), Mode::Hit, spec.radius);
    return finish("hitting", run_trials(eng, mc), mc, spec.radius, spec.tau, spec.tau + spec.window, start);
}

void write_results_header(std::ostream& os)
{
    os << "experiment,epsilon,t0,T,N,hits,p_hat,ci_lo,ci_hi,seed,runtime_s\n";
}

void write_results_row(std::ostream& os, const TubeEstimate& e, bool timing)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%ld,%ld,%.17g,%.17g,%.17g,%llu,", e.experiment.c_str(),
                  e.epsilon, e.t0, e.T, e.trials, e.hits, e.p_hat, e.ci_lo, e.ci_hi,
                  static_cast<unsigned long long>(e.seed));
    os << buf;
    if (timing) {
        std::snprintf(buf, sizeof buf, "%.3f", e.runtime_s);
        os << buf;
    } else {
        os << "NA";
    }
    os << "\n";
}

}  // namespace csbp
