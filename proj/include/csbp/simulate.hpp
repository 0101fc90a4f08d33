#pragma once

#include "csbp/kernels.hpp"
#include "csbp/levymeasure.hpp"
#include "csbp/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace csbp {

struct JumpEvent {
    double time;
    Eigen::VectorXd jump;
};

// Pre-computed pieces of the compound-Poisson approximation of a Levy process:
// cell increments drift * h + N(0, S h) + sum of jumps with ||x|| >= delta.
class DriverSampler {
public:
    DriverSampler(const LevyModel& L, double h, double delta, bool gaussian_small_jumps = false);

    int dim() const { return dim_; }
    double step() const { return h_; }
    double delta() const { return delta_; }
    double jump_rate() const { return proposal_.rate; }
    const Eigen::VectorXd& cell_drift() const { return drift_h_; }
    // Covariance of the diffusive part of one cell.
    const Eigen::MatrixXd& cell_covariance() const { return cov_h_; }

    // Diffusive parts of n consecutive cells (columns) and the jumps on [0, n h), with times
    // relative to the start. Gaussian and jump draws use separate substreams of rng.
    void sample(Eigen::Index n, const Rng& rng, Eigen::MatrixXd& diffusive, std::vector<JumpEvent>& jumps) const;

private:
    int dim_;
    double h_;
    double delta_;
    JumpProposal proposal_;
    Eigen::VectorXd drift_h_;
    Eigen::MatrixXd cov_h_;
    Eigen::MatrixXd chol_h_;
};

struct SimConfig {
    double h = 1e-3;
    double history = 10.0;     // M: the driver starts at -M
    double horizon = 1.0;      // T
    double delta = 1e-3;       // small-jump cutoff
    bool gaussian_small_jumps = false;
    std::uint64_t seed = 1;
};

// Driver on the grid -M = t_0 < ... < t_N = T; cell k is [t_k, t_k + h].
struct DriverPath {
    double h = 0.0;
    Eigen::Index n_past = 0;
    Eigen::Index n_future = 0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd diffusive;         // d x cells
    Eigen::MatrixXd increments;        // d x cells, diffusive plus binned jumps
    std::vector<JumpEvent> jumps;      // absolute times, sorted

    int dim() const { return static_cast<int>(increments.rows()); }
    Eigen::Index cells() const { return n_past + n_future; }
    double time(Eigen::Index k) const { return h * static_cast<double>(k - n_past); }
    double start() const { return time(0); }
    double end() const { return time(cells()); }
    // Grid index of t; throws when t is not on the grid.
    Eigen::Index index_of(double t) const;
};

// Two-sided driver: cells at negative times come from an independent copy run backwards.
DriverPath sample_driver(const LevyModel& L, const SimConfig& cfg);
DriverPath sample_driver(const DriverSampler& s, Eigen::Index n_past, Eigen::Index n_future, const Rng& past,
                         const Rng& future);
// Assembles a driver from given parts (jumps in absolute time).
DriverPath make_driver(double h, Eigen::Index n_past, Eigen::MatrixXd diffusive, std::vector<JumpEvent> jumps);
// Sums groups of `factor` cells; the jump log is kept.
DriverPath coarsen(const DriverPath& drv, int factor);

struct ProcessPath {
    double t0 = 0.0;
    double h = 0.0;
    Eigen::MatrixXd values;     // d x points, values(:, i) at t0 + i h
    std::string kernel_id;
    std::string driver_id;
    double history = 0.0;
    double tail_bound = 0.0;    // int_{-inf}^{-M} ||K(T,u)||^2 du when available, else NaN

    Eigen::Index size() const { return values.cols(); }
    double time(Eigen::Index i) const { return t0 + h * static_cast<double>(i); }
};

// X_t = sum over cells of K(t, t_k) Delta L_k with left-limit kernel values.
ProcessPath ma_path(const Kernel& k, const DriverPath& drv, double t0);

struct Decomposition {
    ProcessPath a_part;
    ProcessPath xbar_part;
    Eigen::VectorXd x_t0;
};
Decomposition decompose(const Kernel& k, const DriverPath& drv, double t0);

// OU recursion X_{t+h} = e^{Ah} (X_t + Sigma dW_t) with jumps propagated exactly from their
// logged times. The recursion starts at -M from x_start (zero by default) and the path is
// reported on [t0, T].
ProcessPath ou_exact(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, const DriverPath& drv, double t0,
                     const Eigen::VectorXd& x_start = Eigen::VectorXd());

// History length so that the stationary OU warm-up has forgotten its start.
double ou_warmup(const Eigen::MatrixXd& A, double history);

void write_csv(std::ostream& os, const ProcessPath& p);
void write_ensemble_csv(std::ostream& os, const std::vector<ProcessPath>& paths);

}  // namespace csbp
