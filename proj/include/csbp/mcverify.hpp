#pragma once

#include "csbp/kernels.hpp"
#include "csbp/levymeasure.hpp"
#include "csbp/simulate.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace csbp {

// Tube around a target f sampled on the grid t0 + i h, i = 0..n, with f(t0) = 0.
struct TubeSpec {
    double t0 = 0.0;
    double T = 1.0;
    double epsilon = 1.0;
    Eigen::MatrixXd target;   // d x (n + 1); empty means f = 0
};

struct TubeEstimate {
    std::string experiment;
    double epsilon = 0.0;
    double t0 = 0.0;
    double T = 0.0;
    long trials = 0;
    long hits = 0;
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::uint64_t seed = 0;
    double runtime_s = 0.0;
    std::string config_hash;
};

struct Interval {
    double lo;
    double hi;
};

// Wilson 95% score interval; zero hits give the rule-of-three upper limit 3/N.
Interval wilson95(long hits, long trials);

// f(t_m) = sum_{j < m} Phi((m - j) h -) c(s_j) h for a control c sampled on the same grid.
Eigen::MatrixXd reachable_target(const Kernel& k, double h, const Eigen::MatrixXd& control);

struct McConfig {
    long trials = 10000;
    std::uint64_t seed = 1;
    int threads = 1;
    // Correct the grid supremum by the Brownian-bridge crossing probability of the local
    // diffusive part and by intra-cell jump positions.
    bool bridge = true;
};

// Unconditional tube probability for the fresh-future part Xbar^{t0}.
TubeEstimate tube_probability(const Kernel& k, const LevyModel& L, const TubeSpec& spec, const SimConfig& sim,
                              const McConfig& mc);

// Frozen past from past_seed (increments on [-M, t0]); MC over fresh futures of
// sup ||Xbar + A - f|| < epsilon.
TubeEstimate conditional_tube(const Kernel& k, const LevyModel& L, std::uint64_t past_seed, const TubeSpec& spec,
                              const SimConfig& sim, const McConfig& mc);

struct HitSpec {
    Eigen::VectorXd center;
    double radius = 1.0;
    double tau = 0.0;
    double window = 1.0;   // entry is sought in (tau, tau + window)
};

// Frequency of entering the open ball within the window, past frozen from past_seed.
TubeEstimate hitting_probability(const Kernel& k, const LevyModel& L, std::uint64_t past_seed, const HitSpec& spec,
                                 const SimConfig& sim, const McConfig& mc);

void write_results_header(std::ostream& os);
// runtime_s is written as NA unless timing is requested, which keeps outputs byte-stable.
void write_results_row(std::ostream& os, const TubeEstimate& e, bool timing = false);

}  // namespace csbp
