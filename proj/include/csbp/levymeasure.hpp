#pragma once

#include "csbp/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace csbp {

// ---- one-dimensional jump measures -------------------------------------------------

struct Atoms1D {
    std::vector<double> points;
    std::vector<double> rates;
};

// Density c_+ e^{-lambda_+ x} x^{-1-alpha} on x > 0 and c_- e^{-lambda_- |x|} |x|^{-1-alpha}
// on x < 0, alpha in [-1, 2). alpha = -1 gives exponential densities, lambda = 0 stable ones.
struct TemperedStable1D {
    double c_pos = 0.0;
    double c_neg = 0.0;
    double alpha = 0.5;
    double lambda_pos = 0.0;
    double lambda_neg = 0.0;
};

using Jump1D = std::variant<Atoms1D, TemperedStable1D>;

Jump1D atoms_1d(std::vector<double> points, std::vector<double> rates);
Jump1D tempered_stable_1d(double c_pos, double c_neg, double alpha, double lambda_pos, double lambda_neg);
Jump1D exponential_1d(double c_pos, double lambda_pos, double c_neg, double lambda_neg);

// Throws std::invalid_argument unless the measure integrates min(1, x^2).
void validate(const Jump1D& j);

// lambda of {x : lo < |x| <= hi} on one side (side = +1 or -1); endpoint closedness only
// matters for atoms. Returns +inf for infinite mass.
double side_mass(const Jump1D& j, int side, double lo, double hi, bool lo_closed = false, bool hi_closed = true);
// lambda((lo, hi] \ {0}).
double interval_mass(const Jump1D& j, double lo, double hi);
double total_mass(const Jump1D& j);
bool finite_activity(const Jump1D& j);
// int_{lo < |x| <= hi, sign(x) = side} |x|^p lambda(dx) (closedness adjustable as above).
double side_moment(const Jump1D& j, int side, double p, double lo, double hi, bool lo_closed = false,
                   bool hi_closed = true);
// J(x) = lambda((x, inf)) for x > 0 and -lambda((-inf, x]) for x < 0.
double tail_integral(const Jump1D& j, double x);
// Generalized inverse of the tail integral; values outside the range of J map to 0.
double inverse_tail(const Jump1D& j, double xt);
// |x| drawn from lambda restricted to the given side and |x| >= delta, normalized.
double sample_radius(const Jump1D& j, int side, double delta, Rng& rng);
double sample_1d(const Jump1D& j, double delta, Rng& rng);

// One-dimensional characteristic triplet without Gaussian part; the drift follows the
// truncation convention b = E[L_1] - int_{|x| > 1} x lambda(dx).
struct Triplet1D {
    double drift = 0.0;
    Jump1D jumps;
};

// ---- multivariate jump measures ----------------------------------------------------

class LevyModel;
class CopulaMeasure;

struct AtomJumps {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> rates;
};
struct IndependentJumps {
    std::vector<Jump1D> marginals;
};
// Lambda(A) = int int 1_A(r u) rho_u(dr) zeta(du). Either zeta is atomic (directions with
// weights, one radial measure each) or zeta is uniform on the sphere with total mass
// uniform_mass and a common radial measure. Radial measures use their positive side.
struct PolarJumps {
    std::vector<Eigen::VectorXd> directions;
    std::vector<double> weights;
    std::vector<Jump1D> radial;
    bool uniform = false;
    double uniform_mass = 0.0;
    Jump1D uniform_radial;
};
// Multivariate subordination with an atomic subordinator Levy measure rho.
struct SubordinatedJumps {
    std::vector<Triplet1D> marginals;
    Eigen::VectorXd c;
    std::vector<Eigen::VectorXd> rho_points;
    std::vector<double> rho_weights;
};
struct UpsilonJumps {
    std::shared_ptr<const LevyModel> base;
    std::vector<double> weights;
    std::vector<Eigen::MatrixXd> matrices;
};
struct CopulaJumps {
    std::shared_ptr<const CopulaMeasure> measure;
};

using JumpPart = std::variant<AtomJumps, IndependentJumps, PolarJumps, SubordinatedJumps, UpsilonJumps, CopulaJumps>;

// How the drift vector enters the Levy-Ito decomposition.
//   Truncated: L_1 = b + G + sum of jumps with compensated small jumps (|x| <= 1).
//   Raw:       L_1 = b + G + plain sum of jumps (finite-variation models only).
enum class DriftConvention { Truncated, Raw };

// (lo, hi] componentwise.
struct Rectangle {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};
// r_lo <= ||x|| < r_hi; r_hi may be infinite.
struct Annulus {
    double r_lo;
    double r_hi;
};
using Region = std::variant<Rectangle, Annulus>;

struct MassEstimate {
    double value;
    double error;   // 0 for exact values; otherwise a 95% bound
};

// A finite measure nu dominating Lambda on {||x|| >= delta} and agreeing with it there:
// points drawn from nu and kept when ||x|| >= delta have exactly the restricted law.
struct JumpProposal {
    double rate = 0.0;
    std::function<Eigen::VectorXd(Rng&)> draw;
};

class LevyModel {
public:
    LevyModel(int dim, Eigen::VectorXd drift, Eigen::MatrixXd gaussian, JumpPart jumps,
              DriftConvention convention = DriftConvention::Truncated);

    int dim() const { return dim_; }
    const Eigen::VectorXd& drift() const { return drift_; }
    const Eigen::MatrixXd& gaussian() const { return gaussian_; }
    const JumpPart& jumps() const { return jumps_; }
    DriftConvention convention() const { return convention_; }
    std::string kind() const;
    // Set when the jump measure is identically zero (for example all Upsilon matrices vanish).
    bool zero_measure() const { return zero_measure_; }

    MassEstimate mass(const Region& region) const;
    JumpProposal proposal(double delta) const;
    Eigen::VectorXd sample_jump(double delta, Rng& rng) const;

    bool finite_activity() const;
    // int_{r_lo < ||x|| <= r_hi} x Lambda(dx).
    Eigen::VectorXd first_moment(double r_lo, double r_hi) const;
    // int_{||x|| > 1} ||x||^2 Lambda(dx); +inf when infinite.
    double second_moment_outside_unit() const;
    // int min(1, ||x||^2) Lambda(dx); an upper bound for the subordinated, Upsilon and
    // copula families, where it only serves the finiteness check.
    double levy_integral() const;
    // E[L_1]; NaN when the first moment is infinite.
    Eigen::VectorXd mean() const;
    bool is_centered() const;
    // Drift of the process whose jumps below delta are removed and replaced by their
    // compensator: increments are drift * h + Gaussian + sum of jumps with ||x|| >= delta.
    Eigen::VectorXd truncated_drift(double delta) const;
    // int_{||x|| < delta} x x^T Lambda(dx), for the optional Gaussian small-jump substitute.
    Eigen::MatrixXd small_jump_covariance(double delta) const;

private:
    Eigen::VectorXd moment_vec(double lo, double hi, bool lo_closed, bool hi_closed) const;
    bool tail_moment_finite(double p) const;

    int dim_;
    Eigen::VectorXd drift_;
    Eigen::MatrixXd gaussian_;
    JumpPart jumps_;
    DriftConvention convention_;
    bool zero_measure_ = false;
};

LevyModel atoms_model(std::vector<Eigen::VectorXd> points, std::vector<double> rates,
                      DriftConvention convention = DriftConvention::Raw);
LevyModel brownian_model(const Eigen::MatrixXd& gaussian, const Eigen::VectorXd& drift);
LevyModel independent_components(std::vector<Jump1D> marginals);
LevyModel polar_measure(std::vector<Eigen::VectorXd> directions, std::vector<double> weights,
                        std::vector<Jump1D> radial);
LevyModel polar_uniform(int dim, double zeta_mass, Jump1D radial);
LevyModel subordinate(std::vector<Triplet1D> marginals, Eigen::VectorXd c, std::vector<Eigen::VectorXd> rho_points,
                      std::vector<double> rho_weights);
LevyModel upsilon(std::shared_ptr<const LevyModel> base, std::vector<double> weights,
                  std::vector<Eigen::MatrixXd> matrices);
LevyModel with_triplet(const LevyModel& m, Eigen::VectorXd drift, Eigen::MatrixXd gaussian,
                       DriftConvention convention);

// Sample of L~_s = (L~^1_{s_1}, ..., L~^d_{s_d}) from the product law used by subordination.
Eigen::VectorXd subordinated_marginal_draw(const std::vector<Triplet1D>& marginals, const Eigen::VectorXd& s,
                                           Rng& rng);

// ---- the (JUMPS) checker -----------------------------------------------------------

enum class JumpsStatus { Holds, Fails, Inconclusive };
std::string to_string(JumpsStatus s);

struct JumpsEpsilonVerdict {
    double epsilon;
    JumpsStatus status;
    Eigen::VectorXd witness;        // separating direction for Fails
    double min_margin;              // min over the net of max <x,u> (Holds evidence)
    std::vector<double> margins;    // per-direction margins
    int support_points;
    std::string note;
};

struct JumpsVerdict {
    std::vector<JumpsEpsilonVerdict> per_epsilon;
    JumpsStatus overall() const;
};

struct JumpsConfig {
    std::vector<double> epsilons{0.1, 1.0};
    int net_size = 0;              // 0: 64 directions for d = 2, 512 for d = 3, 256 otherwise
    int samples = 2000;
    std::uint64_t seed = 1;
    double delta_factor = 0.01;    // delta_min = delta_factor * epsilon
};

std::vector<Eigen::VectorXd> direction_net(int dim, int size, std::uint64_t seed = 7);
JumpsVerdict check_jumps(const LevyModel& L, const JumpsConfig& cfg = {});

}  // namespace csbp
