#pragma once

#include "csbp/gridfn.hpp"
#include "csbp/powersum.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace csbp {

class LevyModel;

struct MvnPhi {
    double H;
    double c_h;
};
struct ExponentialPhi {
    Eigen::MatrixXd A;
    Eigen::MatrixXd Sigma;
    bool stable;
};
struct PowerPhi {
    PowerMatrix m;
};
enum class Triangle { Lower, Upper };
struct TriangularPhi {
    std::variant<PowerMatrix, MatrixGridFunctiond> base;
    Triangle shape;
};
// Linear interpolation between samples; held at the last sample beyond the horizon.
struct TabulatedPhi {
    MatrixGridFunctiond table;
};
using KernelFunction = std::variant<MvnPhi, ExponentialPhi, PowerPhi, TriangularPhi, TabulatedPhi>;

struct PsiZero {};
struct PsiMirror {};
using PsiSpec = std::variant<PsiZero, PsiMirror, TabulatedPhi>;

double mvn_constant(double H);

// Kernel function K(t,u) = Phi(t-u) - Psi(-u), both vanishing on (-inf, 0).
class Kernel {
public:
    Kernel(int dim, KernelFunction phi, PsiSpec psi);

    int dim() const { return dim_; }
    const KernelFunction& phi_spec() const { return phi_; }
    const PsiSpec& psi_spec() const { return psi_; }
    std::string family() const;

    Eigen::MatrixXd phi(double t) const;
    Eigen::MatrixXd psi(double t) const;
    // Left limits Phi(t-), Psi(t-); zero for t <= 0. These are the cell values
    // used by the left-point integration rule of the simulator.
    Eigen::MatrixXd phi_left(double t) const { return t <= 0.0 ? zero() : phi(t); }
    Eigen::MatrixXd psi_left(double t) const { return t <= 0.0 ? zero() : psi(t); }
    Eigen::MatrixXd k(double t, double u) const { return phi(t - u) - psi(-u); }

    // Phi(0+) when finite; nullopt for a singular kernel at the origin.
    std::optional<Eigen::MatrixXd> phi_at_zero() const;
    // True when Phi is constant on (0, inf).
    bool phi_constant() const;
    bool psi_is_mirror() const { return std::holds_alternative<PsiMirror>(psi_); }
    bool psi_is_zero() const { return std::holds_alternative<PsiZero>(psi_); }

    // Phi sampled at k*h, k = 0..n-1, with singular entries flagged.
    MatrixGridFunctiond sample_phi(double h, Eigen::Index n) const;
    // Left limits Phi((k h)-) for k = 0..n-1 (k = 0 gives zero).
    std::vector<Eigen::MatrixXd> phi_lags(double h, Eigen::Index n) const;
    std::vector<Eigen::MatrixXd> psi_lags(double h, Eigen::Index n) const;

private:
    Eigen::MatrixXd zero() const { return Eigen::MatrixXd::Zero(dim_, dim_); }
    int dim_;
    KernelFunction phi_;
    PsiSpec psi_;
};

Kernel mvn_kernel(double H);
Kernel exp_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma);
Kernel power_kernel(const PowerMatrix& m, PsiSpec psi = PsiZero{});
Kernel triangular_kernel(std::variant<PowerMatrix, MatrixGridFunctiond> base, Triangle shape, PsiSpec psi = PsiZero{});
Kernel tabulated_kernel(const MatrixGridFunctiond& table, PsiSpec psi = PsiZero{});

enum class DetStarStatus { Holds, FailsNumerically, Inconclusive };
std::string to_string(DetStarStatus s);

struct ProbeWindow {
    double tau;
    double sup_detstar;
    double noise;
};

struct DetStarVerdict {
    DetStarStatus status;
    std::string evidence;
    std::vector<ProbeWindow> probe_windows;
};

struct DetStarConfig {
    double h = 1e-3;        // grid step for sampled kernels
    double horizon = 1.0;   // grid horizon for sampled kernels
    int windows = 8;        // dyadic windows tau_k = 2^-k, k = 0..windows
    double laplace_s = 50.0;
};

DetStarVerdict check_detstar(const Kernel& k, const DetStarConfig& cfg = {});

enum class RvVerdict { True, InconclusiveEqualIndices };
struct RvIndices {
    double alpha_plus;
    double alpha_minus;
    RvVerdict verdict;
};
RvIndices rv_index_criterion(const Eigen::MatrixXd& alpha);

// Integral over a half-line or a finite interval with an integrable singularity,
// summed over dyadic shells with a geometric tail extrapolation.
struct ShellIntegral {
    double value = 0.0;
    double tail = 0.0;   // extrapolated remainder
    bool divergent = false;
};

enum class IntegrabilityStatus { Finite, Divergent, Unsupported };
std::string to_string(IntegrabilityStatus s);

struct IntegrabilityRow {
    double t;
    double l1;    // int ||K(t,u)|| du (NaN when not required)
    double l2;    // int ||K(t,u)||^2 du
    IntegrabilityStatus status;
    std::string offending;
};

struct IntegrabilityReport {
    IntegrabilityStatus status;
    std::string message;
    std::vector<IntegrabilityRow> rows;
};

IntegrabilityReport check_integrability(const Kernel& k, const LevyModel& L, const std::vector<double>& times);

struct ModulusRow {
    double h;
    double q1;
    double q2;
    double q2_tail;     // extrapolated tail beyond the integrated shells
    bool divergent;
};

std::vector<ModulusRow> regularity_moduli(const Kernel& k, const std::vector<double>& hs);

}  // namespace csbp
