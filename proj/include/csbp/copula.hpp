#pragma once

#include "csbp/levymeasure.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace csbp {

// Evaluator on the extended reals; infinite coordinates are passed as +-infinity.
using CopulaEvaluator = std::function<double(const Eigen::VectorXd&)>;

// sum over corners c in {0,1}^d of (-1)^{d - |c|} F(corner).
double rect_increment(const CopulaEvaluator& F, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class CopulaKind { Archimedean, Custom };

struct Generator {
    std::string name;
    std::function<double(double)> phi;   // strictly increasing on [-1, 1], phi(0) = 0, phi(+-1) = +-inf
};

// phi(x) = x / (1 - |x|).
Generator ratio_generator();

class LevyCopula {
public:
    LevyCopula(int dim, CopulaEvaluator eval, CopulaKind kind, std::string name);

    int dim() const { return dim_; }
    CopulaKind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    const CopulaEvaluator& evaluator() const { return eval_; }
    double operator()(const Eigen::VectorXd& x) const;

private:
    int dim_;
    CopulaEvaluator eval_;
    CopulaKind kind_;
    std::string name_;
};

// C(x) = phi(prod_i phitilde^{-1}(x_i)), phitilde(x) = 2^{d-2} (phi(x) - phi(-x)).
LevyCopula archimedean_copula(int dim, const Generator& g);
// Margins placed on the axes: C(x) = sum_i x_i prod_{j != i} 1{x_j = inf}.
LevyCopula independence_copula(int dim);
// C(x) = min |x_i| * 1{all signs equal} * prod sgn(x_i).
LevyCopula complete_dependence_copula(int dim);

struct MarginValue {
    double value;       // extrapolated limit
    bool converged;
    double near;        // anchor u = -1e6
    double far;         // anchor u = -1e8
};

// The I-margin: eliminated coordinates range over {u, +inf} with sign, u -> -inf.
class Margin {
public:
    Margin(LevyCopula c, std::vector<int> indices);
    MarginValue operator()(const Eigen::VectorXd& x) const;
    const std::vector<int>& indices() const { return indices_; }

private:
    double at_anchor(const Eigen::VectorXd& x, double u) const;
    LevyCopula c_;
    std::vector<int> indices_;
};

Margin margin(const LevyCopula& c, std::vector<int> indices);

enum class IncreaseStatus { Holds, Fails };

struct IncreaseVerdict {
    IncreaseStatus status;
    Eigen::VectorXd a;      // witness rectangle on Fails
    Eigen::VectorXd b;
    double min_increment;
    int trials;
    std::string evidence;
};

IncreaseVerdict check_strict_increasing(const LevyCopula& c, int trials, const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi, std::uint64_t seed);

// Levy measure with Levy copula c and the given marginal Levy measures.
class CopulaMeasure {
public:
    CopulaMeasure(LevyCopula c, std::vector<Jump1D> marginals, int depth = 20);

    int dim() const { return c_.dim(); }
    const LevyCopula& copula() const { return c_; }
    const std::vector<Jump1D>& marginals() const { return marginals_; }
    bool finite_activity() const;

    // Lambda((lo, hi] \ {0}); boxes meeting coordinate hyperplanes are split internally,
    // with the parts of the copula beyond a finite marginal's range mapped to that axis.
    double rect_mass(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) const;
    JumpProposal proposal(double delta) const;

private:
    struct Piece {
        double a, b;   // interval (a, b] in tail-integral coordinates
    };
    std::vector<Piece> pieces(int i, double lo, double hi, bool& infinite) const;
    Eigen::VectorXd draw_slab(int j, int side, double extent, Rng& rng) const;

    LevyCopula c_;
    std::vector<Jump1D> marginals_;
    std::vector<double> mass_pos_;
    std::vector<double> mass_neg_;
    int depth_;
};

LevyModel copula_measure(const LevyCopula& c, std::vector<Jump1D> marginals);

}  // namespace csbp
