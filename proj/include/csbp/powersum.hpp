#pragma once

#include <string>
#include <vector>

namespace csbp {

// Beta function through log-gamma; arguments must be positive.
double beta_fn(double a, double b);

// Finite sum of c_i * t^{a_i} on t >= 0 with every a_i > -1.
// Terms are kept sorted by exponent, merged when exponents agree and dropped
// when their coefficient cancels to rounding level.
class PowerSum {
public:
    struct Term {
        double coeff;
        double exponent;
    };

    PowerSum() = default;
    explicit PowerSum(std::vector<Term> terms);
    static PowerSum monomial(double coeff, double exponent);

    const std::vector<Term>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    double operator()(double t) const;

    // Smallest exponent with a nonzero coefficient; requires !empty().
    const Term& leading() const;

    PowerSum& operator+=(const PowerSum& other);
    PowerSum& operator-=(const PowerSum& other);
    PowerSum& operator*=(double s);

    std::string to_string() const;

private:
    // Magnitude of the contributions that produced each coefficient; used to
    // decide when a cancellation is exact up to rounding.
    struct Slot {
        double coeff;
        double exponent;
        double comp;
        double mag;
    };
    std::vector<Term> terms_;
    std::vector<double> mags_;

    static PowerSum from_slots(std::vector<Slot> slots);
    friend PowerSum power_conv(const PowerSum&, const PowerSum&);
    friend PowerSum operator+(const PowerSum&, const PowerSum&);
};

PowerSum operator+(const PowerSum& a, const PowerSum& b);
PowerSum operator-(const PowerSum& a, const PowerSum& b);
PowerSum operator*(double s, const PowerSum& a);

// Exact convolution: t^a * t^b = B(a+1, b+1) t^{a+b+1}.
PowerSum power_conv(const PowerSum& a, const PowerSum& b);

// Square matrix of PowerSum entries, row-major.
class PowerMatrix {
public:
    PowerMatrix() = default;
    explicit PowerMatrix(int dim);
    PowerMatrix(int dim, std::vector<PowerSum> entries);

    int dim() const { return dim_; }
    PowerSum& operator()(int i, int j) { return entries_[static_cast<size_t>(i * dim_ + j)]; }
    const PowerSum& operator()(int i, int j) const { return entries_[static_cast<size_t>(i * dim_ + j)]; }

private:
    int dim_ = 0;
    std::vector<PowerSum> entries_;
};

PowerSum power_conv_determinant(const PowerMatrix& m);

}  // namespace csbp
