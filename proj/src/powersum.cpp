#include "csbp/powersum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace csbp {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Error-free sum: returns s = fl(a + b) and stores the rounding error in err.
double two_sum(double a, double b, double& err)
{
    const double s = a + b;
    const double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
    return s;
}

bool same_exponent(double a, double b)
{
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

}  // namespace

double beta_fn(double a, double b)
{
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("beta_fn: arguments must be positive and finite");
    double e1 = 0.0, e2 = 0.0;
    const double s1 = two_sum(std::lgamma(a), std::lgamma(b), e1);
    const double s2 = two_sum(s1, -std::lgamma(a + b), e2);
    return std::exp(s2 + (e1 + e2));
}

PowerSum::PowerSum(std::vector<Term> terms)
{
    std::vector<Slot> slots;
    slots.reserve(terms.size());
    for (const auto& t : terms) {
        if (!std::isfinite(t.coeff) || !std::isfinite(t.exponent))
            throw std::invalid_argument("PowerSum: non-finite term");
        if (!(t.exponent > -1.0))
            throw std::invalid_argument("PowerSum: exponents must exceed -1");
        slots.push_back({t.coeff, t.exponent, 0.0, std::abs(t.coeff)});
    }
    *this = from_slots(std::move(slots));
}

PowerSum PowerSum::monomial(double coeff, double exponent)
{
    return PowerSum({{coeff, exponent}});
}

PowerSum PowerSum::from_slots(std::vector<Slot> slots)
{
    std::stable_sort(slots.begin(), slots.end(),
                     [](const Slot& x, const Slot& y) { return x.exponent < y.exponent; });
    std::vector<Slot> merged;
    for (const auto& s : slots) {
        if (!merged.empty() && same_exponent(merged.back().exponent, s.exponent)) {
            auto& m = merged.back();
            double err = 0.0;
            m.coeff = two_sum(m.coeff, s.coeff, err);
            m.comp += err + s.comp;
            m.mag += s.mag;
        } else {
            merged.push_back(s);
        }
    }
    PowerSum out;
    for (const auto& m : merged) {
        const double c = m.coeff + m.comp;
        if (c == 0.0 || std::abs(c) <= 64.0 * kEps * m.mag)
            continue;
        out.terms_.push_back({c, m.exponent});
        out.mags_.push_back(m.mag);
    }
    return out;
}

double PowerSum::operator()(double t) const
{
    if (t < 0.0)
        throw std::invalid_argument("PowerSum: evaluation at negative time");
    double s = 0.0;
    for (const auto& term : terms_)
        s += term.coeff * std::pow(t, term.exponent);
    return s;
}

const PowerSum::Term& PowerSum::leading() const
{
    if (terms_.empty())
        throw std::logic_error("PowerSum: empty sum has no leading term");
    return terms_.front();
}

PowerSum operator+(const PowerSum& a, const PowerSum& b)
{
    std::vector<PowerSum::Slot> slots;
    slots.reserve(a.terms_.size() + b.terms_.size());
    for (size_t i = 0; i < a.terms_.size(); ++i)
        slots.push_back({a.terms_[i].coeff, a.terms_[i].exponent, 0.0, a.mags_[i]});
    for (size_t i = 0; i < b.terms_.size(); ++i)
        slots.push_back({b.terms_[i].coeff, b.terms_[i].exponent, 0.0, b.mags_[i]});
    return PowerSum::from_slots(std::move(slots));
}

PowerSum operator*(double s, const PowerSum& a)
{
    PowerSum out = a;
    out *= s;
    return out;
}

PowerSum operator-(const PowerSum& a, const PowerSum& b)
{
    return a + (-1.0) * b;
}

PowerSum& PowerSum::operator+=(const PowerSum& other)
{
    *this = *this + other;
    return *this;
}

PowerSum& PowerSum::operator-=(const PowerSum& other)
{
    *this = *this - other;
    return *this;
}

PowerSum& PowerSum::operator*=(double s)
{
    if (!std::isfinite(s))
        throw std::invalid_argument("PowerSum: non-finite scale");
    if (s == 0.0) {
        terms_.clear();
        mags_.clear();
        return *this;
    }
    for (size_t i = 0; i < terms_.size(); ++i) {
        terms_[i].coeff *= s;
        mags_[i] *= std::abs(s);
    }
    return *this;
}

std::string PowerSum::to_string() const
{
    if (terms_.empty())
        return "0";
    std::ostringstream os;
    os.precision(17);
    for (size_t i = 0; i < terms_.size(); ++i) {
        if (i)
            os << " + ";
        os << terms_[i].coeff << "*t^" << terms_[i].exponent;
    }
    return os.str();
}

PowerSum power_conv(const PowerSum& a, const PowerSum& b)
{
    std::vector<PowerSum::Slot> slots;
    slots.reserve(a.terms_.size() * b.terms_.size());
    for (size_t i = 0; i < a.terms_.size(); ++i) {
        for (size_t j = 0; j < b.terms_.size(); ++j) {
            const double ea = a.terms_[i].exponent;
            const double eb = b.terms_[j].exponent;
            const double bf = beta_fn(ea + 1.0, eb + 1.0);
            slots.push_back({a.terms_[i].coeff * b.terms_[j].coeff * bf, ea + eb + 1.0, 0.0,
                             a.mags_[i] * b.mags_[j] * bf});
        }
    }
    return PowerSum::from_slots(std::move(slots));
}

PowerMatrix::PowerMatrix(int dim) : dim_(dim), entries_(static_cast<size_t>(dim * dim))
{
    if (dim < 1)
        throw std::invalid_argument("PowerMatrix: dim must be positive");
}

PowerMatrix::PowerMatrix(int dim, std::vector<PowerSum> entries) : dim_(dim), entries_(std::move(entries))
{
    if (dim < 1 || entries_.size() != static_cast<size_t>(dim * dim))
        throw std::invalid_argument("PowerMatrix: entry count does not match dim^2");
}

namespace {

// Depth-first walk over permutations; the partial product of a row prefix is
// computed once and shared by all completions.
void permutation_walk(const PowerMatrix& m, int row, unsigned used, int sign, const PowerSum& prefix,
                      PowerSum& total)
{
    const int d = m.dim();
    if (row == d) {
        total += static_cast<double>(sign) * prefix;
        return;
    }
    for (int c = 0; c < d; ++c) {
        if (used & (1u << c))
            continue;
        const PowerSum& entry = m(row, c);
        if (entry.empty())
            continue;
        int s = sign;
        for (int k = c + 1; k < d; ++k)
            if (used & (1u << k))
                s = -s;
        PowerSum next = row == 0 ? entry : power_conv(prefix, entry);
        if (next.empty())
            continue;
        permutation_walk(m, row + 1, used | (1u << c), s, next, total);
    }
}

}  // namespace

PowerSum power_conv_determinant(const PowerMatrix& m)
{
    if (m.dim() < 1 || m.dim() > 8)
        throw std::invalid_argument("power_conv_determinant: dim must be in [1, 8]");
    PowerSum total;
    permutation_walk(m, 0, 0u, 1, PowerSum{}, total);
    return total;
}

}  // namespace csbp
