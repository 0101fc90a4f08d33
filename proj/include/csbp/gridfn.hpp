#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csbp {

// Samples f(k*step), k = 0..n-1, of a function on [0, horizon].
// When singular_exponent is set to a in (-1, 0), values[0] is ignored and the
// first cell is integrated as if f(u) = f(step) * (u/step)^a there.
template <typename Scalar>
struct GridFunction {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Scalar step = Scalar(0);
    Vector values;
    std::optional<Scalar> singular_exponent;

    GridFunction() = default;
    GridFunction(Scalar h, Vector v, std::optional<Scalar> alpha = std::nullopt)
        : step(h), values(std::move(v)), singular_exponent(alpha)
    {
        using std::isfinite;
        if (!(step > Scalar(0)) || !isfinite(step))
            throw std::invalid_argument("GridFunction: step must be positive and finite");
        if (values.size() < 2)
            throw std::invalid_argument("GridFunction: need at least two samples");
        if (singular_exponent && !(*singular_exponent > Scalar(-1) && *singular_exponent < Scalar(0)))
            throw std::invalid_argument("GridFunction: singular exponent must lie in (-1, 0)");
        for (Eigen::Index i = singular_exponent ? 1 : 0; i < values.size(); ++i)
            if (!isfinite(values[i]))
                throw std::invalid_argument("GridFunction: non-finite sample at index " + std::to_string(i));
    }

    static GridFunction zeros(Scalar h, Eigen::Index n) { return GridFunction(h, Vector::Zero(n)); }

    Eigen::Index size() const { return values.size(); }
    Scalar horizon() const { return step * Scalar(values.size() - 1); }
    Scalar time(Eigen::Index i) const { return step * Scalar(i); }
    bool is_zero() const { return !singular_exponent && (values.array() == Scalar(0)).all(); }

    // Piecewise-linear interpolation on [0, horizon].
    Scalar operator()(Scalar t) const
    {
        if (t < Scalar(0) || t > horizon() * (Scalar(1) + Scalar(1e-12)))
            throw std::out_of_range("GridFunction: evaluation outside [0, horizon]");
        const Scalar x = t / step;
        Eigen::Index i = static_cast<Eigen::Index>(x);
        i = std::min<Eigen::Index>(i, values.size() - 2);
        const Scalar w = x - Scalar(i);
        if (i == 0 && singular_exponent) {
            using std::pow;
            return t == Scalar(0) ? std::numeric_limits<Scalar>::infinity() : values[1] * pow(x, *singular_exponent);
        }
        return (Scalar(1) - w) * values[i] + w * values[i + 1];
    }
};

using GridFunctiond = GridFunction<double>;

template <typename Scalar>
GridFunction<Scalar> sample(const std::function<Scalar(Scalar)>& f, Scalar h, Eigen::Index n,
                            std::optional<Scalar> singular_exponent = std::nullopt)
{
    typename GridFunction<Scalar>::Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = (i == 0 && singular_exponent) ? Scalar(0) : f(h * Scalar(i));
    return GridFunction<Scalar>(h, std::move(v), singular_exponent);
}

namespace detail {

template <typename Scalar>
void require_same_grid(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g, const char* what)
{
    using std::abs;
    if (f.size() != g.size() || abs(f.step - g.step) > Scalar(1e-12) * abs(f.step))
        throw std::invalid_argument(std::string(what) + ": grids differ");
}

}  // namespace detail

// Trapezoid weights of f as a convolution operand (no truncation at the
// horizon), including the product-integration rule for a singular first cell.
template <typename Scalar>
typename GridFunction<Scalar>::Vector quadrature_weights(const GridFunction<Scalar>& f)
{
    typename GridFunction<Scalar>::Vector w = f.step * f.values;
    if (!f.singular_exponent) {
        w[0] *= Scalar(0.5);
        return w;
    }
    const Scalar a = *f.singular_exponent;
    const Scalar f1 = f.values[1];
    w[0] = f.step * f1 / ((a + Scalar(1)) * (a + Scalar(2)));
    w[1] = f.step * f1 * (Scalar(0.5) + Scalar(1) / (a + Scalar(2)));
    return w;
}

template <typename Scalar>
GridFunction<Scalar> from_weights(Scalar h, typename GridFunction<Scalar>::Vector w)
{
    w /= h;
    w[0] *= Scalar(2);
    return GridFunction<Scalar>(h, std::move(w));
}

// Cauchy product of two weight sequences, out[n] = sum_k a[n-k] b[k].
template <typename Scalar>
typename GridFunction<Scalar>::Vector cauchy_product(const typename GridFunction<Scalar>::Vector& a,
                                                     const typename GridFunction<Scalar>::Vector& b)
{
    const Eigen::Index n = a.size();
    typename GridFunction<Scalar>::Vector ar = a.reverse();
    typename GridFunction<Scalar>::Vector out(n);
    for (Eigen::Index k = 0; k < n; ++k)
        out[k] = ar.segment(n - 1 - k, k + 1).dot(b.head(k + 1));
    return out;
}

// (f*g)(t) = int_0^t f(t-u) g(u) du on the shared grid. The discrete product
// is the trapezoid rule for t > 0; it is exactly commutative and associative,
// and its value at t = 0 is step*f(0)*g(0)/2 (zero whenever f(0) or g(0) is).
template <typename Scalar>
GridFunction<Scalar> conv_scalar(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g)
{
    detail::require_same_grid(f, g, "conv_scalar");
    if (f.is_zero() || g.is_zero())
        return GridFunction<Scalar>::zeros(f.step, f.size());
    return from_weights<Scalar>(f.step, cauchy_product<Scalar>(quadrature_weights(f), quadrature_weights(g)));
}

template <typename Scalar>
GridFunction<Scalar> operator+(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g)
{
    detail::require_same_grid(f, g, "GridFunction +");
    std::optional<Scalar> a = f.singular_exponent;
    if (g.singular_exponent)
        a = a ? std::min(*a, *g.singular_exponent) : g.singular_exponent;
    typename GridFunction<Scalar>::Vector v = f.values + g.values;
    if (a)
        v[0] = Scalar(0);
    return GridFunction<Scalar>(f.step, std::move(v), a);
}

template <typename Scalar>
GridFunction<Scalar> operator*(Scalar s, const GridFunction<Scalar>& f)
{
    typename GridFunction<Scalar>::Vector v = s * f.values;
    if (f.singular_exponent)
        v[0] = Scalar(0);
    return GridFunction<Scalar>(f.step, std::move(v), s == Scalar(0) ? std::nullopt : f.singular_exponent);
}

template <typename Scalar>
GridFunction<Scalar> operator-(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g)
{
    return f + Scalar(-1) * g;
}

// Absolute 1e-12 plus relative 1e-9 agreement, sample by sample.
template <typename Scalar>
bool approx_equal(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g, Scalar abs_tol = Scalar(1e-12),
                  Scalar rel_tol = Scalar(1e-9))
{
    if (f.size() != g.size())
        return false;
    using std::abs;
    const Eigen::Index start = (f.singular_exponent || g.singular_exponent) ? 1 : 0;
    for (Eigen::Index i = start; i < f.size(); ++i) {
        const Scalar a = f.values[i], b = g.values[i];
        if (abs(a - b) > abs_tol + rel_tol * std::max(abs(a), abs(b)))
            return false;
    }
    return true;
}

// Row-major matrix of grid functions on a shared grid.
template <typename Scalar>
class MatrixGridFunction {
public:
    MatrixGridFunction() = default;
    MatrixGridFunction(int rows, int cols, std::vector<GridFunction<Scalar>> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries))
    {
        if (rows < 1 || cols < 1 || entries_.size() != static_cast<size_t>(rows * cols))
            throw std::invalid_argument("MatrixGridFunction: entry count does not match shape");
        for (const auto& e : entries_)
            detail::require_same_grid(entries_.front(), e, "MatrixGridFunction");
    }
    static MatrixGridFunction zeros(int rows, int cols, Scalar h, Eigen::Index n)
    {
        return MatrixGridFunction(rows, cols,
                                  std::vector<GridFunction<Scalar>>(static_cast<size_t>(rows * cols),
                                                                    GridFunction<Scalar>::zeros(h, n)));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int dim() const
    {
        if (rows_ != cols_)
            throw std::logic_error("MatrixGridFunction: not square");
        return rows_;
    }
    Scalar step() const { return entries_.front().step; }
    Eigen::Index size() const { return entries_.front().size(); }
    Scalar horizon() const { return entries_.front().horizon(); }

    GridFunction<Scalar>& operator()(int i, int j) { return entries_[static_cast<size_t>(i * cols_ + j)]; }
    const GridFunction<Scalar>& operator()(int i, int j) const
    {
        return entries_[static_cast<size_t>(i * cols_ + j)];
    }

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> at(Eigen::Index k) const
    {
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows_, cols_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j)
                m(i, j) = (*this)(i, j).values[k];
        return m;
    }

    MatrixGridFunction transpose() const
    {
        std::vector<GridFunction<Scalar>> e;
        for (int j = 0; j < cols_; ++j)
            for (int i = 0; i < rows_; ++i)
                e.push_back((*this)(i, j));
        return MatrixGridFunction(cols_, rows_, std::move(e));
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<GridFunction<Scalar>> entries_;
};

using MatrixGridFunctiond = MatrixGridFunction<double>;

// Constant matrix times a matrix grid function.
template <typename Scalar, typename Derived>
MatrixGridFunction<Scalar> operator*(const Eigen::MatrixBase<Derived>& a, const MatrixGridFunction<Scalar>& f)
{
    if (a.cols() != f.rows())
        throw std::invalid_argument("matrix * MatrixGridFunction: shape mismatch");
    std::vector<GridFunction<Scalar>> e;
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < f.cols(); ++j) {
            GridFunction<Scalar> acc = Scalar(a(i, 0)) * f(0, j);
            for (int k = 1; k < f.rows(); ++k)
                acc = acc + Scalar(a(i, k)) * f(k, j);
            e.push_back(std::move(acc));
        }
    }
    return MatrixGridFunction<Scalar>(static_cast<int>(a.rows()), f.cols(), std::move(e));
}

template <typename Scalar, typename Derived>
MatrixGridFunction<Scalar> operator*(const MatrixGridFunction<Scalar>& f, const Eigen::MatrixBase<Derived>& a)
{
    return (a.transpose() * f.transpose()).transpose();
}

// (F*G)_ij = sum_k F_ik * G_kj.
template <typename Scalar>
MatrixGridFunction<Scalar> conv_matrix(const MatrixGridFunction<Scalar>& f, const MatrixGridFunction<Scalar>& g)
{
    if (f.cols() != g.rows())
        throw std::invalid_argument("conv_matrix: inner dimensions differ");
    detail::require_same_grid(f(0, 0), g(0, 0), "conv_matrix");
    const Scalar h = f.step();
    std::vector<typename GridFunction<Scalar>::Vector> wf, wg;
    for (int i = 0; i < f.rows(); ++i)
        for (int k = 0; k < f.cols(); ++k)
            wf.push_back(f(i, k).is_zero() ? typename GridFunction<Scalar>::Vector() : quadrature_weights(f(i, k)));
    for (int k = 0; k < g.rows(); ++k)
        for (int j = 0; j < g.cols(); ++j)
            wg.push_back(g(k, j).is_zero() ? typename GridFunction<Scalar>::Vector() : quadrature_weights(g(k, j)));
    std::vector<GridFunction<Scalar>> e;
    for (int i = 0; i < f.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) {
            typename GridFunction<Scalar>::Vector acc = GridFunction<Scalar>::Vector::Zero(f.size());
            for (int k = 0; k < f.cols(); ++k) {
                const auto& a = wf[static_cast<size_t>(i * f.cols() + k)];
                const auto& b = wg[static_cast<size_t>(k * g.cols() + j)];
                if (a.size() && b.size())
                    acc += cauchy_product<Scalar>(a, b);
            }
            e.push_back(from_weights<Scalar>(h, std::move(acc)));
        }
    }
    return MatrixGridFunction<Scalar>(f.rows(), g.cols(), std::move(e));
}

namespace detail {

template <typename Scalar>
using WeightVec = typename GridFunction<Scalar>::Vector;

// Permutation sum with shared row prefixes.
template <typename Scalar>
void detstar_walk(const std::vector<WeightVec<Scalar>>& w, int d, int row, unsigned used, int sign,
                  const WeightVec<Scalar>& prefix, WeightVec<Scalar>& total)
{
    if (row == d) {
        total += Scalar(sign) * prefix;
        return;
    }
    for (int c = 0; c < d; ++c) {
        if (used & (1u << c))
            continue;
        const auto& entry = w[static_cast<size_t>(row * d + c)];
        if (entry.size() == 0)
            continue;
        int s = sign;
        for (int k = c + 1; k < d; ++k)
            if (used & (1u << k))
                s = -s;
        if (row == 0)
            detstar_walk<Scalar>(w, d, 1, used | (1u << c), s, entry, total);
        else
            detstar_walk<Scalar>(w, d, row + 1, used | (1u << c), s, cauchy_product<Scalar>(prefix, entry), total);
    }
}

// Cofactor recursion along the last row, memoized over column subsets.
template <typename Scalar>
WeightVec<Scalar> detstar_cofactor(const std::vector<WeightVec<Scalar>>& w, int d, Eigen::Index n)
{
    const unsigned full = (1u << d) - 1u;
    std::vector<std::optional<WeightVec<Scalar>>> memo(full + 1u);
    std::function<const std::optional<WeightVec<Scalar>>&(unsigned)> minor =
        [&](unsigned mask) -> const std::optional<WeightVec<Scalar>>& {
        auto& slot = memo[mask];
        if (slot)
            return slot;
        const int k = std::popcount(mask);
        WeightVec<Scalar> acc = WeightVec<Scalar>::Zero(n);
        bool any = false;
        for (int c = 0; c < d; ++c) {
            if (!(mask & (1u << c)))
                continue;
            const auto& entry = w[static_cast<size_t>((k - 1) * d + c)];
            if (entry.size() == 0)
                continue;
            int s = 1;
            for (int m = c + 1; m < d; ++m)
                if (mask & (1u << m))
                    s = -s;
            const unsigned rest = mask & ~(1u << c);
            if (k == 1) {
                acc += Scalar(s) * entry;
                any = true;
                continue;
            }
            const auto& sub = minor(rest);
            if (sub->size() == 0)
                continue;
            acc += Scalar(s) * cauchy_product<Scalar>(*sub, entry);
            any = true;
        }
        slot = any ? std::move(acc) : WeightVec<Scalar>();
        return slot;
    };
    const auto& r = minor(full);
    return r->size() ? *r : WeightVec<Scalar>::Zero(n);
}

}  // namespace detail

// det*(Phi) = sum over permutations of sgn * Phi_{1 s(1)} * ... * Phi_{d s(d)}.
// Dimensions up to 5 use the shared-prefix permutation sum, larger ones the
// memoized cofactor recursion.
template <typename Scalar>
GridFunction<Scalar> conv_determinant(const MatrixGridFunction<Scalar>& phi, int max_permutation_dim = 5)
{
    const int d = phi.dim();
    if (d > 12)
        throw std::invalid_argument("conv_determinant: dimension too large");
    if (d == 1)
        return phi(0, 0);
    std::vector<detail::WeightVec<Scalar>> w;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            w.push_back(phi(i, j).is_zero() ? detail::WeightVec<Scalar>() : quadrature_weights(phi(i, j)));
    const Eigen::Index n = phi.size();
    if (d <= max_permutation_dim) {
        detail::WeightVec<Scalar> total = detail::WeightVec<Scalar>::Zero(n);
        detail::detstar_walk<Scalar>(w, d, 0, 0u, 1, detail::WeightVec<Scalar>(), total);
        return from_weights<Scalar>(phi.step(), std::move(total));
    }
    return from_weights<Scalar>(phi.step(), detail::detstar_cofactor<Scalar>(w, d, n));
}

template <typename Scalar>
MatrixGridFunction<Scalar> minor_of(const MatrixGridFunction<Scalar>& phi, int row, int col)
{
    const int d = phi.dim();
    std::vector<GridFunction<Scalar>> e;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != row && j != col)
                e.push_back(phi(i, j));
    return MatrixGridFunction<Scalar>(d - 1, d - 1, std::move(e));
}

// co*(Phi; i, j) = (-1)^{i+j} det*(Phi with row i and column j removed).
template <typename Scalar>
GridFunction<Scalar> conv_cofactor(const MatrixGridFunction<Scalar>& phi, int i, int j)
{
    if (phi.dim() < 2)
        throw std::invalid_argument("conv_cofactor: dimension must be at least 2");
    GridFunction<Scalar> m = conv_determinant(minor_of(phi, i, j));
    return ((i + j) % 2 == 0) ? m : Scalar(-1) * m;
}

// adj*(Phi)_{ri} = co*(Phi; i, r).
template <typename Scalar>
MatrixGridFunction<Scalar> conv_adjugate(const MatrixGridFunction<Scalar>& phi)
{
    const int d = phi.dim();
    if (d < 2)
        throw std::invalid_argument("conv_adjugate: dimension must be at least 2");
    std::vector<GridFunction<Scalar>> e;
    for (int r = 0; r < d; ++r)
        for (int i = 0; i < d; ++i)
            e.push_back(conv_cofactor(phi, i, r));
    return MatrixGridFunction<Scalar>(d, d, std::move(e));
}

template <typename Scalar>
struct LaplaceResult {
    Scalar value;
    bool truncation_warning;
};

// Trapezoid Laplace transform over [0, horizon]; flags a truncation when
// exp(-s*horizon) * max|f| exceeds 1e-8.
template <typename Scalar>
LaplaceResult<Scalar> laplace(const GridFunction<Scalar>& f, Scalar s)
{
    if (!(s > Scalar(0)))
        throw std::invalid_argument("laplace: s must be positive");
    using std::exp;
    const auto w = quadrature_weights(f);
    const Eigen::Index n = f.size();
    const Scalar decay = exp(-s * f.step);
    Scalar acc = Scalar(0), z = Scalar(1);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar wk = k == n - 1 ? w[k] - Scalar(0.5) * f.step * f.values[k] : w[k];
        acc += wk * z;
        z *= decay;
    }
    const Eigen::Index start = f.singular_exponent ? 1 : 0;
    const Scalar peak = f.values.tail(n - start).cwiseAbs().maxCoeff();
    return {acc, exp(-s * f.horizon()) * peak > Scalar(1e-8)};
}

// CSV with header `t,value` (scalar) or `t,e_1_1,...` (matrix), 17 significant digits.
void write_csv(std::ostream& os, const GridFunctiond& f);
void write_csv(std::ostream& os, const MatrixGridFunctiond& f);
GridFunctiond read_grid_csv(std::istream& is);
MatrixGridFunctiond read_matrix_grid_csv(std::istream& is);
MatrixGridFunctiond read_matrix_grid_csv_file(const std::string& path);

}  // namespace csbp
