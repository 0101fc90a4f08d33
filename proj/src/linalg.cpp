#include "csbp/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace csbp {

Eigen::MatrixXd expm(const Eigen::MatrixXd& a)
{
    if (a.rows() != a.cols())
        throw std::invalid_argument("expm: matrix must be square");
    if (!a.allFinite())
        throw std::invalid_argument("expm: non-finite entries");
    const Eigen::Index n = a.rows();
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5)
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd x = a / std::ldexp(1.0, squarings);

    // [6/6] Pade coefficients c_k = (12-k)! 6! / (12! k! (6-k)!).
    static constexpr double c[] = {1.0,
                                   1.0 / 2.0,
                                   5.0 / 44.0,
                                   1.0 / 66.0,
                                   1.0 / 792.0,
                                   1.0 / 15840.0,
                                   1.0 / 665280.0};
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd power = id;
    Eigen::MatrixXd num = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd den = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k <= 6; ++k) {
        num += c[k] * power;
        den += ((k % 2) ? -c[k] : c[k]) * power;
        power = power * x;
    }
    Eigen::MatrixXd r = den.partialPivLu().solve(num);
    for (int s = 0; s < squarings; ++s)
        r = r * r;
    return r;
}

Eigen::MatrixXd lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q)
{
    const Eigen::Index n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n)
        throw std::invalid_argument("lyapunov: shape mismatch");
    // vec(A^T P + P A) = (I kron A^T + A^T kron I) vec(P).
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd big(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            big.block(i * n, j * n, n, n) = id(i, j) * a.transpose() + a(j, i) * id;
    Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), n * n);
    Eigen::VectorXd p = big.fullPivLu().solve(rhs);
    Eigen::MatrixXd out = Eigen::Map<Eigen::MatrixXd>(p.data(), n, n);
    return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s)
{
    if (s.rows() != s.cols())
        throw std::invalid_argument("psd_sqrt: matrix must be square");
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("psd_sqrt: matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    Eigen::VectorXd ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -tol)
        throw std::invalid_argument("psd_sqrt: matrix is not positive semidefinite");
    ev = ev.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double spectral_abscissa(const Eigen::MatrixXd& a)
{
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

}  // namespace csbp
