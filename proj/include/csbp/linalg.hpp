#pragma once

#include <Eigen/Dense>

namespace csbp {

// exp(A) by [6/6] Pade approximation with scaling and squaring; the matrix is
// scaled until its 1-norm is at most 0.5.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// Solves A^T P + P A = -Q for P (A must be stable for a positive solution).
Eigen::MatrixXd lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

// Symmetric square root of a positive semidefinite matrix.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s);

// Largest real part among the eigenvalues.
double spectral_abscissa(const Eigen::MatrixXd& a);

}  // namespace csbp
