#pragma once

#include <Eigen/Core>

namespace optocool {

/// Solves A S + S A^T + C = 0 for the symmetric steady-state covariance S of
/// dx = A x dt + dW, <dW dW^T> = C dt.
///
/// A must be Hurwitz. Throws StabilityBoundaryError when tr(A) = 0 or det(A) = 0
/// (the linear system is singular there) and InstabilityError when A has an
/// eigenvalue with positive real part.
Eigen::Matrix2d solve_lyapunov(const Eigen::Matrix2d& A, const Eigen::Matrix2d& C);

}  // namespace optocool
