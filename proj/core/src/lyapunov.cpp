#include "optocool/lyapunov.hpp"

#include <Eigen/LU>
#include <sstream>

#include "optocool/errors.hpp"

namespace optocool {

Eigen::Matrix2d solve_lyapunov(const Eigen::Matrix2d& A, const Eigen::Matrix2d& C) {
  const double tr = A.trace();
  const double det = A.determinant();
  if (tr == 0.0 || det == 0.0) {
    std::ostringstream msg;
    msg << "singular Lyapunov system on the stability boundary (tr A = " << tr
        << ", det A = " << det << ")";
    throw StabilityBoundaryError(msg.str());
  }
  if (tr > 0.0 || det < 0.0) {
    std::ostringstream msg;
    msg << "drift is not stable (tr A = " << tr << ", det A = " << det << ")";
    throw InstabilityError(msg.str());
  }

  // Unknowns (S00, S01, S11). Determinant of this system is -4 tr(A) det(A).
  Eigen::Matrix3d K;
  K << 2.0 * A(0, 0), 2.0 * A(0, 1), 0.0,
       A(1, 0), tr, A(0, 1),
       0.0, 2.0 * A(1, 0), 2.0 * A(1, 1);
  const Eigen::Vector3d rhs(-C(0, 0), -0.5 * (C(0, 1) + C(1, 0)), -C(1, 1));
  const Eigen::Vector3d s = K.fullPivLu().solve(rhs);

  Eigen::Matrix2d S;
  S << s(0), s(1), s(1), s(2);
  return S;
}

}  // namespace optocool
