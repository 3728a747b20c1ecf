#pragma once

#include <Eigen/Dense>

namespace quasr {

// Degree cap for the shifted Legendre recurrences; growth of the derivative
// values (~k^2 and ~k^4 at the endpoints) stays well inside double range here.
inline constexpr int kMaxLegendreDegree = 50;

// phi_k(x) = sqrt(2k+1) P_k(2x-1) on [0,1], orthonormal in L2([0,1]).
// value[k], d1[k], d2[k] hold phi_k and its first two derivatives, k = 0..m.
struct LegendreEval {
  Eigen::VectorXd value;
  Eigen::VectorXd d1;
  Eigen::VectorXd d2;
};

// Evaluate phi_0..phi_m at x via the three-term recurrence for P_k, the
// derivative recurrence P'_{k+1} = P'_{k-1} + (2k+1) P_k, and its derivative
// for P''. Throws std::domain_error when x is outside [0,1] and
// std::invalid_argument when m is negative or exceeds kMaxLegendreDegree.
LegendreEval eval_legendre(double x, int m);

// Tensor factors phi_{kl}(x,y) = phi_k(x) phi_l(y) for k,l = 1..m2, with the
// partial derivatives the score statistics need. Entry (k-1, l-1) of each
// matrix corresponds to degrees (k, l).
struct TensorEval {
  Eigen::MatrixXd value;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
  Eigen::MatrixXd dxx;
  Eigen::MatrixXd dyy;
};

// fx and fy must hold degrees through m2 at the two coordinates.
TensorEval eval_tensor(const LegendreEval& fx, const LegendreEval& fy, int m2);

}  // namespace quasr
