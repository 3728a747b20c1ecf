#include "quasr/legendre.hpp"

#include <cmath>
#include <stdexcept>

namespace quasr {

LegendreEval eval_legendre(double x, int m) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("eval_legendre: x outside [0,1]");
  if (m < 0 || m > kMaxLegendreDegree)
    throw std::invalid_argument("eval_legendre: degree out of range");

  LegendreEval out;
  out.value.resize(m + 1);
  out.d1.resize(m + 1);
  out.d2.resize(m + 1);

  const double t = 2.0 * x - 1.0;

  // P_k(t), P_k'(t), P_k''(t):
  //   k P_k = (2k-1) t P_{k-1} - (k-1) P_{k-2}
  //   P_k'  = P_{k-2}'  + (2k-1) P_{k-1}
  //   P_k'' = P_{k-2}'' + (2k-1) P_{k-1}'
  double p0 = 1.0, p1 = t;
  double q0 = 0.0, q1 = 1.0;
  double r0 = 0.0, r1 = 0.0;
  for (int k = 0; k <= m; ++k) {
    double p, q, r;
    if (k == 0) {
      p = p0; q = q0; r = r0;
    } else if (k == 1) {
      p = p1; q = q1; r = r1;
    } else {
      p = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      q = q0 + (2.0 * k - 1.0) * p1;
      r = r0 + (2.0 * k - 1.0) * q1;
      p0 = p1; p1 = p;
      q0 = q1; q1 = q;
      r0 = r1; r1 = r;
    }
    // phi_k(x) = sqrt(2k+1) P_k(2x-1); chain rule gives factors 2 and 4.
    const double s = std::sqrt(2.0 * k + 1.0);
    out.value(k) = s * p;
    out.d1(k) = 2.0 * s * q;
    out.d2(k) = 4.0 * s * r;
  }
  return out;
}

TensorEval eval_tensor(const LegendreEval& fx, const LegendreEval& fy,
                       int m2) {
  if (m2 < 1) throw std::invalid_argument("eval_tensor: m2 must be >= 1");
  if (fx.value.size() < m2 + 1 || fy.value.size() < m2 + 1)
    throw std::invalid_argument("eval_tensor: evaluations too short");

  const auto vx = fx.value.segment(1, m2);
  const auto vy = fy.value.segment(1, m2);
  TensorEval out;
  out.value = vx * vy.transpose();
  out.dx = fx.d1.segment(1, m2) * vy.transpose();
  out.dy = vx * fy.d1.segment(1, m2).transpose();
  out.dxx = fx.d2.segment(1, m2) * vy.transpose();
  out.dyy = vx * fy.d2.segment(1, m2).transpose();
  return out;
}

}  // namespace quasr
