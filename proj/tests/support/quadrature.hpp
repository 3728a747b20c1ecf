#pragma once

#include <cmath>
#include <vector>

namespace testsupport {

struct Quadrature {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre rule mapped to [0,1]; integrates polynomials up to degree
// 2n - 1 exactly. Nodes via Newton refinement of the Chebyshev guess.
inline Quadrature gauss_legendre_01(int n) {
  const double pi = std::acos(-1.0);
  Quadrature q;
  q.x.resize(n);
  q.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    q.x[i] = 0.5 * (t + 1.0);
    q.w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
  return q;
}

}  // namespace testsupport
