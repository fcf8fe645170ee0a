#pragma once

#include <random>

#include "marc/types.hpp"
#include "marc/rng.hpp"

namespace marc::test {

inline Matrix gaussian(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline CMatrix complex_gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = {g(rng), g(rng)};
  return m;
}

// Closest point by plain enumeration of the box |z_i| <= bound, kept
// independent of the library's own brute-force helper.
inline IntVector enumerate_closest(const Matrix& B, const Vector& y, int bound) {
  const Eigen::Index n = B.cols();
  IntVector z = IntVector::Constant(n, -bound), best = z;
  double best_d = (y - B * z.cast<double>()).squaredNorm();
  for (;;) {
    Eigen::Index i = 0;
    while (i < n && z[i] == bound) z[i++] = -bound;
    if (i == n) break;
    ++z[i];
    const double d = (y - B * z.cast<double>()).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = z;
    }
  }
  return best;
}

}  // namespace marc::test
