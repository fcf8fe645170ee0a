#include "marc/sphere_decoder.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace marc {
namespace {

bool lex_less(const IntVector& a, const IntVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

double tie_tolerance(double best) { return 1e-12 * (1.0 + best); }

}  // namespace

SearchBudgetExceeded::SearchBudgetExceeded(SphereDecodeResult best)
    : std::runtime_error("sphere decoder visit budget exhausted after " +
                         std::to_string(best.visits) + " visits"),
      best_(std::move(best)) {}

IntMatrix lll_reduce(Matrix& basis, double delta) {
  const Eigen::Index n = basis.cols();
  IntMatrix u = IntMatrix::Identity(n, n);
  if (n < 2) return u;

  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  Eigen::Index k = 1;
  while (k < n) {
    for (Eigen::Index l = k - 1; l >= 0; --l) {
      const double mu = std::round(r(l, k) / r(l, l));
      if (mu != 0.0) {
        r.col(k).head(l + 1) -= mu * r.col(l).head(l + 1);
        u.col(k) -= static_cast<std::int64_t>(mu) * u.col(l);
      }
    }
    const double lhs = delta * r(k - 1, k - 1) * r(k - 1, k - 1);
    const double rhs = r(k - 1, k) * r(k - 1, k) + r(k, k) * r(k, k);
    if (lhs > rhs) {
      r.col(k - 1).swap(r.col(k));
      u.col(k - 1).swap(u.col(k));
      const double a = r(k - 1, k - 1);
      const double b = r(k, k - 1);
      const double h = std::hypot(a, b);
      const double c = a / h;
      const double s = b / h;
      for (Eigen::Index j = k - 1; j < n; ++j) {
        const double x = r(k - 1, j);
        const double y = r(k, j);
        r(k - 1, j) = c * x + s * y;
        r(k, j) = -s * x + c * y;
      }
      r(k, k - 1) = 0.0;
      k = std::max<Eigen::Index>(k - 1, 1);
    } else {
      ++k;
    }
  }
  basis = basis * u.cast<double>();
  return u;
}

ClosestPointSearch::ClosestPointSearch(const Matrix& basis, SphereDecodeOptions options)
    : basis_(basis), reduced_(basis), options_(options) {
  const Eigen::Index n = basis.cols();
  if (basis.rows() < n) throw ArgumentError("basis must have at least as many rows as columns");
  if (!basis.allFinite()) throw ArgumentError("basis has non-finite entries");
  unimodular_ = options_.reduce ? lll_reduce(reduced_, options_.lll_delta)
                                : IntMatrix::Identity(n, n);

  Eigen::HouseholderQR<Matrix> qr(reduced_);
  q_ = qr.householderQ() * Matrix::Identity(basis.rows(), n);
  r_ = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r_(i, i) < 0.0) {
      r_.row(i) *= -1.0;
      q_.col(i) *= -1.0;
    }
  }
  const double scale = r_.diagonal().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(r_(i, i) > 1e-13 * scale)) throw ArgumentError("basis is not full rank");
  }
}

SphereDecodeResult ClosestPointSearch::search_best_effort(const Vector& target) const {
  const Eigen::Index n = r_.cols();
  if (target.size() != basis_.rows()) throw ArgumentError("target dimension mismatch");
  SphereDecodeResult result;
  result.z = IntVector::Zero(n);
  if (n == 0) {
    result.distance_sq = target.squaredNorm();
    result.exact = true;
    return result;
  }

  const Vector y = q_.transpose() * target;
  const double outside = std::max(0.0, (target - q_ * y).squaredNorm());

  std::vector<double> center(n), partial(n + 1, 0.0);
  std::vector<std::int64_t> z(n), step(n);
  IntVector zr(n);
  IntVector best_orig;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  std::uint64_t visits = 0;

  auto open_level = [&](Eigen::Index i) {
    double acc = y[i];
    for (Eigen::Index j = i + 1; j < n; ++j) acc -= r_(i, j) * static_cast<double>(z[j]);
    center[i] = acc / r_(i, i);
    z[i] = static_cast<std::int64_t>(std::round(center[i]));
    step[i] = center[i] >= static_cast<double>(z[i]) ? 1 : -1;
  };
  auto next_sibling = [&](Eigen::Index i) {
    z[i] += step[i];
    step[i] = -step[i] - (step[i] > 0 ? 1 : -1);
  };

  Eigen::Index i = n - 1;
  open_level(i);
  bool exhausted = false;
  while (true) {
    if (visits >= options_.max_visits) {
      exhausted = true;
      break;
    }
    ++visits;
    const double diff = r_(i, i) * (static_cast<double>(z[i]) - center[i]);
    const double dist = partial[i + 1] + diff * diff;
    if (dist <= best + tie_tolerance(best)) {
      if (i == 0) {
        for (Eigen::Index j = 0; j < n; ++j) zr[j] = z[j];
        IntVector orig = unimodular_ * zr;
        if (!found || dist < best - tie_tolerance(best)) {
          best_orig = std::move(orig);
          best = dist;
          found = true;
        } else if (lex_less(orig, best_orig)) {
          best_orig = std::move(orig);
          best = std::min(best, dist);
        }
        next_sibling(0);
      } else {
        partial[i] = dist;
        --i;
        open_level(i);
      }
    } else {
      if (i == n - 1) break;
      ++i;
      next_sibling(i);
    }
  }

  result.z = found ? best_orig : IntVector::Zero(n);
  result.distance_sq = found ? best + outside
                             : (target - basis_ * result.z.cast<double>()).squaredNorm();
  result.exact = found && !exhausted;
  result.visits = visits;
  return result;
}

SphereDecodeResult ClosestPointSearch::search(const Vector& target) const {
  SphereDecodeResult r = search_best_effort(target);
  if (!r.exact) throw SearchBudgetExceeded(std::move(r));
  return r;
}

SphereDecodeResult sphere_decode(const Matrix& basis, const Vector& target,
                                 const SphereDecodeOptions& options) {
  return ClosestPointSearch(basis, options).search(target);
}

}  // namespace marc
