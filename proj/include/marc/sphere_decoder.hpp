#pragma once

#include <cstdint>
#include <stdexcept>

#include "marc/types.hpp"

namespace marc {

struct SphereDecodeOptions {
  // Node visits before the search gives up and reports its best point.
  std::uint64_t max_visits = 10'000'000;
  // LLL-reduce the basis before enumerating.
  bool reduce = true;
  double lll_delta = 0.99;
};

struct SphereDecodeResult {
  IntVector z;               // coordinates in the caller's basis
  double distance_sq = 0.0;  // |target - basis * z|^2
  bool exact = false;        // false only when the visit budget ran out
  std::uint64_t visits = 0;
};

// Thrown when the visit budget is exhausted; carries the best point found.
class SearchBudgetExceeded : public std::runtime_error {
 public:
  explicit SearchBudgetExceeded(SphereDecodeResult best);
  const SphereDecodeResult& best() const { return best_; }

 private:
  SphereDecodeResult best_;
};

// In-place LLL reduction of the columns of `basis` (QR/Givens formulation).
// Returns the unimodular U with reduced = original * U.
IntMatrix lll_reduce(Matrix& basis, double delta = 0.99);

// Exact closest-vector search against a fixed full-column-rank basis.
// Preprocessing (reduction, QR) is done once; search() is const and can be
// called concurrently.
//
// Enumeration is Schnorr-Euchner depth first, so the first leaf is the Babai
// point and the radius shrinks with every improvement. Among equidistant
// points the one whose coordinate vector (in the caller's basis) is
// lexicographically smallest wins.
class ClosestPointSearch {
 public:
  explicit ClosestPointSearch(const Matrix& basis, SphereDecodeOptions options = {});

  // Throws SearchBudgetExceeded when the budget runs out.
  SphereDecodeResult search(const Vector& target) const;
  // Same search; on budget exhaustion returns the best point with exact=false.
  SphereDecodeResult search_best_effort(const Vector& target) const;

  const Matrix& basis() const { return basis_; }
  Eigen::Index dimension() const { return basis_.cols(); }

 private:
  Matrix basis_;
  Matrix reduced_;
  IntMatrix unimodular_;
  Matrix q_;  // thin Q of the reduced basis
  Matrix r_;  // upper triangular, positive diagonal
  SphereDecodeOptions options_;
};

// z minimizing |target - basis * z|^2 over the integers.
SphereDecodeResult sphere_decode(const Matrix& basis, const Vector& target,
                                 const SphereDecodeOptions& options = {});

}  // namespace marc
