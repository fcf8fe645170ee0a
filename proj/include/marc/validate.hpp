#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "marc/codec.hpp"
#include "marc/mapper.hpp"
#include "marc/rng.hpp"
#include "marc/types.hpp"

namespace marc {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidateOptions {
  bool break_gdfe = false;  // perturbs B before the identity check (negative control)
  int exhaustive_tau = 2;
  std::uint64_t seed = 1;
};

// Suites: all, sphere, gdfe, region, mapper, lattice, channel.
std::vector<CheckResult> run_validation(std::string_view suite, const ValidateOptions& options);
std::string format_table(const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

// Exhaustive closest point over the box |z_i| <= bound; ties go to the
// lexicographically smallest z.
IntVector brute_force_closest(const Matrix& basis, const Vector& target, int bound);

struct OracleReport {
  int instances = 0;
  int mismatches = 0;
};
// Random bases of dimension 1..max_dim with targets whose closest point lies
// well inside the search box; compares sphere_decode to brute force.
OracleReport sphere_oracle_check(int instances, int max_dim, int bound, Rng& rng);

// |B^T B - (I + H^T H)|_F / |I + H^T H|_F.
double gdfe_identity_error(const Matrix& H, const GdfeFilters& filters);

struct BijectivityReport {
  std::int64_t tuples = 0;
  std::int64_t distinct_images = 0;
  std::int64_t violations = 0;  // collisions plus leader/index round-trip failures
};
// Enumerates every user index tuple; requires tau^(K n) <= 4096.
BijectivityReport exhaustive_bijectivity(const RelayMapper& mapper);

// Two-user mapper over small Construction-A codes with a common nesting ratio.
// One-to-one: relay dimension 2 n_user; modulo sum: relay dimension n_user.
RelayMapper small_mapper(MapperKind kind, int n_user, int tau, Rng& rng, int p = 7, int k = 2);

}  // namespace marc
