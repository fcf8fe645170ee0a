#pragma once

#include <memory>
#include <string>

#include "marc/rng.hpp"
#include "marc/sphere_decoder.hpp"
#include "marc/types.hpp"

namespace marc {

struct LatticePoint {
  Vector coords;  // generator * z
  IntVector z;
};

// A full-rank lattice {G z : z integer} with a cached closest-point searcher.
class Lattice {
 public:
  explicit Lattice(Matrix generator, SphereDecodeOptions options = {});

  const Matrix& generator() const { return generator_; }
  Eigen::Index dimension() const { return generator_.cols(); }
  double volume() const;

  LatticePoint quantize(const Vector& y) const;
  // y - Q(y); lies in the Voronoi region of 0.
  Vector reduce(const Vector& y) const;

 private:
  Matrix generator_;
  std::shared_ptr<const ClosestPointSearch> search_;
};

LatticePoint quantize(const Lattice& lattice, const Vector& y);
Vector mod_lattice(const Lattice& lattice, const Vector& y);

// Self-similar nested pair Lambda_S = tau * Lambda_C where Lambda_C is a scaled
// Construction-A lattice gamma * {z : z mod p in C} for a linear [n, k] code C
// over Z_p.
class NestedLatticeCode {
 public:
  // Draws a random rank-k generator over Z_p (redrawing degenerate draws).
  // The result has tau = 1 and rate 0; see with_nesting().
  static NestedLatticeCode construction_a(int n, int p, int k, double gamma, Rng& rng);
  // Deterministic construction from an explicit k x n generator over Z_p.
  static NestedLatticeCode from_linear_code(int p, const IntMatrix& code_generator, double gamma);

  NestedLatticeCode with_nesting(int tau, double rate) const;
  NestedLatticeCode rescaled(double gamma) const;
  // Same lattices, message indices read through the unimodular U: the coding
  // generator becomes gamma * basis * U. Throws unless U is unimodular.
  NestedLatticeCode with_labeling(const IntMatrix& U) const;

  int dimension() const { return n_; }
  int prime() const { return p_; }
  int code_dimension() const { return k_; }
  double gamma() const { return gamma_; }
  int tau() const { return tau_; }
  double rate() const { return rate_; }

  // Reduced row echelon form of the code generator, entries in [0, p).
  const IntMatrix& code_generator() const { return code_; }
  // Integer basis (columns) of the unscaled lattice; lower triangular after a
  // fixed column order, |det| = p^(n-k).
  const IntMatrix& integer_basis() const { return basis_; }

  // Unimodular index labeling (identity unless with_labeling was used).
  const IntMatrix& labeling() const { return labeling_; }
  const IntMatrix& labeling_inverse() const { return labeling_inv_; }

  Matrix coding_generator() const { return gamma_ * (basis_ * labeling_).cast<double>(); }
  Matrix shaping_generator() const { return (tau_ * gamma_) * (basis_ * labeling_).cast<double>(); }
  const Lattice& coding() const { return *coding_; }
  const Lattice& shaping() const { return *shaping_; }

  // z in the unscaled integer lattice, i.e. z mod p is a codeword.
  bool contains(const IntVector& z) const;
  // gamma^n p^(n-k)
  double fundamental_volume() const;
  // log2 of the codebook size tau^n.
  double codebook_bits() const;

 private:
  NestedLatticeCode(int p, IntMatrix rref, double gamma, int tau, double rate,
                    IntMatrix labeling = {}, IntMatrix labeling_inv = {});

  int n_ = 0;
  int p_ = 0;
  int k_ = 0;
  double gamma_ = 1.0;
  int tau_ = 1;
  double rate_ = 0.0;
  IntMatrix code_;
  IntMatrix basis_;
  IntMatrix labeling_;
  IntMatrix labeling_inv_;
  std::vector<int> pivots_;
  std::shared_ptr<const Lattice> coding_;
  std::shared_ptr<const Lattice> shaping_;
};

bool is_prime(int p);

// tau = 2^(rate / (2 antennas)); throws ConfigError unless it is a positive integer.
int nesting_ratio(double rate, int antennas);

// Uniform over the Voronoi region of the shaping lattice: a uniform point of
// the fundamental parallelepiped reduced mod Lambda_S.
Vector sample_dither(const NestedLatticeCode& code, Rng& rng);

// Mean of |u|^2 / n over `samples` dithers.
double estimate_second_moment(const NestedLatticeCode& code, Rng& rng, int samples);

// Rescales gamma so the shaping lattice has second moment 1/2 per dimension
// (within 1%, checked on an independent batch). Throws NumericalError when the
// estimate does not settle.
NestedLatticeCode normalize_power(const NestedLatticeCode& code, Rng& rng, int samples = 100000);

// (G_C z_msg) mod Lambda_S for an index vector with entries in [0, tau).
Vector index_to_coset_leader(const NestedLatticeCode& code, const IntVector& z_msg);

// Inverse of index_to_coset_leader for any point of the coding lattice.
IntVector coset_index(const NestedLatticeCode& code, const Vector& lattice_point);

// Plain-text description: dimension, prime, code dimension, gamma, tau, rate
// and the code generator rows. Round-trips exactly.
std::string serialize(const NestedLatticeCode& code);
NestedLatticeCode deserialize_lattice(const std::string& text);

// Random unimodular n x n matrix L * R with unit-triangular factors whose
// off-diagonal entries are drawn from {-1, 0, 1}.
IntMatrix random_unimodular(int n, Rng& rng);

}  // namespace marc
