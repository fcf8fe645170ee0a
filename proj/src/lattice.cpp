#include "marc/lattice.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <utility>

namespace marc {
namespace {

std::int64_t mod_p(std::int64_t a, std::int64_t p) {
  const std::int64_t r = a % p;
  return r < 0 ? r + p : r;
}

std::int64_t inverse_mod(std::int64_t a, std::int64_t p) {
  std::int64_t t = 0, new_t = 1, r = p, new_r = mod_p(a, p);
  while (new_r != 0) {
    const std::int64_t q = r / new_r;
    t = std::exchange(new_t, t - q * new_t);
    r = std::exchange(new_r, r - q * new_r);
  }
  return mod_p(t, p);
}

// Row-reduces g over Z_p in place; returns the pivot columns.
std::vector<int> rref_mod_p(IntMatrix& g, std::int64_t p) {
  g = g.unaryExpr([p](std::int64_t v) { return mod_p(v, p); });
  std::vector<int> pivots;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < g.cols() && row < g.rows(); ++col) {
    Eigen::Index pivot = -1;
    for (Eigen::Index r = row; r < g.rows(); ++r) {
      if (g(r, col) != 0) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) continue;
    g.row(row).swap(g.row(pivot));
    const std::int64_t inv = inverse_mod(g(row, col), p);
    for (Eigen::Index c = 0; c < g.cols(); ++c) g(row, c) = mod_p(g(row, c) * inv, p);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      if (r == row || g(r, col) == 0) continue;
      const std::int64_t f = g(r, col);
      for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = mod_p(g(r, c) - f * g(row, c), p);
    }
    pivots.push_back(static_cast<int>(col));
    ++row;
  }
  return pivots;
}

}  // namespace

Lattice::Lattice(Matrix generator, SphereDecodeOptions options)
    : generator_(std::move(generator)),
      search_(std::make_shared<const ClosestPointSearch>(generator_, options)) {
  if (generator_.rows() != generator_.cols()) throw ArgumentError("lattice generator must be square");
}

double Lattice::volume() const { return std::abs(generator_.determinant()); }

LatticePoint Lattice::quantize(const Vector& y) const {
  if (y.size() != dimension()) throw ArgumentError("quantize: dimension mismatch");
  if (!y.allFinite()) throw ArgumentError("quantize: non-finite input");
  SphereDecodeResult r = search_->search(y);
  LatticePoint pt;
  pt.coords = generator_ * r.z.cast<double>();
  pt.z = std::move(r.z);
  return pt;
}

Vector Lattice::reduce(const Vector& y) const { return y - quantize(y).coords; }

LatticePoint quantize(const Lattice& lattice, const Vector& y) { return lattice.quantize(y); }

Vector mod_lattice(const Lattice& lattice, const Vector& y) { return lattice.reduce(y); }

bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d) {
    if (p % d == 0) return false;
  }
  return true;
}

int nesting_ratio(double rate, int antennas) {
  const double tau = std::exp2(rate / (2.0 * antennas));
  const double rounded = std::round(tau);
  if (rounded < 1.0 || std::abs(tau - rounded) > 1e-9) {
    throw ConfigError("rate " + std::to_string(rate) + " with " + std::to_string(antennas) +
                      " antennas gives non-integer nesting ratio " + std::to_string(tau));
  }
  return static_cast<int>(rounded);
}

NestedLatticeCode::NestedLatticeCode(int p, IntMatrix rref, double gamma, int tau, double rate,
                                     IntMatrix labeling, IntMatrix labeling_inv)
    : n_(static_cast<int>(rref.cols())),
      p_(p),
      k_(static_cast<int>(rref.rows())),
      gamma_(gamma),
      tau_(tau),
      rate_(rate),
      code_(std::move(rref)),
      labeling_(std::move(labeling)),
      labeling_inv_(std::move(labeling_inv)) {
  if (labeling_.size() == 0) {
    labeling_ = IntMatrix::Identity(n_, n_);
    labeling_inv_ = labeling_;
  }
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw ArgumentError("gamma must be positive");
  if (tau_ < 1) throw ArgumentError("nesting ratio must be >= 1");
  std::vector<bool> is_pivot(n_, false);
  for (int r = 0; r < k_; ++r) {
    for (int c = 0; c < n_; ++c) {
      if (code_(r, c) != 0) {
        pivots_.push_back(c);
        is_pivot[c] = true;
        break;
      }
    }
  }
  basis_ = IntMatrix::Zero(n_, n_);
  for (int r = 0; r < k_; ++r) basis_.col(pivots_[r]) = code_.row(r).transpose();
  for (int c = 0; c < n_; ++c) {
    if (!is_pivot[c]) basis_(c, c) = p_;
  }
  coding_ = std::make_shared<const Lattice>(coding_generator());
  shaping_ = std::make_shared<const Lattice>(shaping_generator());
}

NestedLatticeCode NestedLatticeCode::from_linear_code(int p, const IntMatrix& code_generator,
                                                      double gamma) {
  if (!is_prime(p)) throw ArgumentError("p = " + std::to_string(p) + " is not prime");
  const auto k = code_generator.rows();
  const auto n = code_generator.cols();
  if (k < 1 || k > n) throw ArgumentError("code dimension must satisfy 1 <= k <= n");
  IntMatrix g = code_generator;
  const auto pivots = rref_mod_p(g, p);
  if (static_cast<Eigen::Index>(pivots.size()) != k) throw ArgumentError("code generator is rank deficient");
  return NestedLatticeCode(p, std::move(g), gamma, 1, 0.0);
}

NestedLatticeCode NestedLatticeCode::construction_a(int n, int p, int k, double gamma, Rng& rng) {
  if (!is_prime(p)) throw ArgumentError("p = " + std::to_string(p) + " is not prime");
  if (k < 1 || k > n) throw ArgumentError("code dimension must satisfy 1 <= k <= n");
  std::uniform_int_distribution<std::int64_t> digit(0, p - 1);
  while (true) {
    IntMatrix g(k, n);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < n; ++c) g(r, c) = digit(rng);
    }
    IntMatrix reduced = g;
    if (static_cast<int>(rref_mod_p(reduced, p).size()) == k) {
      return NestedLatticeCode(p, std::move(reduced), gamma, 1, 0.0);
    }
  }
}

NestedLatticeCode NestedLatticeCode::with_nesting(int tau, double rate) const {
  return NestedLatticeCode(p_, code_, gamma_, tau, rate, labeling_, labeling_inv_);
}

NestedLatticeCode NestedLatticeCode::rescaled(double gamma) const {
  return NestedLatticeCode(p_, code_, gamma, tau_, rate_, labeling_, labeling_inv_);
}

NestedLatticeCode NestedLatticeCode::with_labeling(const IntMatrix& U) const {
  if (U.rows() != n_ || U.cols() != n_) throw ArgumentError("labeling must be n x n");
  const Matrix inv = U.cast<double>().inverse();
  IntMatrix inv_int(n_, n_);
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv_int.data()[i] = std::llround(inv.data()[i]);
  if (!inv.allFinite() || U * inv_int != IntMatrix::Identity(n_, n_)) {
    throw ArgumentError("labeling matrix is not unimodular");
  }
  return NestedLatticeCode(p_, code_, gamma_, tau_, rate_, U, inv_int);
}

bool NestedLatticeCode::contains(const IntVector& z) const {
  if (z.size() != n_) return false;
  std::vector<bool> is_pivot(n_, false);
  for (int c : pivots_) is_pivot[c] = true;
  for (int c = 0; c < n_; ++c) {
    if (is_pivot[c]) continue;
    std::int64_t expected = 0;
    for (int r = 0; r < k_; ++r) expected = mod_p(expected + mod_p(z[pivots_[r]], p_) * code_(r, c), p_);
    if (mod_p(z[c], p_) != expected) return false;
  }
  return true;
}

double NestedLatticeCode::fundamental_volume() const {
  return std::pow(gamma_, n_) * std::pow(static_cast<double>(p_), n_ - k_);
}

double NestedLatticeCode::codebook_bits() const { return n_ * std::log2(static_cast<double>(tau_)); }

Vector sample_dither(const NestedLatticeCode& code, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector a(code.dimension());
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = unif(rng);
  return code.shaping().reduce(code.shaping().generator() * a);
}

double estimate_second_moment(const NestedLatticeCode& code, Rng& rng, int samples) {
  if (samples < 1) throw ArgumentError("samples must be >= 1");
  double acc = 0.0;
  for (int s = 0; s < samples; ++s) acc += sample_dither(code, rng).squaredNorm();
  return acc / (static_cast<double>(samples) * code.dimension());
}

NestedLatticeCode normalize_power(const NestedLatticeCode& code, Rng& rng, int samples) {
  constexpr double kTarget = 0.5;
  constexpr int kMaxRounds = 4;
  NestedLatticeCode current = code;
  double moment = estimate_second_moment(current, rng, samples);
  for (int round = 0; round < kMaxRounds; ++round) {
    if (!(moment > 0.0) || !std::isfinite(moment)) break;
    current = current.rescaled(current.gamma() * std::sqrt(kTarget / moment));
    moment = estimate_second_moment(current, rng, samples);
    if (std::abs(moment - kTarget) <= 0.01 * kTarget) return current;
  }
  std::ostringstream msg;
  msg << "power normalization did not settle: second moment " << moment << " at gamma "
      << current.gamma() << " (n=" << code.dimension() << ", p=" << code.prime()
      << ", samples=" << samples << ")";
  throw NumericalError(msg.str());
}

Vector index_to_coset_leader(const NestedLatticeCode& code, const IntVector& z_msg) {
  if (z_msg.size() != code.dimension()) throw ArgumentError("message index has wrong dimension");
  for (Eigen::Index i = 0; i < z_msg.size(); ++i) {
    if (z_msg[i] < 0 || z_msg[i] >= code.tau()) {
      throw ArgumentError("message index entry " + std::to_string(z_msg[i]) + " outside [0, " +
                          std::to_string(code.tau()) + ")");
    }
  }
  return code.shaping().reduce(code.coding_generator() * z_msg.cast<double>());
}

IntVector coset_index(const NestedLatticeCode& code, const Vector& lattice_point) {
  const Matrix basis = code.integer_basis().cast<double>();
  const Vector coords = basis.triangularView<Eigen::Lower>().solve(lattice_point / code.gamma());
  IntVector w(coords.size());
  for (Eigen::Index i = 0; i < coords.size(); ++i) w[i] = std::llround(coords[i]);
  IntVector idx = code.labeling_inverse() * w;
  for (auto& v : idx) v = mod_p(v, code.tau());
  return idx;
}

std::string serialize(const NestedLatticeCode& code) {
  std::ostringstream out;
  char gamma[64];
  char rate[64];
  std::snprintf(gamma, sizeof gamma, "%.17g", code.gamma());
  std::snprintf(rate, sizeof rate, "%.17g", code.rate());
  out << "nested-lattice-code 1\n"
      << "dimension " << code.dimension() << '\n'
      << "prime " << code.prime() << '\n'
      << "code_dimension " << code.code_dimension() << '\n'
      << "gamma " << gamma << '\n'
      << "tau " << code.tau() << '\n'
      << "rate " << rate << '\n'
      << "code_generator\n";
  const IntMatrix& g = code.code_generator();
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.cols(); ++c) out << (c ? " " : "") << g(r, c);
    out << '\n';
  }
  const IntMatrix& u = code.labeling();
  if (u != IntMatrix::Identity(u.rows(), u.cols())) {
    out << "labeling\n";
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      for (Eigen::Index c = 0; c < u.cols(); ++c) out << (c ? " " : "") << u(r, c);
      out << '\n';
    }
  }
  return out.str();
}

NestedLatticeCode deserialize_lattice(const std::string& text) {
  std::istringstream in(text);
  std::string key;
  int version = 0, n = 0, p = 0, k = 0, tau = 1;
  double gamma = 0.0, rate = 0.0;
  auto expect = [&](const char* name, auto& value) {
    if (!(in >> key >> value) || key != name) {
      throw ArgumentError(std::string("lattice description: expected '") + name + "'");
    }
  };
  expect("nested-lattice-code", version);
  if (version != 1) throw ArgumentError("lattice description: unsupported version");
  expect("dimension", n);
  expect("prime", p);
  expect("code_dimension", k);
  expect("gamma", gamma);
  expect("tau", tau);
  expect("rate", rate);
  if (!(in >> key) || key != "code_generator") {
    throw ArgumentError("lattice description: expected 'code_generator'");
  }
  if (n < 1 || k < 1 || k > n) throw ArgumentError("lattice description: bad dimensions");
  IntMatrix g(k, n);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!(in >> g(r, c))) throw ArgumentError("lattice description: truncated generator");
    }
  }
  NestedLatticeCode code = NestedLatticeCode::from_linear_code(p, g, gamma).with_nesting(tau, rate);
  if (in >> key) {
    if (key != "labeling") throw ArgumentError("lattice description: unexpected '" + key + "'");
    IntMatrix u(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (!(in >> u(r, c))) throw ArgumentError("lattice description: truncated labeling");
      }
    }
    code = code.with_labeling(u);
  }
  return code;
}

IntMatrix random_unimodular(int n, Rng& rng) {
  std::uniform_int_distribution<int> entry(-1, 1);
  IntMatrix lower = IntMatrix::Identity(n, n);
  IntMatrix upper = IntMatrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      lower(i, j) = entry(rng);
      upper(j, i) = entry(rng);
    }
  }
  return lower * upper;
}

}  // namespace marc
