#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "marc/lattice.hpp"

using namespace marc;

namespace {

std::int64_t mod(std::int64_t a, std::int64_t p) { return ((a % p) + p) % p; }

// z is in the lattice iff z mod p equals m G mod p for some message m.
bool in_code_lattice(const IntVector& z, const IntMatrix& G, int p) {
  const int k = static_cast<int>(G.rows());
  std::vector<int> m(k, 0);
  for (;;) {
    bool match = true;
    for (Eigen::Index c = 0; c < G.cols() && match; ++c) {
      std::int64_t s = 0;
      for (int r = 0; r < k; ++r) s += m[r] * G(r, c);
      match = mod(s, p) == mod(z[c], p);
    }
    if (match) return true;
    int i = 0;
    while (i < k && m[i] == p - 1) m[i++] = 0;
    if (i == k) return false;
    ++m[i];
  }
}

NestedLatticeCode integer_lattice(int n, int tau) {
  return NestedLatticeCode::from_linear_code(2, IntMatrix::Identity(n, n), 1.0).with_nesting(tau, 0.0);
}

}  // namespace

TEST_CASE("Construction A basis") {
  Rng rng(21);
  const NestedLatticeCode code = NestedLatticeCode::construction_a(8, 97, 3, 0.5, rng);
  const IntMatrix& B = code.integer_basis();
  CHECK(B.isLowerTriangular());
  CHECK(std::abs(B.cast<double>().determinant()) == doctest::Approx(std::pow(97.0, 5)).epsilon(1e-9));
  CHECK(code.fundamental_volume() == doctest::Approx(std::pow(0.5, 8) * std::pow(97.0, 5)).epsilon(1e-9));
  CHECK_THROWS_AS(NestedLatticeCode::construction_a(4, 6, 2, 1.0, rng), ArgumentError);
  CHECK_THROWS_AS(NestedLatticeCode::construction_a(4, 5, 5, 1.0, rng), ArgumentError);
}

TEST_CASE("membership agrees with codeword enumeration") {
  IntMatrix G(1, 3);
  G << 1, 2, 1;
  const NestedLatticeCode code = NestedLatticeCode::from_linear_code(3, G, 1.0);
  int members = 0;
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      for (int c = -3; c <= 3; ++c) {
        const IntVector z = (IntVector(3) << a, b, c).finished();
        const bool expect = in_code_lattice(z, G, 3);
        CHECK(code.contains(z) == expect);
        members += expect;
      }
  CHECK(members > 0);
}

TEST_CASE("self-similar nesting") {
  Rng rng(22);
  const NestedLatticeCode code = NestedLatticeCode::construction_a(6, 11, 2, 0.3, rng).with_nesting(3, 0.0);
  const IntMatrix& B = code.integer_basis();
  for (Eigen::Index j = 0; j < B.cols(); ++j) CHECK(code.contains(IntVector(std::int64_t{3} * B.col(j))));
  const double ratio = code.shaping().volume() / code.coding().volume();
  CHECK(ratio == doctest::Approx(std::pow(3.0, 6)).epsilon(1e-9));
  CHECK(code.codebook_bits() == doctest::Approx(6 * std::log2(3.0)));
}

TEST_CASE("nesting ratio from rate") {
  CHECK(nesting_ratio(2.0, 1) == 2);
  CHECK(nesting_ratio(4.0, 2) == 2);
  CHECK(nesting_ratio(4.0, 1) == 4);
  CHECK_THROWS_AS(nesting_ratio(3.0, 1), ConfigError);
}

TEST_CASE("quantizer and modulo") {
  Rng rng(23);
  const NestedLatticeCode code = NestedLatticeCode::construction_a(4, 7, 2, 1.0, rng).with_nesting(2, 0.0);
  const Lattice& S = code.shaping();
  for (int t = 0; t < 50; ++t) {
    const Vector y = test::gaussian(4, 1, rng, 10.0).col(0);
    const Vector m = S.reduce(y);
    CHECK((S.reduce(m) - m).norm() < 1e-9);
    CHECK(m.norm() <= y.norm() + 1e-9);
    IntVector z(4);
    std::uniform_int_distribution<int> d(-2, 2);
    for (auto& v : z) v = d(rng);
    const Vector lambda = S.generator() * z.cast<double>();
    CHECK(m.norm() <= (m - lambda).norm() + 1e-9);
  }
}

TEST_CASE("dither is uniform over the Voronoi region") {
  Rng rng(24);
  const NestedLatticeCode z1 = integer_lattice(1, 1);
  double acc = 0.0, mean = 0.0;
  const int N = 10000;
  for (int t = 0; t < N; ++t) {
    const Vector u = sample_dither(z1, rng);
    CHECK(z1.shaping().quantize(u).coords.isZero(1e-12));
    acc += u.squaredNorm();
    mean += u[0];
  }
  CHECK(acc / N == doctest::Approx(1.0 / 12.0).epsilon(0.05));
  CHECK(std::abs(mean / N) < 3.0 * std::sqrt(1.0 / 12.0 / N));

  const NestedLatticeCode code = NestedLatticeCode::construction_a(6, 13, 2, 1.0, rng).with_nesting(2, 0.0);
  for (int t = 0; t < 200; ++t) {
    const Vector u = sample_dither(code, rng);
    CHECK(code.shaping().quantize(u).coords.isZero(1e-9));
  }
}

TEST_CASE("power normalization") {
  Rng rng(25);
  const NestedLatticeCode raw = NestedLatticeCode::construction_a(8, 97, 3, 1.0, rng).with_nesting(2, 2.0);
  const NestedLatticeCode code = normalize_power(raw, rng, 20000);
  Rng check(26);
  CHECK(estimate_second_moment(code, check, 20000) == doctest::Approx(0.5).epsilon(0.015));
  CHECK(code.codebook_bits() == raw.codebook_bits());
  CHECK(code.tau() == raw.tau());

  Rng a(27), b(27);
  const double m1 = estimate_second_moment(code, a, 2000);
  const double m2 = estimate_second_moment(code.rescaled(2.0 * code.gamma()), b, 2000);
  CHECK(m2 == doctest::Approx(4.0 * m1).epsilon(1e-9));
}

TEST_CASE("coset leaders") {
  const NestedLatticeCode z2 = integer_lattice(2, 2);
  std::set<std::pair<double, double>> leaders;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const Vector c = index_to_coset_leader(z2, (IntVector(2) << a, b).finished());
      leaders.insert({c[0], c[1]});
    }
  CHECK(leaders.size() == 4);
  CHECK(index_to_coset_leader(z2, IntVector::Zero(2)).isZero(0.0));
  CHECK_THROWS_AS(index_to_coset_leader(z2, (IntVector(2) << 2, 0).finished()), ArgumentError);

  Rng rng(28);
  const NestedLatticeCode code = NestedLatticeCode::construction_a(3, 5, 1, 0.7, rng).with_nesting(2, 0.0);
  std::vector<Vector> all;
  std::vector<IntVector> idx;
  for (int i = 0; i < 8; ++i) {
    const IntVector z = (IntVector(3) << (i & 1), (i >> 1) & 1, (i >> 2) & 1).finished();
    all.push_back(index_to_coset_leader(code, z));
    idx.push_back(z);
    CHECK(coset_index(code, all.back()) == z);
  }
  // Distinct indices differ by a point of the coding lattice outside the shaping lattice.
  const Matrix Bs = code.shaping_generator();
  const Matrix Bc = code.coding_generator();
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      const Vector d = all[i] - all[j];
      const Vector in_c = Bc.triangularView<Eigen::Lower>().solve(d);
      const Vector in_s = Bs.triangularView<Eigen::Lower>().solve(d);
      CHECK((in_c - in_c.array().round().matrix()).norm() < 1e-9);
      CHECK((in_s - in_s.array().round().matrix()).norm() > 1e-6);
    }
}

TEST_CASE("labeling keeps the lattice") {
  Rng rng(29);
  const NestedLatticeCode code = NestedLatticeCode::construction_a(6, 11, 2, 0.4, rng).with_nesting(2, 0.0);
  const IntMatrix U = random_unimodular(6, rng);
  const NestedLatticeCode relabeled = code.with_labeling(U);
  CHECK(relabeled.coding().volume() == doctest::Approx(code.coding().volume()));
  for (int t = 0; t < 30; ++t) {
    IntVector z(6);
    std::uniform_int_distribution<int> d(0, 1);
    for (auto& v : z) v = d(rng);
    const Vector leader = index_to_coset_leader(relabeled, z);
    CHECK(coset_index(relabeled, leader) == z);
    // Every relabeled leader is a point of the original coding lattice.
    const Vector c = code.coding_generator().triangularView<Eigen::Lower>().solve(leader);
    CHECK((c - c.array().round().matrix()).norm() < 1e-7);
  }
  IntMatrix bad = IntMatrix::Identity(6, 6);
  bad(0, 0) = 2;
  CHECK_THROWS_AS(code.with_labeling(bad), ArgumentError);
}

TEST_CASE("serialization round trip") {
  Rng rng(30);
  NestedLatticeCode code = NestedLatticeCode::construction_a(8, 97, 3, 0.123456789, rng).with_nesting(2, 2.0);
  for (const NestedLatticeCode& c : {code, code.with_labeling(random_unimodular(8, rng))}) {
    const NestedLatticeCode back = deserialize_lattice(serialize(c));
    CHECK(back.integer_basis() == c.integer_basis());
    CHECK(back.labeling() == c.labeling());
    CHECK(back.gamma() == c.gamma());
    CHECK(back.tau() == c.tau());
    CHECK(back.rate() == c.rate());
    CHECK(serialize(back) == serialize(c));
  }
  CHECK_THROWS_AS(deserialize_lattice("nested-lattice-code 1\ndimension 2\n"), ArgumentError);
}
