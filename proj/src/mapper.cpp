#include "marc/mapper.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace marc {

std::string_view to_string(MapperKind kind) {
  return kind == MapperKind::OneToOneLinear ? "one-to-one-linear" : "modulo-sum";
}

MapperKind parse_mapper_kind(std::string_view s) {
  if (s == "one-to-one-linear" || s == "omlc") return MapperKind::OneToOneLinear;
  if (s == "modulo-sum" || s == "msmlc") return MapperKind::ModuloSum;
  throw ArgumentError("unknown mapper kind '" + std::string(s) + "'");
}

RelayMapper::RelayMapper(MapperKind kind, std::vector<NestedLatticeCode> user_codes,
                         NestedLatticeCode relay_code)
    : kind_(kind), users_(std::move(user_codes)), relay_(std::move(relay_code)) {
  if (users_.empty()) throw ConfigError("relay mapper needs at least one user code");
  if (kind_ == MapperKind::OneToOneLinear) {
    int total = 0;
    double bits = 0.0;
    for (const auto& c : users_) {
      total += c.dimension();
      bits += c.codebook_bits();
    }
    if (total != relay_.dimension()) {
      throw ConfigError("one-to-one mapper: relay dimension " + std::to_string(relay_.dimension()) +
                        " != sum of user dimensions " + std::to_string(total));
    }
    if (std::abs(bits - relay_.codebook_bits()) > 1e-9) {
      throw ConfigError("one-to-one mapper: relay codebook size must equal the product of user codebook sizes");
    }
    for (const auto& c : users_) {
      if (c.tau() != relay_.tau()) {
        throw ConfigError("one-to-one linear mapper needs equal nesting ratios");
      }
    }
  } else {
    for (const auto& c : users_) {
      if (c.dimension() != relay_.dimension()) {
        throw ConfigError("modulo-sum mapper: user and relay dimensions must match");
      }
      if (relay_.tau() < c.tau()) {
        throw ConfigError("modulo-sum mapper: relay codebook smaller than a user codebook");
      }
    }
  }
}

bool RelayMapper::is_lattice_decodable() const {
  return std::all_of(users_.begin(), users_.end(),
                     [&](const NestedLatticeCode& c) { return c.tau() == relay_.tau(); });
}

IntMatrix RelayMapper::index_block(int user) const {
  const Eigen::Index nr = relay_.dimension();
  const Eigen::Index nu = users_.at(user).dimension();
  IntMatrix a = IntMatrix::Zero(nr, nu);
  if (kind_ == MapperKind::OneToOneLinear) {
    Eigen::Index row = 0;
    for (int i = 0; i < user; ++i) row += users_[i].dimension();
    a.middleRows(row, nu).setIdentity();
  } else {
    a.setIdentity();
  }
  return a;
}

IntVector RelayMapper::map_indices(const std::vector<IntVector>& user_indices) const {
  if (static_cast<int>(user_indices.size()) != users()) {
    throw ArgumentError("map_indices: expected " + std::to_string(users()) + " index vectors");
  }
  IntVector out = IntVector::Zero(relay_.dimension());
  for (int i = 0; i < users(); ++i) {
    const IntVector& z = user_indices[i];
    if (z.size() != users_[i].dimension()) throw ArgumentError("map_indices: index size mismatch");
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      if (z[j] < 0 || z[j] >= users_[i].tau()) throw ArgumentError("map_indices: index out of range");
    }
    out += index_block(i) * z;
  }
  const std::int64_t tau = relay_.tau();
  return out.unaryExpr([tau](std::int64_t v) { return ((v % tau) + tau) % tau; });
}

Matrix build_superlattice_generator(const RelayMapper& mapper) {
  std::vector<int> all(mapper.users());
  for (int i = 0; i < mapper.users(); ++i) all[i] = i;
  return superlattice_section(mapper, all, {}, true).generator;
}

SuperLatticeSection superlattice_section(const RelayMapper& mapper,
                                         const std::vector<int>& residual_users,
                                         const std::vector<IntVector>& known_indices,
                                         bool include_relay) {
  if (include_relay && !mapper.is_lattice_decodable()) {
    throw ConfigError("relay mapper nesting ratios differ; no lattice-decodable generator");
  }
  SuperLatticeSection sec;
  sec.residual_users = residual_users;
  std::sort(sec.residual_users.begin(), sec.residual_users.end());
  sec.relay = include_relay;

  const auto& relay = mapper.relay_code();
  Eigen::Index dim = 0;
  for (int u : sec.residual_users) dim += mapper.user_codes().at(u).dimension();
  const Eigen::Index user_dim = dim;
  if (include_relay) dim += relay.dimension();

  sec.generator = Matrix::Zero(dim, dim);
  sec.offset = Vector::Zero(dim);
  Eigen::Index at = 0;
  for (int u : sec.residual_users) {
    const auto& code = mapper.user_codes()[u];
    const Eigen::Index n = code.dimension();
    sec.generator.block(at, at, n, n) = code.coding_generator();
    if (include_relay) {
      sec.generator.block(user_dim, at, relay.dimension(), n) =
          relay.coding_generator() * mapper.index_block(u).cast<double>();
    }
    at += n;
  }
  if (include_relay) {
    const Eigen::Index nr = relay.dimension();
    sec.generator.bottomRightCorner(nr, nr) = relay.tau() * relay.coding_generator();
    IntVector fixed = IntVector::Zero(nr);
    for (int u = 0; u < mapper.users(); ++u) {
      if (std::find(sec.residual_users.begin(), sec.residual_users.end(), u) != sec.residual_users.end()) {
        continue;
      }
      if (u >= static_cast<int>(known_indices.size())) {
        throw ArgumentError("superlattice_section: missing index for fixed user " + std::to_string(u));
      }
      fixed += mapper.index_block(u) * known_indices[u];
    }
    sec.offset.tail(nr) = relay.coding_generator() * fixed.cast<double>();
  }
  return sec;
}

bool coset_consistency_check(const RelayMapper& mapper, const Matrix& G, int trials, Rng& rng) {
  constexpr double kTol = 1e-9;
  Eigen::Index total = mapper.relay_code().dimension();
  for (const auto& c : mapper.user_codes()) total += c.dimension();
  if (G.rows() != total || G.cols() != total) return false;
  const std::int64_t span = 3 * mapper.relay_code().tau();
  std::uniform_int_distribution<std::int64_t> coord(-span, span);

  for (int t = 0; t < trials; ++t) {
    IntVector z(total);
    for (Eigen::Index i = 0; i < total; ++i) z[i] = coord(rng);
    const Vector v = G * z.cast<double>();

    std::vector<IntVector> indices;
    Eigen::Index at = 0;
    for (const auto& code : mapper.user_codes()) {
      const Vector part = v.segment(at, code.dimension());
      const Vector leader = code.shaping().reduce(part);
      IntVector idx = coset_index(code, leader);
      const Vector back = index_to_coset_leader(code, idx);
      if (code.shaping().reduce(back - leader).norm() > kTol) return false;
      indices.push_back(std::move(idx));
      at += code.dimension();
    }
    const auto& relay = mapper.relay_code();
    const Vector mapped = index_to_coset_leader(relay, mapper.map_indices(indices));
    const Vector relay_part = v.tail(relay.dimension());
    if (relay.shaping().reduce(relay_part - mapped).norm() > kTol) return false;
  }
  return true;
}

int relay_tail_rank(const RelayMapper& mapper, int user, Eigen::Index first_coord) {
  const NestedLatticeCode& relay = mapper.relay_code();
  const std::int64_t tau = relay.tau();
  if (!is_prime(static_cast<int>(tau)) || relay.prime() % tau == 0) {
    throw ArgumentError("relay_tail_rank needs a prime tau coprime to p");
  }
  const Eigen::Index nr = relay.dimension();
  if (first_coord < 0 || first_coord > nr) throw ArgumentError("relay_tail_rank: bad coordinate");
  // With gcd(tau, p) = 1 the coset of a tail vector modulo tau times the
  // projected lattice is the vector itself mod tau.
  IntMatrix m = (relay.integer_basis() * relay.labeling() * mapper.index_block(user)).bottomRows(nr - first_coord);
  for (auto& v : m.reshaped()) v = ((v % tau) + tau) % tau;
  int rank = 0;
  for (Eigen::Index c = 0; c < m.cols() && rank < m.rows(); ++c) {
    Eigen::Index pivot = rank;
    while (pivot < m.rows() && m(pivot, c) == 0) ++pivot;
    if (pivot == m.rows()) continue;
    m.row(pivot).swap(m.row(rank));
    std::int64_t inv = 1;
    while ((m(rank, c) * inv) % tau != 1) ++inv;
    m.row(rank) = (m.row(rank) * inv).unaryExpr([tau](std::int64_t v) { return v % tau; });
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r == rank || m(r, c) == 0) continue;
      const std::int64_t f = m(r, c);
      m.row(r) = (m.row(r) - f * m.row(rank)).unaryExpr([tau](std::int64_t v) { return ((v % tau) + tau) % tau; });
    }
    ++rank;
  }
  return rank;
}

}  // namespace marc
