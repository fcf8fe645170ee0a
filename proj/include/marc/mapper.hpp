#pragma once

#include <string_view>
#include <vector>

#include "marc/lattice.hpp"
#include "marc/rng.hpp"
#include "marc/types.hpp"

namespace marc {

enum class MapperKind { OneToOneLinear, ModuloSum };

std::string_view to_string(MapperKind kind);
MapperKind parse_mapper_kind(std::string_view s);

// Relay codeword selection at the index level. Both kinds are linear over the
// message indices: relay index = A [z_1; ...; z_K] mod tau_r with A a stack of
// identities (one-to-one) or a row of identities (modulo sum).
class RelayMapper {
 public:
  RelayMapper(MapperKind kind, std::vector<NestedLatticeCode> user_codes, NestedLatticeCode relay_code);

  MapperKind kind() const { return kind_; }
  int users() const { return static_cast<int>(users_.size()); }
  const std::vector<NestedLatticeCode>& user_codes() const { return users_; }
  const NestedLatticeCode& relay_code() const { return relay_; }

  // True when all nesting ratios agree, which the lattice-decodable generator needs.
  bool is_lattice_decodable() const;

  // Columns of A belonging to user i.
  IntMatrix index_block(int user) const;

  IntVector map_indices(const std::vector<IntVector>& user_indices) const;

 private:
  MapperKind kind_;
  std::vector<NestedLatticeCode> users_;
  NestedLatticeCode relay_;
};

// G = diag(G_1, ..., G_K, G_r) * S with
//   S = [ I           0         ]
//       [ A     tau_r I_{n_r}   ]
// so that {G z} is exactly the set of super-lattice points whose relay
// component lies in the coset selected by the users' cosets. Column order:
// user index blocks, then the relay shaping block.
Matrix build_superlattice_generator(const RelayMapper& mapper);

// Part of the super-lattice seen by a decoder that has fixed the messages of
// some users. Rows are the residual users (in increasing order) followed by the
// relay when included; columns are the residual users' index blocks followed
// by the relay shaping block.
struct SuperLatticeSection {
  std::vector<int> residual_users;
  bool relay = false;
  Matrix generator;
  Vector offset;  // contribution of the fixed users to the relay rows
};

// known_indices[i] is read only for users outside `residual_users`.
SuperLatticeSection superlattice_section(const RelayMapper& mapper,
                                         const std::vector<int>& residual_users,
                                         const std::vector<IntVector>& known_indices,
                                         bool include_relay);

// For random integer z, checks that (G z)_relay mod Lambda_{S_r} equals the
// mapped coset leader of the users' components. Returns false on the first
// mismatch beyond 1e-9.
bool coset_consistency_check(const RelayMapper& mapper, const Matrix& G, int trials, Rng& rng);

// Rank over Z_tau of the map from user `user`'s message index to the coset of
// the relay codeword restricted to coordinates [first_coord, n_r), i.e. the
// part a decode-and-forward relay still sends after a late decision. Full rank
// (the user's dimension) means no single-user index change is invisible there.
// Needs a prime relay tau that does not divide p.
int relay_tail_rank(const RelayMapper& mapper, int user, Eigen::Index first_coord);

}  // namespace marc
