#pragma once

#include <vector>

#include "marc/config.hpp"
#include "marc/lattice.hpp"
#include "marc/mapper.hpp"
#include "marc/sphere_decoder.hpp"
#include "marc/types.hpp"

namespace marc {

// MMSE-GDFE pair for y = H x + n with unit SNR normalization:
// B^T B = I + H^T H (B upper triangular), F = B^{-T} H^T.
struct GdfeFilters {
  Matrix F;
  Matrix B;
};

GdfeFilters compute_gdfe(const Matrix& H);

struct TransmitState {
  Vector u;       // dither, uniform over the shaping Voronoi region
  Vector leader;  // coset leader of the message
  Vector x;       // channel input (leader - u) mod Lambda_S
};

// x = (leader(z_msg) - u) mod Lambda_S.
Vector encode(const NestedLatticeCode& code, const IntVector& z_msg, const Vector& u);
TransmitState make_transmit_state(const NestedLatticeCode& code, const IntVector& z_msg, Vector u);

// Shared dithers of one codeword block (known to every receiver).
struct Dithers {
  std::vector<Vector> users;
  Vector relay;
};

// argmin_z |F y + B u - B G z|^2 over all integer z.
SphereDecodeResult one_stage_search(const Vector& y, const Matrix& G, const GdfeFilters& filters,
                                    const Vector& u, const SphereDecodeOptions& options = {});
IntVector one_stage_decode(const Vector& y, const Matrix& G, const GdfeFilters& filters,
                           const Vector& u, const SphereDecodeOptions& options = {});

// Message indices of the users held in the leading blocks of a super-lattice
// solution, each reduced mod its nesting ratio.
std::vector<IntVector> messages_from_solution(const RelayMapper& mapper, const IntVector& z);

struct DecodeNodeResult {
  int stage = 0;  // k, 1-based
  int index = 0;  // j, 1-based from the left
  std::vector<int> residual_users;
  std::vector<IntVector> messages;  // one per residual user
  double metric = 0.0;
  bool ok = false;  // false when the node's search failed
};

struct DecodeResult {
  std::vector<IntVector> messages;  // empty when no candidate survived
  std::vector<DecodeNodeResult> nodes;
  std::vector<double> candidate_distances;  // |y - H x_hat|^2 per leaf (K-stage only)
  int chosen_leaf = -1;
  bool budget_exceeded = false;
};

// Received signal model seen by one receiver. Columns of H are the users'
// codeword blocks in order, followed by the relay block when relay_present.
struct ReceiverModel {
  const RelayMapper* mapper = nullptr;
  Matrix H;
  bool relay_present = false;
  Dithers dithers;
  SphereDecodeOptions sphere;
};

// Destination decoder. OneStage runs the root node only; KStage builds the full
// decoding tree (K! leaves) and keeps the candidate whose reconstruction is
// nearest to y.
DecodeResult decode_messages(const Vector& y, const ReceiverModel& model, DecoderKind kind);

DecodeResult k_stage_decode(const Vector& y, const ReceiverModel& model);

// Relay-side decoding over the users' super-lattice only: `H_relay` is the
// zero-padded observation matrix of build_relay_observation.
DecodeResult relay_decode(const Vector& y_relay, const Matrix& H_relay, const RelayMapper& mapper,
                          const Dithers& dithers, DecoderKind kind,
                          const SphereDecodeOptions& sphere = {});

// Reconstructed super transmit vector for a full message set; the relay block
// is included when `with_relay`.
Vector reconstruct(const RelayMapper& mapper, const std::vector<IntVector>& messages,
                   const Dithers& dithers, bool with_relay);

}  // namespace marc
