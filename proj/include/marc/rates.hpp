#pragma once

#include <cmath>
#include <vector>

#include "marc/channel.hpp"
#include "marc/config.hpp"
#include "marc/rng.hpp"
#include "marc/types.hpp"

namespace marc {

struct RateRegionSpec {
  Scheme scheme = Scheme::OMLC;
  DecoderKind decoder = DecoderKind::KStage;
  std::vector<double> rates;  // R_1..R_K, BPCU
  double relay_rate = 0.0;    // R_{K+1}, BPCU

  static RateRegionSpec from_config(const MarcConfig& cfg, Scheme scheme, DecoderKind decoder);
};

struct OutageVerdict {
  bool in_outage = false;
  int ell1 = 0;
  // User subsets (bit i = user i) with at least one violated constraint.
  std::vector<unsigned> violated_subsets;
};

struct OutageOptions {
  // Also declare outage whenever the relay stays silent.
  bool relay_silent_is_outage = false;
};

// 1/2 log2 det(I + H^H H), through the smaller of the two Gram matrices.
template <typename Derived>
double rate_unG(const Eigen::MatrixBase<Derived>& H) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (H.size() == 0) return 0.0;
  const bool wide = H.rows() < H.cols();
  const Eigen::Index m = wide ? H.rows() : H.cols();
  Mat gram = Mat::Identity(m, m);
  if (wide) {
    gram.noalias() += H * H.adjoint();
  } else {
    gram.noalias() += H.adjoint() * H;
  }
  Eigen::LLT<Mat> llt(gram);
  double bits = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) bits += std::log2(std::abs(llt.matrixLLT()(i, i)));
  return bits;
}

// R_unG of the destination super-channel restricted to the users in `users`
// (bit mask) and, when `with_relay`, the relay block at decision slot ell1.
// Evaluated from the per-symbol blocks and their multiplicities.
double dst_rate_bits(const ChannelRealization& real, const MarcConfig& cfg, int ell1, unsigned users,
                     bool with_relay);

// R_unG of the relay super-channel after ell listening slots for the users in `users`.
double relay_rate_bits(const ChannelRealization& real, const MarcConfig& cfg, int ell, unsigned users);

// Rate losses of the one-stage decoder and of the modulo-sum ambiguity, in BPCU.
double one_stage_relay_loss(const MarcConfig& cfg, int subset_size);
double one_stage_dst_loss(const MarcConfig& cfg, int subset_size);
double modulo_sum_loss(const MarcConfig& cfg, int subset_size, DecoderKind decoder);

// Earliest slot ell in 1..L-1 after which the relay rate constraints hold for
// every user subset; L when there is none (relay silent).
int decision_time(const ChannelRealization& real, const RateRegionSpec& spec, const MarcConfig& cfg);

OutageVerdict outage_indicator(const ChannelRealization& real, const RateRegionSpec& spec,
                               const MarcConfig& cfg, const OutageOptions& options = {});

struct InclusionReport {
  int samples = 0;
  int one_stage_violations = 0;   // one-stage feasible but K-stage infeasible
  int modulo_sum_violations = 0;  // MS-MLC feasible but O-MLC infeasible
  bool ok() const { return one_stage_violations == 0 && modulo_sum_violations == 0; }
};

// Samples random rate vectors on one realization and checks that the one-stage
// and modulo-sum regions sit inside the O-MLC K-stage region.
InclusionReport region_inclusion_check(const ChannelRealization& real, const MarcConfig& cfg,
                                       int samples, Rng& rng);

}  // namespace marc
