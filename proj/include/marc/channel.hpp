#pragma once

#include <vector>

#include "marc/config.hpp"
#include "marc/rng.hpp"
#include "marc/types.hpp"

namespace marc {

// One block-fading draw. Matrices are receive-antennas x transmit-antennas.
struct ChannelRealization {
  std::vector<CMatrix> H_r;  // user i -> relay, Mr x Mu
  std::vector<CMatrix> H_d;  // user i -> destination, N x Mu
  CMatrix H_d_relay;         // relay -> destination, N x Mr
};

// i.i.d. CN(0,1) entries. The source-relay offset is an SNR scale applied at
// super-channel assembly, not here.
ChannelRealization sample_rayleigh(const MarcConfig& cfg, Rng& rng);

// All-zero realization with the dimensions of cfg.
ChannelRealization zero_channel(const MarcConfig& cfg);

// Throws ConfigError if the realization does not match cfg or is not finite.
void check_dimensions(const ChannelRealization& real, const MarcConfig& cfg);

// Real embedding [[Re, -Im], [Im, Re]] of a complex matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::RealScalar, Eigen::Dynamic, Eigen::Dynamic> embed_complex(
    const Eigen::MatrixBase<Derived>& H) {
  using Real = typename Derived::RealScalar;
  const auto m = H.rows();
  const auto n = H.cols();
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> out(2 * m, 2 * n);
  out.topLeftCorner(m, n) = H.real();
  out.topRightCorner(m, n) = -H.imag();
  out.bottomLeftCorner(m, n) = H.imag();
  out.bottomRightCorner(m, n) = H.real();
  return out;
}

// [Re(x); Im(x)] for a single vector symbol.
template <typename Derived>
Eigen::Matrix<typename Derived::RealScalar, Eigen::Dynamic, 1> embed_vector(
    const Eigen::MatrixBase<Derived>& x) {
  using Real = typename Derived::RealScalar;
  Eigen::Matrix<Real, Eigen::Dynamic, 1> out(2 * x.size());
  out.head(x.size()) = x.real();
  out.tail(x.size()) = x.imag();
  return out;
}

// I_count (x) block.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron_identity(
    Eigen::Index count, const Eigen::MatrixBase<Derived>& block) {
  const auto r = block.rows();
  const auto c = block.cols();
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(count * r,
                                                                                    count * c);
  for (Eigen::Index t = 0; t < count; ++t) out.block(t * r, t * c, r, c) = block;
  return out;
}

// 2NLT x 2(K Mu + Mr)LT destination super-channel for decision slot ell1. The
// relay column block is zero over the first ell1*T symbols and entirely zero
// when ell1 == L.
Matrix build_dst_superchannel(const ChannelRealization& real, int ell1, const MarcConfig& cfg);

// 2 Mr ellT x 2 K Mu ellT relay super-channel after ell listening slots.
Matrix build_relay_superchannel(const ChannelRealization& real, int ell, const MarcConfig& cfg);

// Relay super-channel zero-padded to the full codeword length:
// 2 Mr ellT x 2 K Mu LT. Users' columns past symbol ellT are zero.
Matrix build_relay_observation(const ChannelRealization& real, int ell, const MarcConfig& cfg);

// Destination and relay super-channels of one draw with the DDF phase split.
class SuperChannel {
 public:
  SuperChannel(ChannelRealization real, MarcConfig cfg, int ell1);

  const Matrix& H_dst() const { return dst_; }
  Matrix H_relay_of(int ell) const { return build_relay_superchannel(real_, ell, cfg_); }
  int ell1() const { return ell1_; }
  bool relay_silent() const { return ell1_ == cfg_.L; }

  // First column of transmitter i in H_dst (i == K is the relay).
  Eigen::Index column_offset(int transmitter) const;
  Eigen::Index column_count(int transmitter) const;

  const ChannelRealization& realization() const { return real_; }
  const MarcConfig& config() const { return cfg_; }

 private:
  ChannelRealization real_;
  MarcConfig cfg_;
  int ell1_;
  Matrix dst_;
};

}  // namespace marc
