#include "marc/channel.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace marc {
namespace {

CMatrix sample_cn(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  CMatrix h(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      h(i, j) = {re, im};
    }
  }
  return h;
}

void check_matrix(const CMatrix& h, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (h.rows() != rows || h.cols() != cols) {
    throw ConfigError(std::string(what) + " is " + std::to_string(h.rows()) + "x" +
                      std::to_string(h.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  if (!h.allFinite()) throw ConfigError(std::string(what) + " has non-finite entries");
}

void check_slot(int ell, const MarcConfig& cfg) {
  if (ell < 1 || ell > cfg.L) {
    throw ArgumentError("slot index " + std::to_string(ell) + " outside [1, " +
                        std::to_string(cfg.L) + "]");
  }
}

}  // namespace

ChannelRealization sample_rayleigh(const MarcConfig& cfg, Rng& rng) {
  ChannelRealization real;
  real.H_r.reserve(cfg.K);
  real.H_d.reserve(cfg.K);
  for (int i = 0; i < cfg.K; ++i) real.H_r.push_back(sample_cn(cfg.Mr, cfg.Mu, rng));
  for (int i = 0; i < cfg.K; ++i) real.H_d.push_back(sample_cn(cfg.N, cfg.Mu, rng));
  real.H_d_relay = sample_cn(cfg.N, cfg.Mr, rng);
  return real;
}

ChannelRealization zero_channel(const MarcConfig& cfg) {
  ChannelRealization real;
  for (int i = 0; i < cfg.K; ++i) {
    real.H_r.push_back(CMatrix::Zero(cfg.Mr, cfg.Mu));
    real.H_d.push_back(CMatrix::Zero(cfg.N, cfg.Mu));
  }
  real.H_d_relay = CMatrix::Zero(cfg.N, cfg.Mr);
  return real;
}

void check_dimensions(const ChannelRealization& real, const MarcConfig& cfg) {
  if (static_cast<int>(real.H_r.size()) != cfg.K || static_cast<int>(real.H_d.size()) != cfg.K) {
    throw ConfigError("channel realization has " + std::to_string(real.H_r.size()) +
                      " relay links and " + std::to_string(real.H_d.size()) +
                      " destination links, expected K=" + std::to_string(cfg.K));
  }
  for (int i = 0; i < cfg.K; ++i) {
    check_matrix(real.H_r[i], cfg.Mr, cfg.Mu, "H_r");
    check_matrix(real.H_d[i], cfg.N, cfg.Mu, "H_d");
  }
  check_matrix(real.H_d_relay, cfg.N, cfg.Mr, "H_d_relay");
}

Matrix build_dst_superchannel(const ChannelRealization& real, int ell1, const MarcConfig& cfg) {
  check_dimensions(real, cfg);
  check_slot(ell1, cfg);
  const int lt = cfg.symbols();
  const Eigen::Index nu = cfg.user_dim();
  const Eigen::Index nr = cfg.relay_dim();
  Matrix h = Matrix::Zero(2 * cfg.N * lt, cfg.K * nu + nr);

  const double user_gain = std::sqrt(cfg.rho_d() / cfg.Mu);
  for (int i = 0; i < cfg.K; ++i) {
    h.middleCols(i * nu, nu) = user_gain * kron_identity(lt, embed_complex(real.H_d[i]));
  }
  if (ell1 < cfg.L) {
    const int silent = ell1 * cfg.T;
    const int active = lt - silent;
    const Matrix block = std::sqrt(cfg.rho_d() / cfg.Mr) * embed_complex(real.H_d_relay);
    h.block(2 * cfg.N * silent, cfg.K * nu + 2 * cfg.Mr * silent, 2 * cfg.N * active,
            2 * cfg.Mr * active) = kron_identity(active, block);
  }
  return h;
}

Matrix build_relay_superchannel(const ChannelRealization& real, int ell, const MarcConfig& cfg) {
  check_dimensions(real, cfg);
  check_slot(ell, cfg);
  const int symbols = ell * cfg.T;
  const Eigen::Index cols = 2 * cfg.Mu * symbols;
  Matrix h(2 * cfg.Mr * symbols, cfg.K * cols);
  const double gain = std::sqrt(cfg.rho_r() / cfg.Mu);
  for (int i = 0; i < cfg.K; ++i) {
    h.middleCols(i * cols, cols) = gain * kron_identity(symbols, embed_complex(real.H_r[i]));
  }
  return h;
}

Matrix build_relay_observation(const ChannelRealization& real, int ell, const MarcConfig& cfg) {
  const Matrix compact = build_relay_superchannel(real, ell, cfg);
  const Eigen::Index cols = 2 * cfg.Mu * ell * cfg.T;
  const Eigen::Index nu = cfg.user_dim();
  Matrix h = Matrix::Zero(compact.rows(), cfg.K * nu);
  for (int i = 0; i < cfg.K; ++i) h.block(0, i * nu, compact.rows(), cols) = compact.middleCols(i * cols, cols);
  return h;
}

SuperChannel::SuperChannel(ChannelRealization real, MarcConfig cfg, int ell1)
    : real_(std::move(real)), cfg_(std::move(cfg)), ell1_(ell1) {
  cfg_.validate();
  dst_ = build_dst_superchannel(real_, ell1_, cfg_);
}

Eigen::Index SuperChannel::column_offset(int transmitter) const {
  return static_cast<Eigen::Index>(transmitter) * cfg_.user_dim();
}

Eigen::Index SuperChannel::column_count(int transmitter) const {
  return transmitter == cfg_.K ? cfg_.relay_dim() : cfg_.user_dim();
}

}  // namespace marc
