#include <doctest.h>

#include <bit>

#include "helpers.hpp"
#include "marc/channel.hpp"
#include "marc/rates.hpp"

using namespace marc;

namespace {

MarcConfig small_config(int K, int Mu, int Mr, int N, int L, int T) {
  MarcConfig c;
  c.K = K;
  c.Mu = Mu;
  c.Mr = Mr;
  c.N = N;
  c.L = L;
  c.T = T;
  c.rates.assign(K, 1.0);
  c.relay_rate = K;
  return c;
}

Matrix select_columns(const Matrix& H, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& blocks) {
  Eigen::Index cols = 0;
  for (auto& b : blocks) cols += b.second;
  Matrix out(H.rows(), cols);
  Eigen::Index at = 0;
  for (auto& b : blocks) {
    out.middleCols(at, b.second) = H.middleCols(b.first, b.second);
    at += b.second;
  }
  return out;
}

ChannelRealization scaled(ChannelRealization r, double dst, double relay) {
  for (auto& h : r.H_d) h *= dst;
  for (auto& h : r.H_r) h *= relay;
  r.H_d_relay *= dst;
  return r;
}

}  // namespace

TEST_CASE("R_unG closed forms") {
  CHECK(rate_unG(Matrix::Zero(3, 2)) == 0.0);
  CHECK(rate_unG(Matrix::Ones(1, 1)) == doctest::Approx(0.5));
  CHECK(rate_unG(Matrix(0, 0)) == 0.0);
  Rng rng(51);
  for (int t = 0; t < 20; ++t) {
    std::uniform_int_distribution<int> d(1, 6);
    const Matrix H = test::gaussian(d(rng), d(rng), rng, 2.0);
    const Vector s = H.jacobiSvd().singularValues();
    double oracle = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) oracle += 0.5 * std::log2(1.0 + s[i] * s[i]);
    CHECK(rate_unG(H) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(rate_unG(H.transpose()) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(rate_unG(2.0 * H) >= rate_unG(H));

    const CMatrix C = test::complex_gaussian(d(rng), d(rng), rng);
    CHECK(rate_unG(embed_complex(C)) == doctest::Approx(2.0 * rate_unG(C)).epsilon(1e-10));
  }
}

TEST_CASE("super-channel rates match dense evaluation") {
  Rng rng(52);
  for (const MarcConfig& base : {small_config(2, 1, 1, 1, 2, 2), small_config(2, 1, 2, 2, 4, 1),
                                 small_config(3, 2, 1, 2, 2, 2)}) {
    for (int t = 0; t < 5; ++t) {
      MarcConfig cfg = base;
      cfg.rho_d_db = 15.0;
      cfg.rho_r_db = 12.0;
      const ChannelRealization real = sample_rayleigh(cfg, rng);
      const Eigen::Index nu = cfg.user_dim();
      const unsigned full = (1u << cfg.K) - 1;
      for (int ell = 1; ell <= cfg.L; ++ell) {
        const Matrix Hd = build_dst_superchannel(real, ell, cfg);
        for (unsigned mask = 1; mask <= full; ++mask) {
          std::vector<std::pair<Eigen::Index, Eigen::Index>> users;
          for (int i = 0; i < cfg.K; ++i)
            if (mask & (1u << i)) users.push_back({i * nu, nu});
          auto with_relay = users;
          with_relay.push_back({cfg.K * nu, cfg.relay_dim()});
          CHECK(dst_rate_bits(real, cfg, ell, mask, true) ==
                doctest::Approx(rate_unG(select_columns(Hd, with_relay))).epsilon(1e-9));
          CHECK(dst_rate_bits(real, cfg, ell, mask, false) ==
                doctest::Approx(rate_unG(select_columns(Hd, users))).epsilon(1e-9));

          const Matrix Hr = build_relay_superchannel(real, ell, cfg);
          const Eigen::Index cr = 2 * cfg.Mu * ell * cfg.T;
          std::vector<std::pair<Eigen::Index, Eigen::Index>> rcols;
          for (int i = 0; i < cfg.K; ++i)
            if (mask & (1u << i)) rcols.push_back({i * cr, cr});
          CHECK(relay_rate_bits(real, cfg, ell, mask) ==
                doctest::Approx(rate_unG(select_columns(Hr, rcols))).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("rate losses") {
  const MarcConfig c = small_config(2, 1, 1, 1, 2, 1);
  CHECK(one_stage_relay_loss(c, 1) == doctest::Approx(1.0));
  CHECK(one_stage_relay_loss(c, 2) == 0.0);
  CHECK(one_stage_dst_loss(c, 1) == doctest::Approx(2.0 * std::log2(1.5)));
  CHECK(one_stage_dst_loss(c, 2) == 0.0);
  CHECK(modulo_sum_loss(c, 1, DecoderKind::KStage) == doctest::Approx(1.0));
  CHECK(modulo_sum_loss(c, 1, DecoderKind::OneStage) == doctest::Approx(std::log2(3.0)));
  CHECK(modulo_sum_loss(c, 2, DecoderKind::KStage) == doctest::Approx(2.0 * std::log2(1.5)));
  CHECK(modulo_sum_loss(c, 2, DecoderKind::OneStage) == doctest::Approx(2.0 * std::log2(1.5)));
  const MarcConfig big = small_config(4, 2, 3, 2, 3, 1);
  for (int s = 1; s <= 4; ++s) {
    CHECK(one_stage_relay_loss(big, s) >= 0.0);
    CHECK(one_stage_dst_loss(big, s) >= 0.0);
    CHECK(modulo_sum_loss(big, s, DecoderKind::OneStage) >= modulo_sum_loss(big, s, DecoderKind::KStage));
  }
}

TEST_CASE("decision time limits") {
  MarcConfig cfg = small_config(2, 1, 1, 1, 4, 1);
  cfg.rates = {2.0, 2.0};
  const RateRegionSpec spec = RateRegionSpec::from_config(cfg, Scheme::OMLC, DecoderKind::KStage);
  const ChannelRealization zero = zero_channel(cfg);
  CHECK(decision_time(zero, spec, cfg) == cfg.L);
  const OutageVerdict v = outage_indicator(zero, spec, cfg);
  CHECK(v.in_outage);
  CHECK(v.violated_subsets.size() == 3);

  Rng rng(53);
  const ChannelRealization strong = scaled(sample_rayleigh(cfg, rng), 1e12, 1e12);
  CHECK(decision_time(strong, spec, cfg) == 1);
  CHECK_FALSE(outage_indicator(strong, spec, cfg).in_outage);

  RateRegionSpec nothing = spec;
  nothing.rates = {0.0, 0.0};
  CHECK(decision_time(zero, nothing, cfg) == 1);
  CHECK_FALSE(outage_indicator(zero, nothing, cfg).in_outage);

  RateRegionSpec wrong = spec;
  wrong.rates = {1.0};
  CHECK_THROWS_AS(decision_time(zero, wrong, cfg), ConfigError);
}

TEST_CASE("decision time agrees with a direct slot scan") {
  Rng rng(54);
  MarcConfig cfg = small_config(2, 1, 1, 1, 6, 1);
  cfg.rates = {1.5, 1.0};
  cfg.rho_r_db = cfg.rho_d_db = 5.0;
  for (DecoderKind dec : {DecoderKind::KStage, DecoderKind::OneStage}) {
    const RateRegionSpec spec = RateRegionSpec::from_config(cfg, Scheme::OMLC, dec);
    for (int t = 0; t < 200; ++t) {
      const ChannelRealization real = sample_rayleigh(cfg, rng);
      int expected = cfg.L;
      for (int ell = 1; ell < cfg.L && expected == cfg.L; ++ell) {
        const Matrix Hr = build_relay_superchannel(real, ell, cfg);
        const Eigen::Index c = 2 * ell;
        const double lt = cfg.L;
        const double a = rate_unG(Hr.leftCols(c)) / lt, b = rate_unG(Hr.rightCols(c)) / lt;
        const double ab = rate_unG(Hr) / lt;
        const double l1 = dec == DecoderKind::OneStage ? 1.0 : 0.0;
        if (1.5 < a - l1 && 1.0 < b - l1 && 2.5 < ab) expected = ell;
      }
      CHECK(decision_time(real, spec, cfg) == expected);
    }
  }
}

TEST_CASE("decision time is monotone in the relay SNR") {
  Rng rng(55);
  MarcConfig cfg = small_config(2, 1, 1, 1, 5, 1);
  cfg.rates = {1.0, 1.0};
  const RateRegionSpec spec = RateRegionSpec::from_config(cfg, Scheme::OMLC, DecoderKind::KStage);
  for (int t = 0; t < 200; ++t) {
    const ChannelRealization real = sample_rayleigh(cfg, rng);
    int prev = cfg.L + 1;
    for (double g : {0.1, 0.3, 1.0, 3.0, 10.0}) {
      const int ell = decision_time(scaled(real, 1.0, g), spec, cfg);
      CHECK(ell <= prev);
      prev = ell;
    }
  }
}

TEST_CASE("outage is monotone in the rates") {
  Rng rng(56);
  MarcConfig cfg = small_config(2, 1, 1, 1, 3, 1);
  cfg.rho_d_db = cfg.rho_r_db = 10.0;
  for (int t = 0; t < 300; ++t) {
    const ChannelRealization real = sample_rayleigh(cfg, rng);
    RateRegionSpec spec{Scheme::OMLC, DecoderKind::KStage, {2.0, 2.0}, 4.0};
    bool prev = true;
    for (double r : {3.0, 2.0, 1.0, 0.5, 0.1}) {
      spec.rates = {r, r};
      const bool out = outage_indicator(real, spec, cfg).in_outage;
      if (!prev) CHECK_FALSE(out);
      prev = out;
    }
  }
}

TEST_CASE("per-draw dominance of the K-stage O-MLC region") {
  Rng rng(57);
  for (const MarcConfig& base : {small_config(2, 1, 1, 1, 2, 1), small_config(3, 1, 2, 2, 3, 1)}) {
    MarcConfig cfg = base;
    cfg.rho_d_db = cfg.rho_r_db = 12.0;
    cfg.rates.assign(cfg.K, 1.0);
    for (int t = 0; t < 300; ++t) {
      const ChannelRealization real = sample_rayleigh(cfg, rng);
      auto out = [&](Scheme s, DecoderKind d) {
        return outage_indicator(real, {s, d, cfg.rates, 1.0}, cfg).in_outage;
      };
      const bool ok = out(Scheme::OMLC, DecoderKind::KStage);
      if (ok) {
        CHECK(out(Scheme::OMLC, DecoderKind::OneStage));
        CHECK(out(Scheme::MSMLC, DecoderKind::KStage));
        CHECK(out(Scheme::MSMLC, DecoderKind::OneStage));
      }
      CHECK(decision_time(real, {Scheme::OMLC, DecoderKind::KStage, cfg.rates, 1.0}, cfg) <=
            decision_time(real, {Scheme::OMLC, DecoderKind::OneStage, cfg.rates, 1.0}, cfg));
      Rng r2(rng());
      CHECK(region_inclusion_check(real, cfg, 5, r2).ok());
    }
  }
}

TEST_CASE("modulo sum matches one-to-one for a large relay rate") {
  Rng rng(58);
  MarcConfig cfg = small_config(2, 1, 1, 1, 2, 1);
  cfg.rates = {2.0, 2.0};
  cfg.rho_d_db = cfg.rho_r_db = 15.0;
  const double threshold = 4.0 + 2.0 * std::log2(1.5);
  int differ_low = 0;
  for (int t = 0; t < 500; ++t) {
    const ChannelRealization real = sample_rayleigh(cfg, rng);
    const bool o = outage_indicator(real, {Scheme::OMLC, DecoderKind::KStage, cfg.rates, 4.0}, cfg).in_outage;
    const bool m = outage_indicator(real, {Scheme::MSMLC, DecoderKind::KStage, cfg.rates, threshold + 1e-9}, cfg).in_outage;
    CHECK(o == m);
    differ_low += o != outage_indicator(real, {Scheme::MSMLC, DecoderKind::KStage, cfg.rates, 0.0}, cfg).in_outage;
  }
  CHECK(differ_low > 0);
}

TEST_CASE("silent relay outage option") {
  MarcConfig cfg = small_config(2, 1, 1, 1, 2, 1);
  Rng rng(59);
  ChannelRealization real = sample_rayleigh(cfg, rng);
  for (auto& h : real.H_r) h.setZero();
  for (auto& h : real.H_d) h *= 1e6;
  const RateRegionSpec spec{Scheme::OMLC, DecoderKind::KStage, {1.0, 1.0}, 2.0};
  const OutageVerdict plain = outage_indicator(real, spec, cfg);
  CHECK(plain.ell1 == cfg.L);
  CHECK_FALSE(plain.in_outage);
  const OutageVerdict strict = outage_indicator(real, spec, cfg, {true});
  CHECK(strict.in_outage);
  CHECK(strict.violated_subsets == std::vector<unsigned>{3u});
}
