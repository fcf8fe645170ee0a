#include "marc/rates.hpp"

#include <bit>
#include <cmath>

namespace marc {
namespace {

// Complex per-symbol block [sqrt(g/M) H_i for i in users (, relay)].
CMatrix stack_columns(const std::vector<CMatrix>& links, unsigned users, double gain,
                      const CMatrix* extra, double extra_gain) {
  Eigen::Index cols = 0;
  Eigen::Index rows = links.empty() ? 0 : links.front().rows();
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (users & (1u << i)) cols += links[i].cols();
  }
  if (extra != nullptr) {
    cols += extra->cols();
    rows = extra->rows();
  }
  CMatrix a(rows, cols);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!(users & (1u << i))) continue;
    a.middleCols(at, links[i].cols()) = gain * links[i];
    at += links[i].cols();
  }
  if (extra != nullptr) a.middleCols(at, extra->cols()) = extra_gain * *extra;
  return a;
}

// log2 det(I + A^H A) for a complex block = R_unG of its real embedding.
double complex_bits(const CMatrix& a) { return 2.0 * rate_unG(a); }

double subset_rate(const std::vector<double>& rates, unsigned mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (mask & (1u << i)) s += rates[i];
  }
  return s;
}

void check_spec(const RateRegionSpec& spec, const MarcConfig& cfg) {
  if (static_cast<int>(spec.rates.size()) != cfg.K) throw ConfigError("rate vector length != K");
  if (cfg.K > 10) throw ConfigError("subset enumeration is limited to K <= 10");
}

}  // namespace

RateRegionSpec RateRegionSpec::from_config(const MarcConfig& cfg, Scheme scheme, DecoderKind decoder) {
  return {scheme, decoder, cfg.rates, cfg.relay_rate};
}

double dst_rate_bits(const ChannelRealization& real, const MarcConfig& cfg, int ell1, unsigned users,
                     bool with_relay) {
  const double ug = std::sqrt(cfg.rho_d() / cfg.Mu);
  const double rg = std::sqrt(cfg.rho_d() / cfg.Mr);
  const int silent = with_relay ? ell1 * cfg.T : cfg.symbols();
  const int active = cfg.symbols() - silent;
  double bits = 0.0;
  if (silent > 0 && users != 0) bits += silent * complex_bits(stack_columns(real.H_d, users, ug, nullptr, 0.0));
  if (active > 0) bits += active * complex_bits(stack_columns(real.H_d, users, ug, &real.H_d_relay, rg));
  return bits;
}

double relay_rate_bits(const ChannelRealization& real, const MarcConfig& cfg, int ell, unsigned users) {
  if (users == 0) return 0.0;
  const double g = std::sqrt(cfg.rho_r() / cfg.Mu);
  return ell * cfg.T * complex_bits(stack_columns(real.H_r, users, g, nullptr, 0.0));
}

double one_stage_relay_loss(const MarcConfig& cfg, int s) {
  return cfg.Mu * s * std::log2(static_cast<double>(cfg.K) / s);
}

double one_stage_dst_loss(const MarcConfig& cfg, int s) {
  const double num = cfg.K * cfg.Mu + cfg.Mr;
  const double den = s * cfg.Mu + cfg.Mr;
  return den * std::log2(num / den);
}

double modulo_sum_loss(const MarcConfig& cfg, int s, DecoderKind decoder) {
  const double den = s * cfg.Mu;
  const double num = decoder == DecoderKind::KStage ? s * cfg.Mu + cfg.Mr : cfg.K * cfg.Mu + cfg.Mr;
  return cfg.Mu * s * std::log2(num / den);
}

int decision_time(const ChannelRealization& real, const RateRegionSpec& spec, const MarcConfig& cfg) {
  check_spec(spec, cfg);
  const double lt = cfg.symbols();
  const unsigned full = (1u << cfg.K) - 1;
  for (int ell = 1; ell < cfg.L; ++ell) {
    bool decodable = true;
    for (unsigned mask = 1; mask <= full && decodable; ++mask) {
      const double sum = subset_rate(spec.rates, mask);
      if (sum == 0.0) continue;
      double bound = relay_rate_bits(real, cfg, ell, mask) / lt;
      if (spec.decoder == DecoderKind::OneStage) bound -= one_stage_relay_loss(cfg, std::popcount(mask));
      decodable = sum < bound;
    }
    if (decodable) return ell;
  }
  return cfg.L;
}

OutageVerdict outage_indicator(const ChannelRealization& real, const RateRegionSpec& spec,
                               const MarcConfig& cfg, const OutageOptions& options) {
  check_spec(spec, cfg);
  OutageVerdict v;
  v.ell1 = decision_time(real, spec, cfg);
  const double lt = cfg.symbols();
  const unsigned full = (1u << cfg.K) - 1;
  for (unsigned mask = 1; mask <= full; ++mask) {
    const double sum = subset_rate(spec.rates, mask);
    if (sum == 0.0) continue;
    const int s = std::popcount(mask);
    double bound = dst_rate_bits(real, cfg, v.ell1, mask, true) / lt;
    if (spec.decoder == DecoderKind::OneStage) bound -= one_stage_dst_loss(cfg, s);
    bool violated = !(sum < bound);
    if (!violated && spec.scheme == Scheme::MSMLC && s > 1) {
      const double extra = dst_rate_bits(real, cfg, v.ell1, mask, false) / lt -
                           modulo_sum_loss(cfg, s, spec.decoder) + spec.relay_rate;
      violated = !(sum < extra);
    }
    if (violated) v.violated_subsets.push_back(mask);
  }
  v.in_outage = !v.violated_subsets.empty();
  if (options.relay_silent_is_outage && v.ell1 == cfg.L) {
    v.in_outage = true;
    if (v.violated_subsets.empty()) v.violated_subsets.push_back(full);
  }
  return v;
}

InclusionReport region_inclusion_check(const ChannelRealization& real, const MarcConfig& cfg,
                                       int samples, Rng& rng) {
  double ceiling = 0.0;
  for (int i = 0; i < cfg.K; ++i) {
    ceiling = std::max(ceiling, dst_rate_bits(real, cfg, 1, 1u << i, true) / cfg.symbols());
  }
  ceiling += 1.0;
  std::uniform_real_distribution<double> rate(0.0, ceiling);
  InclusionReport report;
  for (int n = 0; n < samples; ++n) {
    RateRegionSpec spec;
    spec.rates.resize(cfg.K);
    for (double& r : spec.rates) r = rate(rng);
    std::uniform_real_distribution<double> relay(0.0, 2.0 * ceiling * cfg.K);
    spec.relay_rate = relay(rng);

    spec.scheme = Scheme::OMLC;
    spec.decoder = DecoderKind::KStage;
    const bool k_stage = outage_indicator(real, spec, cfg).in_outage;
    spec.decoder = DecoderKind::OneStage;
    const bool one_stage = outage_indicator(real, spec, cfg).in_outage;
    spec.scheme = Scheme::MSMLC;
    spec.decoder = DecoderKind::KStage;
    const bool modulo_sum = outage_indicator(real, spec, cfg).in_outage;

    if (!one_stage && k_stage) ++report.one_stage_violations;
    if (!modulo_sum && k_stage) ++report.modulo_sum_violations;
    ++report.samples;
  }
  return report;
}

}  // namespace marc
