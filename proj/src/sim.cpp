#include "marc/sim.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

#include "marc/channel.hpp"
#include "marc/codec.hpp"
#include "marc/rng.hpp"

namespace marc {
namespace {

struct Tally {
  std::int64_t failures = 0;
  std::int64_t budget = 0;
};

// Runs `body(trial)` for trial in [0, trials) over `threads` workers with a
// strided split. Counts are summed, so the result does not depend on the split.
template <typename Body>
Tally parallel_count(std::int64_t trials, int threads, Body body) {
  threads = std::max(1, threads);
  if (threads > trials) threads = static_cast<int>(std::max<std::int64_t>(1, trials));
  std::vector<Tally> partial(threads);
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](int w) {
    try {
      for (std::int64_t t = w; t < trials; t += threads) body(t, partial[w]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  Tally total;
  for (int w = 0; w < threads; ++w) {
    if (errors[w]) std::rethrow_exception(errors[w]);
    total.failures += partial[w].failures;
    total.budget += partial[w].budget;
  }
  return total;
}

CurvePoint make_point(double snr_db, std::int64_t trials, const Tally& tally) {
  CurvePoint p;
  p.snr_db = snr_db;
  p.trials = trials;
  p.failures = tally.failures;
  p.probability = static_cast<double>(tally.failures) / static_cast<double>(trials);
  p.wilson_halfwidth = wilson_halfwidth(tally.failures, trials);
  p.budget_exceeded = tally.budget;
  return p;
}

Curve empty_curve(const SimPlan& plan) {
  Curve c;
  c.mode = plan.mode;
  c.scheme = plan.spec.scheme;
  c.decoder = plan.spec.decoder;
  c.seed = plan.master_seed;
  return c;
}

IntVector random_message(int n, int tau, Rng& rng) {
  std::uniform_int_distribution<std::int64_t> digit(0, tau - 1);
  IntVector z(n);
  for (int i = 0; i < n; ++i) z[i] = digit(rng);
  return z;
}

Vector gaussian(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

bool same_messages(const std::vector<IntVector>& a, const std::vector<IntVector>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() || a[i] != b[i]) return false;
  }
  return true;
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string file_stem(const Curve& curve) {
  return std::string(to_string(curve.mode)) + "_" + std::string(to_string(curve.scheme)) + "_" +
         std::string(to_string(curve.decoder)) + "_seed" + std::to_string(curve.seed);
}

// Up to kTries random labelings; the first with full tail rank for every user
// and decision slot wins, otherwise the best seen.
NestedLatticeCode identifiable_labeling(const SimPlan& plan, const std::vector<NestedLatticeCode>& users,
                                        const NestedLatticeCode& relay, Rng& rng) {
  constexpr int kTries = 1000;
  const MarcConfig& cfg = plan.cfg;
  const MapperKind kind =
      plan.spec.scheme == Scheme::OMLC ? MapperKind::OneToOneLinear : MapperKind::ModuloSum;
  auto score = [&](const NestedLatticeCode& candidate) {
    const RelayMapper m(kind, users, candidate);
    int total = 0;
    for (int ell = 1; ell < cfg.L; ++ell) {
      for (int u = 0; u < cfg.K; ++u) total += relay_tail_rank(m, u, 2 * cfg.Mr * ell * cfg.T);
    }
    return total;
  };
  int full = 0;
  for (const auto& u : users) full += u.dimension();
  full *= cfg.L - 1;
  NestedLatticeCode best = relay;
  int best_score = score(relay);
  for (int t = 0; t < kTries && best_score < full; ++t) {
    NestedLatticeCode candidate = relay.with_labeling(random_unimodular(relay.dimension(), rng));
    const int sc = score(candidate);
    if (sc > best_score) {
      best = candidate;
      best_score = sc;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(RelayLabeling l) {
  return l == RelayLabeling::Systematic ? "systematic" : "identifiable";
}

RelayLabeling parse_relay_labeling(std::string_view s) {
  if (s == "systematic") return RelayLabeling::Systematic;
  if (s == "identifiable") return RelayLabeling::Identifiable;
  throw ConfigError("unknown relay labeling '" + std::string(s) + "' (expected systematic|identifiable)");
}

std::string_view to_string(SimMode mode) { return mode == SimMode::Outage ? "outage" : "coded"; }

SimMode parse_sim_mode(std::string_view s) {
  if (s == "outage") return SimMode::Outage;
  if (s == "coded") return SimMode::CodedBler;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected outage|coded)");
}

void SimPlan::validate() const {
  cfg.validate();
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (snr_grid_db.empty()) throw ConfigError("SNR grid is empty");
  for (std::size_t i = 0; i < snr_grid_db.size(); ++i) {
    if (!std::isfinite(snr_grid_db[i])) throw ConfigError("SNR grid has a non-finite value");
    if (i > 0 && !(snr_grid_db[i] > snr_grid_db[i - 1])) {
      throw ConfigError("SNR grid must be strictly increasing");
    }
  }
  if (static_cast<int>(spec.rates.size()) != cfg.K) throw ConfigError("rate vector length != K");
  for (double r : spec.rates) {
    if (!(r >= 0.0)) throw ConfigError("rates must be >= 0");
  }
  if (!(spec.relay_rate >= 0.0)) throw ConfigError("relay rate must be >= 0");
  if (mode == SimMode::CodedBler) {
    if (cfg.K != 2) throw ConfigError("coded runs need K = 2");
    if (codes.empty()) throw ConfigError("coded runs need code parameters");
    if (codes.size() != 1 && static_cast<int>(codes.size()) != cfg.K + 1) {
      throw ConfigError("code parameters: give one entry or K+1 entries");
    }
    for (const auto& c : codes) {
      if (!is_prime(c.p)) throw ConfigError("code parameter p must be prime");
      if (c.k < 1) throw ConfigError("code parameter k must be >= 1");
      if (!(c.gamma > 0.0)) throw ConfigError("code parameter gamma must be > 0");
    }
    if (power_samples < 1000) throw ConfigError("power_samples must be >= 1000");
  }
}

MarcConfig SimPlan::config_at(double snr_db) const {
  MarcConfig c = cfg;
  c.rho_d_db = snr_db;
  c.rho_r_db = snr_db;
  c.rates = spec.rates;
  c.relay_rate = spec.relay_rate;
  return c;
}

const CodeParams& SimPlan::code_params(int transmitter) const {
  return codes.size() == 1 ? codes.front() : codes.at(transmitter);
}

double wilson_halfwidth(std::int64_t failures, std::int64_t trials, double z) {
  if (trials <= 0) return 0.0;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(failures) / n;
  const double z2 = z * z;
  return z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
}

Curve run_outage(const SimPlan& plan, int threads) {
  plan.validate();
  if (plan.mode != SimMode::Outage) throw ConfigError("run_outage needs an outage plan");
  Curve curve = empty_curve(plan);
  for (std::size_t point = 0; point < plan.snr_grid_db.size(); ++point) {
    const MarcConfig cfg = plan.config_at(plan.snr_grid_db[point]);
    const Tally tally = parallel_count(plan.trials, threads, [&](std::int64_t t, Tally& acc) {
      Rng rng(substream(plan.master_seed, point, static_cast<std::uint64_t>(t)));
      const ChannelRealization real = sample_rayleigh(cfg, rng);
      if (outage_indicator(real, plan.spec, cfg, plan.outage).in_outage) ++acc.failures;
    });
    curve.points.push_back(make_point(plan.snr_grid_db[point], plan.trials, tally));
  }
  return curve;
}

CodedSystem build_coded_system(const SimPlan& plan) {
  plan.validate();
  const MarcConfig& cfg = plan.cfg;
  CodedSystem sys;
  for (int i = 0; i <= cfg.K; ++i) {
    const bool relay = i == cfg.K;
    const int n = relay ? cfg.relay_dim() : cfg.user_dim();
    const double rate = relay ? plan.spec.relay_rate : plan.spec.rates[i];
    const int tau = nesting_ratio(rate, relay ? cfg.Mr : cfg.Mu);
    const CodeParams& cp = plan.code_params(i);
    Rng rng(substream(plan.master_seed, kCodebookStream, static_cast<std::uint64_t>(i)));
    NestedLatticeCode code = NestedLatticeCode::construction_a(n, cp.p, cp.k, cp.gamma, rng)
                                 .with_nesting(tau, rate);
    if (relay && plan.relay_labeling == RelayLabeling::Identifiable) {
      code = identifiable_labeling(plan, sys.users, code, rng);
    }
    code = normalize_power(code, rng, plan.power_samples);
    if (relay) {
      sys.relay = code;
    } else {
      sys.users.push_back(code);
    }
  }
  const MapperKind kind =
      plan.spec.scheme == Scheme::OMLC ? MapperKind::OneToOneLinear : MapperKind::ModuloSum;
  sys.mapper.emplace(kind, sys.users, *sys.relay);
  if (!sys.mapper->is_lattice_decodable()) {
    throw ConfigError("coded runs need equal nesting ratios for all transmitters");
  }
  return sys;
}

CodedTrial coded_trial(const SimPlan& plan, const CodedSystem& system, const MarcConfig& cfg,
                       std::uint64_t point, std::uint64_t trial) {
  const RelayMapper& mapper = *system.mapper;
  const int K = cfg.K;
  Rng rng(substream(plan.master_seed, point, trial));
  const ChannelRealization real = sample_rayleigh(cfg, rng);

  std::vector<IntVector> messages;
  for (const auto& code : system.users) {
    messages.push_back(random_message(code.dimension(), code.tau(), rng));
  }
  Dithers dithers;
  for (const auto& code : system.users) dithers.users.push_back(sample_dither(code, rng));
  dithers.relay = sample_dither(*system.relay, rng);
  Vector relay_noise = gaussian(cfg.relay_dim(), rng);
  Vector dst_noise = gaussian(2 * cfg.N * cfg.symbols(), rng);
  if (!plan.noise) {
    relay_noise.setZero();
    dst_noise.setZero();
  }

  const Eigen::Index nu = cfg.user_dim();
  Vector x_users(K * nu);
  for (int i = 0; i < K; ++i) {
    x_users.segment(i * nu, nu) = encode(system.users[i], messages[i], dithers.users[i]);
  }

  SphereDecodeOptions sphere;
  sphere.max_visits = plan.sphere_budget;

  CodedTrial out;
  out.ell1 = cfg.L;
  for (int ell = 1; ell < cfg.L; ++ell) {
    const Matrix H = build_relay_observation(real, ell, cfg);
    const Vector y = H * x_users + relay_noise.head(H.rows());
    const DecodeResult r = relay_decode(y, H, mapper, dithers, plan.spec.decoder, sphere);
    if (same_messages(r.messages, messages)) {
      out.ell1 = ell;
      break;
    }
  }

  const Matrix H_full = build_dst_superchannel(real, out.ell1, cfg);
  ReceiverModel model;
  model.mapper = &mapper;
  model.dithers = dithers;
  model.sphere = sphere;
  Vector y;
  if (out.ell1 < cfg.L) {
    const Vector x_relay = encode(*system.relay, mapper.map_indices(messages), dithers.relay);
    Vector x(x_users.size() + x_relay.size());
    x << x_users, x_relay;
    y = H_full * x + dst_noise;
    model.H = H_full;
    model.relay_present = true;
  } else {
    model.H = H_full.leftCols(K * nu);
    y = model.H * x_users + dst_noise;
    model.relay_present = false;
  }
  const DecodeResult r = decode_messages(y, model, plan.spec.decoder);
  out.budget_exceeded = r.budget_exceeded;
  out.failure = !same_messages(r.messages, messages);
  for (int i = 0; i < K; ++i) {
    if (r.messages.size() != messages.size() || r.messages[i] != messages[i]) out.wrong_users |= 1u << i;
  }
  return out;
}

Curve run_coded_bler(const SimPlan& plan, const CodedSystem& system, int threads) {
  plan.validate();
  if (plan.mode != SimMode::CodedBler) throw ConfigError("run_coded_bler needs a coded plan");
  Curve curve = empty_curve(plan);
  for (std::size_t point = 0; point < plan.snr_grid_db.size(); ++point) {
    const MarcConfig cfg = plan.config_at(plan.snr_grid_db[point]);
    const Tally tally = parallel_count(plan.trials, threads, [&](std::int64_t t, Tally& acc) {
      const CodedTrial r = coded_trial(plan, system, cfg, point, static_cast<std::uint64_t>(t));
      if (r.failure || r.budget_exceeded) ++acc.failures;
      if (r.budget_exceeded) ++acc.budget;
    });
    curve.points.push_back(make_point(plan.snr_grid_db[point], plan.trials, tally));
  }
  return curve;
}

Curve run_coded_bler(const SimPlan& plan, int threads) {
  return run_coded_bler(plan, build_coded_system(plan), threads);
}

Curve run(const SimPlan& plan, int threads) {
  return plan.mode == SimMode::Outage ? run_outage(plan, threads) : run_coded_bler(plan, threads);
}

double estimate_slope(const Curve& curve, double lo_db, double hi_db) {
  std::vector<double> xs, ys;
  for (const auto& p : curve.points) {
    if (p.snr_db < lo_db || p.snr_db > hi_db || p.failures <= 0) continue;
    xs.push_back(p.snr_db / 10.0);
    ys.push_back(std::log10(p.probability));
  }
  if (xs.size() < 2) throw NumericalError("slope window holds fewer than two points with failures");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0.0)) throw NumericalError("slope window has no SNR spread");
  return sxy / sxx;
}

std::string to_csv(const Curve& curve) {
  std::string out = "mode,scheme,decoder,snr_db,trials,failures,probability,wilson_halfwidth,seed\n";
  for (const auto& p : curve.points) {
    out += std::string(to_string(curve.mode)) + "," + std::string(to_string(curve.scheme)) + "," +
           std::string(to_string(curve.decoder)) + "," + format_double("%.12g", p.snr_db) + "," +
           std::to_string(p.trials) + "," + std::to_string(p.failures) + "," +
           format_double("%.15g", p.probability) + "," + format_double("%.15g", p.wilson_halfwidth) +
           "," + std::to_string(curve.seed) + "\n";
  }
  return out;
}

std::string manifest_json(const SimPlan& plan, const Curve& curve, const CodedSystem* system) {
  using nlohmann::json;
  json j;
  j["mode"] = to_string(plan.mode);
  j["scheme"] = to_string(plan.spec.scheme);
  j["decoder"] = to_string(plan.spec.decoder);
  j["master_seed"] = plan.master_seed;
  j["trials"] = plan.trials;
  j["snr_grid_db"] = plan.snr_grid_db;
  j["snr_axis"] = "rho_d_db = rho_r_db = snr_db; sr_offset_db added on source-relay links";
  const MarcConfig& c = plan.cfg;
  j["config"] = {{"K", c.K},   {"Mu", c.Mu}, {"Mr", c.Mr},
                 {"N", c.N},   {"L", c.L},   {"T", c.T},
                 {"sr_offset_db", c.sr_offset_db}};
  j["rates"] = plan.spec.rates;
  j["relay_rate"] = plan.spec.relay_rate;
  j["noise"] = plan.noise;
  j["relay_labeling"] = to_string(plan.relay_labeling);
  j["relay_silent_is_outage"] = plan.outage.relay_silent_is_outage;
  if (plan.mode == SimMode::CodedBler) {
    j["sphere_budget"] = plan.sphere_budget;
    j["power_samples"] = plan.power_samples;
    json codes = json::array();
    for (const auto& cp : plan.codes) codes.push_back({{"p", cp.p}, {"k", cp.k}, {"gamma", cp.gamma}});
    j["codes"] = codes;
    if (system != nullptr) {
      json lattices = json::array();
      for (const auto& u : system->users) lattices.push_back(serialize(u));
      if (system->relay) lattices.push_back(serialize(*system->relay));
      j["lattices"] = lattices;
      j["mapper"] = to_string(system->mapper->kind());
    }
  }
  json pts = json::array();
  for (const auto& p : curve.points) {
    pts.push_back({{"snr_db", p.snr_db},
                   {"trials", p.trials},
                   {"failures", p.failures},
                   {"budget_exceeded", p.budget_exceeded}});
  }
  j["points"] = pts;
  j["csv"] = file_stem(curve) + ".csv";
  return j.dump(2) + "\n";
}

WrittenFiles write_outputs(const SimPlan& plan, const Curve& curve, const CodedSystem* system) {
  namespace fs = std::filesystem;
  const fs::path dir(plan.output_path.empty() ? "." : plan.output_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  WrittenFiles files;
  files.csv = (dir / (file_stem(curve) + ".csv")).string();
  files.manifest = (dir / (file_stem(curve) + ".manifest.json")).string();
  auto put = [](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path);
  };
  put(files.csv, to_csv(curve));
  put(files.manifest, manifest_json(plan, curve, system));
  return files;
}

}  // namespace marc
