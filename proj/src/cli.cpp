#include "marc/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "marc/rates.hpp"
#include "marc/validate.hpp"

namespace marc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArgumentError("cannot open file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

ConfigValues parse_config_text(const std::string& text, const std::string& origin) {
  ConfigValues values;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": empty key");
    values[key] = value;
  }
  return values;
}

ConfigValues load_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArgumentError("config file not found or unreadable: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_config(const ConfigValues& values, RunSettings& s) {
  MarcConfig& c = s.plan.cfg;
  std::vector<double> ps, ks, gammas;
  for (const auto& [key, v] : values) {
    if (key == "K") c.K = static_cast<int>(to_int(key, v));
    else if (key == "Mu") c.Mu = static_cast<int>(to_int(key, v));
    else if (key == "Mr") c.Mr = static_cast<int>(to_int(key, v));
    else if (key == "N") c.N = static_cast<int>(to_int(key, v));
    else if (key == "L") c.L = static_cast<int>(to_int(key, v));
    else if (key == "T") c.T = static_cast<int>(to_int(key, v));
    else if (key == "sr_offset_db") c.sr_offset_db = to_double(key, v);
    else if (key == "rho_d_db") c.rho_d_db = to_double(key, v);
    else if (key == "rho_r_db") c.rho_r_db = to_double(key, v);
    else if (key == "rates") c.rates = to_doubles(key, v);
    else if (key == "relay_rate") s.plan.spec.relay_rate = c.relay_rate = to_double(key, v);
    else if (key == "scheme") s.plan.spec.scheme = parse_scheme(v);
    else if (key == "decoder") s.plan.spec.decoder = parse_decoder(v);
    else if (key == "seed") s.plan.master_seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "trials") s.plan.trials = to_int(key, v);
    else if (key == "threads") s.threads = static_cast<int>(to_int(key, v));
    else if (key == "snr_from") s.snr_from = to_double(key, v);
    else if (key == "snr_to") s.snr_to = to_double(key, v);
    else if (key == "snr_step") s.snr_step = to_double(key, v);
    else if (key == "out") s.plan.output_path = v;
    else if (key == "noise") s.plan.noise = to_bool(key, v);
    else if (key == "relay_labeling") s.plan.relay_labeling = parse_relay_labeling(v);
    else if (key == "relay_silent_is_outage") s.plan.outage.relay_silent_is_outage = to_bool(key, v);
    else if (key == "sphere_budget") s.plan.sphere_budget = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "power_samples") s.plan.power_samples = static_cast<int>(to_int(key, v));
    else if (key == "code_p") ps = to_doubles(key, v);
    else if (key == "code_k") ks = to_doubles(key, v);
    else if (key == "code_gamma") gammas = to_doubles(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (values.count("relay_rate") == 0) {
    // O-MLC forwards every user's bits; the modulo sum needs only one user's worth.
    double sum = 0.0, top = 0.0;
    for (double r : c.rates) {
      sum += r;
      top = std::max(top, r);
    }
    c.relay_rate = s.plan.spec.scheme == Scheme::OMLC ? sum : top;
  }
  const std::size_t n = std::max({ps.size(), ks.size(), gammas.size()});
  if (n > 0) {
    auto pick = [&](const std::vector<double>& v, std::size_t i, double fallback) {
      if (v.empty()) return fallback;
      if (v.size() == 1) return v[0];
      if (v.size() != n) throw ConfigError("code_p, code_k, code_gamma lists differ in length");
      return v[i];
    };
    s.plan.codes.assign(n, CodeParams{});
    for (std::size_t i = 0; i < n; ++i) {
      s.plan.codes[i].p = static_cast<int>(pick(ps, i, 97));
      s.plan.codes[i].k = static_cast<int>(pick(ks, i, 3));
      s.plan.codes[i].gamma = pick(gammas, i, 1.0);
    }
  }
  s.plan.spec.rates = c.rates;
  s.plan.spec.relay_rate = c.relay_rate;
}

std::vector<double> snr_grid(double from, double to, double step) {
  if (!(step > 0.0)) throw ConfigError("snr step must be > 0");
  if (!(to >= from)) throw ConfigError("snr range is empty (to < from)");
  const auto count = static_cast<long long>(std::floor((to - from) / step + 1e-9)) + 1;
  if (count > 10000) throw ConfigError("snr grid has more than 10000 points");
  std::vector<double> grid;
  for (long long i = 0; i < count; ++i) grid.push_back(std::round((from + i * step) * 1e9) / 1e9);
  return grid;
}

std::vector<CMatrix> parse_matrix_blocks(const std::string& text, const std::string& origin) {
  std::vector<CMatrix> blocks;
  std::vector<std::vector<double>> rows;
  auto flush = [&]() {
    if (rows.empty()) return;
    const std::size_t width = rows.front().size();
    if (width == 0 || width % 2 != 0) {
      throw ConfigError(origin + ": each row needs an even number of values (re im pairs)");
    }
    CMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width / 2));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != width) throw ConfigError(origin + ": ragged rows in a block");
      for (std::size_t j = 0; j < width / 2; ++j) m(r, j) = {rows[r][2 * j], rows[r][2 * j + 1]};
    }
    blocks.push_back(m);
    rows.clear();
  };
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) {
      flush();
      continue;
    }
    std::stringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(to_double(origin, tok));
    rows.push_back(std::move(row));
  }
  flush();
  return blocks;
}

ChannelRealization load_realization(const std::string& hd_path, const std::string& hr_path, MarcConfig& cfg) {
  const std::vector<CMatrix> hd = parse_matrix_blocks(read_file(hd_path), hd_path);
  const std::vector<CMatrix> hr = parse_matrix_blocks(read_file(hr_path), hr_path);
  if (hd.size() < 2) throw ConfigError(hd_path + ": need K user blocks and a relay block");
  if (hr.size() + 1 != hd.size()) {
    throw ConfigError(hr_path + ": expected " + std::to_string(hd.size() - 1) + " blocks, found " +
                      std::to_string(hr.size()));
  }
  ChannelRealization real;
  real.H_d.assign(hd.begin(), hd.end() - 1);
  real.H_d_relay = hd.back();
  real.H_r = hr;
  cfg.K = static_cast<int>(hr.size());
  cfg.Mu = static_cast<int>(hd.front().cols());
  cfg.N = static_cast<int>(hd.front().rows());
  cfg.Mr = static_cast<int>(real.H_d_relay.cols());
  check_dimensions(real, cfg);
  return real;
}

namespace {

struct SweepFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long long> trials;
  std::optional<double> snr_from, snr_to, snr_step;
  std::optional<std::string> scheme, decoder, out;
  std::optional<int> threads;
  bool noiseless = false;
};

void add_sweep_flags(CLI::App* cmd, SweepFlags& f) {
  cmd->add_option("--config", f.config, "flat key = value config file");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--trials", f.trials, "trials per SNR point");
  cmd->add_option("--snr-from", f.snr_from, "first SNR point in dB");
  cmd->add_option("--snr-to", f.snr_to, "last SNR point in dB");
  cmd->add_option("--snr-step", f.snr_step, "SNR step in dB");
  cmd->add_option("--scheme", f.scheme, "omlc|msmlc");
  cmd->add_option("--decoder", f.decoder, "kstage|onestage");
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--out", f.out, "output directory (default $MARC_OUT_DIR, else .)");
}

RunSettings settle(const SweepFlags& f, SimMode mode) {
  RunSettings s;
  s.plan.mode = mode;
  s.plan.spec = RateRegionSpec::from_config(s.plan.cfg, Scheme::OMLC, DecoderKind::KStage);
  s.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (mode == SimMode::CodedBler) {
    s.plan.cfg.Mr = 2;
    s.plan.cfg.T = 2;
    s.plan.spec.decoder = DecoderKind::OneStage;
  }
  ConfigValues values;
  if (!f.config.empty()) values = load_config_file(f.config);
  if (f.scheme) values["scheme"] = *f.scheme;
  apply_config(values, s);
  if (f.seed) s.plan.master_seed = *f.seed;
  if (f.trials) s.plan.trials = *f.trials;
  if (f.snr_from) s.snr_from = *f.snr_from;
  if (f.snr_to) s.snr_to = *f.snr_to;
  if (f.snr_step) s.snr_step = *f.snr_step;
  if (f.decoder) s.plan.spec.decoder = parse_decoder(*f.decoder);
  if (f.threads) s.threads = *f.threads;
  if (f.out) {
    s.plan.output_path = *f.out;
  } else if (s.plan.output_path.empty()) {
    const char* env = std::getenv("MARC_OUT_DIR");
    s.plan.output_path = env != nullptr && *env != '\0' ? env : ".";
  }
  if (f.noiseless) s.plan.noise = false;
  if (s.threads < 1) throw ConfigError("threads must be >= 1");
  s.plan.snr_grid_db = snr_grid(s.snr_from, s.snr_to, s.snr_step);
  s.plan.validate();
  return s;
}

void print_curve(std::ostream& out, const Curve& curve) {
  out << "snr_db  trials  failures  probability  wilson_halfwidth\n";
  for (const auto& p : curve.points) {
    out << p.snr_db << "  " << p.trials << "  " << p.failures << "  " << p.probability << "  "
        << p.wilson_halfwidth;
    if (p.budget_exceeded > 0) out << "  (budget exceeded: " << p.budget_exceeded << ")";
    out << "\n";
  }
}

int run_sweep(const SweepFlags& f, SimMode mode, std::ostream& out) {
  const RunSettings s = settle(f, mode);
  Curve curve;
  std::optional<CodedSystem> system;
  if (mode == SimMode::Outage) {
    curve = run_outage(s.plan, s.threads);
  } else {
    system = build_coded_system(s.plan);
    curve = run_coded_bler(s.plan, *system, s.threads);
  }
  const WrittenFiles files = write_outputs(s.plan, curve, system ? &*system : nullptr);
  print_curve(out, curve);
  out << "csv: " << files.csv << "\nmanifest: " << files.manifest << "\n";
  return 0;
}

struct QueryFlags {
  std::string hd, hr, config;
  std::optional<std::string> rates, scheme, decoder;
  std::optional<double> relay_rate, snr, rho_r_db, sr_offset_db;
  std::optional<int> L, T;
};

void add_query_flags(CLI::App* cmd, QueryFlags& f) {
  cmd->add_option("--hd", f.hd, "destination channel blocks (K users, then relay)")->required();
  cmd->add_option("--hr", f.hr, "relay channel blocks (K users)")->required();
  cmd->add_option("--config", f.config, "flat key = value config file");
  cmd->add_option("--rates", f.rates, "comma separated user rates (BPCU)");
  cmd->add_option("--relay-rate", f.relay_rate, "relay rate (BPCU)");
  cmd->add_option("--scheme", f.scheme, "omlc|msmlc");
  cmd->add_option("--decoder", f.decoder, "kstage|onestage");
  cmd->add_option("--snr", f.snr, "rho_d in dB (also rho_r unless --rho-r-db is given)");
  cmd->add_option("--rho-r-db", f.rho_r_db, "rho_r in dB");
  cmd->add_option("--sr-offset-db", f.sr_offset_db, "extra S-R gain in dB");
  cmd->add_option("-L", f.L, "slots per codeword");
  cmd->add_option("-T", f.T, "symbols per slot");
}

struct Query {
  MarcConfig cfg;
  RateRegionSpec spec;
  ChannelRealization real;
};

Query settle_query(const QueryFlags& f) {
  RunSettings s;
  ConfigValues values;
  if (!f.config.empty()) values = load_config_file(f.config);
  if (f.scheme) values["scheme"] = *f.scheme;
  if (f.rates) values["rates"] = *f.rates;
  apply_config(values, s);
  Query q;
  q.cfg = s.plan.cfg;
  if (f.L) q.cfg.L = *f.L;
  if (f.T) q.cfg.T = *f.T;
  if (f.snr) {
    q.cfg.rho_d_db = *f.snr;
    q.cfg.rho_r_db = *f.snr;
  }
  if (f.rho_r_db) q.cfg.rho_r_db = *f.rho_r_db;
  if (f.sr_offset_db) q.cfg.sr_offset_db = *f.sr_offset_db;
  q.real = load_realization(f.hd, f.hr, q.cfg);
  q.spec = s.plan.spec;
  if (f.relay_rate) q.spec.relay_rate = q.cfg.relay_rate = *f.relay_rate;
  if (f.decoder) q.spec.decoder = parse_decoder(*f.decoder);
  if (static_cast<int>(q.spec.rates.size()) != q.cfg.K) {
    throw ConfigError("--rates has " + std::to_string(q.spec.rates.size()) + " entries but the matrices describe K=" +
                      std::to_string(q.cfg.K) + " users");
  }
  q.cfg.rates = q.spec.rates;
  q.cfg.validate();
  return q;
}

std::string subset_label(unsigned mask) {
  std::string s = "{";
  bool first = true;
  for (int i = 0; i < 32; ++i) {
    if (mask & (1u << i)) {
      if (!first) s += ",";
      s += std::to_string(i + 1);
      first = false;
    }
  }
  return s + "}";
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lattice-coded multiple-access relay channel simulator"};
  app.require_subcommand(1);

  SweepFlags outage_flags, codec_flags;
  auto* outage = app.add_subcommand("outage", "theoretical outage sweep");
  add_sweep_flags(outage, outage_flags);
  auto* codec = app.add_subcommand("codec", "coded block-error sweep");
  add_sweep_flags(codec, codec_flags);
  codec->add_flag("--noiseless", codec_flags.noiseless, "drop the receiver noise");

  QueryFlags region_flags, time_flags;
  auto* region = app.add_subcommand("region", "outage verdict for one channel realization");
  add_query_flags(region, region_flags);
  auto* dtime = app.add_subcommand("decision-time", "relay decision slot for one channel realization");
  add_query_flags(dtime, time_flags);

  std::string suite = "all";
  ValidateOptions vopts;
  auto* validate = app.add_subcommand("validate", "oracle and invariant checks");
  validate->add_option("suite", suite, "all|sphere|gdfe|region|mapper|lattice|channel");
  validate->add_flag("--break-gdfe", vopts.break_gdfe, "corrupt the GDFE factor (negative control)");
  validate->add_option("--exhaustive-tau", vopts.exhaustive_tau, "nesting ratio for the exhaustive mapper check");
  validate->add_option("--seed", vopts.seed, "seed for the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (outage->parsed()) return run_sweep(outage_flags, SimMode::Outage, out);
    if (codec->parsed()) return run_sweep(codec_flags, SimMode::CodedBler, out);
    if (region->parsed()) {
      const Query q = settle_query(region_flags);
      const OutageVerdict v = outage_indicator(q.real, q.spec, q.cfg);
      out << "in_outage=" << (v.in_outage ? "true" : "false") << "\n";
      out << "ell1=" << v.ell1 << "\n";
      out << "violated_subsets=";
      for (std::size_t i = 0; i < v.violated_subsets.size(); ++i) {
        out << (i ? " " : "") << subset_label(v.violated_subsets[i]);
      }
      out << "\n";
      return 0;
    }
    if (dtime->parsed()) {
      const Query q = settle_query(time_flags);
      const int ell1 = decision_time(q.real, q.spec, q.cfg);
      out << "ell1=" << ell1 << "\n";
      out << "relay_silent=" << (ell1 == q.cfg.L ? "true" : "false") << "\n";
      return 0;
    }
    if (validate->parsed()) {
      const auto results = run_validation(suite, vopts);
      out << format_table(results);
      const bool ok = all_passed(results);
      out << (ok ? "all checks passed\n" : "validation FAILED\n");
      return ok ? 0 : 2;
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace marc
