#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "marc/config.hpp"
#include "marc/lattice.hpp"
#include "marc/mapper.hpp"
#include "marc/rates.hpp"
#include "marc/sphere_decoder.hpp"

namespace marc {

enum class SimMode { Outage, CodedBler };

std::string_view to_string(SimMode mode);
SimMode parse_sim_mode(std::string_view s);

// How relay message indices are attached to cosets. Systematic reads them
// through the triangular Construction-A basis. Identifiable searches random
// unimodular changes of basis for one under which every single user's index
// still moves the part of the relay codeword sent after each possible
// decision slot (see relay_tail_rank).
enum class RelayLabeling { Systematic, Identifiable };

std::string_view to_string(RelayLabeling l);
RelayLabeling parse_relay_labeling(std::string_view s);

struct CodeParams {
  int p = 97;
  int k = 3;
  double gamma = 1.0;  // starting scale, replaced by power normalization
};

struct SimPlan {
  SimMode mode = SimMode::Outage;
  MarcConfig cfg;
  RateRegionSpec spec;
  std::vector<double> snr_grid_db;
  std::int64_t trials = 1000;
  std::uint64_t master_seed = 1;
  // One entry per transmitter (K users then relay); a single entry is shared.
  std::vector<CodeParams> codes = {CodeParams{}};
  std::string output_path;  // directory; empty = do not persist

  bool noise = true;
  RelayLabeling relay_labeling = RelayLabeling::Identifiable;
  OutageOptions outage;
  std::uint64_t sphere_budget = 10'000'000;
  int power_samples = 100000;

  void validate() const;
  // ρ_d = ρ_r = snr_db; the S-R offset is applied on top by the config.
  MarcConfig config_at(double snr_db) const;
  const CodeParams& code_params(int transmitter) const;
};

struct CurvePoint {
  double snr_db = 0.0;
  std::int64_t trials = 0;
  std::int64_t failures = 0;
  double probability = 0.0;
  double wilson_halfwidth = 0.0;
  std::int64_t budget_exceeded = 0;  // coded trials whose sphere search hit the visit cap
};

struct Curve {
  SimMode mode = SimMode::Outage;
  Scheme scheme = Scheme::OMLC;
  DecoderKind decoder = DecoderKind::KStage;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> points;
};

// Codebooks and mapper of a coded run. Codebook i is drawn from its own
// substream of the master seed and power-normalized.
struct CodedSystem {
  std::vector<NestedLatticeCode> users;
  std::optional<NestedLatticeCode> relay;
  std::optional<RelayMapper> mapper;
};

CodedSystem build_coded_system(const SimPlan& plan);

Curve run_outage(const SimPlan& plan, int threads = 1);
Curve run_coded_bler(const SimPlan& plan, int threads = 1);
Curve run_coded_bler(const SimPlan& plan, const CodedSystem& system, int threads = 1);
Curve run(const SimPlan& plan, int threads = 1);

// One coded trial; true on block error. Exposed for tests.
struct CodedTrial {
  bool failure = false;
  bool budget_exceeded = false;
  int ell1 = 0;
  unsigned wrong_users = 0;  // bit i set when user i was decoded wrongly
};
CodedTrial coded_trial(const SimPlan& plan, const CodedSystem& system, const MarcConfig& cfg,
                       std::uint64_t point, std::uint64_t trial);

double wilson_halfwidth(std::int64_t failures, std::int64_t trials, double z = 1.96);

// Least-squares slope of log10(probability) against snr_db/10 over points in
// [lo_db, hi_db] with failures > 0. Throws NumericalError with fewer than two.
double estimate_slope(const Curve& curve, double lo_db, double hi_db);

std::string to_csv(const Curve& curve);
std::string manifest_json(const SimPlan& plan, const Curve& curve, const CodedSystem* system);

struct WrittenFiles {
  std::string csv;
  std::string manifest;
};
WrittenFiles write_outputs(const SimPlan& plan, const Curve& curve, const CodedSystem* system);

}  // namespace marc
