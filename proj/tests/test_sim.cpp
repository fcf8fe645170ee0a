#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "marc/sim.hpp"

using namespace marc;

namespace {

SimPlan outage_plan() {
  SimPlan p;
  p.mode = SimMode::Outage;
  p.cfg.rates = {1.0, 1.0};
  p.spec = RateRegionSpec::from_config(p.cfg, Scheme::OMLC, DecoderKind::KStage);
  p.snr_grid_db = {0.0, 10.0, 20.0};
  p.trials = 2000;
  p.master_seed = 7;
  return p;
}

SimPlan coded_plan() {
  SimPlan p;
  p.mode = SimMode::CodedBler;
  p.cfg.Mr = 2;
  p.cfg.T = 1;
  p.cfg.rates = {2.0, 2.0};
  p.cfg.relay_rate = 4.0;
  p.spec = RateRegionSpec::from_config(p.cfg, Scheme::OMLC, DecoderKind::OneStage);
  p.snr_grid_db = {50.0};
  p.trials = 20;
  p.master_seed = 3;
  p.codes = {CodeParams{7, 2, 1.0}};
  p.power_samples = 2000;
  p.noise = false;
  return p;
}

}  // namespace

TEST_CASE("Wilson half-width") {
  // z^2 = 1.96^2; closed form at f = n/2 and at the boundary.
  const double z = 1.96, n = 100.0;
  const double mid = z / (1.0 + z * z / n) * std::sqrt(0.25 / n + z * z / (4.0 * n * n));
  CHECK(wilson_halfwidth(50, 100) == doctest::Approx(mid).epsilon(1e-12));
  const double edge = z / (1.0 + z * z / n) * std::sqrt(z * z / (4.0 * n * n));
  CHECK(wilson_halfwidth(0, 100) == doctest::Approx(edge).epsilon(1e-12));
  CHECK(wilson_halfwidth(0, 100) == doctest::Approx(wilson_halfwidth(100, 100)));
  CHECK(wilson_halfwidth(10, 1000) < wilson_halfwidth(10, 100));
}

TEST_CASE("slope estimate") {
  Curve c;
  for (double snr = 10.0; snr <= 30.0; snr += 5.0) {
    CurvePoint p;
    p.snr_db = snr;
    p.trials = 1000000;
    p.probability = std::pow(10.0, 1.0 - 2.0 * snr / 10.0);
    p.failures = static_cast<std::int64_t>(p.probability * p.trials) + 1;
    c.points.push_back(p);
  }
  CHECK(estimate_slope(c, 10.0, 30.0) == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(estimate_slope(c, 15.0, 25.0) == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK_THROWS_AS(estimate_slope(c, 11.0, 14.0), NumericalError);
  c.points[2].failures = 0;
  CHECK(estimate_slope(c, 10.0, 30.0) == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("outage limits") {
  SimPlan p = outage_plan();
  p.cfg.rates = {0.0, 0.0};
  p.spec.rates = {0.0, 0.0};
  for (const auto& pt : run_outage(p).points) CHECK(pt.probability == 0.0);

  p = outage_plan();
  p.snr_grid_db = {-300.0};
  p.trials = 200;
  const Curve c = run_outage(p);
  CHECK(c.points[0].probability == 1.0);
  CHECK(c.points[0].failures == 200);
}

TEST_CASE("outage probability decreases with SNR") {
  const Curve c = run_outage(outage_plan());
  REQUIRE(c.points.size() == 3);
  CHECK(c.points[0].probability > c.points[1].probability);
  CHECK(c.points[1].probability > c.points[2].probability);
}

TEST_CASE("results do not depend on the thread count") {
  const SimPlan p = outage_plan();
  const std::string one = to_csv(run_outage(p, 1));
  CHECK(one == to_csv(run_outage(p, 8)));
  CHECK(one == to_csv(run_outage(p, 3)));
  SimPlan other = p;
  other.master_seed = 8;
  CHECK(one != to_csv(run_outage(other, 1)));
}

TEST_CASE("CSV layout") {
  const std::string csv = to_csv(run_outage(outage_plan()));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "mode,scheme,decoder,snr_db,trials,failures,probability,wilson_halfwidth,seed");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.rfind("outage,omlc,kstage,", 0) == 0);
    CHECK(line.back() == '7');
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.back() == '\n');
}

TEST_CASE("paired outage curves keep the region ordering") {
  SimPlan k = outage_plan();
  SimPlan one = k;
  one.spec.decoder = DecoderKind::OneStage;
  SimPlan ms = k;
  ms.spec.scheme = Scheme::MSMLC;
  ms.spec.relay_rate = 1.0;
  const Curve ck = run_outage(k), co = run_outage(one), cm = run_outage(ms);
  for (std::size_t i = 0; i < ck.points.size(); ++i) {
    CHECK(co.points[i].failures >= ck.points[i].failures);
    CHECK(cm.points[i].failures >= ck.points[i].failures);
  }
}

TEST_CASE("plan validation") {
  SimPlan p = outage_plan();
  p.snr_grid_db = {10.0, 10.0};
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = outage_plan();
  p.snr_grid_db.clear();
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = outage_plan();
  p.trials = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = outage_plan();
  p.spec.rates = {1.0};
  CHECK_THROWS_AS(p.validate(), ConfigError);

  SimPlan c = coded_plan();
  CHECK_NOTHROW(c.validate());
  c.codes = {CodeParams{8, 2, 1.0}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = coded_plan();
  c.power_samples = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = coded_plan();
  c.cfg.K = 3;
  c.cfg.rates = {2.0, 2.0, 2.0};
  c.spec.rates = c.cfg.rates;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("noiseless coded run has no block errors") {
  for (DecoderKind dec : {DecoderKind::OneStage, DecoderKind::KStage}) {
    SimPlan p = coded_plan();
    p.spec.decoder = dec;
    const CodedSystem sys = build_coded_system(p);
    const Curve c = run_coded_bler(p, sys);
    CHECK(c.points[0].failures == 0);
    CHECK(c.points[0].budget_exceeded == 0);
    const CodedTrial t = coded_trial(p, sys, p.config_at(50.0), 0, 0);
    CHECK_FALSE(t.failure);
    CHECK(t.ell1 >= 1);
    CHECK(t.ell1 <= p.cfg.L);
  }
}

TEST_CASE("coded system is reproducible and persisted") {
  SimPlan p = coded_plan();
  const CodedSystem a = build_coded_system(p), b = build_coded_system(p);
  REQUIRE(a.relay.has_value());
  CHECK(serialize(a.users[0]) == serialize(b.users[0]));
  CHECK(serialize(*a.relay) == serialize(*b.relay));
  CHECK(serialize(a.users[0]) != serialize(a.users[1]));

  const auto dir = std::filesystem::temp_directory_path() / "marc_sim_test";
  std::filesystem::remove_all(dir);
  p.output_path = dir.string();
  const Curve c = run_coded_bler(p, a);
  const WrittenFiles files = write_outputs(p, c, &a);
  CHECK(std::filesystem::path(files.csv).filename() == "coded_omlc_onestage_seed3.csv");
  std::ifstream in(files.manifest);
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["master_seed"] == 3);
  REQUIRE(j.contains("lattices"));
  const NestedLatticeCode back = deserialize_lattice(j["lattices"][0].get<std::string>());
  CHECK(serialize(back) == serialize(a.users[0]));
  std::filesystem::remove_all(dir);
}
