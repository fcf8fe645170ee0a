#include "marc/validate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "marc/channel.hpp"
#include "marc/lattice.hpp"
#include "marc/rates.hpp"
#include "marc/sphere_decoder.hpp"

namespace marc {
namespace {

Matrix gaussian_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void sphere_suite(std::vector<CheckResult>& out, Rng& rng) {
  const OracleReport r = sphere_oracle_check(200, 6, 6, rng);
  out.push_back({"sphere", "oracle match (200 instances, n<=6, |z|<=6)", r.mismatches == 0,
                 std::to_string(r.mismatches) + " mismatches"});
}

void gdfe_suite(std::vector<CheckResult>& out, Rng& rng, bool break_gdfe) {
  double worst = 0.0;
  double worst_f = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::uniform_int_distribution<int> dim(1, 8);
    const int rows = dim(rng);
    const int cols = dim(rng);
    const Matrix H = gaussian_matrix(rows, cols, rng) * std::sqrt(std::exp2(dim(rng)));
    GdfeFilters f = compute_gdfe(H);
    if (break_gdfe) f.B(0, 0) *= 1.01;
    worst = std::max(worst, gdfe_identity_error(H, f));
    const Matrix expect_f = f.B.transpose().triangularView<Eigen::Lower>().solve(H.transpose());
    worst_f = std::max(worst_f, (f.F - expect_f).norm() / std::max(1.0, expect_f.norm()));
  }
  out.push_back({"gdfe", "B^T B = I + H^T H (100 channels)", worst <= 1e-9,
                 "max rel err " + fmt("%.3g", worst)});
  out.push_back({"gdfe", "F = B^-T H^T", worst_f <= 1e-9, "max rel err " + fmt("%.3g", worst_f)});
}

void region_suite(std::vector<CheckResult>& out, Rng& rng) {
  MarcConfig cfg;
  int a = 0, b = 0, samples = 0;
  for (int d = 0; d < 100; ++d) {
    std::uniform_real_distribution<double> snr(0.0, 30.0);
    cfg.rho_d_db = cfg.rho_r_db = snr(rng);
    const ChannelRealization real = sample_rayleigh(cfg, rng);
    const InclusionReport rep = region_inclusion_check(real, cfg, 10, rng);
    a += rep.one_stage_violations;
    b += rep.modulo_sum_violations;
    samples += rep.samples;
  }
  out.push_back({"region", "one-stage region inside K-stage region", a == 0,
                 std::to_string(a) + " violations / " + std::to_string(samples)});
  out.push_back({"region", "MS-MLC region inside O-MLC region", b == 0,
                 std::to_string(b) + " violations / " + std::to_string(samples)});
  double loss = 0.0;
  for (int K = 1; K <= 4; ++K) {
    MarcConfig c;
    c.K = K;
    c.Mr = 2;
    loss = std::max({loss, std::abs(one_stage_relay_loss(c, K)), std::abs(one_stage_dst_loss(c, K))});
  }
  out.push_back({"region", "one-stage losses vanish at |S| = K", loss == 0.0, "max " + fmt("%.3g", loss)});
}

void mapper_suite(std::vector<CheckResult>& out, Rng& rng, int tau) {
  for (MapperKind kind : {MapperKind::OneToOneLinear, MapperKind::ModuloSum}) {
    const RelayMapper m = small_mapper(kind, 4, 2, rng);
    const Matrix G = build_superlattice_generator(m);
    const bool ok = coset_consistency_check(m, G, 1000, rng);
    out.push_back({"mapper", std::string("coset consistency ") + std::string(to_string(kind)) + " (1000 trials)",
                   ok, ok ? "0 mismatches" : "mismatch found"});
  }
  if (tau < 2) {
    out.push_back({"mapper", "exhaustive bijectivity", false, "tau must be >= 2"});
    return;
  }
  int n = 0;
  while (std::pow(static_cast<double>(tau), 2.0 * (n + 1)) <= 4096.0) ++n;
  if (n == 0) {
    out.push_back({"mapper", "exhaustive bijectivity tau=" + std::to_string(tau), false,
                   "tau^(2n) exceeds 4096 for every n >= 1"});
    return;
  }
  const RelayMapper m = small_mapper(MapperKind::OneToOneLinear, n, tau, rng);
  const BijectivityReport r = exhaustive_bijectivity(m);
  out.push_back({"mapper", "exhaustive bijectivity tau=" + std::to_string(tau) + " n=" + std::to_string(n),
                 r.violations == 0 && r.distinct_images == r.tuples,
                 std::to_string(r.violations) + " violations over " + std::to_string(r.tuples) + " tuples"});
}

void lattice_suite(std::vector<CheckResult>& out, Rng& rng) {
  NestedLatticeCode code = NestedLatticeCode::construction_a(8, 97, 3, 1.0, rng).with_nesting(2, 2.0);
  code = normalize_power(code, rng, 20000);
  Rng check(rng());
  const double moment = estimate_second_moment(code, check, 20000);
  out.push_back({"lattice", "normalized second moment 0.5 +- 1%", std::abs(moment - 0.5) <= 0.005,
                 "moment " + fmt("%.5f", moment)});

  bool basis_in = true;
  for (Eigen::Index j = 0; j < code.integer_basis().cols(); ++j) {
    basis_in = basis_in && code.contains(code.integer_basis().col(j));
  }
  const bool p_in = code.contains(IntVector::Constant(8, 97));
  out.push_back({"lattice", "membership of basis and p Z^n", basis_in && p_in, ""});

  int bad = 0;
  std::uniform_int_distribution<std::int64_t> digit(0, code.tau() - 1);
  for (int t = 0; t < 200; ++t) {
    IntVector z(8);
    for (auto& v : z) v = digit(rng);
    if (coset_index(code, index_to_coset_leader(code, z)) != z) ++bad;
  }
  out.push_back({"lattice", "index -> leader -> index round trip", bad == 0, std::to_string(bad) + " failures"});

  const NestedLatticeCode back = deserialize_lattice(serialize(code));
  const bool same = back.integer_basis() == code.integer_basis() && back.gamma() == code.gamma() &&
                    back.tau() == code.tau();
  out.push_back({"lattice", "serialization round trip", same, ""});
}

void channel_suite(std::vector<CheckResult>& out, Rng& rng) {
  MarcConfig cfg;
  cfg.Mr = 2;
  cfg.T = 2;
  const ChannelRealization real = sample_rayleigh(cfg, rng);
  bool dims = true;
  for (int ell1 = 1; ell1 <= cfg.L; ++ell1) {
    const Matrix H = build_dst_superchannel(real, ell1, cfg);
    dims = dims && H.rows() == 2 * cfg.N * cfg.symbols() &&
           H.cols() == cfg.K * cfg.user_dim() + cfg.relay_dim();
    const Eigen::Index silent_rows = 2 * cfg.N * ell1 * cfg.T;
    dims = dims && H.topRightCorner(silent_rows, cfg.relay_dim()).isZero(0.0);
  }
  out.push_back({"channel", "super-channel shape and silent relay rows", dims, ""});

  CMatrix h = CMatrix::Random(3, 2);
  CVector x = CVector::Random(2);
  const double err = (embed_vector(CVector(h * x)) - embed_complex(h) * embed_vector(x)).norm();
  out.push_back({"channel", "real embedding is a homomorphism", err <= 1e-12, "err " + fmt("%.3g", err)});
}

}  // namespace

IntVector brute_force_closest(const Matrix& basis, const Vector& target, int bound) {
  const Eigen::Index n = basis.cols();
  IntVector z = IntVector::Constant(n, -bound);
  IntVector best = z;
  double best_d = std::numeric_limits<double>::infinity();
  while (true) {
    const double d = (target - basis * z.cast<double>()).squaredNorm();
    if (!std::isfinite(best_d) || d < best_d - 1e-12 * (1.0 + best_d)) {
      best_d = d;
      best = z;
    }
    Eigen::Index i = n - 1;
    while (i >= 0 && z[i] == bound) {
      z[i] = -bound;
      --i;
    }
    if (i < 0) break;
    ++z[i];
  }
  return best;
}

OracleReport sphere_oracle_check(int instances, int max_dim, int bound, Rng& rng) {
  OracleReport rep;
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_int_distribution<int> center(-bound / 3, bound / 3);
  std::normal_distribution<double> g(0.0, 1.0);
  while (rep.instances < instances) {
    const int n = dim(rng);
    const int m = n + dim(rng) % 2;
    const Matrix B = Matrix::Identity(m, n) + 0.3 * gaussian_matrix(m, n, rng);
    IntVector z0(n);
    for (auto& v : z0) v = center(rng);
    Vector e(m);
    for (auto& v : e) v = 0.4 * g(rng);
    // |B (z* - z0)| <= 2 |e|, so z* stays in the box when this holds.
    const double smin = Eigen::JacobiSVD<Matrix>(B).singularValues().minCoeff();
    if (!(smin > 0.0) || z0.cwiseAbs().maxCoeff() + 2.0 * e.norm() / smin > bound) continue;
    const Vector y = B * z0.cast<double>() + e;
    const IntVector oracle = brute_force_closest(B, y, bound);
    const IntVector found = sphere_decode(B, y).z;
    ++rep.instances;
    if (found != oracle) ++rep.mismatches;
  }
  return rep;
}

double gdfe_identity_error(const Matrix& H, const GdfeFilters& filters) {
  const Matrix target = Matrix::Identity(H.cols(), H.cols()) + H.transpose() * H;
  return (filters.B.transpose() * filters.B - target).norm() / target.norm();
}

BijectivityReport exhaustive_bijectivity(const RelayMapper& mapper) {
  const int K = mapper.users();
  double space = 1.0;
  for (const auto& c : mapper.user_codes()) space *= std::pow(static_cast<double>(c.tau()), c.dimension());
  if (space > 4096.0) throw ArgumentError("exhaustive check limited to tau^n <= 4096");

  BijectivityReport rep;
  std::set<std::vector<std::int64_t>> images;
  std::vector<IntVector> z;
  for (const auto& c : mapper.user_codes()) z.push_back(IntVector::Zero(c.dimension()));
  const NestedLatticeCode& relay = mapper.relay_code();
  while (true) {
    const IntVector w = mapper.map_indices(z);
    images.insert(std::vector<std::int64_t>(w.data(), w.data() + w.size()));
    if (coset_index(relay, index_to_coset_leader(relay, w)) != w) ++rep.violations;
    ++rep.tuples;
    int u = K - 1;
    Eigen::Index i = z[u].size() - 1;
    while (true) {
      if (++z[u][i] < mapper.user_codes()[u].tau()) break;
      z[u][i] = 0;
      if (--i < 0) {
        if (--u < 0) break;
        i = z[u].size() - 1;
      }
    }
    if (u < 0) break;
  }
  rep.distinct_images = static_cast<std::int64_t>(images.size());
  rep.violations += rep.tuples - rep.distinct_images;
  return rep;
}

RelayMapper small_mapper(MapperKind kind, int n_user, int tau, Rng& rng, int p, int k) {
  k = std::min(k, n_user);
  const double rate = 2.0 * std::log2(static_cast<double>(tau));
  std::vector<NestedLatticeCode> users;
  for (int i = 0; i < 2; ++i) {
    users.push_back(NestedLatticeCode::construction_a(n_user, p, k, 1.0, rng).with_nesting(tau, rate));
  }
  const int n_relay = kind == MapperKind::OneToOneLinear ? 2 * n_user : n_user;
  const double relay_rate = kind == MapperKind::OneToOneLinear ? 2.0 * rate : rate;
  NestedLatticeCode relay =
      NestedLatticeCode::construction_a(n_relay, p, std::min(k, n_relay), 1.0, rng).with_nesting(tau, relay_rate);
  return RelayMapper(kind, std::move(users), std::move(relay));
}

std::vector<CheckResult> run_validation(std::string_view suite, const ValidateOptions& options) {
  const bool all = suite == "all";
  std::vector<CheckResult> out;
  bool known = false;
  auto wants = [&](std::string_view name) {
    const bool hit = all || suite == name;
    known = known || hit;
    return hit;
  };
  if (wants("sphere")) {
    Rng rng(substream(options.seed, 1, 0));
    sphere_suite(out, rng);
  }
  if (wants("gdfe")) {
    Rng rng(substream(options.seed, 2, 0));
    gdfe_suite(out, rng, options.break_gdfe);
  }
  if (wants("region")) {
    Rng rng(substream(options.seed, 3, 0));
    region_suite(out, rng);
  }
  if (wants("mapper")) {
    Rng rng(substream(options.seed, 4, 0));
    mapper_suite(out, rng, options.exhaustive_tau);
  }
  if (wants("lattice")) {
    Rng rng(substream(options.seed, 5, 0));
    lattice_suite(out, rng);
  }
  if (wants("channel")) {
    Rng rng(substream(options.seed, 6, 0));
    channel_suite(out, rng);
  }
  if (!known) {
    throw ArgumentError("unknown validation suite '" + std::string(suite) +
                        "' (expected all|sphere|gdfe|region|mapper|lattice|channel)");
  }
  return out;
}

std::string format_table(const std::vector<CheckResult>& results) {
  std::size_t w_suite = 5, w_name = 5;
  for (const auto& r : results) {
    w_suite = std::max(w_suite, r.suite.size());
    w_name = std::max(w_name, r.name.size());
  }
  std::ostringstream os;
  auto row = [&](const std::string& a, const std::string& b, const std::string& c, const std::string& d) {
    os << a << std::string(w_suite - a.size() + 2, ' ') << b << std::string(w_name - b.size() + 2, ' ') << c
       << "  " << d << "\n";
  };
  row("suite", "check", "result", "detail");
  for (const auto& r : results) row(r.suite, r.name, r.passed ? "PASS  " : "FAIL  ", r.detail);
  return os.str();
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

}  // namespace marc
