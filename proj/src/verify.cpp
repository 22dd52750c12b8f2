#include "lqw/verify.hpp"

#include <cmath>
#include <sstream>

#include "lqw/anneal.hpp"
#include "lqw/chains.hpp"
#include "lqw/errors.hpp"
#include "lqw/rng.hpp"
#include "lqw/walk.hpp"

namespace lqw {

bool SuiteReport::pass() const { return violations() == 0; }

int SuiteReport::violations() const {
  int v = 0;
  for (const auto& r : rows) v += r.pass ? 0 : 1;
  return v;
}

double SuiteReport::worst_ratio() const {
  double w = 0;
  for (const auto& r : rows)
    if (r.rhs > 0) w = std::max(w, r.lhs / r.rhs);
  return w;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"lemma1", "lemma2", "lemma3", "phasegap", "lemma7",
                                              "lemma8", "overlaps", "relvar", "all"};
  return names;
}

namespace {

constexpr double kTol = 1e-12;

VerifyRow row(const std::string& suite, int i, const std::string& label, double lhs, double rhs) {
  VerifyRow r;
  r.suite = suite;
  r.instance = i;
  r.label = label;
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.pass = lhs <= rhs + kTol * std::max(1.0, std::abs(rhs));
  return r;
}

std::uint64_t suite_tag(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : name) h = (h ^ static_cast<unsigned char>(ch)) * 1099511628211ULL;
  return h;
}

// A random 1D catalog potential with its constants on [-R, R].
struct Instance {
  PotentialSpec spec;
  AssumptionConstants c;
  GridDomain domain;
  double R = 0;
  double eta = 0;
  std::string label;
};

PotentialSpec pick_potential(int kind, std::mt19937_64& rng, AssumptionConstants& c, double R, int N = 4) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (kind == 0) {
    c = catalog_constants("quadratic", 1, R);
    return make_quadratic(1);
  }
  if (kind == 1) {
    c = catalog_constants("double_well", 1, R);
    return make_double_well(1);
  }
  std::vector<Vec> centers;
  for (int k = 0; k < N; ++k) centers.push_back(Vec::Constant(1, u(rng)));
  c = catalog_constants("mixture", 1, R, {}, centers);
  return make_mixture(centers);
}

std::string describe(const Instance& in) {
  std::ostringstream os;
  os.precision(6);
  os << in.spec.name << " R=" << in.R << " n=" << in.domain.size() << " eta=" << in.eta;
  return os.str();
}

// Shared by lemma1 / lemma2: step u * d / (beta (LR+G)^2), u in [0.1, 1].
Instance admissible_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> Rd(1.5, 3.0), ud(0.1, 1.0);
  std::uniform_int_distribution<int> nd(4, 12);
  Instance in;
  const int k = kind(rng);
  in.R = Rd(rng);
  const int n = nd(rng);
  in.spec = pick_potential(k, rng, in.c, in.R);
  in.domain = build_grid(1, in.R, n);
  in.eta = ud(rng) * admissible_step(in.c, 1, in.R, in.spec.beta);
  in.label = describe(in);
  return in;
}

Instance mala_instance(std::mt19937_64& rng, int n_max, double eta_max) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> Rd(1.5, 3.0), ed(0.02, eta_max);
  std::uniform_int_distribution<int> nd(4, n_max);
  Instance in;
  const int k = kind(rng);
  in.R = Rd(rng);
  const int n = nd(rng);
  in.spec = pick_potential(k, rng, in.c, in.R);
  in.domain = build_grid(1, in.R, n);
  in.eta = ed(rng);
  in.label = describe(in);
  return in;
}

// Coarse grids with long steps can leave MALA reducible (every move
// rejected); such draws are skipped since the gap statements assume an
// ergodic chain.
double ergodic_mala(std::mt19937_64& rng, int n_max, double eta_max, Instance& in, MarkovKernel& k) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    in = mala_instance(rng, n_max, eta_max);
    k = mala_kernel(in.spec, in.c, in.domain, in.eta);
    const double s1 = second_singular_value(discriminant(k));
    if (s1 < 1.0 - 1e-9) return phase_gap(discriminant(k));
  }
  throw InvalidArgument("could not draw an ergodic MALA instance");
}

void suite_lemma12(SuiteReport& rep, const VerifyOptions& opt, bool first) {
  auto rng = make_stream(opt.seed, stream::kInstances, suite_tag("lemma12"));
  for (int i = 0; i < opt.instances; ++i) {
    const Instance in = admissible_instance(rng);
    const MarkovKernel ula = ula_kernel(in.spec, in.c, in.domain, in.eta, true);
    const MarkovKernel mala = opt.identical_kernels ? ula : mala_kernel(in.spec, in.c, in.domain, in.eta);
    const double h = max_row_hellinger(ula, mala);
    if (first) {
      const double d = op_distance(build_walk(ula, WalkMode::Full), build_walk(mala, WalkMode::Full));
      rep.rows.push_back(row("lemma1", i, in.label + " |U_ula-U_mala| <= 4sqrt2 H", d, 4 * std::sqrt(2.0) * h));
    } else {
      const double bound = 1.1 * 4 * in.eta * in.domain.d * in.c.L;
      rep.rows.push_back(row("lemma2", i, in.label + " H <= 1.1*4 eta d L", h, bound));
    }
  }
}

void suite_phasegap(SuiteReport& rep, const VerifyOptions& opt) {
  auto rng = make_stream(opt.seed, stream::kInstances, suite_tag("phasegap"));
  for (int i = 0; i < opt.instances; ++i) {
    Instance in;
    MarkovKernel k;
    const double delta = ergodic_mala(rng, 12, 0.3, in, k);
    const DiscreteDistribution pi = stationary(k);
    const double phi = conductance(k, pi, ConductanceMode::Exact);
    rep.rows.push_back(row("phasegap", i, in.label + " sqrt2 phi <= Delta", std::sqrt(2.0) * phi, delta));
  }
}

void suite_lemma3(SuiteReport& rep, const VerifyOptions& opt) {
  auto rng = make_stream(opt.seed, stream::kInstances, suite_tag("lemma3"));
  std::uniform_real_distribution<double> sd(0.01, 0.5);
  for (int i = 0; i < opt.instances; ++i) {
    Instance in;
    MarkovKernel k;
    const double delta = ergodic_mala(rng, 10, 0.2, in, k);
    const WalkOperator w = build_walk(k, WalkMode::Full);
    // Work with the two-step walk W = U^2 on the active subspace: its phase
    // gap is Delta and the threshold sits mid-gap.
    const CMat U = active_unitary(w);
    const CMat W = U * U;
    const CMat H = random_hermitian(static_cast<int>(W.rows()), sd(rng) * delta / 2, rng);
    const CMat Wt = expi_hermitian(H) * W;
    const double dist = spectral_norm(CMat(W - Wt));
    const CMat Pi = phase_projector(unitary_spectrum(W), delta / 2);
    const CMat Pit = phase_projector(unitary_spectrum(Wt), delta / 2);
    const double lhs = spectral_norm(CMat(Pi - Pit));
    rep.rows.push_back(row("lemma3", i, in.label + " |Pi-Pi~| <= delta pi/(4 Delta)", lhs,
                           dist * M_PI / (4 * delta)));
  }
}

void suite_lemma78(SuiteReport& rep, const VerifyOptions& opt, bool seven) {
  auto rng = make_stream(opt.seed, stream::kInstances, suite_tag("lemma78"));
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  const double R = 2.0;
  const int B = 2;
  for (int i = 0; i < opt.instances; ++i) {
    const int N = i % 2 == 0 ? 4 : 6;
    AssumptionConstants c;
    const PotentialSpec spec = pick_potential(2, rng, c, R, N);
    const GridDomain dom = build_grid(1, R, 9);
    const double eta = ud(rng) * admissible_step(c, 1, R, spec.beta);
    const WalkFamily fam = stochastic_walk_family(spec, c, dom, eta, B, Enumeration{});
    const double a = c.L * R + c.G;
    std::ostringstream os;
    os.precision(6);
    os << "mixture N=" << N << " B=" << B << " n=9 eta=" << eta;
    if (seven) {
      const Mat U = walk_unitary(ula_kernel(spec, c, dom, eta, true).P);
      const double lhs = spectral_norm(Mat(fam.expected - U));
      const double rhs = 6 * std::sqrt(2.0) * eta * a * std::sqrt(dom.d * spec.beta) / std::sqrt(double(B));
      rep.rows.push_back(row("lemma7", i, os.str() + " |E U_l - U| <= 6sqrt2 eta (LR+G) sqrt(d beta/B)", lhs, rhs));
    } else {
      double worst = 0;
      for (std::size_t p = 0; p < fam.unitaries.size(); ++p)
        for (std::size_t q = p + 1; q < fam.unitaries.size(); ++q)
          worst = std::max(worst, spectral_norm(Mat(fam.unitaries[p] - fam.unitaries[q])));
      rep.rows.push_back(row("lemma8", i, os.str() + " max |U_l1 - U_l2| <= 8 sqrt(eta beta)(LR+G)", worst,
                             8 * std::sqrt(eta * spec.beta) * a));
    }
  }
}

struct ScheduleInstance {
  AnnealSchedule schedule;
  std::string label;
};

ScheduleInstance schedule_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> ad(0.1, 0.3), ed(0.05, 0.2);
  const double R = 3.0;
  const double eta = 0.05;
  AssumptionConstants c;
  const PotentialSpec spec = pick_potential(kind(rng), rng, c, R);
  const GridDomain dom = build_grid(1, R, 33);
  const MarkovKernel k = mala_kernel(spec, c, dom, eta);
  c.c_lsi = spectral_gap(k, stationary(k)) / eta;
  const double alpha_scale = ad(rng);
  const double eps = ed(rng);
  ScheduleInstance si;
  si.schedule = build_schedule(spec, c, dom, eps, alpha_scale);
  std::ostringstream os;
  os.precision(6);
  os << spec.name << " c_lsi=" << c.c_lsi << " alpha_scale=" << alpha_scale << " eps=" << eps
     << " M=" << si.schedule.M;
  si.label = os.str();
  return si;
}

void suite_overlaps(SuiteReport& rep, const VerifyOptions& opt) {
  auto rng = make_stream(opt.seed, stream::kInstances, suite_tag("overlaps"));
  const ScheduleThresholds t;
  for (int i = 0; i < opt.instances; ++i) {
    const ScheduleInstance si = schedule_instance(rng);
    const ScheduleReport r = validate_schedule(si.schedule, t);
    rep.rows.push_back(row("overlaps", i, si.label + " min consecutive overlap >= 0.5", t.consecutive,
                           r.min_consecutive));
    rep.rows.push_back(row("overlaps", i, si.label + " final overlap >= 0.5", t.final_overlap, r.final_overlap));
  }
}

void suite_relvar(SuiteReport& rep, const VerifyOptions& opt) {
  auto rng = make_stream(opt.seed, stream::kInstances, suite_tag("relvar"));
  const double cap = 10.0;
  for (int i = 0; i < opt.instances; ++i) {
    const ScheduleInstance si = schedule_instance(rng);
    const AnnealSchedule& s = si.schedule;
    double lo = 1e300, hi = 0, mgf_lo = 1e300;
    for (int j = 0; j < s.M; ++j) {
      const Eigen::VectorXd lg = stage_log_weights(s, j + 1) - stage_log_weights(s, j);
      const auto& mu = s.stage_dists[j].w;
      const double m1 = (mu.array() * scalar_exp(lg.array())).sum();
      const double m2 = (mu.array() * scalar_exp((2 * lg).array())).sum();
      const double rv = m2 / (m1 * m1);
      lo = std::min(lo, rv);
      hi = std::max(hi, rv);
      if (j + 1 < s.M) {
        const double sc = 0.5 * (1.0 / s.sigma_sq[j] - 1.0 / s.sigma_sq[j + 1]);
        mgf_lo = std::min(mgf_lo, mgf_product(s.stage_dists[j], s.domain, sc));
      }
    }
    const double C = std::log(hi) * s.m / (s.d * s.L * s.alpha * s.alpha);
    std::ostringstream os;
    os.precision(6);
    os << si.label << " C=" << C;
    rep.rows.push_back(row("relvar", i, os.str() + " floor: 1 <= min relvar", 1.0 - kTol, lo));
    rep.rows.push_back(row("relvar", i, os.str() + " max relvar <= cap", hi, cap));
    if (s.M > 1)
      rep.rows.push_back(row("relvar", i, os.str() + " 1 <= min E[e^-s r2] E[e^s r2]", 1.0 - kTol, mgf_lo));
  }
}

}  // namespace

SuiteReport verify_suite(const std::string& name, const VerifyOptions& opt) {
  if (opt.instances < 0) throw InvalidArgument("instance count must be non-negative");
  SuiteReport rep;
  rep.name = name;
  rep.instances = opt.instances;
  rep.seed = opt.seed;
  if (name == "lemma1") suite_lemma12(rep, opt, true);
  else if (name == "lemma2") suite_lemma12(rep, opt, false);
  else if (name == "lemma3") suite_lemma3(rep, opt);
  else if (name == "phasegap") suite_phasegap(rep, opt);
  else if (name == "lemma7") suite_lemma78(rep, opt, true);
  else if (name == "lemma8") suite_lemma78(rep, opt, false);
  else if (name == "overlaps") suite_overlaps(rep, opt);
  else if (name == "relvar") suite_relvar(rep, opt);
  else if (name == "all") {
    for (const auto& s : suite_names()) {
      if (s == "all") continue;
      SuiteReport sub = verify_suite(s, opt);
      rep.rows.insert(rep.rows.end(), sub.rows.begin(), sub.rows.end());
    }
  } else {
    throw InvalidArgument("unknown suite '" + name + "'");
  }
  return rep;
}

SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope fit needs at least two points");
  SlopeFit f;
  f.x = x;
  f.y = y;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) throw InvalidArgument("log-log fit needs positive data");
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return f;
}

SlopeFit hellinger_step_slope(double R, int n, const std::vector<double>& etas) {
  const PotentialSpec spec = make_double_well(1);
  const AssumptionConstants c = catalog_constants("double_well", 1, R);
  const GridDomain dom = build_grid(1, R, n);
  std::vector<double> h;
  for (double eta : etas)
    h.push_back(max_row_hellinger(ula_kernel(spec, c, dom, eta, true), mala_kernel(spec, c, dom, eta)));
  return loglog_fit(etas, h);
}

}  // namespace lqw
