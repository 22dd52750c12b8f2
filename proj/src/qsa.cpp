#include "lqw/qsa.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>

#include "lqw/errors.hpp"
#include "lqw/rng.hpp"

namespace lqw {

const char* to_string(Backend b) {
  switch (b) {
    case Backend::MALA: return "mala";
    case Backend::ULA: return "ula";
    case Backend::SULA: return "sula";
  }
  return "?";
}

Backend parse_backend(const std::string& s) {
  if (s == "mala") return Backend::MALA;
  if (s == "ula") return Backend::ULA;
  if (s == "sula") return Backend::SULA;
  throw InvalidArgument("unknown backend '" + s + "' (expected mala, ula or sula)");
}

AmplifyPlan plan_amplification(double p0, double target_error) {
  if (!(p0 > 0)) throw NoOverlap("initial overlap is zero");
  if (!(target_error > 0)) throw InvalidArgument("target error must be positive");
  AmplifyPlan plan;
  plan.p0 = std::min(p0, 1.0);
  plan.target = target_error;
  const double q = 1.0 - plan.p0;
  if (q <= 0) {
    plan.depth = 0;
    plan.predicted_failure = 0;
    return plan;
  }
  // (1-p0)^(3^k) <= target  <=>  3^k log(1-p0) <= log(target)
  const double lq = std::log(q);
  const double lt = std::log(target_error);
  int k = 0;
  double pw = 1;
  while (pw * lq > lt) {
    ++k;
    pw *= 3;
    if (k > 60) throw NoOverlap("overlap too small to plan a finite recursion");
  }
  plan.depth = k;
  plan.predicted_failure = std::exp(pw * lq);
  return plan;
}

std::uint64_t recursion_reflections(int depth) {
  std::uint64_t r = 0;
  for (int i = 0; i < depth; ++i) r = 3 * r + 2;
  return r;
}

void Reflection::apply(CVec& state, bool adjoint) const {
  if (basis.cols() == 0) return;
  const cplx w = std::polar(1.0, adjoint ? -phase : phase) - 1.0;
  const CVec c = basis.transpose().cast<cplx>() * state;
  state.noalias() += w * (basis.cast<cplx>() * c);
}

CMat Reflection::matrix() const {
  const int n = static_cast<int>(basis.rows());
  CMat V = CMat::Identity(n, n);
  V += (std::polar(1.0, phase) - 1.0) * (basis * basis.transpose()).cast<cplx>();
  return V;
}

Reflection reflection_from_discriminant(const Mat& D, double gamma, double perturbation, std::uint64_t seed) {
  if (!(gamma > 0)) throw InvalidThreshold("reflection threshold must be positive");
  Mat A = D;
  if (perturbation > 0) {
    auto rng = make_stream(seed, stream::kPerturb);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat E(D.rows(), D.cols());
    for (int i = 0; i < E.rows(); ++i)
      for (int j = 0; j < E.cols(); ++j) E(i, j) = g(rng);
    E = 0.5 * (E + E.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(E, Eigen::EigenvaluesOnly);
    A += E * (perturbation / es.eigenvalues().cwiseAbs().maxCoeff());
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  std::vector<int> keep;
  for (int j = 0; j < A.rows(); ++j)
    if (std::acos(std::clamp(es.eigenvalues()[j], -1.0, 1.0)) < gamma) keep.push_back(j);
  Reflection r;
  r.basis.resize(A.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    Eigen::VectorXd v = es.eigenvectors().col(keep[c]);
    if (v.sum() < 0) v = -v;
    r.basis.col(static_cast<Eigen::Index>(c)) = v;
  }
  return r;
}

Reflection reflection_from_kernel(const MarkovKernel& k, double gamma, double perturbation, std::uint64_t seed) {
  Reflection r = reflection_from_discriminant(discriminant(k), gamma, perturbation, seed);
  r.delta = phase_gap(discriminant(k));
  return r;
}

Reflection reflection_about(const CVec& v) {
  Reflection r;
  const Eigen::VectorXd re = v.real();
  if (v.imag().norm() > 1e-12 * v.norm()) throw InvalidArgument("warm state must be real");
  r.basis = re / re.norm();
  r.delta = 0;
  return r;
}

void amplify_recursion(CVec& state, int depth, const std::function<void(CVec&, bool, bool)>& reflect) {
  if (depth == 0) return;
  // A_{k+1} = A_k R_s A_k^dagger R_t A_k, applied right to left
  std::function<void(int, bool)> rec = [&](int k, bool adj) {
    if (k == 0) return;
    if (!adj) {
      rec(k - 1, false);
      reflect(state, true, false);
      rec(k - 1, true);
      reflect(state, false, false);
      rec(k - 1, false);
    } else {
      rec(k - 1, true);
      reflect(state, false, true);
      rec(k - 1, false);
      reflect(state, true, true);
      rec(k - 1, true);
    }
  };
  rec(depth, false);
}

namespace {

std::uint64_t walk_cost(double c_proj, double delta) {
  if (!(delta > 0)) return 0;
  return static_cast<std::uint64_t>(std::ceil(c_proj / delta));
}

void charge(QueryLedger* ledger, std::uint64_t apps, int grad_cost, int func_cost) {
  if (!ledger) return;
  ledger->reflections += 1;
  ledger->walk_applications += apps;
  ledger->gradient_component_evals += apps * static_cast<std::uint64_t>(grad_cost);
  ledger->function_evals += apps * static_cast<std::uint64_t>(func_cost);
}

}  // namespace

CVec amplify(const CVec& state, const Reflection& source, const Reflection& target, const AmplifyPlan& plan,
             QueryLedger* ledger, double c_proj, int grad_cost, int func_cost) {
  CVec s = state;
  amplify_recursion(s, plan.depth, [&](CVec& v, bool is_target, bool adj) {
    const Reflection& r = is_target ? target : source;
    r.apply(v, adj);
    charge(ledger, walk_cost(c_proj, r.delta), grad_cost, func_cost);
  });
  return s;
}

namespace {

// Per-stage walks for one annealing run.
class Pipeline {
 public:
  Pipeline(const AnnealSchedule& s, const PotentialSpec& spec, const QsaOptions& opt)
      : s_(s), spec_(spec), opt_(opt), base_(full_field(spec, s.domain)),
        sula_rng_(make_stream(opt.seed, stream::kSula)) {
    zero_.energy = Eigen::VectorXd::Zero(s.domain.size());
    zero_.gradient.assign(s.domain.size(), Vec::Zero(spec.d));
    if (opt.backend == Backend::SULA && (opt.batch < 1 || opt.batch > spec.N()))
      throw InvalidBatch("sula batch size must lie in [1, N]");
  }

  struct Stage {
    int index = 0;
    double eta = 0;
    double delta = 0;
    double gamma = 0;
    Reflection fixed;  // MALA / ULA
    CVec ideal;        // coherent stage state
    double reflection_error = 0;
    std::map<std::vector<int>, Mat> sqrt_kernels;  // SULA cache
  };

  Stage& stage(int i) {
    for (auto& st : cache_)
      if (st && st->index == i) return *st;
    auto st = std::make_unique<Stage>();
    build(*st, i);
    cache_[slot_] = std::move(st);
    Stage& out = *cache_[slot_];
    slot_ = 1 - slot_;
    return out;
  }

  double stage_eta(int i) const {
    if (!opt_.cap_stage_step || i == s_.M) return opt_.eta;
    return std::min(opt_.eta, s_.beta * s_.sigma_sq[i]);
  }

  NodeField field(int i, const NodeField& f) const {
    if (i == s_.M) return f;
    return tempered_field(i == 0 ? zero_ : f, s_.domain, s_.beta, s_.sigma_sq[i]);
  }

  void reflect(int i, CVec& v, bool adj, QueryLedger& ledger) {
    Stage& st = stage(i);
    const std::uint64_t apps = walk_cost(opt_.c_proj, st.delta);
    int gc = 0, fc = 0;
    if (i != 0) {
      switch (opt_.backend) {
        case Backend::MALA: gc = 2 * spec_.N(); fc = 2; break;
        case Backend::ULA: gc = spec_.N(); break;
        case Backend::SULA: gc = opt_.batch; break;
      }
    }
    charge(&ledger, apps, gc, fc);
    if (opt_.backend != Backend::SULA || i == 0) {
      st.fixed.apply(v, adj);
      return;
    }
    // Every walk application inside the projector sees its own batch; the
    // circuit then realizes the walk of the batch-averaged isometry.
    const int n = s_.domain.size();
    Mat A = Mat::Zero(n, n);
    const std::uint64_t K = std::max<std::uint64_t>(apps, 1);
    for (std::uint64_t j = 0; j < K; ++j) {
      MiniBatch mb = draw_batch(spec_.N(), opt_.batch, sula_rng_);
      std::sort(mb.indices.begin(), mb.indices.end());
      auto it = st.sqrt_kernels.find(mb.indices);
      if (it == st.sqrt_kernels.end()) {
        const NodeField f = field(i, batch_field(spec_, s_.domain, mb));
        const MarkovKernel k = ula_from_field(s_.domain, f, st.eta, s_.beta, true);
        it = st.sqrt_kernels.emplace(mb.indices, k.P.cwiseSqrt()).first;
      }
      A += it->second;
    }
    A /= static_cast<double>(K);
    Mat P = A.cwiseAbs2();
    P = (P.array().colwise() / P.rowwise().sum().array()).eval();
    Reflection r = reflection_from_discriminant(discriminant(P), st.gamma, opt_.perturbation,
                                                derive_seed(opt_.seed, stream::kPerturb, counter_++));
    r.phase = st.fixed.phase;
    r.apply(v, adj);
  }

 private:
  void build(Stage& st, int i) {
    st.index = i;
    st.eta = stage_eta(i);
    const NodeField f = field(i, base_);
    const MarkovKernel mala = mala_from_field(s_.domain, f, st.eta, s_.beta);
    const Mat Dm = discriminant(mala);
    try {
      st.delta = phase_gap(Dm);
    } catch (const ZeroPhaseGap&) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3g", st.eta);
      throw ZeroPhaseGap("stage " + std::to_string(i) + " walk at eta " + buf +
                         ": second singular value of the discriminant is 1");
    }
    // midpoint of the gap of U^2, i.e. a quarter of it in phases of U
    st.gamma = st.delta / 4;
    st.ideal = coherent_state(s_.stage_dists[i]);
    const std::uint64_t pseed = derive_seed(opt_.seed, stream::kPerturb, 1000003ULL * (i + 1));
    if (opt_.backend == Backend::MALA) {
      st.fixed = reflection_from_discriminant(Dm, st.gamma, opt_.perturbation, pseed);
      if (st.fixed.rank() == 1)
        st.reflection_error = (st.fixed.basis.col(0) - st.ideal.real()).cwiseAbs().maxCoeff();
      else
        st.reflection_error = std::numeric_limits<double>::quiet_NaN();
    } else if (opt_.backend == Backend::ULA || i == 0) {
      const MarkovKernel ula = ula_from_field(s_.domain, f, st.eta, s_.beta, true);
      st.fixed = reflection_from_discriminant(discriminant(ula), st.gamma, opt_.perturbation, pseed);
    }
    st.fixed.delta = st.delta;
    if (opt_.backend != Backend::SULA || i == 0) {
      if (st.fixed.rank() == 0)
        throw AnnealingFailed(i, "reflection subspace is empty");
    }
  }

  const AnnealSchedule& s_;
  const PotentialSpec& spec_;
  const QsaOptions& opt_;
  NodeField base_;
  NodeField zero_;
  std::mt19937_64 sula_rng_;
  std::unique_ptr<Stage> cache_[2];
  int slot_ = 0;
  std::uint64_t counter_ = 0;
};

double amplitude_tv(const CVec& state, const Eigen::VectorXd& pi) {
  return tv_distance(state.cwiseAbs2(), pi);
}

void drive(Pipeline& pipe, CVec& state, int from, int to, double target_failure, const QsaOptions& opt,
           RunResult& out, const Reflection* warm_source) {
  auto& tgt = pipe.stage(to);
  const CVec ideal = tgt.ideal;
  const double delta = tgt.delta;
  const double ov0 = std::abs(ideal.dot(state));
  if (ov0 < opt.fail_overlap)
    throw AnnealingFailed(from, "overlap " + std::to_string(ov0) + " with the next stage is below " +
                                    std::to_string(opt.fail_overlap));
  const AmplifyPlan plan = plan_amplification(ov0 * ov0, target_failure);
  amplify_recursion(state, plan.depth, [&](CVec& v, bool is_target, bool adj) {
    if (!is_target && warm_source) {
      warm_source->apply(v, adj);
      out.ledger.reflections += 1;  // preparing the warm state costs no walk steps
      return;
    }
    pipe.reflect(is_target ? to : from, v, adj, out.ledger);
  });
  state /= state.norm();
  StageRecord rec;
  rec.from = from;
  rec.eta = tgt.eta;
  rec.delta = delta;
  rec.p0 = ov0 * ov0;
  rec.depth = plan.depth;
  rec.predicted_failure = plan.predicted_failure;
  const double ov1 = std::abs(ideal.dot(state));
  rec.infidelity = std::max(0.0, 1.0 - ov1 * ov1);
  auto& tgt2 = pipe.stage(to);
  rec.reflection_rank = opt.backend == Backend::SULA ? -1 : tgt2.fixed.rank();
  rec.reflection_error = tgt2.reflection_error;
  out.stages.push_back(rec);
  if (ov1 < opt.fail_overlap)
    throw AnnealingFailed(from, "overlap after driving fell to " + std::to_string(ov1));
}

}  // namespace

RunResult run_annealing(const AnnealSchedule& schedule, const PotentialSpec& spec, const QsaOptions& opt) {
  if (!(opt.epsilon > 0 && opt.epsilon < 1)) throw InvalidArgument("epsilon must lie in (0,1)");
  if (!(opt.c_proj > 0)) throw InvalidArgument("c_proj must be positive");
  if (!(opt.eta > 0)) throw InvalidStep("step size must be positive");
  RunResult out;
  out.backend = opt.backend;
  out.eta = opt.eta;
  out.epsilon = opt.epsilon;
  out.seed = opt.seed;
  Pipeline pipe(schedule, spec, opt);
  CVec state = coherent_state(schedule.stage_dists[0]);
  if (opt.keep_stage_states) out.stage_states.push_back(state);
  const double per_stage = std::pow(opt.epsilon / (2.0 * schedule.M), 2);
  for (int i = 0; i < schedule.M; ++i) {
    drive(pipe, state, i, i + 1, per_stage, opt, out, nullptr);
    if (opt.keep_stage_states) out.stage_states.push_back(state);
  }
  out.state = state;
  out.tv = amplitude_tv(state, schedule.stage_dists[schedule.M].w);
  return out;
}

RunResult run_warm_start(const AnnealSchedule& schedule, const PotentialSpec& spec,
                         const DiscreteDistribution& warm, const QsaOptions& opt) {
  if (warm.size() != schedule.domain.size()) throw InvalidArgument("warm state lives on a different grid");
  RunResult out;
  out.backend = opt.backend;
  out.eta = opt.eta;
  out.epsilon = opt.epsilon;
  out.seed = opt.seed;
  Pipeline pipe(schedule, spec, opt);
  CVec state = coherent_state(warm);
  const Reflection src = reflection_about(state);
  drive(pipe, state, -1, schedule.M, std::pow(opt.epsilon / 2.0, 2), opt, out, &src);
  out.state = state;
  out.tv = amplitude_tv(state, schedule.stage_dists[schedule.M].w);
  return out;
}

Measurement measure(const CVec& state, std::uint64_t shots, std::uint64_t seed) {
  if (shots < 1) throw InvalidArgument("measurement needs at least one shot");
  const Eigen::VectorXd p = state.cwiseAbs2() / state.squaredNorm();
  auto rng = make_stream(seed, stream::kMeasure);
  Measurement m;
  m.shots = shots;
  m.counts.assign(p.size(), 0);
  long long remaining = static_cast<long long>(shots);
  double rest = 1.0;
  for (int x = 0; x < p.size() && remaining > 0; ++x) {
    if (x == p.size() - 1 || rest <= 0) {
      m.counts[x] = static_cast<std::uint64_t>(remaining);
      remaining = 0;
      break;
    }
    const double q = std::clamp(p[x] / rest, 0.0, 1.0);
    std::binomial_distribution<long long> bin(remaining, q);
    const long long c = bin(rng);
    m.counts[x] = static_cast<std::uint64_t>(c);
    remaining -= c;
    rest -= p[x];
  }
  double tv = 0;
  for (int x = 0; x < p.size(); ++x) tv += std::abs(static_cast<double>(m.counts[x]) / shots - p[x]);
  m.empirical_tv = 0.5 * tv;
  return m;
}

std::vector<int> measure_samples(const CVec& state, std::uint64_t shots, std::uint64_t seed) {
  const Eigen::VectorXd p = state.cwiseAbs2();
  std::discrete_distribution<int> dist(p.data(), p.data() + p.size());
  auto rng = make_stream(seed, stream::kMeasure);
  std::vector<int> out(shots);
  for (auto& v : out) v = dist(rng);
  return out;
}

double ula_step_gate(double epsilon, double rho, double c0, int d, double L, double beta) {
  return epsilon * epsilon * rho * rho / (c0 * 16.0 * std::sqrt(2.0) * M_PI * d * d * L * L * beta);
}

SulaGate sula_step_gate(double epsilon, double rho, int d, double L, double R, double G, double beta, int B) {
  const double a = L * R + G;
  const double e2 = epsilon * epsilon;
  SulaGate g;
  g.variance = e2 * rho * rho / (2.0 * beta * d * d * L * L);
  g.bias = e2 * e2 * rho * rho * B / (4.0 * beta * beta * beta * d * a * a);
  g.spread = e2 * e2 * rho * rho / (128.0 * 128.0 * a * a * a * a * beta * beta * beta);
  return g;
}

}  // namespace lqw
