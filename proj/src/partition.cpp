#include "lqw/partition.hpp"

#include <cmath>

#include "lqw/errors.hpp"
#include "lqw/qsa.hpp"
#include "lqw/rng.hpp"

namespace lqw {

const char* to_string(PartitionMode m) { return m == PartitionMode::Exact ? "exact" : "sampled"; }

PartitionMode parse_partition_mode(const std::string& s) {
  if (s == "exact") return PartitionMode::Exact;
  if (s == "sampled") return PartitionMode::Sampled;
  throw InvalidArgument("unknown partition mode '" + s + "' (expected exact or sampled)");
}

double z0_closed_form(double sigma1_sq, int d) {
  if (!(sigma1_sq > 0)) throw InvalidArgument("sigma1_sq must be positive");
  return std::pow(2.0 * M_PI * sigma1_sq, 0.5 * d);
}

double grid_partition(const AnnealSchedule& s) { return std::exp(s.log_masses[s.M]); }

Z1Bracket z1_bracket(const AnnealSchedule& s) {
  Z1Bracket b;
  b.z0 = z0_closed_form(s.sigma_sq[0], s.d);
  // stage 1 carries the stage-0 variance in the bracketing statement
  const Eigen::VectorXd lw = -s.beta_f - s.domain.norms_sq() / (2.0 * s.sigma_sq[0]);
  b.z1 = std::exp(log_mass(s.domain, lw));
  b.lower = (1.0 - s.epsilon / 2.0) * b.z0;
  b.ok = b.z1 >= b.lower && b.z1 <= b.z0 * (1.0 + 1e-12);
  return b;
}

Eigen::VectorXd log_rung(const AnnealSchedule& s, int i) {
  if (i < 0 || i >= s.M) throw InvalidArgument("rung index " + std::to_string(i) + " out of range");
  return stage_log_weights(s, i + 1) - stage_log_weights(s, i);
}

namespace {

// log sum_x mu(x) e^{k lg(x)}
double log_moment(const Eigen::VectorXd& mu, const Eigen::VectorXd& lg, double k) {
  Eigen::VectorXd t(mu.size());
  for (int x = 0; x < mu.size(); ++x)
    t[x] = mu[x] > 0 ? std::log(mu[x]) + k * lg[x] : -std::numeric_limits<double>::infinity();
  return logsumexp(t);
}

}  // namespace

double stage_ratio_exact(const AnnealSchedule& s, int i) {
  return std::exp(log_moment(s.stage_dists[i].w, log_rung(s, i), 1.0));
}

double stage_ratio_sampled(const AnnealSchedule& s, int i, const CVec& state, std::uint64_t shots,
                           std::uint64_t seed) {
  if (state.size() != s.domain.size()) throw InvalidArgument("stage state lives on a different grid");
  const Measurement m = measure(state, shots, seed);
  Eigen::VectorXd freq(state.size());
  for (int x = 0; x < freq.size(); ++x) freq[x] = static_cast<double>(m.counts[x]) / static_cast<double>(shots);
  return std::exp(log_moment(freq, log_rung(s, i), 1.0));
}

double relative_variance(const AnnealSchedule& s, int i) {
  const Eigen::VectorXd lg = log_rung(s, i);
  const auto& mu = s.stage_dists[i].w;
  return std::exp(log_moment(mu, lg, 2.0) - 2.0 * log_moment(mu, lg, 1.0));
}

std::uint64_t rung_shots(double c_mean, double relvar, int M, double epsilon) {
  const double v = std::ceil(c_mean * relvar * static_cast<double>(M) * M / (epsilon * epsilon));
  return static_cast<std::uint64_t>(std::max(1.0, v));
}

PartitionEstimate estimate_partition(const AnnealSchedule& s, const PartitionOptions& opt,
                                     const std::vector<CVec>* stage_states) {
  if (!(opt.epsilon > 0 && opt.epsilon < 1)) throw InvalidArgument("epsilon must lie in (0,1)");
  if (opt.mode == PartitionMode::Sampled &&
      (!stage_states || static_cast<int>(stage_states->size()) < s.M))
    throw InvalidArgument("sampled mode needs an annealed state for every stage below M");
  PartitionEstimate e;
  e.mode = opt.mode;
  e.epsilon = opt.epsilon;
  e.z0 = z0_closed_form(s.sigma_sq[0], s.d);
  e.z0_grid = std::exp(s.log_masses[0]);
  double log_z = std::log(e.z0);
  for (int i = 0; i < s.M; ++i) {
    const double rv = relative_variance(s, i);
    if (rv > opt.relvar_cap)
      throw IllConditionedSchedule("rung " + std::to_string(i) + " relative variance " + std::to_string(rv) +
                                   " exceeds " + std::to_string(opt.relvar_cap));
    e.per_stage_relvar.push_back(rv);
    double ratio;
    if (opt.mode == PartitionMode::Exact) {
      ratio = stage_ratio_exact(s, i);
    } else {
      const std::uint64_t n = rung_shots(opt.c_mean, rv, s.M, opt.epsilon);
      e.shots.push_back(n);
      e.total_shots += n;
      ratio = stage_ratio_sampled(s, i, (*stage_states)[i], n, derive_seed(opt.seed, stream::kMeasure, i));
    }
    e.per_stage_ratios.push_back(ratio);
    log_z += std::log(ratio);
  }
  e.log_z_hat = log_z;
  e.z_hat = std::exp(log_z);
  e.reference = grid_partition(s);
  e.relative_error = std::abs(e.z_hat / e.reference - 1.0);
  return e;
}

}  // namespace lqw
