#include "lqw/anneal.hpp"

#include <cmath>

#include "lqw/errors.hpp"

namespace lqw {

AnnealSchedule build_schedule(const PotentialSpec& spec, const AssumptionConstants& c,
                              const GridDomain& domain, double epsilon, double alpha_scale) {
  validate(spec);
  validate(c);
  if (!(epsilon > 0 && epsilon < 1)) throw InvalidArgument("schedule epsilon must lie in (0,1)");
  if (!(alpha_scale > 0)) throw InvalidArgument("alpha_scale must be positive");
  AnnealSchedule s;
  s.d = spec.d;
  s.L = c.L;
  s.m = c.m;
  s.c_lsi = c.c_lsi;
  s.beta = spec.beta;
  s.epsilon = epsilon;
  s.alpha_scale = alpha_scale;
  s.alpha = alpha_scale * c.c_lsi * std::sqrt(c.m / (spec.d * c.L));
  if (s.alpha >= 1)
    throw GrowthTooAggressive("alpha = " + std::to_string(s.alpha) + " >= 1; lower alpha_scale");
  const double s1 = epsilon / (2.0 * spec.d * c.L);
  s.target_sigma_sq = std::sqrt(spec.d * c.L / (c.m * c.c_lsi * c.c_lsi));
  const double steps = std::log(s.target_sigma_sq / s1) / std::log1p(s.alpha);
  if (steps > kMaxStages) throw ScheduleTooLong(std::to_string(static_cast<long>(std::ceil(steps))) +
                                                " stages exceed the limit of " + std::to_string(kMaxStages));
  int M = std::max(1, static_cast<int>(std::ceil(steps)));
  // guard the ceiling against rounding in the logarithms
  auto sig = [&](int i) { return s1 * std::pow(1.0 + s.alpha, i); };
  while (M > 1 && sig(M - 1) >= s.target_sigma_sq) --M;
  while (sig(M) < s.target_sigma_sq) ++M;
  if (M > kMaxStages) throw ScheduleTooLong("too many stages");
  s.M = M;
  s.sigma_sq.resize(M + 1);
  for (int i = 0; i <= M; ++i) s.sigma_sq[i] = sig(i);
  s.domain = domain;
  s.beta_f = spec.beta * energies(spec, domain);
  s.stage_dists.resize(M + 1);
  s.log_masses.resize(M + 1);
  for (int i = 0; i <= M; ++i) {
    const Eigen::VectorXd lw = stage_log_weights(s, i);
    s.stage_dists[i] = from_log_weights(lw);
    s.log_masses[i] = log_mass(domain, lw);
  }
  return s;
}

Eigen::VectorXd stage_log_weights(const AnnealSchedule& s, int i) {
  if (i < 0 || i > s.M) throw InvalidArgument("stage index " + std::to_string(i) + " out of range");
  const Eigen::VectorXd r2 = s.domain.norms_sq();
  if (i == 0) return -r2 / (2.0 * s.sigma_sq[0]);
  if (i == s.M) return -s.beta_f;
  return -s.beta_f - r2 / (2.0 * s.sigma_sq[i]);
}

const DiscreteDistribution& stage_distribution(const AnnealSchedule& s, int i) {
  if (i < 0 || i > s.M) throw InvalidArgument("stage index " + std::to_string(i) + " out of range");
  return s.stage_dists[i];
}

double overlap(const AnnealSchedule& s, int i, int j) {
  if (i == j) {
    stage_distribution(s, i);
    return 1.0;
  }
  const auto& a = stage_distribution(s, i).w;
  const auto& b = stage_distribution(s, j).w;
  // symmetric in (i, j) term by term
  return (a.cwiseProduct(b)).cwiseSqrt().sum();
}

ScheduleReport validate_schedule(const AnnealSchedule& s, const ScheduleThresholds& t) {
  ScheduleReport r;
  r.M = s.M;
  r.consecutive.resize(s.M);
  r.min_consecutive = 2;
  for (int i = 0; i < s.M; ++i) {
    r.consecutive[i] = overlap(s, i, i + 1);
    if (r.consecutive[i] < r.min_consecutive) {
      r.min_consecutive = r.consecutive[i];
      r.argmin = i;
    }
  }
  r.final_overlap = overlap(s, s.M - 1, s.M);
  r.reference = std::sqrt(s.d * s.L / (s.m * s.c_lsi * s.c_lsi));
  r.m_ratio = s.M / r.reference;
  r.consecutive_ok = r.min_consecutive >= t.consecutive;
  r.final_ok = r.final_overlap >= t.final_overlap;
  r.m_ok = r.m_ratio <= t.m_factor && r.m_ratio >= 1.0 / t.m_factor;
  return r;
}

double gaussian_bhattacharyya(double var_a, double var_b, int d) {
  const double sa = std::sqrt(var_a), sb = std::sqrt(var_b);
  return std::pow(2.0 * sa * sb / (var_a + var_b), 0.5 * d);
}

double mgf_product(const DiscreteDistribution& pi, const GridDomain& domain, double s) {
  const Eigen::VectorXd r2 = domain.norms_sq();
  const Eigen::VectorXd lp = pi.w.array().log().matrix();
  return std::exp(logsumexp(lp - s * r2) + logsumexp(lp + s * r2));
}

double tilted_second_moment(const DiscreteDistribution& pi, const GridDomain& domain, double s) {
  const Eigen::VectorXd r2 = domain.norms_sq();
  const Eigen::VectorXd lw = pi.w.array().log().matrix() + s * r2;
  const DiscreteDistribution t = from_log_weights(lw);
  return t.w.dot(r2);
}

}  // namespace lqw
