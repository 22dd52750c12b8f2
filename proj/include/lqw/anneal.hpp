#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lqw/domain.hpp"
#include "lqw/potential.hpp"

namespace lqw {

constexpr int kMaxStages = 10000;

// Stage 0 is the Gaussian exp(-|x|^2 / (2 sigma_sq[0])), stages 1..M-1 are
// exp(-beta f - |x|^2 / (2 sigma_sq[i])) and stage M is exp(-beta f).
// sigma_sq[i] = sigma_sq[0] (1 + alpha)^i for i = 0..M, with sigma_sq[0] = eps / (2 d L)
// and M the first index whose sigma_sq reaches sqrt(d L / (m c_lsi^2)).
struct AnnealSchedule {
  std::vector<double> sigma_sq;
  double alpha = 0;
  double alpha_scale = 0;
  int M = 0;
  double epsilon = 0;
  double target_sigma_sq = 0;
  int d = 1;
  double L = 1, m = 1, c_lsi = 1, beta = 1;
  GridDomain domain;
  Eigen::VectorXd beta_f;  // beta * f at the nodes
  std::vector<DiscreteDistribution> stage_dists;
  std::vector<double> log_masses;  // log Z_i on the grid, cell measure included
};

AnnealSchedule build_schedule(const PotentialSpec& spec, const AssumptionConstants& c,
                              const GridDomain& domain, double epsilon, double alpha_scale);

Eigen::VectorXd stage_log_weights(const AnnealSchedule& s, int i);
const DiscreteDistribution& stage_distribution(const AnnealSchedule& s, int i);
double overlap(const AnnealSchedule& s, int i, int j);

struct ScheduleThresholds {
  double consecutive = 0.5;
  double final_overlap = 0.5;
  double m_factor = 2.0;
};

struct ScheduleReport {
  std::vector<double> consecutive;  // overlap(i, i+1), i = 0..M-1
  double min_consecutive = 1;
  int argmin = 0;
  double final_overlap = 1;  // overlap(M-1, M)
  int M = 0;
  double reference = 0;  // sqrt(d L / (m c_lsi^2))
  double m_ratio = 0;    // M / reference
  bool consecutive_ok = true, final_ok = true, m_ok = true;
  bool pass() const { return consecutive_ok && final_ok && m_ok; }
};

ScheduleReport validate_schedule(const AnnealSchedule& s, const ScheduleThresholds& t = {});

// Bhattacharyya coefficient of two centered isotropic Gaussians.
double gaussian_bhattacharyya(double var_a, double var_b, int d);

// E_pi[exp(-s|x|^2)] * E_pi[exp(s|x|^2)] on the grid.
double mgf_product(const DiscreteDistribution& pi, const GridDomain& domain, double s);
// E_{pi_s}[|x|^2] with pi_s proportional to pi exp(s|x|^2).
double tilted_second_moment(const DiscreteDistribution& pi, const GridDomain& domain, double s);

}  // namespace lqw
