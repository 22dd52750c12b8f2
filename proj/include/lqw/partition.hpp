#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lqw/anneal.hpp"
#include "lqw/walk.hpp"

namespace lqw {

enum class PartitionMode { Exact, Sampled };

const char* to_string(PartitionMode m);
PartitionMode parse_partition_mode(const std::string& s);

// (2 pi sigma_sq)^(d/2)
double z0_closed_form(double sigma1_sq, int d);

// Grid mass of e^{-beta f}, cell measure included.
double grid_partition(const AnnealSchedule& s);

// Z_1 on the grid against the bracket [(1 - eps/2) Z_0, Z_0].
struct Z1Bracket {
  double z0 = 0;
  double z1 = 0;
  double lower = 0;
  bool ok = false;
};
Z1Bracket z1_bracket(const AnnealSchedule& s);

// log g_i at the nodes: the unnormalized weight ratio of stage i+1 over stage i.
Eigen::VectorXd log_rung(const AnnealSchedule& s, int i);

double stage_ratio_exact(const AnnealSchedule& s, int i);
// Mean of g_i over `shots` measurements of a prepared stage-i state.
double stage_ratio_sampled(const AnnealSchedule& s, int i, const CVec& state, std::uint64_t shots,
                           std::uint64_t seed);
// E[g_i^2] / E[g_i]^2 under mu_i.
double relative_variance(const AnnealSchedule& s, int i);

struct PartitionOptions {
  PartitionMode mode = PartitionMode::Exact;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  double c_mean = 4.0;
  double relvar_cap = 10.0;
};

struct PartitionEstimate {
  PartitionMode mode = PartitionMode::Exact;
  double epsilon = 0;
  double z0 = 0;
  double z0_grid = 0;  // grid mass of the stage-0 Gaussian
  double z_hat = 0;
  double log_z_hat = 0;
  double reference = 0;  // grid integral of e^{-beta f}
  double relative_error = 0;
  std::vector<double> per_stage_ratios;
  std::vector<double> per_stage_relvar;
  std::vector<std::uint64_t> shots;  // empty in exact mode
  std::uint64_t total_shots = 0;

  // The grid resolves sigma_1 when its Gaussian mass matches the closed form
  // to eps/2; otherwise the estimate inherits the quadrature error.
  bool z0_resolved() const { return std::abs(z0_grid / z0 - 1.0) <= epsilon / 2; }
};

std::uint64_t rung_shots(double c_mean, double relvar, int M, double epsilon);

// Sampled mode reads stage_states[i] for every rung i < M (as kept by run_annealing).
PartitionEstimate estimate_partition(const AnnealSchedule& s, const PartitionOptions& opt,
                                     const std::vector<CVec>* stage_states = nullptr);

}  // namespace lqw
