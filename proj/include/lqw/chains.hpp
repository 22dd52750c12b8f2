#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "lqw/domain.hpp"
#include "lqw/potential.hpp"

namespace lqw {

using Mat = Eigen::MatrixXd;

enum class KernelKind { ULA, MALA, SULA };

const char* to_string(KernelKind k);

struct MarkovKernel {
  Mat P;  // row-stochastic
  bool lazy = false;
  KernelKind kind = KernelKind::ULA;
  int batch_id = -1;  // SULA only
  double eta = 0;
  double beta = 1;
  bool step_admissible = true;  // eta <= d / (beta (L R + G)^2)

  int size() const { return static_cast<int>(P.rows()); }
};

// Per-node drift and energy field; the kernels below only see these.
struct NodeField {
  Eigen::VectorXd energy;     // f at each node
  std::vector<Vec> gradient;  // drift direction at each node
};

NodeField full_field(const PotentialSpec& spec, const GridDomain& domain);
NodeField batch_field(const PotentialSpec& spec, const GridDomain& domain, const MiniBatch& batch);
// f(x) + |x|^2 / (2 beta sigma_sq): target exp(-beta f - |x|^2 / (2 sigma_sq)).
NodeField tempered_field(const NodeField& base, const GridDomain& domain, double beta, double sigma_sq);

// Log of the grid-renormalized Gaussian proposal N(x - eta g(x), 2 eta / beta).
Mat log_proposal(const GridDomain& domain, const std::vector<Vec>& gradient, double eta, double beta);

double admissible_step(const AssumptionConstants& c, int d, double R, double beta);

MarkovKernel ula_kernel(const PotentialSpec& spec, const AssumptionConstants& c,
                        const GridDomain& domain, double eta, bool lazy);
MarkovKernel mala_kernel(const PotentialSpec& spec, const AssumptionConstants& c,
                         const GridDomain& domain, double eta);
MarkovKernel sula_kernel(const PotentialSpec& spec, const AssumptionConstants& c,
                         const GridDomain& domain, double eta, const MiniBatch& batch,
                         bool lazy = true, int batch_id = -1);

MarkovKernel ula_from_field(const GridDomain& domain, const NodeField& field, double eta,
                            double beta, bool lazy);
MarkovKernel mala_from_field(const GridDomain& domain, const NodeField& field, double eta,
                             double beta);

struct StationaryResult {
  DiscreteDistribution pi;
  long iterations = 0;
  double residual = 0;
};

StationaryResult stationary_full(const MarkovKernel& k, double tol = 1e-12, long max_iter = 1000000);
DiscreteDistribution stationary(const MarkovKernel& k);

enum class ConductanceMode { Exact, Sweep };

double conductance(const MarkovKernel& k, const DiscreteDistribution& pi, ConductanceMode mode);
double detailed_balance_residual(const MarkovKernel& k, const DiscreteDistribution& pi);
double row_sum_error(const MarkovKernel& k);
// 1 - second largest eigenvalue of a reversible kernel, through the
// symmetrized matrix diag(sqrt pi) P diag(1/sqrt pi).
double spectral_gap(const MarkovKernel& k, const DiscreteDistribution& pi);

struct MixingDiagnostics {
  DiscreteDistribution stationary;
  double conductance = 0;
  double db_residual = 0;
  std::optional<double> spectral_gap;
};

MixingDiagnostics diagnose(const MarkovKernel& k);

enum class Sampler { ULA, MALA, SGLD };

struct Trajectory {
  std::vector<Vec> x;          // steps + 1 points, x[0] = x0
  std::vector<char> accepted;  // per step; always 1 for ULA/SGLD
  double acceptance_rate() const;
};

Trajectory simulate(Sampler sampler, const PotentialSpec& spec, const Vec& x0, double eta,
                    long steps, std::uint64_t seed, int batch_size = 0, double escape_radius = 1e6);

}  // namespace lqw
