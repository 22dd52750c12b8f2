#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lqw/anneal.hpp"
#include "lqw/chains.hpp"
#include "lqw/walk.hpp"

namespace lqw {

enum class Backend { MALA, ULA, SULA };

const char* to_string(Backend b);
Backend parse_backend(const std::string& s);

struct QueryLedger {
  std::uint64_t walk_applications = 0;
  std::uint64_t gradient_component_evals = 0;
  std::uint64_t function_evals = 0;
  std::uint64_t reflections = 0;
};

struct AmplifyPlan {
  int depth = 0;
  double p0 = 1;
  double target = 0;
  double predicted_failure = 0;  // (1 - p0)^(3^depth)
};

AmplifyPlan plan_amplification(double p0, double target_error);
// Reflections used by a depth-k recursion: 3^k - 1.
std::uint64_t recursion_reflections(int depth);

// V = I + (e^{i phase} - 1) B B^T, B an orthonormal node-space basis.
struct Reflection {
  Mat basis;
  double phase = M_PI / 3;
  double delta = 0;  // phase gap that sets the walk cost of this reflection

  int rank() const { return static_cast<int>(basis.cols()); }
  void apply(CVec& state, bool adjoint) const;
  CMat matrix() const;
};

// Projector of the kernel's discriminant onto walk phases below gamma, with an
// optional symmetric perturbation of the given spectral norm.
Reflection reflection_from_kernel(const MarkovKernel& k, double gamma, double perturbation = 0,
                                  std::uint64_t seed = 0);
Reflection reflection_from_discriminant(const Mat& D, double gamma, double perturbation = 0,
                                        std::uint64_t seed = 0);
// Reflection about a known state (used for a supplied warm start).
Reflection reflection_about(const CVec& v);

struct QsaOptions {
  Backend backend = Backend::MALA;
  double eta = 0.05;
  double epsilon = 0.05;
  double c_proj = 10;
  int batch = 1;
  std::uint64_t seed = 0;
  double perturbation = 0;   // spectral norm injected into each discriminant
  double fail_overlap = 0.05;
  bool cap_stage_step = true;  // eta_i = min(eta, beta sigma_i^2) below the last stage
  bool keep_stage_states = false;
};

struct StageRecord {
  int from = 0;
  double eta = 0;
  double delta = 0;        // phase gap of the target stage's MALA walk
  double p0 = 0;           // squared overlap with the target coherent state before driving
  int depth = 0;
  double predicted_failure = 0;
  double infidelity = 0;   // 1 - |<mu_{i+1}|state>|^2 after driving
  int reflection_rank = 1;
  double reflection_error = 0;  // MALA backend: |Perron vector - coherent stage state|
};

struct RunResult {
  Backend backend = Backend::MALA;
  double eta = 0;
  double epsilon = 0;
  std::uint64_t seed = 0;
  CVec state;
  double tv = 0;
  QueryLedger ledger;
  std::vector<StageRecord> stages;
  std::vector<CVec> stage_states;  // state on arrival at each stage (stage 0 = exact start)
};

// Drives |mu_0> through every stage to |pi>.
RunResult run_annealing(const AnnealSchedule& schedule, const PotentialSpec& spec, const QsaOptions& opt);
// Single amplification from a supplied warm state straight to |pi>.
RunResult run_warm_start(const AnnealSchedule& schedule, const PotentialSpec& spec,
                         const DiscreteDistribution& warm, const QsaOptions& opt);

// Applies the depth-k pi/3 recursion from source to target; ledger_cost is
// called once per reflection application with (is_target).
void amplify_recursion(CVec& state, int depth, const std::function<void(CVec&, bool, bool)>& reflect);

CVec amplify(const CVec& state, const Reflection& source, const Reflection& target, const AmplifyPlan& plan,
             QueryLedger* ledger = nullptr, double c_proj = 10, int grad_cost = 1, int func_cost = 0);

struct Measurement {
  std::vector<std::uint64_t> counts;
  std::uint64_t shots = 0;
  double empirical_tv = 0;  // between counts / shots and |amplitudes|^2
};

Measurement measure(const CVec& state, std::uint64_t shots, std::uint64_t seed);
std::vector<int> measure_samples(const CVec& state, std::uint64_t shots, std::uint64_t seed);

// Step-size gates.
double ula_step_gate(double epsilon, double rho, double c0, int d, double L, double beta);
struct SulaGate {
  double variance = 0;   // eps^2 rho^2 / (2 beta d^2 L^2)
  double bias = 0;       // eps^4 rho^2 B / (4 beta^3 d (LR+G)^2)
  double spread = 0;     // eps^4 rho^2 / (128^2 (LR+G)^4 beta^3)
  double value() const { return std::min({variance, bias, spread}); }
};
SulaGate sula_step_gate(double epsilon, double rho, int d, double L, double R, double G, double beta, int B);

}  // namespace lqw
