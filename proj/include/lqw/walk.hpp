#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "lqw/chains.hpp"

namespace lqw {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

enum class WalkMode { Full, Discriminant };

constexpr int kMaxFullNodes = 40;

struct UnitarySpectrum {
  Eigen::VectorXd phases;  // arg of each eigenvalue, in (-pi, pi]
  CMat vectors;            // orthonormal columns
};

struct WalkOperator {
  WalkMode mode = WalkMode::Discriminant;
  KernelKind kind = KernelKind::ULA;
  int n = 0;
  Mat P;                           // source kernel
  Mat D;                           // discriminant, symmetric
  Eigen::VectorXd singular_values; // of D, descending
  Eigen::VectorXd disc_phases;     // arccos(singular_values), ascending

  // Full mode. The walk acts on C^n (x) C^n; the subspace spanned by the
  // ranges of T and S T is invariant and carries the kernel's dynamics, while
  // on its complement U = -S.
  Mat U;
  Mat T;  // isometry x -> |x>|psi_x>
  Mat Q;  // orthonormal basis of the active subspace
  UnitarySpectrum active;  // eigenpairs of U on the active subspace (vectors in full space)
  int complement_plus = 0;   // complement eigenvalues +1
  int complement_minus = 0;  // complement eigenvalues -1

  int dim() const { return n * n; }
  // All eigenphases, sorted ascending (full mode includes the complement).
  Eigen::VectorXd phases() const;
};

Mat discriminant(const MarkovKernel& k);
Mat discriminant(const Mat& P);
Mat isometry(const Mat& P);
Mat swap_apply(const Mat& M, int n);  // S * M
Mat walk_unitary(const Mat& P);

WalkOperator build_walk(const MarkovKernel& k, WalkMode mode);

// Second largest singular value of the discriminant.
double second_singular_value(const Mat& D);
double phase_gap(const Mat& D);
double phase_gap(const WalkOperator& w);

CVec coherent_state(const DiscreteDistribution& dist);
// Lift of a node-space vector: T v.
CVec lift(const Mat& T, const CVec& v);

double op_distance(const WalkOperator& a, const WalkOperator& b);
// |U_a - U_b| = 2 max_x sqrt(1 - BC_x^2), BC_x the row Bhattacharyya coefficient.
double walk_distance_rows(const Mat& Pa, const Mat& Pb);
double max_row_hellinger(const Mat& Pa, const Mat& Pb);
double max_row_hellinger(const MarkovKernel& a, const MarkovKernel& b);
double spectral_norm(const CMat& M);
double spectral_norm(const Mat& M);

enum class ProjectorScope { Active, Full };

// Spectral projector onto eigenvectors of U with |phase| < gamma.
CMat projector_below(const WalkOperator& w, double gamma, ProjectorScope scope = ProjectorScope::Active);

UnitarySpectrum unitary_spectrum(const CMat& W);
CMat phase_projector(const UnitarySpectrum& s, double gamma);
// Restriction Q^T U Q of a full-mode walk.
CMat active_unitary(const WalkOperator& w);

// Node-space projector onto eigenvectors of a symmetric discriminant whose
// walk phase arccos(lambda) lies below gamma.
Mat discriminant_projector(const Mat& D, double gamma, int* rank = nullptr);

CMat random_hermitian(int k, double norm, std::mt19937_64& rng);
CMat expi_hermitian(const CMat& H);

struct Enumeration {
  bool exact = true;
  int count = 0;
  std::uint64_t seed = 0;
};

struct WalkFamily {
  std::vector<MiniBatch> batches;
  std::vector<MarkovKernel> kernels;
  std::vector<Mat> unitaries;
  Mat expected;  // entrywise mean of the member unitaries
};

constexpr std::size_t kMaxExactBatches = 64;

WalkFamily stochastic_walk_family(const PotentialSpec& spec, const AssumptionConstants& c,
                                  const GridDomain& domain, double eta, int batch_size,
                                  const Enumeration& enumeration, bool lazy = true);

}  // namespace lqw
