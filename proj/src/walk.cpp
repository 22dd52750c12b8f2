#include "lqw/walk.hpp"

#include <algorithm>
#include <cmath>

#include "lqw/errors.hpp"
#include "lqw/rng.hpp"

namespace lqw {

Mat discriminant(const Mat& P) {
  return (P.array() * P.transpose().array()).cwiseMax(0.0).sqrt().matrix();
}

Mat discriminant(const MarkovKernel& k) { return discriminant(k.P); }

Mat isometry(const Mat& P) {
  const int n = static_cast<int>(P.rows());
  Mat T = Mat::Zero(static_cast<Eigen::Index>(n) * n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) T(x * n + y, x) = std::sqrt(std::max(P(x, y), 0.0));
  return T;
}

Mat swap_apply(const Mat& M, int n) {
  Mat out(M.rows(), M.cols());
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) out.row(x * n + y) = M.row(y * n + x);
  return out;
}

Mat walk_unitary(const Mat& P) {
  const int n = static_cast<int>(P.rows());
  const Mat T = isometry(P);
  Mat R = 2.0 * T * T.transpose();
  R.diagonal().array() -= 1.0;
  return swap_apply(R, n);
}

double second_singular_value(const Mat& D) {
  const int n = static_cast<int>(D.rows());
  if (n < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(D, Eigen::EigenvaluesOnly);
  Eigen::VectorXd s = es.eigenvalues().cwiseAbs();
  std::sort(s.data(), s.data() + n, std::greater<double>());
  return s[1];
}

double phase_gap(const Mat& D) {
  const double s1 = second_singular_value(D);
  if (s1 >= 1.0 - 1e-13) throw ZeroPhaseGap("second singular value of the discriminant is 1");
  return 2.0 * std::acos(s1);
}

double phase_gap(const WalkOperator& w) {
  if (w.n < 2) return M_PI;
  if (w.singular_values[1] >= 1.0 - 1e-13)
    throw ZeroPhaseGap("second singular value of the discriminant is 1");
  return 2.0 * std::acos(w.singular_values[1]);
}

UnitarySpectrum unitary_spectrum(const CMat& W) {
  Eigen::ComplexSchur<CMat> cs(W);
  UnitarySpectrum s;
  const int k = static_cast<int>(W.rows());
  s.phases.resize(k);
  for (int j = 0; j < k; ++j) s.phases[j] = std::arg(cs.matrixT()(j, j));
  s.vectors = cs.matrixU();
  return s;
}

CMat phase_projector(const UnitarySpectrum& s, double gamma) {
  if (!(gamma > 0)) throw InvalidThreshold("phase threshold must be positive");
  const int dim = static_cast<int>(s.vectors.rows());
  CMat Pr = CMat::Zero(dim, dim);
  for (int j = 0; j < s.phases.size(); ++j)
    if (std::abs(s.phases[j]) < gamma) Pr.noalias() += s.vectors.col(j) * s.vectors.col(j).adjoint();
  return Pr;
}

WalkOperator build_walk(const MarkovKernel& k, WalkMode mode) {
  WalkOperator w;
  w.mode = mode;
  w.kind = k.kind;
  w.n = k.size();
  w.P = k.P;
  w.D = discriminant(k.P);
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(w.D, Eigen::EigenvaluesOnly);
    Eigen::VectorXd s = es.eigenvalues().cwiseAbs();
    std::sort(s.data(), s.data() + s.size(), std::greater<double>());
    w.singular_values = s;
    w.disc_phases = s.cwiseMin(1.0).array().acos().matrix();
    std::sort(w.disc_phases.data(), w.disc_phases.data() + s.size());
  }
  if (mode == WalkMode::Discriminant) return w;
  if (w.n > kMaxFullNodes)
    throw TooLargeForFull("full walk needs at most " + std::to_string(kMaxFullNodes) + " nodes, got " +
                          std::to_string(w.n));
  const int n = w.n;
  w.U = walk_unitary(k.P);
  w.T = isometry(k.P);
  Mat A(n * n, 2 * n);
  A << w.T, swap_apply(w.T, n);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && sv[rank] > 1e-9 * sv[0]) ++rank;
  w.Q = svd.matrixU().leftCols(rank);
  const CMat Ua = (w.Q.transpose() * w.U * w.Q).cast<cplx>();
  UnitarySpectrum s = unitary_spectrum(Ua);
  w.active.phases = s.phases;
  w.active.vectors = w.Q.cast<cplx>() * s.vectors;
  // On the complement U = -S; count its +1 / -1 eigenvalues by traces.
  const int cdim = n * n - rank;
  const double trS = static_cast<double>(n);
  const double trSA = (w.Q.transpose() * swap_apply(w.Q, n)).trace();
  const double tr_minus_s_c = -(trS - trSA);
  w.complement_plus = static_cast<int>(std::llround((cdim + tr_minus_s_c) / 2));
  w.complement_minus = cdim - w.complement_plus;
  return w;
}

Eigen::VectorXd WalkOperator::phases() const {
  if (mode == WalkMode::Discriminant) return disc_phases;
  Eigen::VectorXd all(active.phases.size() + complement_plus + complement_minus);
  all << active.phases, Eigen::VectorXd::Zero(complement_plus),
      Eigen::VectorXd::Constant(complement_minus, M_PI);
  std::sort(all.data(), all.data() + all.size());
  return all;
}

CVec coherent_state(const DiscreteDistribution& dist) {
  return dist.w.cwiseMax(0.0).cwiseSqrt().cast<cplx>();
}

CVec lift(const Mat& T, const CVec& v) { return T.cast<cplx>() * v; }

// JacobiSVD: BDCSVD in Eigen 3.4.0 misreports the top singular value on some small inputs.
double spectral_norm(const CMat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(M);
  return svd.singularValues()[0];
}

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()[0];
}

double op_distance(const WalkOperator& a, const WalkOperator& b) {
  if (a.mode != WalkMode::Full || b.mode != WalkMode::Full)
    throw ModeMismatch("operator distance needs two full-mode walks");
  if (a.n != b.n) throw ModeMismatch("walks live on different grids");
  return spectral_norm(Mat(a.U - b.U));
}

double walk_distance_rows(const Mat& Pa, const Mat& Pb) {
  double worst = 0;
  for (int x = 0; x < Pa.rows(); ++x) {
    const double bc = (Pa.row(x).cwiseMax(0.0).cwiseSqrt().array() *
                       Pb.row(x).cwiseMax(0.0).cwiseSqrt().array()).sum();
    worst = std::max(worst, std::sqrt(std::max(0.0, 1.0 - bc * bc)));
  }
  return 2.0 * worst;
}

double max_row_hellinger(const Mat& Pa, const Mat& Pb) {
  double worst = 0;
  for (int x = 0; x < Pa.rows(); ++x) {
    const double h2 =
        0.5 * (Pa.row(x).cwiseMax(0.0).cwiseSqrt() - Pb.row(x).cwiseMax(0.0).cwiseSqrt()).squaredNorm();
    worst = std::max(worst, h2);
  }
  return std::sqrt(worst);
}

double max_row_hellinger(const MarkovKernel& a, const MarkovKernel& b) {
  if (a.size() != b.size()) throw InvalidArgument("kernels live on different grids");
  return max_row_hellinger(a.P, b.P);
}

CMat projector_below(const WalkOperator& w, double gamma, ProjectorScope scope) {
  if (!(gamma > 0)) throw InvalidThreshold("phase threshold must be positive");
  if (w.mode != WalkMode::Full) throw ModeMismatch("projectors need a full-mode walk");
  CMat Pr = phase_projector(w.active, gamma);
  if (scope == ProjectorScope::Active) return Pr;
  const int n = w.n;
  const int dim = n * n;
  const int rank = static_cast<int>(w.Q.cols());
  if (rank == dim) return Pr;
  Eigen::HouseholderQR<Mat> qr(w.Q);
  const Mat full = qr.householderQ();
  const Mat C = full.rightCols(dim - rank);
  Mat M = -(C.transpose() * swap_apply(C, n));
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(M);
  for (int j = 0; j < M.rows(); ++j) {
    const double phase = es.eigenvalues()[j] > 0 ? 0.0 : M_PI;
    if (phase < gamma) {
      const Eigen::VectorXd v = C * es.eigenvectors().col(j);
      Pr.noalias() += (v * v.transpose()).cast<cplx>();
    }
  }
  return Pr;
}

CMat active_unitary(const WalkOperator& w) {
  if (w.mode != WalkMode::Full) throw ModeMismatch("active unitary needs a full-mode walk");
  return (w.Q.transpose() * w.U * w.Q).cast<cplx>();
}

Mat discriminant_projector(const Mat& D, double gamma, int* rank) {
  if (!(gamma > 0)) throw InvalidThreshold("phase threshold must be positive");
  Eigen::SelfAdjointEigenSolver<Mat> es(D);
  const int n = static_cast<int>(D.rows());
  Mat Pr = Mat::Zero(n, n);
  int r = 0;
  for (int j = 0; j < n; ++j) {
    const double lam = std::clamp(es.eigenvalues()[j], -1.0, 1.0);
    if (std::acos(lam) < gamma) {
      Pr.noalias() += es.eigenvectors().col(j) * es.eigenvectors().col(j).transpose();
      ++r;
    }
  }
  if (rank) *rank = r;
  return Pr;
}

CMat random_hermitian(int k, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat A(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) A(i, j) = cplx(g(rng), g(rng));
  CMat H = 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
  const double s = es.eigenvalues().cwiseAbs().maxCoeff();
  return H * (norm / s);
}

CMat expi_hermitian(const CMat& H) {
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  CVec ph(H.rows());
  for (int j = 0; j < H.rows(); ++j) ph[j] = std::polar(1.0, es.eigenvalues()[j]);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

WalkFamily stochastic_walk_family(const PotentialSpec& spec, const AssumptionConstants& c,
                                  const GridDomain& domain, double eta, int batch_size,
                                  const Enumeration& enumeration, bool lazy) {
  validate(spec);
  if (batch_size < 1 || batch_size > spec.N()) throw InvalidBatch("batch size must lie in [1, N]");
  if (domain.size() > kMaxFullNodes) throw TooLargeForFull("family members are full-mode walks");
  WalkFamily fam;
  if (enumeration.exact) {
    const std::size_t count = binomial(spec.N(), batch_size);
    if (count > kMaxExactBatches)
      throw TooManyBatches(std::to_string(count) + " batches exceed the exact enumeration limit of " +
                           std::to_string(kMaxExactBatches));
    fam.batches = enumerate_batches(spec.N(), batch_size);
  } else {
    if (enumeration.count < 1) throw InvalidArgument("sampled family needs count >= 1");
    auto rng = make_stream(enumeration.seed, stream::kBatches);
    for (int i = 0; i < enumeration.count; ++i) fam.batches.push_back(draw_batch(spec.N(), batch_size, rng));
  }
  const int n = domain.size();
  fam.expected = Mat::Zero(n * n, n * n);
  for (std::size_t i = 0; i < fam.batches.size(); ++i) {
    fam.kernels.push_back(sula_kernel(spec, c, domain, eta, fam.batches[i], lazy, static_cast<int>(i)));
    fam.unitaries.push_back(walk_unitary(fam.kernels.back().P));
    fam.expected += fam.unitaries.back();
  }
  fam.expected /= static_cast<double>(fam.batches.size());
  return fam;
}

}  // namespace lqw
