#include <doctest.h>

#include <cmath>
#include <random>

#include "lqw/chains.hpp"
#include "lqw/errors.hpp"
#include "lqw/walk.hpp"

using namespace lqw;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

MarkovKernel from_matrix(const Mat& P) {
  MarkovKernel k;
  k.P = P;
  return k;
}

MarkovKernel two_state() {
  Mat P(2, 2);
  P << 0.7, 0.3, 0.1, 0.9;
  return from_matrix(P);
}

MarkovKernel dw_mala(int n, double eta, double R = 3) {
  return mala_kernel(make_double_well(1), catalog_constants("double_well", 1, R), build_grid(1, R, n), eta);
}

// Dense reference walk assembled entry by entry, independent of walk_unitary.
Mat reference_walk(const Mat& P) {
  const int n = static_cast<int>(P.rows());
  Mat T = Mat::Zero(n * n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) T(x * n + y, x) = std::sqrt(P(x, y));
  Mat S = Mat::Zero(n * n, n * n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) S(x * n + y, y * n + x) = 1;
  return S * (2 * T * T.transpose() - Mat::Identity(n * n, n * n));
}

}  // namespace

TEST_CASE("discriminant by hand") {
  Mat Sym(3, 3);
  Sym << 0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5;
  CHECK((discriminant(from_matrix(Sym)) - Sym).cwiseAbs().maxCoeff() <= 1e-15);

  const Mat D = discriminant(two_state());
  CHECK(D(0, 0) == doctest::Approx(0.7));
  CHECK(D(1, 1) == doctest::Approx(0.9));
  CHECK(D(0, 1) == doctest::Approx(std::sqrt(0.03)));
  CHECK(D(1, 0) == doctest::Approx(std::sqrt(0.03)));
  Eigen::SelfAdjointEigenSolver<Mat> es(D);
  CHECK(es.eigenvalues()[0] == doctest::Approx(0.6));
  CHECK(es.eigenvalues()[1] == doctest::Approx(1.0));

  const Mat U4 = discriminant(from_matrix(Mat::Constant(4, 4, 0.25)));
  CHECK((U4 - Mat::Constant(4, 4, 0.25)).cwiseAbs().maxCoeff() <= 1e-15);
  Eigen::JacobiSVD<Mat> svd(U4);
  CHECK(svd.singularValues()[0] == doctest::Approx(1.0));
  CHECK(svd.singularValues().tail(3).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("discriminant of a reversible kernel") {
  const MarkovKernel k = dw_mala(17, 0.05);
  const Mat D = discriminant(k);
  CHECK(D.minCoeff() >= 0);
  CHECK((D - D.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::VectorXd s = stationary(k).w.cwiseSqrt();
  CHECK((D * s - s).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("walk unitary matches the dense reference and is unitary") {
  for (const MarkovKernel& k : {two_state(), dw_mala(7, 0.1), from_matrix(Mat::Constant(3, 3, 1.0 / 3))}) {
    const Mat U = walk_unitary(k.P);
    CHECK((U - reference_walk(k.P)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((U.transpose() * U - Mat::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff() <= 1e-10);
  }
  const GridDomain g2 = build_grid(2, 1.5, 5);
  const MarkovKernel k2 = mala_kernel(make_double_well(2), catalog_constants("double_well", 2, 1.5), g2, 0.1);
  const WalkOperator w = build_walk(k2, WalkMode::Full);
  CHECK((w.U.transpose() * w.U - Mat::Identity(w.dim(), w.dim())).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("one-node walk") {
  const WalkOperator w = build_walk(from_matrix(Mat::Ones(1, 1)), WalkMode::Full);
  REQUIRE(w.dim() == 1);
  CHECK(w.U(0, 0) == doctest::Approx(1.0));
  CHECK(w.phases()[0] == doctest::Approx(0.0));
}

TEST_CASE("two-state walk phases") {
  const WalkOperator w = build_walk(two_state(), WalkMode::Full);
  const Eigen::VectorXd ph = w.active.phases;
  auto has = [&](double p) {
    for (int i = 0; i < ph.size(); ++i)
      if (std::abs(ph[i] - p) < 1e-9) return true;
    return false;
  };
  CHECK(has(0.0));
  CHECK(has(std::acos(0.6)));
  CHECK(has(-std::acos(0.6)));
  CHECK(w.active.phases.size() + w.complement_plus + w.complement_minus == w.dim());
  // dense eigenvalues of U agree with the assembled spectrum as a multiset
  Eigen::ComplexEigenSolver<CMat> es(w.U.cast<cplx>());
  std::vector<double> a, b;
  for (int i = 0; i < es.eigenvalues().size(); ++i) a.push_back(std::arg(es.eigenvalues()[i]));
  const Eigen::VectorXd all = w.phases();
  for (int i = 0; i < all.size(); ++i) b.push_back(all[i]);
  auto wrap = [](std::vector<double>& v) {
    for (auto& x : v)
      if (x <= -M_PI + 1e-9) x += 2 * M_PI;
    std::sort(v.begin(), v.end());
  };
  wrap(a);
  wrap(b);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}

TEST_CASE("phase gap by hand and across modes") {
  CHECK(phase_gap(discriminant(two_state())) == doctest::Approx(2 * std::acos(0.6)));
  CHECK(2 * std::acos(0.6) == doctest::Approx(1.8546).epsilon(1e-4));
  CHECK(phase_gap(discriminant(from_matrix(Mat::Constant(4, 4, 0.25)))) == doctest::Approx(M_PI));
  CHECK_THROWS_AS(phase_gap(discriminant(from_matrix(Mat::Identity(3, 3)))), ZeroPhaseGap);

  const MarkovKernel k = dw_mala(9, 0.1);
  const double full = phase_gap(build_walk(k, WalkMode::Full));
  const double disc = phase_gap(build_walk(k, WalkMode::Discriminant));
  CHECK(full == doctest::Approx(disc).epsilon(1e-9));
}

TEST_CASE("mode limits") {
  CHECK_THROWS_AS(build_walk(dw_mala(41, 0.05), WalkMode::Full), TooLargeForFull);
  CHECK_NOTHROW(build_walk(dw_mala(41, 0.05), WalkMode::Discriminant));
  const WalkOperator a = build_walk(two_state(), WalkMode::Full);
  const WalkOperator b = build_walk(two_state(), WalkMode::Discriminant);
  CHECK_THROWS_AS(op_distance(a, b), ModeMismatch);
}

TEST_CASE("coherent states") {
  DiscreteDistribution u;
  u.w = Eigen::VectorXd::Constant(4, 0.25);
  const CVec s = coherent_state(u);
  for (int i = 0; i < 4; ++i) CHECK(s[i].real() == doctest::Approx(0.5));

  DiscreteDistribution pm;
  pm.w = Eigen::VectorXd::Zero(5);
  pm.w[3] = 1;
  const CVec e = coherent_state(pm);
  CHECK(std::abs(e[3] - cplx(1, 0)) < 1e-15);
  CHECK(e.norm() == doctest::Approx(1.0));

  DiscreteDistribution t;
  const double x = std::exp(-1.0);
  t.w = Eigen::Vector3d(x, 1, x) / (1 + 2 * x);
  const CVec c = coherent_state(t);
  CHECK(c.norm() == doctest::Approx(1.0));
  CHECK(c[1].real() == doctest::Approx(std::sqrt(1 / (1 + 2 * x))));
}

TEST_CASE("operator distance") {
  const MarkovKernel k = dw_mala(9, 0.02);
  const WalkOperator w = build_walk(k, WalkMode::Full);
  CHECK(op_distance(w, w) == doctest::Approx(0.0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 10; ++t) {
    Mat A(5, 5), B(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        A(i, j) = u(rng);
        B(i, j) = u(rng);
      }
    A = (A.array().colwise() / A.rowwise().sum().array()).eval();
    B = (B.array().colwise() / B.rowwise().sum().array()).eval();
    const double d = op_distance(build_walk(from_matrix(A), WalkMode::Full), build_walk(from_matrix(B), WalkMode::Full));
    CHECK(d <= 2 + 1e-12);
    // closed form through the row Bhattacharyya coefficients
    CHECK(walk_distance_rows(A, B) == doctest::Approx(d).epsilon(1e-9));
  }
  const MarkovKernel ula = ula_kernel(make_double_well(1), catalog_constants("double_well", 1, 3), build_grid(1, 3, 9),
                                      0.02, true);
  const double d = op_distance(build_walk(ula, WalkMode::Full), w);
  CHECK(d > 0);
  CHECK(d <= 4 * std::sqrt(2.0) * max_row_hellinger(ula, k));
}

TEST_CASE("Hellinger between shifted Gaussian rows") {
  // zero potential against a linear one: the proposal means differ by eta * delta
  const double eta = 0.05, delta = 2.0, beta = 1.0;
  PotentialSpec lin;
  lin.name = "linear";
  lin.d = 1;
  lin.components.push_back({[delta](const Vec& x) { return delta * x[0]; },
                            [delta](const Vec&) { return Vec::Constant(1, delta); }});
  const double want = std::sqrt(1 - std::exp(-eta * eta * delta * delta * beta / (8 * eta)));
  for (int n : {33, 65, 129}) {
    const GridDomain g = build_grid(1, 4, n);
    const MarkovKernel a = ula_kernel(make_zero(1), {}, g, eta, false);
    const MarkovKernel b = ula_kernel(lin, {}, g, eta, false);
    const int lo = n / 4, rows = n / 2;
    const double h = max_row_hellinger(Mat(a.P.middleRows(lo, rows)), Mat(b.P.middleRows(lo, rows)));
    CHECK(h == doctest::Approx(want).epsilon(0.05));
  }
  const MarkovKernel k = dw_mala(9, 0.05);
  CHECK(max_row_hellinger(k, k) == 0.0);
}

TEST_CASE("spectral projectors") {
  const MarkovKernel k = dw_mala(9, 0.1);
  const WalkOperator w = build_walk(k, WalkMode::Full);
  const double delta = phase_gap(w);
  const CMat P1 = projector_below(w, delta / 2 * 0.999);
  CHECK(std::abs(P1.trace() - cplx(1, 0)) < 1e-9);
  CHECK((P1 * P1 - P1).cwiseAbs().maxCoeff() < 1e-9);
  // its range is T |pi>: the lift of the coherent stationary state
  const CVec psi = lift(w.T, coherent_state(stationary(k)));
  CHECK(std::abs((psi.adjoint() * P1 * psi)(0, 0) - cplx(1, 0)) < 1e-8);

  const CMat Pall = projector_below(w, M_PI + 0.1, ProjectorScope::Full);
  CHECK((Pall - CMat::Identity(w.dim(), w.dim())).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(projector_below(w, 0.0), InvalidThreshold);
  CHECK_THROWS_AS(projector_below(w, -1.0), InvalidThreshold);

  // frozen chain: every phase is 0, so nothing lies strictly between 0 and a tiny gamma except phase 0 itself
  const WalkOperator frozen = build_walk(from_matrix(Mat::Identity(3, 3)), WalkMode::Full);
  const CMat Pf = projector_below(frozen, 1e-6);
  CHECK(std::abs(Pf.trace()) > 1.5);  // degenerate rank, not one
}

TEST_CASE("discriminant projector rank") {
  const Mat D = discriminant(dw_mala(17, 0.05));
  int rank = 0;
  const Mat P = discriminant_projector(D, phase_gap(D) / 4, &rank);
  CHECK(rank == 1);
  CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-12);
  discriminant_projector(D, 10.0, &rank);
  CHECK(rank == D.rows());
}

TEST_CASE("random Hermitian perturbations") {
  std::mt19937_64 rng(2);
  const CMat H = random_hermitian(6, 0.3, rng);
  CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(spectral_norm(H) == doctest::Approx(0.3));
  const CMat V = expi_hermitian(H);
  CHECK((V.adjoint() * V - CMat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(spectral_norm(CMat(V - CMat::Identity(6, 6))) <= 0.3 + 1e-12);
}

TEST_CASE("stochastic walk families") {
  const GridDomain g = build_grid(1, 2, 9);
  const std::vector<Vec> centers{v1(-0.8), v1(-0.1), v1(0.3), v1(0.9)};
  const PotentialSpec mix = make_mixture(centers);
  const AssumptionConstants c = catalog_constants("mixture", 1, 2, {}, centers);
  const double eta = 0.05;

  const WalkFamily full = stochastic_walk_family(mix, c, g, eta, 4, Enumeration{});
  REQUIRE(full.unitaries.size() == 1);
  CHECK((full.unitaries[0] - walk_unitary(ula_kernel(mix, c, g, eta, true).P)).cwiseAbs().maxCoeff() == 0.0);

  const PotentialSpec same = make_mixture({v1(0.2), v1(0.2), v1(0.2), v1(0.2)});
  const WalkFamily s = stochastic_walk_family(same, catalog_constants("mixture", 1, 2, {}, {v1(0.2)}), g, eta, 2,
                                              Enumeration{});
  CHECK(s.unitaries.size() == 6);
  for (const auto& U : s.unitaries) CHECK((U - s.unitaries[0]).cwiseAbs().maxCoeff() <= 1e-14);

  const WalkFamily fam = stochastic_walk_family(mix, c, g, eta, 2, Enumeration{});
  CHECK(fam.unitaries.size() == 6);
  Mat mean = Mat::Zero(81, 81);
  for (const auto& U : fam.unitaries) mean += U;
  CHECK((mean / 6 - fam.expected).cwiseAbs().maxCoeff() < 1e-14);

  std::vector<Vec> many;
  for (int i = 0; i < 12; ++i) many.push_back(v1(-1 + i / 6.0));
  const PotentialSpec big = make_mixture(many);
  const AssumptionConstants cb = catalog_constants("mixture", 1, 2, {}, many);
  CHECK_THROWS_AS(stochastic_walk_family(big, cb, g, eta, 6, Enumeration{}), TooManyBatches);
  Enumeration sampled;
  sampled.exact = false;
  sampled.count = 5;
  sampled.seed = 17;
  const WalkFamily a = stochastic_walk_family(big, cb, g, eta, 6, sampled);
  const WalkFamily b = stochastic_walk_family(big, cb, g, eta, 6, sampled);
  CHECK(a.batches.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a.batches[i].indices == b.batches[i].indices);
}
