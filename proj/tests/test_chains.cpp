#include <doctest.h>

#include <cmath>
#include <random>

#include "lqw/chains.hpp"
#include "lqw/errors.hpp"

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

// Brute-force conductance over all subsets with pi(S) <= 1/2.
double brute_conductance(const Mat& P, const Eigen::VectorXd& pi) {
  const int n = static_cast<int>(P.rows());
  double best = INFINITY;
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    double ps = 0, flow = 0;
    for (int x = 0; x < n; ++x)
      if (mask >> x & 1) {
        ps += pi[x];
        for (int y = 0; y < n; ++y)
          if (!(mask >> y & 1)) flow += pi[x] * P(x, y);
      }
    if (ps <= 0.5 + 1e-12 && ps > 0) best = std::min(best, flow / ps);
  }
  return best;
}

}  // namespace

TEST_CASE("kernels are row-stochastic and lazy kernels keep half the mass") {
  const GridDomain g = build_grid(1, 3, 17);
  const PotentialSpec dw = make_double_well(1);
  const AssumptionConstants c = catalog_constants("double_well", 1, 3);
  for (double eta : {0.002, 0.05, 0.4}) {
    const MarkovKernel u = ula_kernel(dw, c, g, eta, false);
    const MarkovKernel ul = ula_kernel(dw, c, g, eta, true);
    const MarkovKernel m = mala_kernel(dw, c, g, eta);
    for (const auto* k : {&u, &ul, &m}) {
      CHECK(row_sum_error(*k) <= 1e-10);
      CHECK(k->P.minCoeff() >= 0);
    }
    CHECK(ul.P.diagonal().minCoeff() >= 0.5 - 1e-12);
    CHECK(m.P.diagonal().minCoeff() >= 0.5 - 1e-12);
  }
}

TEST_CASE("single-node and symmetric two-node ULA") {
  std::vector<Vec> one{v1(0)};
  const GridDomain g1 = grid_from_nodes(1, one, 1.0);
  const MarkovKernel k1 = ula_kernel(make_quadratic(1), {}, g1, 0.1, false);
  REQUIRE(k1.size() == 1);
  CHECK(k1.P(0, 0) == doctest::Approx(1.0));

  const GridDomain g2 = build_grid(1, 1, 2);
  const MarkovKernel k2 = ula_kernel(make_zero(1), catalog_constants("zero", 1, 1), g2, 0.3, false);
  CHECK(k2.P(0, 1) == doctest::Approx(k2.P(1, 0)));
}

TEST_CASE("ULA row is the renormalized Gaussian") {
  const GridDomain g = build_grid(1, 1, 3);
  const MarkovKernel k = ula_kernel(make_quadratic(1), {}, g, 0.1, false);
  // from x=1: mean 1 - 0.1 = 0.9, variance 0.2
  double w[3], s = 0;
  for (int i = 0; i < 3; ++i) {
    const double y = -1.0 + i;
    w[i] = std::exp(-(y - 0.9) * (y - 0.9) / 0.4);
    s += w[i];
  }
  for (int i = 0; i < 3; ++i) CHECK(k.P(2, i) == doctest::Approx(w[i] / s).epsilon(1e-12));
}

TEST_CASE("MALA reduces to lazy ULA on a flat target away from the boundary") {
  // Rows are renormalized on the grid, so q_xy / q_yx differs from 1 only
  // through the row normalizers, which are equal far from the boundary.
  const GridDomain g = build_grid(1, 4, 41);
  const AssumptionConstants c = catalog_constants("zero", 1, 4);
  const MarkovKernel m = mala_kernel(make_zero(1), c, g, 0.01);
  const MarkovKernel u = ula_kernel(make_zero(1), c, g, 0.01, true);
  for (int i = 0; i < g.size(); ++i)
    if (std::abs(g.nodes[i][0]) <= 2) CHECK((m.P.row(i) - u.P.row(i)).cwiseAbs().maxCoeff() <= 1e-12);
  // at the edge the normalizers differ and the Metropolis step is active
  CHECK((m.P.row(0) - u.P.row(0)).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("MALA detailed balance over random draws") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ue(0.005, 0.5), uc(-1, 1);
  for (int t = 0; t < 20; ++t) {
    const int kind = t % 3;
    const double R = 2.5;
    PotentialSpec spec;
    AssumptionConstants c;
    if (kind == 0) {
      spec = make_quadratic(1);
      c = catalog_constants("quadratic", 1, R);
    } else if (kind == 1) {
      spec = make_double_well(1, 1.0, {uc(rng)});
      c = catalog_constants("double_well", 1, R, {0.9});
    } else {
      std::vector<Vec> centers{v1(uc(rng)), v1(uc(rng)), v1(uc(rng))};
      spec = make_mixture(centers);
      c = catalog_constants("mixture", 1, R, {}, centers);
    }
    const GridDomain g = build_grid(1, R, 9 + 4 * (t % 5));
    const MarkovKernel k = mala_kernel(spec, c, g, ue(rng));
    const DiscreteDistribution pi = stationary(k);
    CHECK(detailed_balance_residual(k, pi) <= 1e-12);
  }
  const GridDomain g2 = build_grid(2, 2, 7);
  const MarkovKernel k2 = mala_kernel(make_double_well(2), catalog_constants("double_well", 2, 2), g2, 0.05);
  CHECK(detailed_balance_residual(k2, stationary(k2)) <= 1e-12);
}

TEST_CASE("MALA stationary law is the grid Gibbs law") {
  const GridDomain g = build_grid(1, 3, 9);
  const PotentialSpec dw = make_double_well(1);
  const MarkovKernel k = mala_kernel(dw, catalog_constants("double_well", 1, 3), g, 0.05);
  CHECK(tv_distance(stationary(k).w, gibbs(dw, g).w) <= 1e-10);
}

TEST_CASE("ULA is not reversible on the double well") {
  const GridDomain g = build_grid(1, 3, 33);
  const MarkovKernel k = ula_kernel(make_double_well(1), catalog_constants("double_well", 1, 3), g, 0.05, false);
  const double r = detailed_balance_residual(k, stationary(k));
  CHECK(r > 1e-6);
}

TEST_CASE("stationary laws by hand") {
  const DiscreteDistribution pi = stationary(two_state());
  CHECK(pi.w[0] == doctest::Approx(0.25));
  CHECK(pi.w[1] == doctest::Approx(0.75));

  Mat D(3, 3);
  D << 0.2, 0.5, 0.3, 0.3, 0.2, 0.5, 0.5, 0.3, 0.2;
  const DiscreteDistribution u = stationary(from_matrix(D));
  for (int i = 0; i < 3; ++i) CHECK(u.w[i] == doctest::Approx(1.0 / 3));

  Mat S(2, 2);
  S << 1 - 1e-9, 1e-9, 2e-9, 1 - 2e-9;
  CHECK_THROWS_AS(stationary_full(from_matrix(S), 1e-12, 100), StationaryNotConverged);
}

TEST_CASE("conductance by hand") {
  // only {0} has pi(S) = 0.25 <= 1/2: phi = 0.25 * 0.3 / 0.25
  const MarkovKernel k = two_state();
  CHECK(conductance(k, stationary(k), ConductanceMode::Exact) == doctest::Approx(0.3));

  const MarkovKernel full = from_matrix(Mat::Constant(4, 4, 0.25));
  DiscreteDistribution uni;
  uni.w = Eigen::VectorXd::Constant(4, 0.25);
  CHECK(conductance(full, uni, ConductanceMode::Exact) == doctest::Approx(0.5));

  Mat B = Mat::Zero(4, 4);
  B.topLeftCorner(2, 2).setConstant(0.5);
  B.bottomRightCorner(2, 2).setConstant(0.5);
  CHECK(conductance(from_matrix(B), uni, ConductanceMode::Exact) == doctest::Approx(0.0));
  CHECK(conductance(from_matrix(B), uni, ConductanceMode::Sweep) == doctest::Approx(0.0));

  const GridDomain g = build_grid(1, 3, 15);
  const MarkovKernel big = mala_kernel(make_double_well(1), catalog_constants("double_well", 1, 3), g, 0.05);
  CHECK_THROWS_AS(conductance(big, stationary(big), ConductanceMode::Exact), TooLargeForExact);
}

TEST_CASE("exact conductance matches brute force and sweep bounds it from above") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ue(0.01, 0.4), uR(1.5, 3);
  for (int t = 0; t < 25; ++t) {
    const double R = uR(rng);
    const int n = 4 + t % 9;
    const GridDomain g = build_grid(1, R, n);
    const MarkovKernel k = mala_kernel(make_double_well(1, 1.0, {0.2}), catalog_constants("double_well", 1, R, {0.2}),
                                       g, ue(rng));
    const DiscreteDistribution pi = gibbs(make_double_well(1, 1.0, {0.2}), g);
    const double ex = conductance(k, pi, ConductanceMode::Exact);
    CHECK(ex == doctest::Approx(brute_conductance(k.P, pi.w)).epsilon(1e-12));
    CHECK(conductance(k, pi, ConductanceMode::Sweep) >= ex - 1e-15);
  }
}

TEST_CASE("MALA conductance scales with the Cheeger constant") {
  // phi >= c0 rho sqrt(eta / beta) for some positive c0; the empirical c0 is
  // the ratio, recorded per instance and required to stay positive.
  const PotentialSpec dw = make_double_well(1);
  // small radius keeps the admissible proposal wider than the spacing
  const double R = 1.2;
  const AssumptionConstants c = catalog_constants("double_well", 1, R);
  const GridDomain g = build_grid(1, R, 13);
  // MALA leaves the grid Gibbs law invariant, so it stands in for the
  // stationary law of these slow chains
  const DiscreteDistribution pi = gibbs(dw, g);
  const double rho = conductance(mala_kernel(dw, c, g, 0.05), pi, ConductanceMode::Exact);
  const double eta_max = admissible_step(c, 1, R, 1.0);
  for (double f : {1.0, 0.5, 0.25}) {
    const MarkovKernel k = mala_kernel(dw, c, g, f * eta_max);
    const double phi = conductance(k, pi, ConductanceMode::Exact);
    const double c0 = phi / (rho * std::sqrt(f * eta_max));
    MESSAGE("eta=" << f * eta_max << " c0=" << c0);
    CHECK(c0 > 0.05);
  }
}

TEST_CASE("ULA bias shrinks as the step halves") {
  const double R = 3;
  const GridDomain g = build_grid(1, R, 129);
  const PotentialSpec dw = make_double_well(1);
  const AssumptionConstants c = catalog_constants("double_well", 1, R);
  const Eigen::VectorXd pi = gibbs(dw, g).w;
  double prev = INFINITY;
  for (double eta = 0.04; eta > 0.002; eta /= 2) {
    const double tv = tv_distance(stationary(ula_kernel(dw, c, g, eta, false)).w, pi);
    CHECK(tv < prev);
    prev = tv;
  }
}

TEST_CASE("stochastic-gradient kernels") {
  const GridDomain g = build_grid(1, 2, 9);
  const std::vector<Vec> centers{v1(-0.8), v1(-0.1), v1(0.3), v1(0.9)};
  const PotentialSpec mix = make_mixture(centers);
  const AssumptionConstants c = catalog_constants("mixture", 1, 2, {}, centers);
  MiniBatch all;
  all.indices = {0, 1, 2, 3};
  CHECK((sula_kernel(mix, c, g, 0.05, all, true).P - ula_kernel(mix, c, g, 0.05, true).P).cwiseAbs().maxCoeff() ==
        0.0);

  const PotentialSpec same = make_mixture({v1(0.4), v1(0.4), v1(0.4)});
  const AssumptionConstants cs = catalog_constants("mixture", 1, 2, {}, {v1(0.4)});
  for (const auto& b : enumerate_batches(3, 1))
    CHECK((sula_kernel(same, cs, g, 0.05, b, false).P - ula_kernel(same, cs, g, 0.05, false).P)
              .cwiseAbs()
              .maxCoeff() <= 1e-15);

  MiniBatch bad;
  bad.indices = {5};
  CHECK_THROWS_AS(sula_kernel(mix, c, g, 0.05, bad), InvalidBatch);
  CHECK_THROWS_AS(ula_kernel(mix, c, g, 0.0, true), InvalidStep);
  CHECK_THROWS_AS(mala_kernel(mix, c, g, -1.0), InvalidStep);
}

TEST_CASE("batch-averaged kernel keeps the mean drift but not the rows") {
  // wide fine grid so renormalization is negligible in the interior
  const GridDomain g = build_grid(1, 6, 241);
  const std::vector<Vec> centers{v1(-1.0), v1(-0.2), v1(0.5), v1(1.4)};
  const PotentialSpec mix = make_mixture(centers);
  const AssumptionConstants c = catalog_constants("mixture", 1, 6, {}, centers);
  const double eta = 0.05;
  const auto batches = enumerate_batches(4, 2);
  Mat avg = Mat::Zero(g.size(), g.size());
  for (const auto& b : batches) avg += sula_kernel(mix, c, g, eta, b, false).P;
  avg /= static_cast<double>(batches.size());
  const MarkovKernel full = ula_kernel(mix, c, g, eta, false);
  CHECK((avg - full.P).cwiseAbs().maxCoeff() > 1e-4);
  Eigen::VectorXd xs(g.size());
  for (int i = 0; i < g.size(); ++i) xs[i] = g.nodes[i][0];
  for (int i = 0; i < g.size(); ++i) {
    if (std::abs(xs[i]) > 2) continue;
    CHECK(avg.row(i).dot(xs) == doctest::Approx(full.P.row(i).dot(xs)).epsilon(1e-9));
  }
}

TEST_CASE("continuous samplers") {
  const PotentialSpec q = make_quadratic(1);
  const Trajectory still = simulate(Sampler::ULA, q, v1(0.7), 1e-8, 10, 1);
  for (const auto& x : still.x) CHECK(std::abs(x[0] - 0.7) <= 1e-3);

  // AR(1): x' = (1 - eta) x + sqrt(2 eta) z, stationary variance 2 eta / (1 - (1 - eta)^2)
  const double eta = 0.1;
  const Trajectory tr = simulate(Sampler::ULA, q, v1(0), eta, 1000000, 42);
  double s = 0, s2 = 0;
  for (std::size_t i = 1000; i < tr.x.size(); ++i) {
    s += tr.x[i][0];
    s2 += tr.x[i][0] * tr.x[i][0];
  }
  const double n = static_cast<double>(tr.x.size() - 1000);
  const double var = s2 / n - (s / n) * (s / n);
  const double want = 2 * eta / (1 - (1 - eta) * (1 - eta));
  CHECK(want == doctest::Approx(1.0526).epsilon(1e-4));
  CHECK(var == doctest::Approx(want).epsilon(0.03));

  const PotentialSpec dw = make_double_well(1);
  CHECK_THROWS_AS(simulate(Sampler::ULA, dw, v1(3), 1.0, 100, 3, 0, 30), DivergenceDetected);
  const PotentialSpec mix = make_mixture({v1(-1), v1(1)});
  CHECK_THROWS_AS(simulate(Sampler::SGLD, mix, v1(0), 0.1, 10, 3, 0), InvalidBatch);
  CHECK(simulate(Sampler::SGLD, mix, v1(0), 0.1, 10, 3, 1).x.size() == 11);
}

TEST_CASE("MALA histogram matches the grid Gibbs law") {
  const double R = 3;
  const int n = 33;
  const GridDomain g = build_grid(1, R, n);
  const PotentialSpec dw = make_double_well(1);
  const Trajectory tr = simulate(Sampler::MALA, dw, v1(0), 0.05, 1000000, 9, 0, 10 * R);
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 1; i < tr.x.size(); ++i) {
    const double x = std::clamp(tr.x[i][0], -R, R);
    hist[static_cast<int>(std::lround((x + R) / g.h))] += 1;
  }
  hist /= hist.sum();
  CHECK(tv_distance(hist, gibbs(dw, g).w) <= 0.05);
  CHECK(tr.acceptance_rate() > 0.5);
}

TEST_CASE("simulation is reproducible per seed") {
  const PotentialSpec dw = make_double_well(1);
  const Trajectory a = simulate(Sampler::MALA, dw, v1(0.1), 0.05, 200, 77);
  const Trajectory b = simulate(Sampler::MALA, dw, v1(0.1), 0.05, 200, 77);
  const Trajectory c = simulate(Sampler::MALA, dw, v1(0.1), 0.05, 200, 78);
  CHECK(a.x.back()[0] == b.x.back()[0]);
  CHECK(a.x.back()[0] != c.x.back()[0]);
}

TEST_CASE("spectral gap and diagnostics") {
  const MarkovKernel k = two_state();
  CHECK(spectral_gap(k, stationary(k)) == doctest::Approx(0.4));
  const MixingDiagnostics d = diagnose(k);
  CHECK(d.conductance == doctest::Approx(0.3));
  REQUIRE(d.spectral_gap);
  // Cheeger: phi^2 / 2 <= gap <= 2 phi
  CHECK(*d.spectral_gap <= 2 * d.conductance + 1e-12);
  CHECK(*d.spectral_gap >= d.conductance * d.conductance / 2);
}
