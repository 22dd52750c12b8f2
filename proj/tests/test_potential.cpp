#include <doctest.h>

#include <cmath>
#include <random>

#include "lqw/domain.hpp"
#include "lqw/errors.hpp"
#include "lqw/potential.hpp"

using namespace lqw;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

std::vector<PotentialSpec> catalog() {
  return {make_quadratic(1), make_quadratic(2), make_double_well(1), make_double_well(2),
          make_double_well(1, 1.0, {0.3, -0.2}), make_mixture({v1(-1), v1(0.5), v1(2)}),
          make_mixture({Vec::Constant(2, 0.3), Vec::Constant(2, -0.7)})};
}

}  // namespace

TEST_CASE("closed-form energies") {
  CHECK(eval(make_quadratic(1), v1(2)) == doctest::Approx(2.0));
  CHECK(eval(make_double_well(1), v1(1)) == doctest::Approx(0.0));
  CHECK(eval(make_mixture({v1(-1), v1(1)}), v1(0)) == doctest::Approx(0.5));
  CHECK(eval(make_zero(2), Vec::Constant(2, 5.0)) == 0.0);
}

TEST_CASE("closed-form gradients") {
  CHECK(grad(make_quadratic(1), v1(2))[0] == doctest::Approx(2.0));
  CHECK(grad(make_double_well(1), v1(1))[0] == doctest::Approx(0.0));
  CHECK(grad(make_double_well(1), v1(2))[0] == doctest::Approx(6.0));
}

TEST_CASE("sum equals the mean of its components") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const auto& spec : catalog()) {
    for (int t = 0; t < 20; ++t) {
      Vec x(spec.d);
      for (int k = 0; k < spec.d; ++k) x[k] = u(rng);
      double s = 0;
      for (const auto& c : spec.components) s += c.f(x);
      s /= spec.N();
      CHECK(eval(spec, x) == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const auto& spec : catalog()) {
    for (int t = 0; t < 100; ++t) {
      Vec x(spec.d);
      for (int k = 0; k < spec.d; ++k) x[k] = u(rng);
      const Vec g = grad(spec, x);
      Vec fd(spec.d);
      const double h = 1e-5;
      for (int k = 0; k < spec.d; ++k) {
        Vec a = x, b = x;
        a[k] += h;
        b[k] -= h;
        fd[k] = (eval(spec, a) - eval(spec, b)) / (2 * h);
      }
      CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("stochastic gradient identities") {
  const PotentialSpec mix = make_mixture({v1(-1), v1(-0.2), v1(0.4), v1(1.3)});
  MiniBatch all;
  all.indices = {0, 1, 2, 3};
  CHECK(stochastic_grad(mix, v1(0.7), all)[0] == grad(mix, v1(0.7))[0]);

  const PotentialSpec same = make_mixture({v1(0.5), v1(0.5), v1(0.5)});
  for (const auto& b : enumerate_batches(3, 2))
    CHECK(stochastic_grad(same, v1(1.1), b)[0] == doctest::Approx(grad(same, v1(1.1))[0]));

  const auto batches = enumerate_batches(4, 2);
  REQUIRE(batches.size() == 6);
  double mean = 0;
  for (const auto& b : batches) mean += stochastic_grad(mix, v1(0), b)[0];
  mean /= 6;
  CHECK(mean == doctest::Approx(grad(mix, v1(0))[0]).epsilon(1e-14));
}

TEST_CASE("batch enumeration is lexicographic and complete") {
  const auto b = enumerate_batches(5, 3);
  CHECK(b.size() == binomial(5, 3));
  CHECK(b.front().indices == std::vector<int>{0, 1, 2});
  CHECK(b.back().indices == std::vector<int>{2, 3, 4});
  for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i - 1].indices < b[i].indices);
}

TEST_CASE("drawn batches are distinct in-range indices") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    MiniBatch mb = draw_batch(7, 3, rng);
    std::sort(mb.indices.begin(), mb.indices.end());
    CHECK(std::adjacent_find(mb.indices.begin(), mb.indices.end()) == mb.indices.end());
    CHECK(mb.indices.front() >= 0);
    CHECK(mb.indices.back() < 7);
  }
}

TEST_CASE("oracle errors") {
  const PotentialSpec mix = make_mixture({v1(-1), v1(1)});
  MiniBatch bad;
  bad.indices = {0, 2};
  CHECK_THROWS_AS(stochastic_grad(mix, v1(0), bad), InvalidBatch);
  bad.indices = {};
  CHECK_THROWS_AS(stochastic_grad(mix, v1(0), bad), InvalidBatch);

  PotentialSpec nan_spec = make_quadratic(1);
  nan_spec.components[0].f = [](const Vec&) { return std::nan(""); };
  nan_spec.components[0].grad = [](const Vec& x) { return Vec::Constant(x.size(), INFINITY); };
  CHECK_THROWS_AS(eval(nan_spec, v1(0)), NonFiniteEnergy);
  CHECK_THROWS_AS(grad(nan_spec, v1(0)), NonFiniteGradient);
}

TEST_CASE("constants validation") {
  AssumptionConstants c;
  CHECK_NOTHROW(validate(c));
  c.L = 0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = {};
  c.b = -1;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
}

TEST_CASE("exact quadratic constants certify") {
  const GridDomain dom = build_grid(1, 3, 33);
  AssumptionConstants c;
  c.L = 1;
  c.m = 1;
  c.b = 0;
  c.G = 0;
  const CertificationReport r = certify_constants(make_quadratic(1), c, dom, dom.size());
  CHECK(r.pass());
}

TEST_CASE("understated double-well constants are rejected with a witness") {
  const GridDomain dom = build_grid(1, 3, 33);
  AssumptionConstants c;
  c.L = 1;
  c.m = 1;
  c.b = 0;
  CHECK_THROWS_AS(certify_constants(make_double_well(1), c, dom, dom.size()), AssumptionViolation);
  const CertificationReport r = audit_constants(make_double_well(1), c, dom, dom.size());
  CHECK_FALSE(r.pass());
  CHECK_FALSE(r.lipschitz_ok);
  CHECK(r.lipschitz_witness.size() == 1);
}

TEST_CASE("catalog constants certify on their domain") {
  for (double R : {1.5, 3.0}) {
    const GridDomain dom = build_grid(1, R, 65);
    CHECK(audit_constants(make_double_well(1), catalog_constants("double_well", 1, R), dom, dom.size()).pass());
    CHECK(audit_constants(make_double_well(1, 1, {0.4, -0.1}), catalog_constants("double_well", 1, R, {0.4, -0.1}),
                          dom, dom.size())
              .pass());
    const std::vector<Vec> centers{v1(-0.9), v1(0.2), v1(0.7)};
    CHECK(audit_constants(make_mixture(centers), catalog_constants("mixture", 1, R, {}, centers), dom, dom.size())
              .pass());
    CHECK(audit_constants(make_zero(1), catalog_constants("zero", 1, R), dom, dom.size()).pass());
  }
  const GridDomain dom2 = build_grid(2, 2.0, 17);
  CHECK(audit_constants(make_double_well(2), catalog_constants("double_well", 2, 2.0), dom2, dom2.size()).pass());
}

TEST_CASE("tightest double-well constants match a dense scan") {
  const GridDomain dom = build_grid(1, 3, 201);
  const AssumptionConstants c = tightest_constants(make_double_well(1), dom, 1.0);
  // oracle: Lipschitz ratio of x^3 - x over grid pairs is bounded by max |3x^2 - 1| = 26
  double Lmax = 0;
  for (int i = 0; i + 1 < dom.size(); ++i) {
    const double a = dom.nodes[i][0], b = dom.nodes[i + 1][0];
    Lmax = std::max(Lmax, std::abs((b * b * b - b) - (a * a * a - a)) / (b - a));
  }
  CHECK(c.L == doctest::Approx(Lmax).epsilon(1e-9));
  CHECK(c.L <= 26.0);
  CHECK(c.G == doctest::Approx(0.0));
  CHECK(audit_constants(make_double_well(1), c, dom, dom.size()).pass());
  AssumptionConstants tighter = c;
  tighter.L *= 0.99;
  CHECK_FALSE(audit_constants(make_double_well(1), tighter, dom, dom.size()).pass());
}
