#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace lqw {

using Vec = Eigen::VectorXd;

struct GridDomain;

struct Component {
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad;
};

// f(x) = (1/N) sum_k f_k(x), Gibbs law exp(-beta f).
struct PotentialSpec {
  std::string name;
  int d = 1;
  double beta = 1.0;
  std::vector<Component> components;

  int N() const { return static_cast<int>(components.size()); }
};

struct AssumptionConstants {
  double L = 1.0;
  double m = 1.0;
  double b = 0.0;
  double G = 0.0;
  double c_lsi = 1.0;
  double rho = 1.0;
};

struct MiniBatch {
  std::vector<int> indices;  // zero-based
  int B() const { return static_cast<int>(indices.size()); }
};

void validate(const PotentialSpec& spec);
void validate(const AssumptionConstants& c);
void validate_batch(const MiniBatch& batch, int N);

double eval(const PotentialSpec& spec, const Vec& x);
Vec grad(const PotentialSpec& spec, const Vec& x);
Vec stochastic_grad(const PotentialSpec& spec, const Vec& x, const MiniBatch& batch);

// All C(N,B) batches in lexicographic order.
std::vector<MiniBatch> enumerate_batches(int N, int B);
std::size_t binomial(int n, int k);

template <class Rng>
MiniBatch draw_batch(int N, int B, Rng& rng) {
  std::vector<int> idx(N);
  for (int i = 0; i < N; ++i) idx[i] = i;
  // partial Fisher-Yates
  for (int i = 0; i < B; ++i) {
    std::uniform_int_distribution<int> pick(i, N - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  MiniBatch mb;
  mb.indices.assign(idx.begin(), idx.begin() + B);
  return mb;
}

// Catalog.
PotentialSpec make_quadratic(int d, double beta = 1.0);
PotentialSpec make_zero(int d, double beta = 1.0);
// (x1^2-1)^2/4 (+ sum_{j>1} x_j^2/2 in 2D). Non-empty tilts give components
// f_k = f + t_k x1; the tilts should sum to zero so the average is untilted.
PotentialSpec make_double_well(int d, double beta = 1.0, std::vector<double> tilts = {});
// f_k = |x - c_k|^2 / 2
PotentialSpec make_mixture(const std::vector<Vec>& centers, double beta = 1.0);

// Closed-form constants valid on the ball of radius R (c_lsi, rho left at 1).
AssumptionConstants catalog_constants(const std::string& name, int d, double R,
                                      const std::vector<double>& tilts = {},
                                      const std::vector<Vec>& centers = {});

struct CertificationReport {
  double max_lipschitz_ratio = 0;  // <= L
  double min_dissipativity = 0;    // >= 0
  double min_lower_bound = 0;      // >= 0
  double max_growth = 0;           // <= 0
  Vec lipschitz_witness, dissipativity_witness, lower_witness, growth_witness;
  bool lipschitz_ok = true, dissipativity_ok = true, lower_ok = true, growth_ok = true;
  int probes = 0;
  bool pass() const { return lipschitz_ok && dissipativity_ok && lower_ok && growth_ok; }
};

// Evaluates the four assumption inequalities on probe points taken from the
// grid (all nodes when probes >= node count, an even stride otherwise).
CertificationReport audit_constants(const PotentialSpec& spec, const AssumptionConstants& c,
                                    const GridDomain& domain, int probes);
// As audit_constants but throws AssumptionViolation on the first failed check.
CertificationReport certify_constants(const PotentialSpec& spec, const AssumptionConstants& c,
                                      const GridDomain& domain, int probes);

// Smallest L, b, G passing the audit on every grid node for the given m.
AssumptionConstants tightest_constants(const PotentialSpec& spec, const GridDomain& domain,
                                       double m);

}  // namespace lqw
