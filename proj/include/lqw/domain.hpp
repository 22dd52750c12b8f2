#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "lqw/potential.hpp"

namespace lqw {

struct GridDomain {
  int d = 1;
  double R = 1.0;
  int n = 2;  // nodes per axis
  double h = 1.0;
  double cell_measure = 1.0;
  std::vector<Vec> nodes;

  int size() const { return static_cast<int>(nodes.size()); }
  // Squared norms of the nodes, in node order.
  Eigen::VectorXd norms_sq() const;
};

struct DiscreteDistribution {
  Eigen::VectorXd w;
  int size() const { return static_cast<int>(w.size()); }
};

double truncation_radius(double epsilon, int d, double m, double beta, double L);

GridDomain build_grid(int d, double R, int n);
// Arbitrary node set, for tests and custom meshes.
GridDomain grid_from_nodes(int d, std::vector<Vec> nodes, double h);

DiscreteDistribution discretize_density(const GridDomain& domain,
                                        const std::function<double(const Vec&)>& log_density);
// Normalizes exp(logw) with max-subtraction.
DiscreteDistribution from_log_weights(const Eigen::VectorXd& logw);
// log sum_x exp(logw_x) * cell_measure
double log_mass(const GridDomain& domain, const Eigen::VectorXd& logw);
double logsumexp(const Eigen::VectorXd& v);

// Elementwise std::exp. Eigen's vectorized exp floors deep underflow near 5e-309 instead of 0.
template <class Derived>
auto scalar_exp(const Eigen::ArrayBase<Derived>& a) {
  return a.unaryExpr([](double v) { return std::exp(v); });
}

// Grid Gibbs law of exp(-beta f).
DiscreteDistribution gibbs(const PotentialSpec& spec, const GridDomain& domain);
Eigen::VectorXd energies(const PotentialSpec& spec, const GridDomain& domain);

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double bhattacharyya(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double hellinger(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace lqw
