#include "lqw/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lqw/errors.hpp"

namespace lqw {

Eigen::VectorXd GridDomain::norms_sq() const {
  Eigen::VectorXd r(size());
  for (int i = 0; i < size(); ++i) r[i] = nodes[i].squaredNorm();
  return r;
}

double truncation_radius(double epsilon, int d, double m, double beta, double L) {
  if (!(epsilon > 0) || !(m > 0) || !(beta > 0) || !(L > 0) || d < 1)
    throw InvalidArgument("truncation_radius needs positive arguments");
  const double z = epsilon / 12.0;
  if (!(z < 1.0)) throw InvalidArgument("truncation_radius needs epsilon < 12");
  const double mb = m * beta;
  const double t1 = 625.0 * d * std::log(4.0 / z) / mb;
  const double t2 = 4.0 * d * std::log(4.0 * L / m) / mb;
  const double lz = std::log(1.0 / z);
  const double t3 = (4.0 * d + 8.0 * std::sqrt(d * lz) + 8.0 * lz) / mb;
  return std::sqrt(std::max({t1, t2, t3}));
}

GridDomain build_grid(int d, double R, int n) {
  if (d < 1 || d > 2) throw UnsupportedDimension("grids support d in {1,2}, got " + std::to_string(d));
  if (n < 2) throw InvalidArgument("need at least 2 nodes per axis");
  if (!(R > 0)) throw InvalidArgument("radius must be positive");
  GridDomain g;
  g.d = d;
  g.R = R;
  g.n = n;
  g.h = 2.0 * R / (n - 1);
  g.cell_measure = std::pow(g.h, d);
  std::vector<double> axis(n);
  for (int i = 0; i < n; ++i) {
    // symmetric by construction: axis[i] == -axis[n-1-i]
    const int k = 2 * i - (n - 1);
    axis[i] = R * static_cast<double>(k) / (n - 1);
  }
  const double lim = R * R * (1 + 1e-12);
  if (d == 1) {
    for (int i = 0; i < n; ++i) g.nodes.push_back((Vec(1) << axis[i]).finished());
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Vec x(2);
        x << axis[i], axis[j];
        if (x.squaredNorm() <= lim) g.nodes.push_back(x);
      }
  }
  if (g.size() < 2) throw InvalidArgument("grid keeps fewer than 2 nodes inside the ball");
  return g;
}

GridDomain grid_from_nodes(int d, std::vector<Vec> nodes, double h) {
  GridDomain g;
  g.d = d;
  g.h = h;
  g.cell_measure = std::pow(h, d);
  g.n = static_cast<int>(nodes.size());
  double r = 0;
  for (const Vec& x : nodes) {
    if (x.size() != d) throw InvalidArgument("node dimension mismatch");
    r = std::max(r, x.norm());
  }
  g.R = r;
  g.nodes = std::move(nodes);
  return g;
}

double logsumexp(const Eigen::VectorXd& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log(scalar_exp(v.array() - mx).sum());
}

DiscreteDistribution from_log_weights(const Eigen::VectorXd& logw) {
  if (logw.size() == 0) throw DegenerateDensity("empty support");
  for (int i = 0; i < logw.size(); ++i)
    if (std::isnan(logw[i]) || logw[i] == std::numeric_limits<double>::infinity())
      throw DegenerateDensity("log-density is not finite at node " + std::to_string(i));
  const double mx = logw.maxCoeff();
  if (!std::isfinite(mx)) throw DegenerateDensity("all nodes carry zero mass");
  Eigen::VectorXd w = scalar_exp(logw.array() - mx);
  const double s = w.sum();
  if (!(s > 0)) throw DegenerateDensity("all nodes carry zero mass");
  return DiscreteDistribution{w / s};
}

DiscreteDistribution discretize_density(const GridDomain& domain,
                                        const std::function<double(const Vec&)>& log_density) {
  Eigen::VectorXd lw(domain.size());
  for (int i = 0; i < domain.size(); ++i) lw[i] = log_density(domain.nodes[i]);
  // the cell measure is a common factor and cancels in the normalization
  return from_log_weights(lw);
}

double log_mass(const GridDomain& domain, const Eigen::VectorXd& logw) {
  return logsumexp(logw) + std::log(domain.cell_measure);
}

Eigen::VectorXd energies(const PotentialSpec& spec, const GridDomain& domain) {
  Eigen::VectorXd e(domain.size());
  for (int i = 0; i < domain.size(); ++i) e[i] = eval(spec, domain.nodes[i]);
  return e;
}

DiscreteDistribution gibbs(const PotentialSpec& spec, const GridDomain& domain) {
  return from_log_weights(-spec.beta * energies(spec, domain));
}

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

double bhattacharyya(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return (p.cwiseMax(0.0).cwiseSqrt().array() * q.cwiseMax(0.0).cwiseSqrt().array()).sum();
}

double hellinger(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  const double s = 0.5 * (p.cwiseMax(0.0).cwiseSqrt() - q.cwiseMax(0.0).cwiseSqrt()).squaredNorm();
  return std::sqrt(s);
}

}  // namespace lqw
