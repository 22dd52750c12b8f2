#include "lqw/chains.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "lqw/errors.hpp"
#include "lqw/rng.hpp"

namespace lqw {

const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::ULA: return "ULA";
    case KernelKind::MALA: return "MALA";
    case KernelKind::SULA: return "SULA";
  }
  return "?";
}

NodeField full_field(const PotentialSpec& spec, const GridDomain& domain) {
  NodeField f;
  f.energy.resize(domain.size());
  f.gradient.resize(domain.size());
  for (int i = 0; i < domain.size(); ++i) {
    f.energy[i] = eval(spec, domain.nodes[i]);
    f.gradient[i] = grad(spec, domain.nodes[i]);
  }
  return f;
}

NodeField batch_field(const PotentialSpec& spec, const GridDomain& domain, const MiniBatch& batch) {
  validate_batch(batch, spec.N());
  NodeField f;
  f.energy.resize(domain.size());
  f.gradient.resize(domain.size());
  for (int i = 0; i < domain.size(); ++i) {
    f.energy[i] = eval(spec, domain.nodes[i]);
    f.gradient[i] = stochastic_grad(spec, domain.nodes[i], batch);
  }
  return f;
}

NodeField tempered_field(const NodeField& base, const GridDomain& domain, double beta, double sigma_sq) {
  NodeField f = base;
  const double k = 1.0 / (beta * sigma_sq);
  for (int i = 0; i < domain.size(); ++i) {
    f.energy[i] += 0.5 * k * domain.nodes[i].squaredNorm();
    f.gradient[i] += k * domain.nodes[i];
  }
  return f;
}

Mat log_proposal(const GridDomain& domain, const std::vector<Vec>& gradient, double eta, double beta) {
  if (!(eta > 0) || !std::isfinite(eta)) throw InvalidStep("step size must be positive and finite");
  const int n = domain.size();
  const double inv2var = beta / (4.0 * eta);  // variance 2 eta / beta
  Mat lq(n, n);
  for (int x = 0; x < n; ++x) {
    const Vec mean = domain.nodes[x] - eta * gradient[x];
    double mx = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < n; ++y) {
      lq(x, y) = -(domain.nodes[y] - mean).squaredNorm() * inv2var;
      mx = std::max(mx, lq(x, y));
    }
    double s = 0;
    for (int y = 0; y < n; ++y) s += std::exp(lq(x, y) - mx);
    const double lz = mx + std::log(s);
    for (int y = 0; y < n; ++y) lq(x, y) -= lz;
  }
  return lq;
}

double admissible_step(const AssumptionConstants& c, int d, double R, double beta) {
  const double a = c.L * R + c.G;
  return d / (beta * a * a);
}

namespace {

Mat exp_rows(const Mat& lq) { return scalar_exp(lq.array()).matrix(); }

void make_lazy(Mat& P) {
  P *= 0.5;
  P.diagonal().array() += 0.5;
}

}  // namespace

MarkovKernel ula_from_field(const GridDomain& domain, const NodeField& field, double eta, double beta,
                            bool lazy) {
  MarkovKernel k;
  k.P = exp_rows(log_proposal(domain, field.gradient, eta, beta));
  if (lazy) make_lazy(k.P);
  k.lazy = lazy;
  k.kind = KernelKind::ULA;
  k.eta = eta;
  k.beta = beta;
  return k;
}

MarkovKernel mala_from_field(const GridDomain& domain, const NodeField& field, double eta, double beta) {
  const Mat lq = log_proposal(domain, field.gradient, eta, beta);
  const int n = domain.size();
  const Eigen::VectorXd lpi = -beta * field.energy;
  MarkovKernel k;
  k.P = Mat::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    double off = 0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      // lazy proposal: half of q off the diagonal; the halves cancel in the ratio
      const double la = std::min(0.0, lpi[y] + lq(y, x) - lpi[x] - lq(x, y));
      const double p = 0.5 * std::exp(lq(x, y) + la);
      k.P(x, y) = p;
      off += p;
    }
    k.P(x, x) = 1.0 - off;
  }
  k.lazy = true;
  k.kind = KernelKind::MALA;
  k.eta = eta;
  k.beta = beta;
  return k;
}

MarkovKernel ula_kernel(const PotentialSpec& spec, const AssumptionConstants& c, const GridDomain& domain,
                        double eta, bool lazy) {
  validate(spec);
  MarkovKernel k = ula_from_field(domain, full_field(spec, domain), eta, spec.beta, lazy);
  k.step_admissible = eta <= admissible_step(c, spec.d, domain.R, spec.beta);
  return k;
}

MarkovKernel mala_kernel(const PotentialSpec& spec, const AssumptionConstants& c, const GridDomain& domain,
                         double eta) {
  validate(spec);
  MarkovKernel k = mala_from_field(domain, full_field(spec, domain), eta, spec.beta);
  k.step_admissible = eta <= admissible_step(c, spec.d, domain.R, spec.beta);
  return k;
}

MarkovKernel sula_kernel(const PotentialSpec& spec, const AssumptionConstants& c, const GridDomain& domain,
                         double eta, const MiniBatch& batch, bool lazy, int batch_id) {
  validate(spec);
  MarkovKernel k = ula_from_field(domain, batch_field(spec, domain, batch), eta, spec.beta, lazy);
  k.kind = KernelKind::SULA;
  k.batch_id = batch_id;
  k.step_admissible = eta <= admissible_step(c, spec.d, domain.R, spec.beta);
  return k;
}

StationaryResult stationary_full(const MarkovKernel& k, double tol, long max_iter) {
  const int n = k.size();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  const Mat Pt = k.P.transpose();
  Eigen::VectorXd next(n);
  StationaryResult r;
  for (long it = 1; it <= max_iter; ++it) {
    next.noalias() = Pt * pi;
    next /= next.sum();
    const double res = (next - pi).cwiseAbs().sum();
    pi.swap(next);
    if (res <= tol) {
      r.pi.w = pi;
      r.iterations = it;
      r.residual = res;
      return r;
    }
  }
  char msg[96];
  std::snprintf(msg, sizeof msg, "power iteration did not reach %.3g in %ld iterations", tol, max_iter);
  throw StationaryNotConverged(msg);
}

DiscreteDistribution stationary(const MarkovKernel& k) { return stationary_full(k).pi; }

namespace {

constexpr double kHalf = 0.5 + 1e-12;

// Incremental sweep over an ordering; evaluates every prefix and its complement.
double sweep_order(const Mat& P, const Eigen::VectorXd& pi, const std::vector<int>& order) {
  const int n = static_cast<int>(order.size());
  std::vector<char> in(n, 0);
  double q_out = 0, q_in = 0, mass = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t + 1 < n; ++t) {
    const int v = order[t];
    for (int y = 0; y < n; ++y) {
      if (y == v) continue;
      if (in[y]) {
        q_out -= pi[y] * P(y, v);
        q_in -= pi[v] * P(v, y);
      } else {
        q_out += pi[v] * P(v, y);
        q_in += pi[y] * P(y, v);
      }
    }
    in[v] = 1;
    mass += pi[v];
    if (mass <= kHalf && mass > 0) best = std::min(best, std::max(q_out, 0.0) / mass);
    if (1 - mass <= kHalf && 1 - mass > 0) best = std::min(best, std::max(q_in, 0.0) / (1 - mass));
  }
  return best;
}

}  // namespace

double conductance(const MarkovKernel& k, const DiscreteDistribution& pi, ConductanceMode mode) {
  const int n = k.size();
  const Mat& P = k.P;
  const Eigen::VectorXd& w = pi.w;
  if (n < 2) return 0.0;
  if (mode == ConductanceMode::Exact) {
    if (n > 14) throw TooLargeForExact("exact conductance needs at most 14 nodes, got " + std::to_string(n));
    double best = std::numeric_limits<double>::infinity();
    const unsigned full = (1u << n) - 1;
    for (unsigned s = 1; s < full; ++s) {
      double mass = 0;
      for (int x = 0; x < n; ++x)
        if (s & (1u << x)) mass += w[x];
      if (mass > kHalf || mass <= 0) continue;
      double q = 0;
      for (int x = 0; x < n; ++x) {
        if (!(s & (1u << x))) continue;
        for (int y = 0; y < n; ++y)
          if (!(s & (1u << y))) q += w[x] * P(x, y);
      }
      best = std::min(best, q / mass);
    }
    return std::clamp(best, 0.0, 1.0);
  }
  // Sweep: sublevel sets of pi, plus prefix sets along the second
  // eigenvector of the symmetrized kernel. Every candidate is a genuine cut,
  // so the result is an upper bound on the exact value.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] < w[b]; });
  double best = sweep_order(P, w, order);

  const Eigen::VectorXd s = w.cwiseMax(0.0).cwiseSqrt();
  if (s.minCoeff() > 0) {
    Mat A = s.asDiagonal() * P * s.cwiseInverse().asDiagonal();
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    const Eigen::VectorXd f = es.eigenvectors().col(n - 2).cwiseQuotient(s);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
    best = std::min(best, sweep_order(P, w, order));
  }
  return std::clamp(best, 0.0, 1.0);
}

double detailed_balance_residual(const MarkovKernel& k, const DiscreteDistribution& pi) {
  const int n = k.size();
  double r = 0;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y)
      r = std::max(r, std::abs(pi.w[x] * k.P(x, y) - pi.w[y] * k.P(y, x)));
  return r;
}

double row_sum_error(const MarkovKernel& k) {
  return (k.P.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double spectral_gap(const MarkovKernel& k, const DiscreteDistribution& pi) {
  const Eigen::VectorXd s = pi.w.cwiseSqrt();
  if (!(s.minCoeff() > 0)) throw InvalidArgument("spectral gap needs a strictly positive stationary law");
  Mat A = s.asDiagonal() * k.P * s.cwiseInverse().asDiagonal();
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  const int n = k.size();
  return n < 2 ? 1.0 : 1.0 - es.eigenvalues()[n - 2];
}

MixingDiagnostics diagnose(const MarkovKernel& k) {
  MixingDiagnostics d;
  d.stationary = stationary(k);
  const ConductanceMode mode = k.size() <= 14 ? ConductanceMode::Exact : ConductanceMode::Sweep;
  d.conductance = conductance(k, d.stationary, mode);
  d.db_residual = detailed_balance_residual(k, d.stationary);
  // the symmetrized form needs reversibility
  if (d.db_residual <= 1e-12) d.spectral_gap = spectral_gap(k, d.stationary);
  return d;
}

double Trajectory::acceptance_rate() const {
  if (accepted.empty()) return 1.0;
  double a = 0;
  for (char c : accepted) a += c;
  return a / accepted.size();
}

Trajectory simulate(Sampler sampler, const PotentialSpec& spec, const Vec& x0, double eta, long steps,
                    std::uint64_t seed, int batch_size, double escape_radius) {
  validate(spec);
  if (steps < 1) throw InvalidArgument("simulate needs steps >= 1");
  if (!(eta > 0)) throw InvalidStep("step size must be positive");
  if (x0.size() != spec.d) throw InvalidArgument("start point has the wrong dimension");
  if (sampler == Sampler::SGLD && (batch_size < 1 || batch_size > spec.N()))
    throw InvalidBatch("SGLD batch size must lie in [1, N]");
  auto rng = make_stream(seed, stream::kSimulate);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double sd = std::sqrt(2.0 * eta / spec.beta);
  const double inv4 = spec.beta / (4.0 * eta);

  Trajectory tr;
  tr.x.reserve(steps + 1);
  tr.accepted.reserve(steps);
  tr.x.push_back(x0);
  Vec x = x0;
  Vec z(spec.d);
  double fx = sampler == Sampler::MALA ? eval(spec, x) : 0.0;
  Vec gx = sampler == Sampler::SGLD ? Vec() : grad(spec, x);
  for (long s = 0; s < steps; ++s) {
    if (sampler == Sampler::SGLD) gx = stochastic_grad(spec, x, draw_batch(spec.N(), batch_size, rng));
    for (int j = 0; j < spec.d; ++j) z[j] = normal(rng);
    Vec y = x - eta * gx + sd * z;
    char acc = 1;
    if (sampler == Sampler::MALA) {
      const double fy = eval(spec, y);
      const Vec gy = grad(spec, y);
      const double lq_xy = -(y - x + eta * gx).squaredNorm() * inv4;
      const double lq_yx = -(x - y + eta * gy).squaredNorm() * inv4;
      const double la = -spec.beta * (fy - fx) + lq_yx - lq_xy;
      if (la >= 0 || unif(rng) < std::exp(la)) {
        x = y;
        fx = fy;
        gx = gy;
      } else {
        acc = 0;
      }
    } else {
      x = y;
      if (sampler == Sampler::ULA) gx = grad(spec, x);
    }
    if (!x.allFinite() || x.norm() > escape_radius)
      throw DivergenceDetected("trajectory left radius " + std::to_string(escape_radius) + " at step " +
                               std::to_string(s + 1) + "; the step size is probably too large");
    tr.x.push_back(x);
    tr.accepted.push_back(acc);
  }
  return tr;
}

}  // namespace lqw
