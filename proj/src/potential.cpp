#include "lqw/potential.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lqw/domain.hpp"
#include "lqw/errors.hpp"

namespace lqw {

namespace {

std::string fmt_point(const Vec& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

void check_point(const Vec& x) {
  if (!x.allFinite()) throw InvalidArgument("non-finite probe point " + fmt_point(x));
}

}  // namespace

void validate(const PotentialSpec& spec) {
  if (spec.d < 1) throw InvalidArgument("dimension must be >= 1");
  if (spec.N() < 1) throw InvalidArgument("potential needs at least one component");
  if (!(spec.beta > 0)) throw InvalidArgument("beta must be > 0");
}

void validate(const AssumptionConstants& c) {
  if (!(c.L > 0) || !(c.m > 0) || !(c.b >= 0) || !(c.G >= 0))
    throw InvalidArgument("constants need L > 0, m > 0, b >= 0, G >= 0");
  if (!(c.c_lsi > 0) || !(c.rho > 0)) throw InvalidArgument("c_lsi and rho must be > 0");
}

void validate_batch(const MiniBatch& batch, int N) {
  const int B = batch.B();
  if (B < 1 || B > N)
    throw InvalidBatch("batch size " + std::to_string(B) + " outside [1, " + std::to_string(N) + "]");
  std::vector<char> seen(N, 0);
  for (int k : batch.indices) {
    if (k < 0 || k >= N) throw InvalidBatch("index " + std::to_string(k) + " out of range");
    if (seen[k]) throw InvalidBatch("duplicate index " + std::to_string(k));
    seen[k] = 1;
  }
}

double eval(const PotentialSpec& spec, const Vec& x) {
  check_point(x);
  double s = 0;
  for (const auto& c : spec.components) s += c.f(x);
  s /= spec.N();
  if (!std::isfinite(s)) throw NonFiniteEnergy("energy is not finite at " + fmt_point(x));
  return s;
}

Vec grad(const PotentialSpec& spec, const Vec& x) {
  check_point(x);
  Vec g = Vec::Zero(spec.d);
  for (const auto& c : spec.components) g += c.grad(x);
  g /= spec.N();
  if (!g.allFinite()) throw NonFiniteGradient("gradient is not finite at " + fmt_point(x));
  return g;
}

Vec stochastic_grad(const PotentialSpec& spec, const Vec& x, const MiniBatch& batch) {
  validate_batch(batch, spec.N());
  check_point(x);
  Vec g = Vec::Zero(spec.d);
  for (int k : batch.indices) g += spec.components[k].grad(x);
  g /= batch.B();
  if (!g.allFinite()) throw NonFiniteGradient("stochastic gradient is not finite at " + fmt_point(x));
  return g;
}

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

std::vector<MiniBatch> enumerate_batches(int N, int B) {
  if (B < 1 || B > N) throw InvalidBatch("batch size out of range");
  std::vector<MiniBatch> out;
  std::vector<int> idx(B);
  for (int i = 0; i < B; ++i) idx[i] = i;
  while (true) {
    out.push_back(MiniBatch{idx});
    int i = B - 1;
    while (i >= 0 && idx[i] == N - B + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < B; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

PotentialSpec make_quadratic(int d, double beta) {
  PotentialSpec s;
  s.name = "quadratic";
  s.d = d;
  s.beta = beta;
  s.components.push_back({[](const Vec& x) { return 0.5 * x.squaredNorm(); },
                          [](const Vec& x) { return Vec(x); }});
  return s;
}

PotentialSpec make_zero(int d, double beta) {
  PotentialSpec s;
  s.name = "zero";
  s.d = d;
  s.beta = beta;
  s.components.push_back({[](const Vec&) { return 0.0; },
                          [d](const Vec&) { return Vec(Vec::Zero(d)); }});
  return s;
}

PotentialSpec make_double_well(int d, double beta, std::vector<double> tilts) {
  if (d < 1 || d > 2) throw UnsupportedDimension("double well is defined for d in {1,2}");
  PotentialSpec s;
  s.name = "double_well";
  s.d = d;
  s.beta = beta;
  if (tilts.empty()) tilts.push_back(0.0);
  for (double t : tilts) {
    auto f = [t](const Vec& x) {
      const double u = x[0] * x[0] - 1.0;
      double v = 0.25 * u * u + t * x[0];
      for (int j = 1; j < x.size(); ++j) v += 0.5 * x[j] * x[j];
      return v;
    };
    auto g = [t](const Vec& x) {
      Vec out(x);
      out[0] = x[0] * x[0] * x[0] - x[0] + t;
      return out;
    };
    s.components.push_back({f, g});
  }
  return s;
}

PotentialSpec make_mixture(const std::vector<Vec>& centers, double beta) {
  if (centers.empty()) throw InvalidArgument("mixture needs at least one center");
  PotentialSpec s;
  s.name = "mixture";
  s.d = static_cast<int>(centers.front().size());
  s.beta = beta;
  for (const Vec& c : centers) {
    if (c.size() != s.d) throw InvalidArgument("mixture centers must share a dimension");
    s.components.push_back({[c](const Vec& x) { return 0.5 * (x - c).squaredNorm(); },
                            [c](const Vec& x) { return Vec(x - c); }});
  }
  return s;
}

AssumptionConstants catalog_constants(const std::string& name, int d, double R,
                                      const std::vector<double>& tilts,
                                      const std::vector<Vec>& centers) {
  AssumptionConstants c;
  if (name == "quadratic") {
    c.L = 1;
    c.m = 1;
    c.b = 0;
    c.G = 0;
  } else if (name == "zero") {
    // Only dissipative on a bounded domain.
    c.L = 1;
    c.m = 1;
    c.b = R * R;
    c.G = 0;
  } else if (name == "double_well") {
    double tmax = 0;
    for (double t : tilts) tmax = std::max(tmax, std::abs(t));
    c.L = std::max(3 * R * R - 1, 1.0);
    c.m = 1;
    // x^4 - 2x^2 - |t||x| >= -(1 + 2|t|) for |t| <= 1
    c.b = 1 + 2 * tmax;
    c.G = tmax;
  } else if (name == "mixture") {
    Vec mean = Vec::Zero(d);
    double gmax = 0;
    for (const Vec& ck : centers) {
      mean += ck;
      gmax = std::max(gmax, ck.norm());
    }
    if (!centers.empty()) mean /= static_cast<double>(centers.size());
    c.L = 1;
    c.m = 0.5;
    c.b = 0.5 * mean.squaredNorm();
    c.G = gmax;
  } else {
    throw InvalidArgument("unknown potential '" + name + "'");
  }
  return c;
}

namespace {

std::vector<int> probe_indices(int count, int probes) {
  std::vector<int> idx;
  if (probes >= count) {
    for (int i = 0; i < count; ++i) idx.push_back(i);
    return idx;
  }
  for (int i = 0; i < probes; ++i)
    idx.push_back(static_cast<int>(std::llround(static_cast<double>(i) * (count - 1) / (probes - 1))));
  return idx;
}

// Relative slack for exact-equality cases such as the quadratic (m = L).
constexpr double kSlack = 1e-10;

}  // namespace

CertificationReport audit_constants(const PotentialSpec& spec, const AssumptionConstants& c,
                                    const GridDomain& domain, int probes) {
  validate(spec);
  if (probes < 2) throw InvalidArgument("certification needs at least 2 probes");
  const std::vector<int> idx = probe_indices(domain.size(), probes);
  const int P = static_cast<int>(idx.size());
  const int N = spec.N();
  CertificationReport rep;
  rep.probes = P;

  std::vector<Vec> xs(P);
  std::vector<double> fx(P);
  std::vector<std::vector<Vec>> gk(P, std::vector<Vec>(N));
  for (int i = 0; i < P; ++i) {
    xs[i] = domain.nodes[idx[i]];
    fx[i] = eval(spec, xs[i]);
    for (int k = 0; k < N; ++k) gk[i][k] = spec.components[k].grad(xs[i]);
  }

  rep.max_lipschitz_ratio = 0;
  for (int i = 0; i < P; ++i)
    for (int j = i + 1; j < P; ++j) {
      const double dx = (xs[i] - xs[j]).norm();
      if (dx == 0) continue;
      for (int k = 0; k < N; ++k) {
        const double r = (gk[i][k] - gk[j][k]).norm() / dx;
        if (r > rep.max_lipschitz_ratio) {
          rep.max_lipschitz_ratio = r;
          rep.lipschitz_witness = xs[i];
        }
      }
    }
  rep.lipschitz_ok = rep.max_lipschitz_ratio <= c.L * (1 + kSlack);

  int best = 0;
  for (int i = 1; i < P; ++i)
    if (fx[i] < fx[best]) best = i;
  const double fstar = fx[best];

  rep.min_dissipativity = std::numeric_limits<double>::infinity();
  rep.min_lower_bound = std::numeric_limits<double>::infinity();
  rep.max_growth = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < P; ++i) {
    const Vec& x = xs[i];
    const double r2 = x.squaredNorm();
    Vec g = Vec::Zero(spec.d);
    for (int k = 0; k < N; ++k) g += gk[i][k];
    g /= N;
    const double dis = g.dot(x) - c.m * r2 + c.b;
    if (dis < rep.min_dissipativity) {
      rep.min_dissipativity = dis;
      rep.dissipativity_witness = x;
    }
    const double low = fx[i] - c.m * r2 / 4 - fstar + c.b / 2;
    if (low < rep.min_lower_bound) {
      rep.min_lower_bound = low;
      rep.lower_witness = x;
    }
    for (int k = 0; k < N; ++k) {
      const double gr = gk[i][k].norm() - c.L * std::sqrt(r2) - c.G;
      if (gr > rep.max_growth) {
        rep.max_growth = gr;
        rep.growth_witness = x;
      }
    }
  }
  const double scale = 1 + c.m * domain.R * domain.R + c.b;
  rep.dissipativity_ok = rep.min_dissipativity >= -kSlack * scale;
  rep.lower_ok = rep.min_lower_bound >= -kSlack * scale;
  rep.growth_ok = rep.max_growth <= kSlack * (1 + c.L * domain.R + c.G);
  return rep;
}

CertificationReport certify_constants(const PotentialSpec& spec, const AssumptionConstants& c,
                                      const GridDomain& domain, int probes) {
  validate(c);
  CertificationReport rep = audit_constants(spec, c, domain, probes);
  std::ostringstream os;
  os.precision(10);
  if (!rep.lipschitz_ok)
    os << "smoothness |grad f_k(x) - grad f_k(y)| <= L|x-y| fails: ratio " << rep.max_lipschitz_ratio
       << " > L = " << c.L << " near " << fmt_point(rep.lipschitz_witness);
  else if (!rep.dissipativity_ok)
    os << "dissipativity <grad f(x), x> >= m|x|^2 - b fails by " << -rep.min_dissipativity << " at "
       << fmt_point(rep.dissipativity_witness);
  else if (!rep.lower_ok)
    os << "lower bound f(x) >= m|x|^2/4 + f(x*) - b/2 fails by " << -rep.min_lower_bound << " at "
       << fmt_point(rep.lower_witness);
  else if (!rep.growth_ok)
    os << "gradient growth |grad f_k(x)| <= L|x| + G fails by " << rep.max_growth << " at "
       << fmt_point(rep.growth_witness);
  else
    return rep;
  throw AssumptionViolation(os.str());
}

AssumptionConstants tightest_constants(const PotentialSpec& spec, const GridDomain& domain, double m) {
  AssumptionConstants c;
  c.m = m;
  c.L = 0;
  c.b = 0;
  c.G = 0;
  const int P = domain.size();
  const int N = spec.N();
  std::vector<std::vector<Vec>> gk(P, std::vector<Vec>(N));
  std::vector<double> fx(P);
  for (int i = 0; i < P; ++i) {
    fx[i] = eval(spec, domain.nodes[i]);
    for (int k = 0; k < N; ++k) gk[i][k] = spec.components[k].grad(domain.nodes[i]);
  }
  for (int i = 0; i < P; ++i)
    for (int j = i + 1; j < P; ++j) {
      const double dx = (domain.nodes[i] - domain.nodes[j]).norm();
      for (int k = 0; k < N; ++k) c.L = std::max(c.L, (gk[i][k] - gk[j][k]).norm() / dx);
    }
  double fstar = fx[0];
  for (double v : fx) fstar = std::min(fstar, v);
  for (int i = 0; i < P; ++i) {
    const Vec& x = domain.nodes[i];
    const double r2 = x.squaredNorm();
    Vec g = Vec::Zero(spec.d);
    for (int k = 0; k < N; ++k) g += gk[i][k];
    g /= N;
    c.b = std::max(c.b, m * r2 - g.dot(x));
    c.b = std::max(c.b, 2 * (m * r2 / 4 + fstar - fx[i]));
  }
  for (int i = 0; i < P; ++i)
    for (int k = 0; k < N; ++k)
      c.G = std::max(c.G, gk[i][k].norm() - c.L * domain.nodes[i].norm());
  return c;
}

}  // namespace lqw
