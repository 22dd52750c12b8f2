#include "lqw/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lqw/chains.hpp"
#include "lqw/errors.hpp"

namespace lqw {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const std::string& text, const std::string& source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    const int line = line_of(field);
    if (line > 0) os << ":" << line;
    os << ": " << field << ": " << msg;
    throw ConfigError(os.str());
  }

  // Line of the first occurrence of the last path component as a key.
  int line_of(const std::string& field) const {
    const auto dot = field.rfind('.');
    const std::string key = "\"" + (dot == std::string::npos ? field : field.substr(dot + 1)) + "\"";
    const auto pos = text_.find(key);
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n'));
  }

  void keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }

  double positive(const json& v, const std::string& path) const {
    const double x = number(v, path);
    if (!(x > 0)) fail(path, "must be positive");
    return x;
  }

  long long integer(const json& v, const std::string& path, long long lo, long long hi) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi) fail(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }

  std::uint64_t seed(const json& v, const std::string& path) const {
    if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const json& v, const std::string& path) const {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }

  ConstantSetting constant(const json& v, const std::string& path, bool measurable) const {
    ConstantSetting s;
    if (v.is_string()) {
      const std::string t = v.get<std::string>();
      if (t == "catalog") return s;
      if (t == "measure" && measurable) {
        s.source = ConstantSetting::Source::Measure;
        return s;
      }
      fail(path, measurable ? "expected a number, \"catalog\" or \"measure\"" : "expected a number or \"catalog\"");
    }
    s.source = ConstantSetting::Source::Value;
    s.value = number(v, path);
    return s;
  }

 private:
  const std::string& text_;
  std::string source_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
    std::string msg = e.what();
    const auto p = msg.find("parse error");
    throw ConfigError(source + ":" + std::to_string(line) + ": " + (p == std::string::npos ? msg : msg.substr(p)));
  }
  Reader rd(text, source);
  ExperimentConfig cfg;
  cfg.source = source;
  rd.keys(root, "", {"potential", "constants", "domain", "chain", "schedule", "backend", "run", "partition", "output"});

  if (root.contains("potential")) {
    const json& p = root["potential"];
    rd.keys(p, "potential", {"name", "tilts", "centers"});
    if (p.contains("name")) cfg.potential = rd.string(p["name"], "potential.name");
    static const std::set<std::string> names{"quadratic", "zero", "double_well", "mixture"};
    if (!names.count(cfg.potential))
      rd.fail("potential.name", "unknown potential '" + cfg.potential + "' (quadratic, zero, double_well, mixture)");
    if (p.contains("tilts")) {
      if (!p["tilts"].is_array()) rd.fail("potential.tilts", "expected an array of numbers");
      for (const auto& t : p["tilts"]) cfg.tilts.push_back(rd.number(t, "potential.tilts"));
    }
    if (p.contains("centers")) {
      if (!p["centers"].is_array()) rd.fail("potential.centers", "expected an array of points");
      for (const auto& c : p["centers"]) {
        if (!c.is_array()) rd.fail("potential.centers", "each center must be an array of coordinates");
        std::vector<double> pt;
        for (const auto& x : c) pt.push_back(rd.number(x, "potential.centers"));
        cfg.centers.push_back(pt);
      }
    }
  }
  if (root.contains("constants")) {
    const json& c = root["constants"];
    rd.keys(c, "constants", {"L", "m", "b", "G", "beta", "c_lsi", "rho"});
    if (c.contains("L")) cfg.L = rd.constant(c["L"], "constants.L", false);
    if (c.contains("m")) cfg.m = rd.constant(c["m"], "constants.m", false);
    if (c.contains("b")) cfg.b = rd.constant(c["b"], "constants.b", false);
    if (c.contains("G")) cfg.G = rd.constant(c["G"], "constants.G", false);
    if (c.contains("beta")) cfg.beta = rd.positive(c["beta"], "constants.beta");
    if (c.contains("c_lsi")) cfg.c_lsi = rd.constant(c["c_lsi"], "constants.c_lsi", true);
    if (c.contains("rho")) cfg.rho = rd.constant(c["rho"], "constants.rho", true);
  }
  if (root.contains("domain")) {
    const json& d = root["domain"];
    rd.keys(d, "domain", {"d", "R", "n"});
    if (d.contains("d")) cfg.d = static_cast<int>(rd.integer(d["d"], "domain.d", 1, 2));
    if (d.contains("R")) {
      if (d["R"].is_string()) {
        if (d["R"].get<std::string>() != "auto") rd.fail("domain.R", "expected a number or \"auto\"");
        cfg.R.reset();
      } else {
        cfg.R = rd.positive(d["R"], "domain.R");
      }
    } else {
      cfg.R = 3.0;
    }
    if (d.contains("n")) cfg.n = static_cast<int>(rd.integer(d["n"], "domain.n", 2, 4097));
  } else {
    cfg.R = 3.0;
  }
  if (root.contains("chain")) {
    const json& c = root["chain"];
    rd.keys(c, "chain", {"eta", "lazy"});
    if (c.contains("eta")) cfg.eta = rd.positive(c["eta"], "chain.eta");
    if (c.contains("lazy")) cfg.lazy = rd.boolean(c["lazy"], "chain.lazy");
  }
  if (root.contains("schedule")) {
    const json& s = root["schedule"];
    rd.keys(s, "schedule", {"epsilon", "alpha_scale"});
    if (s.contains("epsilon")) cfg.schedule_epsilon = rd.positive(s["epsilon"], "schedule.epsilon");
    if (cfg.schedule_epsilon >= 1) rd.fail("schedule.epsilon", "must lie in (0,1)");
    if (s.contains("alpha_scale")) cfg.alpha_scale = rd.positive(s["alpha_scale"], "schedule.alpha_scale");
  }
  if (root.contains("backend")) {
    const json& b = root["backend"];
    rd.keys(b, "backend", {"kind", "batch", "c_proj", "c0"});
    if (b.contains("kind")) {
      const std::string k = rd.string(b["kind"], "backend.kind");
      try {
        cfg.backend = parse_backend(k);
      } catch (const Error&) {
        rd.fail("backend.kind", "expected mala, ula or sula");
      }
    }
    if (b.contains("batch")) cfg.batch = static_cast<int>(rd.integer(b["batch"], "backend.batch", 1, 1 << 20));
    if (b.contains("c_proj")) cfg.c_proj = rd.positive(b["c_proj"], "backend.c_proj");
    if (b.contains("c0")) cfg.c0 = rd.positive(b["c0"], "backend.c0");
  }
  if (root.contains("run")) {
    const json& r = root["run"];
    rd.keys(r, "run", {"seed", "shots", "epsilon"});
    if (r.contains("seed")) cfg.seed = rd.seed(r["seed"], "run.seed");
    if (r.contains("shots")) cfg.shots = static_cast<std::uint64_t>(rd.integer(r["shots"], "run.shots", 1, 1LL << 50));
    if (r.contains("epsilon")) cfg.run_epsilon = rd.positive(r["epsilon"], "run.epsilon");
    if (cfg.run_epsilon >= 1) rd.fail("run.epsilon", "must lie in (0,1)");
  }
  if (root.contains("partition")) {
    const json& p = root["partition"];
    rd.keys(p, "partition", {"mode", "c_mean", "relvar_cap"});
    if (p.contains("mode")) {
      const std::string m = rd.string(p["mode"], "partition.mode");
      if (m != "exact" && m != "sampled") rd.fail("partition.mode", "expected exact or sampled");
      cfg.partition_mode = parse_partition_mode(m);
    }
    if (p.contains("c_mean")) cfg.c_mean = rd.positive(p["c_mean"], "partition.c_mean");
    if (p.contains("relvar_cap")) cfg.relvar_cap = rd.positive(p["relvar_cap"], "partition.relvar_cap");
  }
  if (root.contains("output")) {
    const json& o = root["output"];
    rd.keys(o, "output", {"report", "csv_dir"});
    if (o.contains("report")) cfg.report_path = rd.string(o["report"], "output.report");
    if (o.contains("csv_dir")) cfg.csv_dir = rd.string(o["csv_dir"], "output.csv_dir");
  }
  if (cfg.potential == "mixture") {
    if (cfg.centers.empty()) rd.fail("potential.centers", "mixture needs at least one center");
    for (const auto& c : cfg.centers)
      if (static_cast<int>(c.size()) != cfg.d) rd.fail("potential.centers", "center dimension differs from domain.d");
  } else if (!cfg.centers.empty()) {
    rd.fail("potential.centers", "only the mixture potential takes centers");
  }
  if (!cfg.tilts.empty() && cfg.potential != "double_well")
    rd.fail("potential.tilts", "only the double_well potential takes tilts");
  if (cfg.backend == Backend::SULA && cfg.batch < 1) rd.fail("backend.batch", "must be at least 1");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_seed_override(ExperimentConfig& cfg) {
  const char* env = std::getenv("LQW_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw ConfigError("LQW_SEED: expected a non-negative integer, got '" + std::string(env) + "'");
  cfg.seed = v;
}

namespace {

PotentialSpec make_potential(const ExperimentConfig& cfg) {
  if (cfg.potential == "quadratic") return make_quadratic(cfg.d, cfg.beta);
  if (cfg.potential == "zero") return make_zero(cfg.d, cfg.beta);
  if (cfg.potential == "double_well") return make_double_well(cfg.d, cfg.beta, cfg.tilts);
  std::vector<Vec> centers;
  for (const auto& c : cfg.centers) centers.push_back(Eigen::Map<const Vec>(c.data(), static_cast<long>(c.size())));
  return make_mixture(centers, cfg.beta);
}

AssumptionConstants resolve_static(const ExperimentConfig& cfg, double R) {
  std::vector<Vec> centers;
  for (const auto& c : cfg.centers) centers.push_back(Eigen::Map<const Vec>(c.data(), static_cast<long>(c.size())));
  AssumptionConstants c = catalog_constants(cfg.potential, cfg.d, R, cfg.tilts, centers);
  auto take = [](const ConstantSetting& s, double& dst) {
    if (s.source == ConstantSetting::Source::Value) dst = s.value;
  };
  take(cfg.L, c.L);
  take(cfg.m, c.m);
  take(cfg.b, c.b);
  take(cfg.G, c.G);
  take(cfg.c_lsi, c.c_lsi);
  take(cfg.rho, c.rho);
  return c;
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment ex;
  ex.spec = make_potential(cfg);
  if (cfg.R) {
    ex.R = *cfg.R;
  } else {
    // L may depend on R through the catalog; iterate to a fixed point.
    double R = 1.0;
    for (int it = 0; it < 100; ++it) {
      const AssumptionConstants c = resolve_static(cfg, R);
      const double next = truncation_radius(cfg.schedule_epsilon, cfg.d, c.m, cfg.beta, c.L);
      if (std::abs(next - R) <= 1e-10 * next) {
        R = next;
        break;
      }
      R = next;
    }
    ex.R = R;
  }
  ex.domain = build_grid(cfg.d, ex.R, cfg.n);
  ex.constants = resolve_static(cfg, ex.R);
  if (cfg.c_lsi.source == ConstantSetting::Source::Measure || cfg.rho.source == ConstantSetting::Source::Measure) {
    const MarkovKernel k = mala_kernel(ex.spec, ex.constants, ex.domain, cfg.eta);
    const DiscreteDistribution pi = stationary(k);
    if (cfg.c_lsi.source == ConstantSetting::Source::Measure) ex.constants.c_lsi = spectral_gap(k, pi) / cfg.eta;
    if (cfg.rho.source == ConstantSetting::Source::Measure) {
      const auto mode = ex.domain.size() <= 14 ? ConductanceMode::Exact : ConductanceMode::Sweep;
      ex.constants.rho = conductance(k, pi, mode);
    }
  }
  validate(ex.constants);
  return ex;
}

}  // namespace lqw
