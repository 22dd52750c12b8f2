#include "lqw/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lqw/errors.hpp"

namespace lqw {

std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // keep a float a float when read back
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

void emit(const Json& j, int indent, int level, std::string& out) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (level + 1)), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * level), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        out += Json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        emit(it.value(), indent, level + 1, out);
      }
      out += nl;
      out += close;
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // numeric arrays on one line
      bool flat = true;
      for (const auto& v : j) flat = flat && v.is_primitive();
      out += "[";
      if (!flat) out += nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) {
          out += ",";
          out += flat ? (indent > 0 ? " " : "") : nl;
        }
        first = false;
        if (!flat) out += pad;
        emit(v, indent, level + 1, out);
      }
      if (!flat) {
        out += nl;
        out += close;
      }
      out += "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  emit(j, indent, 0, out);
  out += "\n";
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write " + path);
  f << text;
}

std::string dump_csv(const CsvTable& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ",";
      const double v = r[i];
      if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        out += buf;
      } else {
        out += std::isfinite(v) ? format_double(v) : "nan";
      }
    }
    out += "\n";
  }
  return out;
}

void write_csv(const std::string& path, const CsvTable& t) { write_text(path, dump_csv(t)); }

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const AssumptionConstants& c) {
  return Json{{"L", c.L}, {"m", c.m}, {"b", c.b}, {"G", c.G}, {"c_lsi", c.c_lsi}, {"rho", c.rho}};
}

Json to_json(const CertificationReport& r) {
  auto check = [](double value, bool ok, const Vec& w) {
    return Json{{"value", value}, {"ok", ok}, {"witness", to_json(w)}};
  };
  Json j;
  j["pass"] = r.pass();
  j["probes"] = r.probes;
  j["lipschitz_ratio_max"] = check(r.max_lipschitz_ratio, r.lipschitz_ok, r.lipschitz_witness);
  j["dissipativity_min"] = check(r.min_dissipativity, r.dissipativity_ok, r.dissipativity_witness);
  j["lower_bound_min"] = check(r.min_lower_bound, r.lower_ok, r.lower_witness);
  j["growth_max"] = check(r.max_growth, r.growth_ok, r.growth_witness);
  return j;
}

Json to_json(const SuiteReport& r) {
  Json j;
  j["suite"] = r.name;
  j["instances"] = r.instances;
  j["seed"] = r.seed;
  j["pass"] = r.pass();
  j["violations"] = r.violations();
  j["worst_ratio"] = r.worst_ratio();
  Json rows = Json::array();
  for (const auto& x : r.rows)
    rows.push_back(Json{{"suite", x.suite}, {"instance", x.instance}, {"label", x.label}, {"lhs", x.lhs},
                        {"rhs", x.rhs}, {"margin", x.margin}, {"pass", x.pass}});
  j["rows"] = rows;
  return j;
}

Json to_json(const ScheduleReport& r) {
  Json j;
  j["pass"] = r.pass();
  j["M"] = r.M;
  j["reference_M"] = r.reference;
  j["M_ratio"] = r.m_ratio;
  j["min_consecutive_overlap"] = r.min_consecutive;
  j["argmin"] = r.argmin;
  j["final_overlap"] = r.final_overlap;
  j["consecutive_ok"] = r.consecutive_ok;
  j["final_ok"] = r.final_ok;
  j["m_ok"] = r.m_ok;
  return j;
}

Json to_json(const QueryLedger& l) {
  return Json{{"walk_applications", l.walk_applications},
              {"gradient_component_evals", l.gradient_component_evals},
              {"function_evals", l.function_evals},
              {"reflections", l.reflections}};
}

Json to_json(const RunResult& r) {
  Json j;
  j["backend"] = to_string(r.backend);
  j["eta"] = r.eta;
  j["epsilon"] = r.epsilon;
  j["seed"] = r.seed;
  j["tv"] = r.tv;
  j["stages"] = static_cast<int>(r.stages.size());
  j["ledger"] = to_json(r.ledger);
  double worst = 0;
  int depth = 0;
  for (const auto& s : r.stages) {
    worst = std::max(worst, s.infidelity);
    depth = std::max(depth, s.depth);
  }
  j["max_stage_infidelity"] = worst;
  j["max_depth"] = depth;
  return j;
}

Json to_json(const PartitionEstimate& e) {
  Json j;
  j["mode"] = to_string(e.mode);
  j["epsilon"] = e.epsilon;
  j["z_hat"] = e.z_hat;
  j["log_z_hat"] = e.log_z_hat;
  j["z0"] = e.z0;
  j["z0_grid"] = e.z0_grid;
  j["z0_resolved"] = e.z0_resolved();
  j["grid_reference"] = e.reference;
  j["relative_error"] = e.relative_error;
  j["total_shots"] = e.total_shots;
  Json rungs = Json::array();
  for (std::size_t i = 0; i < e.per_stage_ratios.size(); ++i) {
    Json r{{"rung", i}, {"ratio", e.per_stage_ratios[i]}, {"relvar", e.per_stage_relvar[i]}};
    if (!e.shots.empty()) r["shots"] = e.shots[i];
    rungs.push_back(r);
  }
  j["rungs"] = rungs;
  return j;
}

CsvTable schedule_table(const AnnealSchedule& s) {
  CsvTable t;
  t.header = {"stage", "sigma_sq", "log_mass", "overlap_next", "overlap_target"};
  for (int i = 0; i <= s.M; ++i)
    t.rows.push_back({double(i), s.sigma_sq[i], s.log_masses[i], i < s.M ? overlap(s, i, i + 1) : NAN,
                      overlap(s, i, s.M)});
  return t;
}

CsvTable stage_table(const RunResult& r) {
  CsvTable t;
  t.header = {"from", "eta", "delta", "p0", "depth", "predicted_failure", "infidelity", "reflection_rank"};
  for (const auto& s : r.stages)
    t.rows.push_back({double(s.from), s.eta, s.delta, s.p0, double(s.depth), s.predicted_failure, s.infidelity,
                      double(s.reflection_rank)});
  return t;
}

CsvTable phase_table(const Eigen::VectorXd& phases) {
  CsvTable t;
  t.header = {"index", "phase"};
  for (int i = 0; i < phases.size(); ++i) t.rows.push_back({double(i), phases[i]});
  return t;
}

CsvTable distribution_table(const GridDomain& domain, const Eigen::VectorXd& p) {
  CsvTable t;
  t.header = {"node"};
  for (int k = 0; k < domain.d; ++k) t.header.push_back("x" + std::to_string(k + 1));
  t.header.push_back("probability");
  for (int i = 0; i < domain.size(); ++i) {
    std::vector<double> r{double(i)};
    for (int k = 0; k < domain.d; ++k) r.push_back(domain.nodes[i][k]);
    r.push_back(p[i]);
    t.rows.push_back(r);
  }
  return t;
}

CsvTable trajectory_table(const Trajectory& tr) {
  CsvTable t;
  t.header = {"step"};
  const int d = tr.x.empty() ? 0 : static_cast<int>(tr.x[0].size());
  for (int k = 0; k < d; ++k) t.header.push_back("x" + std::to_string(k + 1));
  t.header.push_back("accepted");
  for (std::size_t i = 0; i < tr.x.size(); ++i) {
    std::vector<double> r{double(i)};
    for (int k = 0; k < d; ++k) r.push_back(tr.x[i][k]);
    r.push_back(i == 0 ? 1.0 : double(tr.accepted[i - 1]));
    t.rows.push_back(r);
  }
  return t;
}

}  // namespace lqw
