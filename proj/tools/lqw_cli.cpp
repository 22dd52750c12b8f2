#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lqw/anneal.hpp"
#include "lqw/chains.hpp"
#include "lqw/config.hpp"
#include "lqw/errors.hpp"
#include "lqw/partition.hpp"
#include "lqw/qsa.hpp"
#include "lqw/report.hpp"
#include "lqw/rng.hpp"
#include "lqw/verify.hpp"
#include "lqw/walk.hpp"

using namespace lqw;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string csv_dir;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  apply_seed_override(cfg);
  if (!c.out.empty()) cfg.report_path = c.out;
  if (!c.csv_dir.empty()) cfg.csv_dir = c.csv_dir;
  return cfg;
}

void emit(const ExperimentConfig& cfg, const Json& j) {
  const std::string text = dump_json(j);
  if (cfg.report_path.empty())
    std::cout << text;
  else
    write_text(cfg.report_path, text);
}

void csv(const ExperimentConfig& cfg, const std::string& name, const CsvTable& t) {
  if (!cfg.csv_dir.empty()) write_csv(cfg.csv_dir + "/" + name, t);
}

Json header(const char* command, const ExperimentConfig& cfg, const Experiment& ex) {
  Json j;
  j["command"] = command;
  j["config"] = cfg.source;
  j["potential"] = ex.spec.name;
  j["d"] = ex.domain.d;
  j["beta"] = ex.spec.beta;
  j["R"] = ex.R;
  j["nodes"] = ex.domain.size();
  j["constants"] = to_json(ex.constants);
  return j;
}

MarkovKernel kernel_for(const std::string& kind, const ExperimentConfig& cfg, const Experiment& ex) {
  if (kind == "ula") return ula_kernel(ex.spec, ex.constants, ex.domain, cfg.eta, cfg.lazy);
  if (kind == "mala") return mala_kernel(ex.spec, ex.constants, ex.domain, cfg.eta);
  if (kind == "sula") {
    MiniBatch mb;
    for (int i = 0; i < cfg.batch; ++i) mb.indices.push_back(i);
    return sula_kernel(ex.spec, ex.constants, ex.domain, cfg.eta, mb, cfg.lazy, 0);
  }
  throw InvalidArgument("unknown kernel '" + kind + "' (ula, mala, sula)");
}

int cmd_certify(const Common& c, int probes) {
  const ExperimentConfig cfg = load(c);
  const Experiment ex = build_experiment(cfg);
  const CertificationReport r = audit_constants(ex.spec, ex.constants, ex.domain, probes > 0 ? probes : ex.domain.size());
  Json j = header("certify", cfg, ex);
  j["certification"] = to_json(r);
  emit(cfg, j);
  if (!r.pass()) {
    std::cerr << "assumption check failed; see the certification report\n";
    return 1;
  }
  return 0;
}

int cmd_chains(const Common& c, std::string kind, long steps) {
  const ExperimentConfig cfg = load(c);
  const Experiment ex = build_experiment(cfg);
  if (kind.empty()) kind = to_string(cfg.backend);
  const MarkovKernel k = kernel_for(kind, cfg, ex);
  const StationaryResult st = stationary_full(k);
  const DiscreteDistribution gibbs_pi = gibbs(ex.spec, ex.domain);
  Json j = header("chains", cfg, ex);
  j["kernel"] = kind;
  j["eta"] = cfg.eta;
  j["admissible_eta"] = admissible_step(ex.constants, ex.domain.d, ex.R, ex.spec.beta);
  j["lazy"] = k.lazy;
  j["row_sum_error"] = row_sum_error(k);
  j["stationary_iterations"] = st.iterations;
  j["stationary_tv_to_gibbs"] = tv_distance(st.pi.w, gibbs_pi.w);
  j["detailed_balance_residual"] = detailed_balance_residual(k, st.pi);
  const bool exact = ex.domain.size() <= 14;
  j["conductance_mode"] = exact ? "exact" : "sweep";
  j["conductance"] = conductance(k, st.pi, exact ? ConductanceMode::Exact : ConductanceMode::Sweep);
  if (kind == "mala") j["spectral_gap"] = spectral_gap(k, st.pi);
  csv(cfg, "stationary.csv", distribution_table(ex.domain, st.pi.w));
  if (steps > 0) {
    const Sampler s = kind == "mala" ? Sampler::MALA : kind == "ula" ? Sampler::ULA : Sampler::SGLD;
    const Trajectory tr = simulate(s, ex.spec, Vec::Zero(ex.domain.d), cfg.eta, steps, cfg.seed,
                                   kind == "sula" ? cfg.batch : 0, 10 * ex.R);
    j["trajectory_steps"] = steps;
    j["acceptance_rate"] = tr.acceptance_rate();
    csv(cfg, "trajectory.csv", trajectory_table(tr));
  }
  emit(cfg, j);
  return 0;
}

int cmd_walk(const Common& c, std::string mode) {
  const ExperimentConfig cfg = load(c);
  const Experiment ex = build_experiment(cfg);
  const MarkovKernel k = mala_kernel(ex.spec, ex.constants, ex.domain, cfg.eta);
  if (mode.empty()) mode = ex.domain.size() <= kMaxFullNodes ? "full" : "discriminant";
  if (mode != "full" && mode != "discriminant") throw InvalidArgument("walk mode must be full or discriminant");
  const WalkOperator w = build_walk(k, mode == "full" ? WalkMode::Full : WalkMode::Discriminant);
  Json j = header("walk-spectrum", cfg, ex);
  j["mode"] = mode;
  j["eta"] = cfg.eta;
  j["dimension"] = mode == "full" ? w.dim() : w.n;
  j["second_singular_value"] = w.singular_values.size() > 1 ? w.singular_values[1] : 0.0;
  j["phase_gap"] = phase_gap(w);
  if (mode == "full") {
    j["complement_plus"] = w.complement_plus;
    j["complement_minus"] = w.complement_minus;
  }
  csv(cfg, "phases.csv", phase_table(mode == "full" ? w.phases() : w.disc_phases));
  emit(cfg, j);
  return 0;
}

int cmd_anneal(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const Experiment ex = build_experiment(cfg);
  const AnnealSchedule s = build_schedule(ex.spec, ex.constants, ex.domain, cfg.schedule_epsilon, cfg.alpha_scale);
  Json j = header("anneal", cfg, ex);
  j["epsilon"] = s.epsilon;
  j["alpha"] = s.alpha;
  j["sigma1_sq"] = s.sigma_sq.front();
  j["sigmaM_sq"] = s.sigma_sq.back();
  j["schedule"] = to_json(validate_schedule(s));
  csv(cfg, "schedule.csv", schedule_table(s));
  emit(cfg, j);
  return 0;
}

int cmd_sample(const Common& c, std::string backend, std::uint64_t shots) {
  ExperimentConfig cfg = load(c);
  if (!backend.empty()) cfg.backend = parse_backend(backend);
  if (shots > 0) cfg.shots = shots;
  const Experiment ex = build_experiment(cfg);
  const AnnealSchedule s = build_schedule(ex.spec, ex.constants, ex.domain, cfg.schedule_epsilon, cfg.alpha_scale);
  QsaOptions o;
  o.backend = cfg.backend;
  o.eta = cfg.eta;
  o.epsilon = cfg.run_epsilon;
  o.c_proj = cfg.c_proj;
  o.batch = cfg.batch;
  o.seed = cfg.seed;
  const RunResult r = run_annealing(s, ex.spec, o);
  const Measurement m = measure(r.state, cfg.shots, derive_seed(cfg.seed, stream::kMeasure, 0));
  Eigen::VectorXd emp(ex.domain.size());
  for (int i = 0; i < emp.size(); ++i) emp[i] = static_cast<double>(m.counts[i]) / static_cast<double>(m.shots);
  Json j = header("sample", cfg, ex);
  j["M"] = s.M;
  j["run"] = to_json(r);
  j["shots"] = m.shots;
  j["empirical_tv_to_state"] = m.empirical_tv;
  j["empirical_tv_to_gibbs"] = tv_distance(emp, s.stage_dists[s.M].w);
  const double ug = ula_step_gate(cfg.run_epsilon, ex.constants.rho, cfg.c0, ex.domain.d, ex.constants.L, ex.spec.beta);
  const SulaGate sg = sula_step_gate(cfg.run_epsilon, ex.constants.rho, ex.domain.d, ex.constants.L, ex.R,
                                     ex.constants.G, ex.spec.beta, cfg.batch);
  j["ula_step_gate"] = ug;
  j["sula_step_gate"] = sg.value();
  csv(cfg, "stages.csv", stage_table(r));
  csv(cfg, "samples.csv", distribution_table(ex.domain, emp));
  emit(cfg, j);
  return 0;
}

int cmd_partition(const Common& c, std::string mode) {
  ExperimentConfig cfg = load(c);
  if (!mode.empty()) cfg.partition_mode = parse_partition_mode(mode);
  const Experiment ex = build_experiment(cfg);
  const AnnealSchedule s = build_schedule(ex.spec, ex.constants, ex.domain, cfg.schedule_epsilon, cfg.alpha_scale);
  PartitionOptions po;
  po.mode = cfg.partition_mode;
  po.epsilon = cfg.run_epsilon;
  po.seed = cfg.seed;
  po.c_mean = cfg.c_mean;
  po.relvar_cap = cfg.relvar_cap;
  Json j = header("partition", cfg, ex);
  j["M"] = s.M;
  PartitionEstimate e;
  if (po.mode == PartitionMode::Sampled) {
    QsaOptions o;
    o.backend = cfg.backend;
    o.eta = cfg.eta;
    o.epsilon = cfg.run_epsilon;
    o.c_proj = cfg.c_proj;
    o.batch = cfg.batch;
    o.seed = cfg.seed;
    o.keep_stage_states = true;
    const RunResult r = run_annealing(s, ex.spec, o);
    j["run"] = to_json(r);
    e = estimate_partition(s, po, &r.stage_states);
  } else {
    e = estimate_partition(s, po);
  }
  j["estimate"] = to_json(e);
  const Z1Bracket b = z1_bracket(s);
  j["z1_bracket"] = Json{{"z0", b.z0}, {"z1", b.z1}, {"lower", b.lower}, {"ok", b.ok}};
  emit(cfg, j);
  return 0;
}

int cmd_verify(const std::string& suite, int instances, std::uint64_t seed, const std::string& out) {
  VerifyOptions o;
  o.instances = instances;
  o.seed = seed;
  ExperimentConfig cfg;
  apply_seed_override(cfg);
  if (std::getenv("LQW_SEED")) o.seed = cfg.seed;
  cfg.report_path = out;
  const SuiteReport r = verify_suite(suite, o);
  emit(cfg, to_json(r));
  if (!r.pass()) {
    std::cerr << suite << ": " << r.violations() << " violation(s)\n";
    return 1;
  }
  return 0;
}

int cmd_bench(const Common& c) {
  using clock = std::chrono::steady_clock;
  auto secs = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
  const ExperimentConfig cfg = load(c);
  const Experiment ex = build_experiment(cfg);
  Json j = header("bench", cfg, ex);
  auto t = clock::now();
  const MarkovKernel k = mala_kernel(ex.spec, ex.constants, ex.domain, cfg.eta);
  j["kernel_seconds"] = secs(t);
  t = clock::now();
  const double gap = phase_gap(discriminant(k));
  j["phase_gap"] = gap;
  j["phase_gap_seconds"] = secs(t);
  t = clock::now();
  const AnnealSchedule s = build_schedule(ex.spec, ex.constants, ex.domain, cfg.schedule_epsilon, cfg.alpha_scale);
  j["M"] = s.M;
  j["schedule_seconds"] = secs(t);
  t = clock::now();
  QsaOptions o;
  o.backend = cfg.backend;
  o.eta = cfg.eta;
  o.epsilon = cfg.run_epsilon;
  o.c_proj = cfg.c_proj;
  o.batch = cfg.batch;
  o.seed = cfg.seed;
  const RunResult r = run_annealing(s, ex.spec, o);
  j["anneal_seconds"] = secs(t);
  j["run"] = to_json(r);
  emit(cfg, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-walk Langevin sampling simulator"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* opt = sub->add_option("--config", common.config, "experiment config (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "report path (default: stdout)");
    sub->add_option("--csv-dir", common.csv_dir, "directory for CSV tables");
    sub->add_option("--seed", common.seed, "seed override");
  };

  int probes = 0;
  auto* certify = app.add_subcommand("certify", "audit the assumption constants on the grid");
  add_common(certify);
  certify->add_option("--probes", probes, "probe count (default: all nodes)");

  std::string kernel;
  long steps = 0;
  auto* chains = app.add_subcommand("chains", "build a kernel and report its mixing diagnostics");
  add_common(chains);
  chains->add_option("--kernel", kernel, "ula, mala or sula (default: config backend)");
  chains->add_option("--simulate", steps, "also run a continuous trajectory of this many steps");

  std::string walk_mode;
  auto* walk = app.add_subcommand("walk-spectrum", "eigenphases of the MALA walk");
  add_common(walk);
  walk->add_option("--mode", walk_mode, "full or discriminant (default: by grid size)");

  auto* anneal = app.add_subcommand("anneal", "build and validate the annealing schedule");
  add_common(anneal);

  std::string backend;
  std::uint64_t shots = 0;
  auto* sample = app.add_subcommand("sample", "anneal, amplify and measure");
  add_common(sample);
  sample->add_option("--backend", backend, "mala, ula or sula");
  sample->add_option("--shots", shots, "measurement shots");

  std::string pmode;
  auto* partition = app.add_subcommand("partition", "telescoping partition-function estimate");
  add_common(partition);
  partition->add_option("--mode", pmode, "exact or sampled");

  std::string suite;
  int instances = 10;
  std::uint64_t vseed = 0;
  std::string vout;
  auto* verify = app.add_subcommand("verify", "run an inequality verification suite");
  verify->add_option("--suite", suite, "lemma1, lemma2, lemma3, phasegap, lemma7, lemma8, overlaps, relvar, all")
      ->required();
  verify->add_option("--instances", instances, "instances per suite");
  verify->add_option("--seed", vseed, "seed");
  verify->add_option("--out", vout, "report path (default: stdout)");

  auto* bench = app.add_subcommand("bench", "time the pipeline stages");
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*certify) return cmd_certify(common, probes);
    if (*chains) return cmd_chains(common, kernel, steps);
    if (*walk) return cmd_walk(common, walk_mode);
    if (*anneal) return cmd_anneal(common);
    if (*sample) return cmd_sample(common, backend, shots);
    if (*partition) return cmd_partition(common, pmode);
    if (*verify) return cmd_verify(suite, instances, vseed, vout);
    if (*bench) return cmd_bench(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
