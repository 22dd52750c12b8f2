#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqw/anneal.hpp"
#include "lqw/domain.hpp"
#include "lqw/partition.hpp"
#include "lqw/potential.hpp"
#include "lqw/qsa.hpp"

namespace lqw {

// A constant given explicitly, taken from the catalog, or measured on the grid.
struct ConstantSetting {
  enum class Source { Catalog, Value, Measure } source = Source::Catalog;
  double value = 0;
};

struct ExperimentConfig {
  std::string source;  // file name for diagnostics

  std::string potential = "double_well";
  std::vector<double> tilts;
  std::vector<std::vector<double>> centers;

  ConstantSetting L, m, b, G, c_lsi, rho;
  double beta = 1.0;

  int d = 1;
  std::optional<double> R;  // empty: "auto"
  int n = 33;

  double eta = 0.05;
  bool lazy = true;

  double schedule_epsilon = 0.05;
  double alpha_scale = 0.2;

  Backend backend = Backend::MALA;
  int batch = 1;
  double c_proj = 10.0;
  double c0 = 1.0;

  std::uint64_t seed = 0;
  std::uint64_t shots = 100000;
  double run_epsilon = 0.05;

  PartitionMode partition_mode = PartitionMode::Exact;
  double c_mean = 4.0;
  double relvar_cap = 10.0;

  std::string report_path;  // empty: stdout
  std::string csv_dir;      // empty: no CSV output
};

// Both throw ConfigError with "file:line: field: message" diagnostics.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Applies LQW_SEED when set.
void apply_seed_override(ExperimentConfig& cfg);

struct Experiment {
  PotentialSpec spec;
  AssumptionConstants constants;
  GridDomain domain;
  double R = 0;
};

// Builds the potential, resolves R and the constants ("measure" uses the
// MALA kernel at the configured step on the working grid).
Experiment build_experiment(const ExperimentConfig& cfg);

}  // namespace lqw
