#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lqw/anneal.hpp"
#include "lqw/chains.hpp"
#include "lqw/partition.hpp"
#include "lqw/potential.hpp"
#include "lqw/qsa.hpp"
#include "lqw/verify.hpp"

namespace lqw {

using Json = nlohmann::ordered_json;

// Deterministic serialization: keys in insertion order, floats as %.17g,
// non-finite floats as null.
std::string dump_json(const Json& j, int indent = 2);
void write_text(const std::string& path, const std::string& text);

std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
std::string dump_csv(const CsvTable& t);
void write_csv(const std::string& path, const CsvTable& t);

Json to_json(const AssumptionConstants& c);
Json to_json(const CertificationReport& r);
Json to_json(const SuiteReport& r);
Json to_json(const ScheduleReport& r);
Json to_json(const QueryLedger& l);
Json to_json(const RunResult& r);
Json to_json(const PartitionEstimate& e);
Json to_json(const Vec& v);

// Columns: stage, sigma_sq, log_mass, overlap_next, overlap_target
CsvTable schedule_table(const AnnealSchedule& s);
// Columns: from, eta, delta, p0, depth, predicted_failure, infidelity, reflection_rank
CsvTable stage_table(const RunResult& r);
// Columns: index, phase
CsvTable phase_table(const Eigen::VectorXd& phases);
// Columns: node, x_1..x_d, probability
CsvTable distribution_table(const GridDomain& domain, const Eigen::VectorXd& p);
// Columns: step, x_1..x_d, accepted
CsvTable trajectory_table(const Trajectory& t);

}  // namespace lqw
