#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lqw {

// One checked inequality lhs <= rhs.
struct VerifyRow {
  std::string suite;
  int instance = 0;
  std::string label;
  double lhs = 0;
  double rhs = 0;
  double margin = 0;  // rhs - lhs
  bool pass = false;
};

struct SuiteReport {
  std::string name;
  int instances = 0;
  std::uint64_t seed = 0;
  std::vector<VerifyRow> rows;
  bool pass() const;
  int violations() const;
  // largest lhs / rhs over rows with rhs > 0
  double worst_ratio() const;
};

struct VerifyOptions {
  int instances = 10;
  std::uint64_t seed = 0;
  bool identical_kernels = false;  // lemma1: compare a kernel with itself
};

const std::vector<std::string>& suite_names();

// Throws InvalidArgument for an unknown suite. "all" concatenates every suite.
SuiteReport verify_suite(const std::string& name, const VerifyOptions& opt);

// Max-row Hellinger between lazy ULA and MALA on the double well over a step sweep;
// returns the least-squares log-log slope.
struct SlopeFit {
  std::vector<double> x;
  std::vector<double> y;
  double slope = 0;
};
SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);
SlopeFit hellinger_step_slope(double R, int n, const std::vector<double>& etas);

}  // namespace lqw
