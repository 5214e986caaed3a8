#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spur/trainer.hpp"

namespace spur {

// A method column of the comparison table. `lambda` overrides the base
// config's lambda_final when set ("imp_spur:100").
struct MethodSpec {
  Method method = Method::kImp;
  std::optional<double> lambda;
  std::string label;
};

// Parses "imp", "imp_spur" or "imp_spur:<lambda>". Throws ConfigError.
MethodSpec parse_method_spec(std::string_view text);

struct RunOutcome {
  double density = 0.0;
  std::string method;
  std::uint64_t seed = 0;
  ExperimentConfig config;
  bool failed = false;
  std::string error;
  double final_accuracy = 0.0;
  RunRecord record;
};

struct ComparisonRow {
  double density = 0.0;
  std::string method;
  std::string variant;
  std::string domain;
  std::size_t seed_count = 0;
  bool failed = false;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  // Mean accuracy minus the IMP mean at the same density; absent when the
  // sweep has no successful IMP cell there.
  std::optional<double> gap;
};

struct SweepResult {
  std::vector<ComparisonRow> rows;
  std::vector<RunOutcome> runs;

  bool any_failed() const;
};

// Config for one cell of the cross product.
ExperimentConfig cell_config(const ExperimentConfig& base, double density,
                             const MethodSpec& method, std::uint64_t seed);

// `d{density}_m{method}_s{seed}`.
std::string run_directory_name(double density, std::string_view method, std::uint64_t seed);

using RunCallback = std::function<void(const RunOutcome&)>;

// Runs density × method × seed, `threads` runs at a time. Rows and runs are
// reported in density-major, method, seed order regardless of completion
// order. A run that throws is marked failed and the sweep continues.
// `on_run` may be called concurrently from worker threads.
SweepResult sweep_compare(const ExperimentConfig& base, const std::vector<double>& densities,
                          const std::vector<MethodSpec>& methods,
                          const std::vector<std::uint64_t>& seeds, std::size_t threads = 1,
                          const RunCallback& on_run = {});

// CSV with header density,method,variant,domain,seed_count,mean_acc,std_acc,gap.
void write_table_csv(const SweepResult& result, std::ostream& out);

}  // namespace spur
