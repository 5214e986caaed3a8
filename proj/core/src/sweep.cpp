#include "spur/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "spur/error.hpp"
#include "spur/format.hpp"

namespace spur {
namespace {

std::string compact_number(double density) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", density);
  return buf;
}

}  // namespace

MethodSpec parse_method_spec(std::string_view text) {
  MethodSpec spec;
  const auto colon = text.find(':');
  spec.method = parse_method(text.substr(0, colon));
  if (colon != std::string_view::npos) {
    if (spec.method == Method::kImp) {
      throw ConfigError("method 'imp' does not take a lambda ('" + std::string(text) + "')");
    }
    const std::string number(text.substr(colon + 1));
    std::size_t used = 0;
    double lambda = 0.0;
    try {
      lambda = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != number.size() || !(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw ConfigError("bad lambda in method '" + std::string(text) + "'");
    }
    spec.lambda = lambda;
  }
  spec.label = std::string(to_string(spec.method));
  if (spec.lambda) spec.label += ":" + compact_number(*spec.lambda);
  return spec;
}

bool SweepResult::any_failed() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.failed; });
}

ExperimentConfig cell_config(const ExperimentConfig& base, double density,
                             const MethodSpec& method, std::uint64_t seed) {
  ExperimentConfig c = base;
  c.schedule.v_final = density;
  c.method = method.method;
  if (method.lambda) c.lambda_schedule.lambda_final = *method.lambda;
  c.seed = seed;
  c.model.seed = seed;
  return c;
}

std::string run_directory_name(double density, std::string_view method, std::uint64_t seed) {
  std::string name = "d" + compact_number(density) + "_m" + std::string(method) + "_s" +
                     std::to_string(seed);
  std::replace(name.begin(), name.end(), ':', '-');
  return name;
}

SweepResult sweep_compare(const ExperimentConfig& base, const std::vector<double>& densities,
                          const std::vector<MethodSpec>& methods,
                          const std::vector<std::uint64_t>& seeds, std::size_t threads,
                          const RunCallback& on_run) {
  if (densities.empty() || methods.empty() || seeds.empty()) {
    throw ConfigError("sweep needs at least one density, method and seed");
  }
  SweepResult result;
  for (double d : densities)
    for (const MethodSpec& m : methods)
      for (std::uint64_t s : seeds) {
        RunOutcome run;
        run.density = d;
        run.method = m.label;
        run.seed = s;
        run.config = cell_config(base, d, m, s);
        result.runs.push_back(std::move(run));
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) {
      RunOutcome& run = result.runs[i];
      try {
        const Dataset data = make_dataset(run.config);
        run.record = train(run.config, data);
        run.final_accuracy = run.record.rows.back().test_accuracy;
      } catch (const std::exception& e) {
        run.failed = true;
        run.error = e.what();
      }
      if (on_run) on_run(run);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, result.runs.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  // Aggregate per (density, method) cell in input order.
  std::size_t cursor = 0;
  for (double d : densities) {
    std::optional<double> imp_mean;
    const std::size_t first_row = result.rows.size();
    for (const MethodSpec& m : methods) {
      ComparisonRow row;
      row.density = d;
      row.method = m.label;
      const bool is_imp = m.method == Method::kImp;
      row.variant = is_imp ? "none" : std::string(to_string(base.variant));
      row.domain = is_imp ? "none" : std::string(to_string(base.domain));
      row.seed_count = seeds.size();
      std::vector<double> accs;
      for (std::size_t s = 0; s < seeds.size(); ++s, ++cursor) {
        const RunOutcome& run = result.runs[cursor];
        if (run.failed) row.failed = true;
        else accs.push_back(run.final_accuracy);
      }
      if (!row.failed) {
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(accs.size());
        row.mean_acc = mean;
        row.std_acc = std::sqrt(var);
        if (is_imp && !imp_mean) imp_mean = mean;
      }
      result.rows.push_back(row);
    }
    for (std::size_t i = first_row; i < result.rows.size(); ++i) {
      ComparisonRow& row = result.rows[i];
      if (!row.failed && imp_mean) row.gap = row.mean_acc - *imp_mean;
    }
  }
  return result;
}

void write_table_csv(const SweepResult& result, std::ostream& out) {
  out << "density,method,variant,domain,seed_count,mean_acc,std_acc,gap\n";
  for (const ComparisonRow& row : result.rows) {
    out << compact_number(row.density) << ',' << row.method << ',' << row.variant << ','
        << row.domain << ',' << row.seed_count << ',';
    if (row.failed) {
      out << "failed,failed,failed\n";
      continue;
    }
    out << format_fixed(row.mean_acc, 6) << ',' << format_fixed(row.std_acc, 6) << ',';
    out << (row.gap ? format_fixed(*row.gap, 6) : std::string("NA")) << '\n';
  }
}

}  // namespace spur
