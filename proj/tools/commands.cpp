#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "config_file.hpp"
#include "spur/analysis.hpp"
#include "spur/checkpoint.hpp"
#include "spur/error.hpp"
#include "spur/format.hpp"
#include "spur/sweep.hpp"
#include "spur/trainer.hpp"

namespace spur::cli {
namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front())))
      item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back())))
      item.remove_suffix(1);
    if (item.empty()) throw ConfigError("empty item in list '" + std::string(text) + "'");
    out.push_back(item);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << body;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir.string() + "'");
  }
}

void persist_run(const fs::path& dir, const ExperimentConfig& config, const RunRecord& record) {
  ensure_dir(dir);
  std::ostringstream jsonl;
  write_jsonl(record, jsonl);
  write_text(dir / "run.jsonl", jsonl.str());
  write_checkpoint(record.params, dir / "model.ckpt");
  write_masks(record.masks, record.params, dir / "masks.ckpt");
  write_text(dir / "config.echo", echo_config(config));
}

// Maps library errors onto exit codes with a one-line diagnostic.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrainingAborted& e) {
    err << "error: run aborted: " << e.what() << '\n';
    return kExitAborted;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

}  // namespace

std::vector<double> parse_density_list(std::string_view text) {
  std::vector<double> out;
  for (std::string_view item : split_list(text)) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size() || !(v > 0.0 && v <= 1.0)) {
      throw ConfigError("density '" + std::string(item) + "' is not a number in (0, 1]");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (std::string_view item : split_list(text)) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size()) {
      throw ConfigError("seed '" + std::string(item) + "' is not an unsigned integer");
    }
    out.push_back(v);
  }
  return out;
}

std::size_t sweep_threads_from_env() {
  const char* raw = std::getenv("SPUR_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  std::string_view text(raw);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v == 0) {
    throw ConfigError("SPUR_THREADS must be a positive integer (got '" + std::string(text) + "')");
  }
  return v;
}

int cmd_train(const fs::path& config_path, const fs::path& out_dir, Streams io) {
  return guarded(io.err, [&] {
    const ExperimentConfig config = load_config(config_path);
    const Dataset data = make_dataset(config);
    ensure_dir(out_dir);
    const RunRecord record = train(config, data);
    persist_run(out_dir, config, record);
    const EvalRow& last = record.rows.back();
    io.out << "step " << last.step << " density " << format_fixed(last.density, 4)
           << " test_accuracy " << format_fixed(last.test_accuracy, 4) << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const fs::path& config_path, std::string_view densities, std::string_view methods,
              std::string_view seeds, const fs::path& out_dir, Streams io) {
  return guarded(io.err, [&] {
    const ExperimentConfig base = load_config(config_path);
    const std::vector<double> density_list = parse_density_list(densities);
    std::vector<MethodSpec> method_list;
    for (std::string_view m : split_list(methods)) method_list.push_back(parse_method_spec(m));
    const std::vector<std::uint64_t> seed_list = parse_seed_list(seeds);
    const std::size_t threads = sweep_threads_from_env();
    for (double d : density_list) {
      if (d > base.schedule.v_initial) {
        throw ConfigError("density " + format_double(d) + " exceeds schedule.v_initial");
      }
    }
    ensure_dir(out_dir);

    std::mutex err_mutex;
    const SweepResult result = sweep_compare(
        base, density_list, method_list, seed_list, threads, [&](const RunOutcome& run) {
          const fs::path dir = out_dir / run_directory_name(run.density, run.method, run.seed);
          if (run.failed) {
            ensure_dir(dir);
            write_text(dir / "error.txt", run.error + "\n");
            write_text(dir / "config.echo", echo_config(run.config));
            std::lock_guard lock(err_mutex);
            io.err << "run " << dir.filename().string() << " failed: " << run.error << '\n';
            return;
          }
          persist_run(dir, run.config, run.record);
        });

    std::ostringstream table;
    write_table_csv(result, table);
    write_text(out_dir / "table.csv", table.str());
    io.out << table.str();
    return result.any_failed() ? kExitPartialSweep : kExitOk;
  });
}

int cmd_analyze(const fs::path& run_dir, Streams io) {
  return guarded(io.err, [&] {
    const fs::path model_path = run_dir / "model.ckpt";
    const fs::path masks_path = run_dir / "masks.ckpt";
    for (const fs::path& p : {model_path, masks_path}) {
      if (!fs::exists(p)) throw ConfigError("missing checkpoint '" + p.string() + "'");
    }
    const ParamTable params = read_checkpoint(model_path);
    const PruningState masks = read_masks(masks_path);

    std::ostringstream csv;
    csv << "name,role,rows,cols,survivors,avg,std,cv,row_score,col_score,grid\n";
    std::vector<SurvivorStats> stats;
    std::vector<GridScore> grids;
    for (const auto& [name, mask] : masks.masks) {
      const Param& p = params.at(name);
      csv << name << ',' << to_string(p.role) << ',' << mask.rows() << ',' << mask.cols() << ','
          << mask.popcount() << ',';
      if (mask.popcount() == 0) {
        csv << "NA,NA,NA,";
      } else {
        const SurvivorStats s = survivor_stats(p.value, mask);
        stats.push_back(s);
        csv << format_double(s.avg) << ',' << format_double(s.std) << ',' << format_double(s.cv)
            << ',';
      }
      if (mask.popcount() == 0 || mask.rows() < 2 || mask.cols() < 2) {
        csv << "NA,NA,NA\n";
      } else {
        const GridScore g = grid_concentration(mask);
        grids.push_back(g);
        csv << format_double(g.row_score) << ',' << format_double(g.col_score) << ','
            << format_double(g.grid) << '\n';
      }
    }
    csv << "aggregate,all,NA,NA,NA,";
    if (stats.empty()) {
      csv << "NA,NA,NA,";
    } else {
      const SurvivorStats agg = aggregate_stats(stats);
      csv << format_double(agg.avg) << ',' << format_double(agg.std) << ','
          << format_double(agg.cv) << ',';
    }
    if (grids.empty()) {
      csv << "NA,NA,NA\n";
    } else {
      GridScore mean;
      for (const GridScore& g : grids) {
        mean.row_score += g.row_score;
        mean.col_score += g.col_score;
        mean.grid += g.grid;
      }
      const auto n = static_cast<double>(grids.size());
      csv << format_double(mean.row_score / n) << ',' << format_double(mean.col_score / n)
          << ',' << format_double(mean.grid / n) << '\n';
    }
    write_text(run_dir / "stats.csv", csv.str());
    io.out << csv.str();
    return kExitOk;
  });
}

int cmd_viz(const fs::path& run_dir, std::size_t layer, std::string_view role_text, Streams io) {
  return guarded(io.err, [&] {
    const auto role = parse_role(role_text);
    if (!role || !is_prunable(*role)) {
      throw ConfigError("unknown role '" + std::string(role_text) +
                        "' (expected q, k, v, o, ff1, ff2 or dense)");
    }
    const fs::path model_path = run_dir / "model.ckpt";
    const fs::path masks_path = run_dir / "masks.ckpt";
    for (const fs::path& p : {model_path, masks_path}) {
      if (!fs::exists(p)) throw ConfigError("missing checkpoint '" + p.string() + "'");
    }
    const ParamTable params = read_checkpoint(model_path);
    const PruningState masks = read_masks(masks_path);
    const std::string name = layer_param_name(layer, to_string(*role));
    auto it = masks.masks.find(name);
    const Param* p = params.find(name);
    if (it == masks.masks.end() || p == nullptr) {
      throw ConfigError("run has no masked matrix '" + name + "'");
    }
    const std::string stem =
        "layer" + std::to_string(layer) + "_" + upper(to_string(*role));
    const fs::path pbm = run_dir / (stem + ".pbm");
    const fs::path pgm = run_dir / (stem + ".pgm");
    export_mask_pbm(it->second, pbm);
    export_magnitude_pgm(hadamard(p->value, it->second.to_matrix()), pgm);
    io.out << pbm.string() << '\n' << pgm.string() << '\n';
    return kExitOk;
  });
}

}  // namespace spur::cli
