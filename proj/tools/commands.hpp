#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spur::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAborted = 3;
inline constexpr int kExitPartialSweep = 4;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

// Writes run.jsonl, model.ckpt, masks.ckpt and config.echo into `out_dir`.
int cmd_train(const std::filesystem::path& config, const std::filesystem::path& out_dir,
              Streams io);

// Comma-separated lists. Thread count comes from SPUR_THREADS (default 1).
int cmd_sweep(const std::filesystem::path& config, std::string_view densities,
              std::string_view methods, std::string_view seeds,
              const std::filesystem::path& out_dir, Streams io);

// stats.csv with one row per masked matrix plus an aggregate row.
int cmd_analyze(const std::filesystem::path& run_dir, Streams io);

// layer{N}_{ROLE}.pbm and .pgm for one masked matrix.
int cmd_viz(const std::filesystem::path& run_dir, std::size_t layer, std::string_view role,
            Streams io);

// Helpers exposed for tests.
std::vector<double> parse_density_list(std::string_view text);
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
std::size_t sweep_threads_from_env();

}  // namespace spur::cli
