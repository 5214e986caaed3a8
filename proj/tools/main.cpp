#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace spur::cli;
  CLI::App app{"spur: magnitude pruning with a row/column deviance regularizer"};
  app.require_subcommand(1);

  std::string config, out, densities, methods, seeds, run;
  std::size_t layer = 0;
  std::string role;

  auto* train = app.add_subcommand("train", "train one model and write run artifacts");
  train->add_option("--config", config, "experiment config (key = value)")->required();
  train->add_option("--out", out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "density x method x seed comparison table");
  sweep->add_option("--config", config, "base experiment config")->required();
  sweep->add_option("--densities", densities, "comma-separated densities, e.g. 0.3,0.1")
      ->required();
  sweep->add_option("--methods", methods, "comma-separated: imp, imp_spur, imp_spur:<lambda>")
      ->required();
  sweep->add_option("--seeds", seeds, "comma-separated seeds")->required();
  sweep->add_option("--out", out, "output directory")->required();

  auto* analyze = app.add_subcommand("analyze", "survivor statistics and grid scores");
  analyze->add_option("--run", run, "run directory")->required();

  auto* viz = app.add_subcommand("viz", "export mask (PBM) and magnitude (PGM) images");
  viz->add_option("--run", run, "run directory")->required();
  viz->add_option("--layer", layer, "encoder layer index")->required();
  viz->add_option("--role", role, "q, k, v, o, ff1, ff2 or dense")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const Streams io{std::cout, std::cerr};
  if (*train) return cmd_train(config, out, io);
  if (*sweep) return cmd_sweep(config, densities, methods, seeds, out, io);
  if (*analyze) return cmd_analyze(run, io);
  return cmd_viz(run, layer, role, io);
}
