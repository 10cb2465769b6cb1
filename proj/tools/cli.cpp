#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <optional>
#include <ostream>

#include "common.hpp"

namespace jarz::cli {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonequilibrium SMC with Jarzynski weights"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "TOML configuration file");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "random seed (overrides the config's seed)");
  app.add_option("--threads", threads, "worker threads (0: OpenMP default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--set", overrides, "config override key=value (repeatable)");

  auto* sample = app.add_subcommand("sample", "run a parameter protocol and reweighted estimators");
  auto* train = app.add_subcommand("train", "train an energy model on a dataset");
  auto* order = app.add_subcommand("order-study", "per-step weight increments vs step size");
  auto* check = app.add_subcommand("oracle-check", "exactness checks against enumeration");
  std::string baseline;
  train->add_option("--baseline", baseline, "also run a baseline: cd1, cdk or pcd");
  bool flip = false;
  check->add_flag("--debug-flip-increment-sign", flip,
                  "negative control: subtract the weight increments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    RunContext ctx;
    ctx.config = config_path.empty() ? Config{} : Config::from_file(config_path);
    for (const auto& o : overrides) ctx.config.apply_override(o);
    ctx.seed = seed ? *seed : ctx.config.get_uint("seed", 0);
    ctx.out_dir = out_dir;
    ctx.out = &out;
    ctx.err = &err;
    ctx.baseline = baseline;
    ctx.flip_increment_sign = flip;
    if (threads > 0) omp_set_num_threads(threads);

    if (*sample) return run_sample(ctx);
    if (*train) return run_train(ctx);
    if (*order) return run_order_study(ctx);
    return run_oracle_check(ctx);
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << "\n";
    return kNumericalAbort;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace jarz::cli
