#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "mpsqnn/experiment.hpp"

namespace {

// Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 validation failure.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericalError = 2;
constexpr int kValidationError = 3;

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  long seed = -1;
  int threads = 0;
  bool long_running = false;
};

void add_common(CLI::App* sub, CliOptions& opt) {
  sub->add_option("--config", opt.config_path, "experiment config file")->required();
  sub->add_option("--out", opt.out_dir, "output directory");
  sub->add_option("--seed", opt.seed, "override rng_seed from the config");
  sub->add_option("--threads", opt.threads, "worker threads (default: config value)");
  sub->add_flag("--long-running", opt.long_running, "allow paper-scale runs");
}

int dispatch(mpsqnn::RunMode mode, const CliOptions& opt) {
  mpsqnn::ExperimentConfig cfg = mpsqnn::load_config(opt.config_path);
  if (cfg.mode != mode) cfg.mode = mode;  // the subcommand decides
  if (opt.seed >= 0) cfg.rng_seed = static_cast<uint64_t>(opt.seed);
  if (opt.threads > 0) cfg.threads = opt.threads;
  cfg.long_running = opt.long_running;

  switch (mode) {
    case mpsqnn::RunMode::sweep:
      mpsqnn::run_sweep(cfg, opt.out_dir);
      return kOk;
    case mpsqnn::RunMode::train:
      mpsqnn::run_training(cfg, opt.out_dir);
      return kOk;
    case mpsqnn::RunMode::spectrum:
      mpsqnn::run_spectrum(cfg, opt.out_dir);
      return kOk;
    case mpsqnn::RunMode::validate:
      return mpsqnn::run_validate(cfg, opt.out_dir) ? kOk : kValidationError;
  }
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dissipative quantum neural network simulator and trainer"};
  app.require_subcommand(1);

  CliOptions opt;
  CLI::App* sweep = app.add_subcommand("sweep", "magnetization sweep over input states");
  CLI::App* train = app.add_subcommand("train", "teacher/student training experiment");
  CLI::App* spectrum = app.add_subcommand("spectrum", "dense Liouvillian spectrum");
  CLI::App* validate = app.add_subcommand("validate", "oracle cross-validation suite");
  for (CLI::App* sub : {sweep, train, spectrum, validate}) add_common(sub, opt);

  CLI11_PARSE(app, argc, argv);

  mpsqnn::RunMode mode = mpsqnn::RunMode::sweep;
  if (train->parsed()) mode = mpsqnn::RunMode::train;
  if (spectrum->parsed()) mode = mpsqnn::RunMode::spectrum;
  if (validate->parsed()) mode = mpsqnn::RunMode::validate;

  try {
    return dispatch(mode, opt);
  } catch (const mpsqnn::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const mpsqnn::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const mpsqnn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const mpsqnn::ValidationError& e) {
    std::cerr << "validation failure: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalError;
  }
}
