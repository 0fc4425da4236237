#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpsqnn/oracle.hpp"
#include "mpsqnn/training.hpp"

namespace mpsqnn {

enum class RunMode { sweep, train, spectrum, validate };

struct SweepSettings {
  int n_inputs = 200;
  double mz_min = -0.5;
  double mz_max = 0.5;
  double phi = 0.0;
  int readout_layer = -1;  // -1 resolves to min(11, depth)
  int bins = 40;
};

struct TrainSettings {
  int rounds = 20;
  double eps = 10.0;
  std::string mask = "jump_x";  // jump_x | full
  int n_train = 20;
  int n_val = 10;
  IsingParams teacher{};
  IsingParams student{};              // student Hamiltonian parametrization
  std::string student_jump = "ypauli";  // ypauli | decay | none
};

struct SpectrumSettings {
  double gap_threshold = 0.2;
};

struct ValidateSettings {
  int n_tables = 5;
  int layers = 10;
};

struct ExperimentConfig {
  RunMode mode = RunMode::sweep;
  NetworkConfig network;  // coeffs resolved from ising/student parameters
  IsingParams ising{};
  bool has_ising = false;
  SweepSettings sweep;
  TrainSettings training;
  SpectrumSettings spectrum;
  ValidateSettings validation;
  uint64_t rng_seed = 12345;
  int threads = 1;
  bool long_running = false;

  /// Canonical key = value dump (fixed ordering, includes the seed).
  std::string canonical_echo() const;
  /// FNV-1a hash of the canonical dump; embedded in every output file.
  uint64_t config_hash() const;
};

/// Flat `section.key = value` grammar with `#` comments. Unknown keys and
/// malformed lines raise ParameterError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::string mode_name(RunMode mode);

void run_sweep(const ExperimentConfig& cfg, const std::string& out_dir);
void run_training(const ExperimentConfig& cfg, const std::string& out_dir);
void run_spectrum(const ExperimentConfig& cfg, const std::string& out_dir);
/// Executes the oracle-equivalence suite; returns false when any check fails.
bool run_validate(const ExperimentConfig& cfg, const std::string& out_dir);

// --- building blocks shared with the acceptance suite ---------------------

std::vector<InputSpec> uniform_inputs(int n, double lo, double hi, double phi);

/// Student initialization: Ising Hamiltonian table with the jump operator
/// replaced ("ypauli" = -i sqrt(kappa) sigma^y, "decay" = sqrt(kappa) sigma^-,
/// "none" = no jump).
PauliCoeffTable student_initial_table(const IsingParams& base, const std::string& jump_kind);

/// Max entrywise deviation between the MPS forward trajectory and the dense
/// channel iteration, over `layers` steps. Width <= 4.
double forward_equivalence_max_error(const NetworkConfig& cfg, const InputSpec& input,
                                     int layers);

struct GradientCheckResult {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int n_checked = 0;
  bool pass = false;
};

/// Central finite differences of the dense-channel loss against the analytic
/// update direction, component by component. Width <= 3.
GradientCheckResult finite_difference_gradient_check(const NetworkConfig& cfg,
                                                     const std::vector<TrainingPair>& pairs,
                                                     const ParamMask& mask, double step,
                                                     double rel_tol, int threads = 1);

/// Dense-channel evaluation of the training loss (the finite-difference
/// oracle path; shares only the local gate matrix with the MPS route).
double dense_loss(const NetworkConfig& cfg, const std::vector<TrainingPair>& pairs);

}  // namespace mpsqnn
