#pragma once

#include <array>
#include <utility>
#include <vector>

#include "mpsqnn/channels.hpp"
#include "mpsqnn/gates.hpp"

namespace mpsqnn {

struct TrainingPair {
  InputSpec input;
  double target_mz = 0.0;
};

/// Which (kind, alpha) entries of the shared table the update may touch.
/// A masked jump entry enables both its real (x) and imaginary (y) component.
struct ParamMask {
  std::array<bool, 16> hamiltonian{};
  std::array<bool, 16> jump{};

  static ParamMask full();
  /// The restricted direction of the flagship run: jump shift along sigma^x,
  /// i.e. only the (0,1) jump entry.
  static ParamMask jump_x();
};

struct UpdateDirection {
  std::array<double, 16> d_tilde{};
  std::array<double, 16> x_tilde{};
  std::array<double, 16> y_tilde{};
  ParamMask mask;
};

struct TrainRecord {
  int round = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  PauliCoeffTable snapshot;
};

/// Mean squared magnetization error over (actual, target) pairs.
double loss(const std::vector<std::pair<double, double>>& outputs);

/// C~ = actual - target for one pair.
double magnetization_difference(double actual_mz, double target_mz);

/// Analytic steepest-descent direction assembled from forward states,
/// backpropagated error operators, and gradient-MPO trace evaluations.
UpdateDirection compute_update_direction(const std::vector<TrainingPair>& pairs,
                                         const NetworkConfig& cfg, const ParamMask& mask,
                                         int threads = 1);

/// First-order parameter shift c += eps*(x~ + i y~), d += eps*d~.
PauliCoeffTable apply_update(const PauliCoeffTable& t, const UpdateDirection& dir,
                             double eps);

enum class GateUpdateForm {
  parameter_shift,  // regenerate gates from the shifted table (default path)
  sandwich,         // literal update-gate multiplication, for convergence studies
};

/// Local gate after one update step in either form; used to compare the
/// exact sandwich update against the first-order parameter shift.
Tensor build_updated_local_gate(const PauliCoeffTable& t, const UpdateDirection& dir,
                                double eps, double dt, int k, int width,
                                GateUpdateForm form);

/// Gradient-descent rounds. Record 0 holds the initial losses; record r the
/// losses after the r-th update. A NaN loss aborts the loop, returning the
/// records collected so far.
std::vector<TrainRecord> train(const std::vector<TrainingPair>& train_pairs,
                               const std::vector<TrainingPair>& val_pairs,
                               const NetworkConfig& cfg, int rounds, double eps,
                               const ParamMask& mask, int threads = 1);

/// Teacher targets: propagate each input through the teacher network and
/// read off the output magnetization.
std::vector<TrainingPair> generate_training_data(const NetworkConfig& teacher,
                                                 const std::vector<InputSpec>& inputs,
                                                 int threads = 1);

}  // namespace mpsqnn
