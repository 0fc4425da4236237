#pragma once

#include <array>
#include <optional>

#include "mpsqnn/mps.hpp"
#include "mpsqnn/tensor.hpp"

namespace mpsqnn {

/// Shared two-site coupling tables. Entry (a1, a2) lives at index a1*4 + a2.
/// The jump operator of column k is J_k = sum c^(a1,a2) sigma^{a1}_{k-1} sigma^{a2}_k
/// and the Hamiltonian H_k = sum d^(a1,a2) sigma^{a1}_{k-1} sigma^{a2}_k; at the
/// open boundary k=1 only a1 = 0 entries act.
struct PauliCoeffTable {
  std::array<cplx, 16> c{};
  std::array<double, 16> d{};
};

struct IsingParams {
  double omega = 0.0;  // transverse field (units of kappa)
  double v = 0.0;      // nearest-neighbour interaction
  double kappa = 1.0;  // dissipation rate
};

struct NetworkConfig {
  int width = 2;       // sites per layer, >= 2
  int depth = 1;       // hidden + output layers
  double dt = 0.1;     // collision time step
  long chi_mps = 64;   // state bond cap
  long chi_mpo = 16;   // operator bond cap
  PauliCoeffTable coeffs;

  void validate() const;  // throws ParameterError
};

/// Basis order (|0>, |1>), sigma_z = diag(+1, -1). sigma_minus = |0><1|
/// annihilates the excited state so the all-vacuum state is dark under pure
/// decay; sigma_plus = |1><0| creates an excitation in a fresh layer.
Tensor pauli(int alpha);
Tensor sigma_plus();
Tensor sigma_minus();
Tensor swap_gate();  // 4x4 two-qubit SWAP

/// Dissipative transverse-field Ising parametrization:
/// H_k = (omega/2) sigma^x_k + (v/4) sigma^z_{k-1} sigma^z_k, J_k = sqrt(kappa) sigma^-_k.
PauliCoeffTable ising_coeffs(const IsingParams& p);

/// Hermitian coupling generator V_k = J_k x sigma^+ + h.c. built from a
/// c-table; 8x8 for interior columns, 4x4 at the k = 1 boundary (a1 = 0
/// entries only).
Tensor coupling_generator(const std::array<cplx, 16>& c, int k);
/// Hamiltonian factor H_k x 1 from a d-table, same column conventions.
Tensor hamiltonian_generator(const std::array<double, 16>& d, int k);

/// Local perceptron gate for column k (1-based). For k >= 2 this is the
/// three-qubit unitary SWAP_k exp(-i sqrt(dt) V_k) exp(-i dt H_k x 1) on
/// qubits ((k-1,prev), (k,prev), (k,next)); for k = 1 the two-qubit boundary
/// factor exp(-i sqrt(dt) V_1) exp(-i dt H_1 x 1) without the SWAP (the
/// boundary SWAP enters the layer assembly separately).
Tensor build_local_gate(const PauliCoeffTable& t, double dt, int k, int width);

/// MPO of the forward channel on the doubled space (Eq.-(1) map). Exact
/// staircase construction; compressed only when the exact bond exceeds
/// chi_mpo, with the truncation error recorded on the result.
LayerMpo build_forward_mpo(const NetworkConfig& cfg);

/// MPO of the adjoint (observable-backpropagating) channel.
LayerMpo build_backward_mpo(const NetworkConfig& cfg);

enum class GradientKind {
  hamiltonian,  // N-type insertion S^a in the Hamiltonian factor (d-derivative)
  jump_plus,    // M-type insertion S^{+,a} + S^{-,a} in the coupling factor (x-derivative)
  jump_minus,   // M-type insertion S^{+,a} - S^{-,a} (y-derivative)
};

/// The modified local gate C used inside the gradient MPO at column k_tilde:
/// the exact derivative of the local gate with respect to the selected table
/// entry (Frechet derivative of the corresponding exponential factor). The
/// anticommutator form of the insertion is the small-dt limit of this gate.
Tensor gradient_insertion_gate(const PauliCoeffTable& t, double dt, int k, int width,
                               int alpha1, int alpha2, GradientKind kind);

/// Gradient MPO <1|(G~ x G*)(1 x |0> x 1 x |0>) with the local gate at
/// k_tilde replaced by the insertion gate. Returns nullopt for the
/// vanishing boundary combination (k_tilde = 1, alpha1 != 0).
std::optional<LayerMpo> build_gradient_mpo(const NetworkConfig& cfg, int k_tilde,
                                           int alpha1, int alpha2, GradientKind kind);

}  // namespace mpsqnn
