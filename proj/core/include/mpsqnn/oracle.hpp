#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "mpsqnn/gates.hpp"

namespace mpsqnn {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

/// Physical density matrix on one layer (2^W x 2^W).
struct DenseState {
  Mat rho;
  /// Hermitian to 1e-12, unit trace to 1e-12, min eigenvalue >= -1e-10.
  void validate() const;
};

/// One exact collision step: embed rho x |0..0><0..0| on two layers, apply
/// the full layer gate, trace the previous layer. Width <= 6.
DenseState dense_channel_step(const DenseState& rho, const NetworkConfig& cfg);
/// Same map without density-matrix validation (linear extension, used on
/// basis matrices when assembling superoperators).
Mat dense_channel_step_raw(const Mat& rho, const NetworkConfig& cfg);
/// Exact adjoint-channel step on an observable.
Mat dense_adjoint_step(const Mat& e, const NetworkConfig& cfg);

/// Column-stacked superoperator of the Lindblad generator read off the
/// coefficient table: L[.] = -i[sum H_k, .] + sum (J_k . J_k^dag - {J_k^dag J_k, .}/2).
/// Width <= 5.
Mat build_lindbladian(const PauliCoeffTable& t, int width);

/// Dense forward superoperator in the interleaved doubled-space basis used
/// by DoubledMps (for oracle-equivalence checks). Width <= 4.
Mat dense_forward_superop(const NetworkConfig& cfg);

struct GapPolicy {
  double threshold = 0.2;  // spectral separation |Re l_m| / |Re l_{m+1}| < threshold
};

struct SpectralReport {
  Vec eigenvalues;            // sorted by descending real part
  std::vector<Mat> left;      // L_k with Tr(L_j R_k) = delta_jk
  std::vector<Mat> right;     // R_k
  Mat stationary;             // trace-1 right eigenmatrix of the zero mode
  int separation_index = 1;   // m
  double tau = 0.0;           // -1/Re l_m
  double tau_prime = 0.0;     // -1/Re l_{m+1}
  double gap_ratio = 0.0;     // |Re l_m| / |Re l_{m+1}|
  int zero_multiplicity = 1;  // eigenvalues with |l| < 1e-10
  bool diagonalizable = true; // eigenvector condition heuristic
};

SpectralReport spectral_analysis(const Mat& l_matrix, const GapPolicy& policy = {});

struct SlopeReport {
  std::vector<double> dt;
  std::vector<double> residual;  // max trace-norm residual over the state set
  double slope = 0.0;            // log-log least-squares slope (inf when residuals vanish)
};

/// Residual between the collision channel at step dt and exp(dt L) on a
/// fixed set of random product states. Width <= 4.
SlopeReport first_order_limit_check(const PauliCoeffTable& t, int width,
                                    const std::vector<double>& dt_list,
                                    int n_states = 5, uint64_t seed = 1234);

/// Truncated metastable-manifold expansion rho_ss + sum_{k=2}^m e^{i t Im l_k} c_k R_k
/// with c_k = Tr(L_k rho0). `in_window` reports whether tau' <= t <= tau.
Mat metastable_projection(const SpectralReport& report, const Mat& rho0, double t,
                          bool* in_window = nullptr);

// --- dense helpers shared by tests and the validation runner --------------

/// exp(scale * m) for a general square matrix (Pade scaling-and-squaring).
Mat matrix_exp_general(const Mat& m, cplx scale);

double trace_norm(const Mat& m);
double trace_distance(const Mat& a, const Mat& b);

/// Applies a gate on the given qubit positions (0 = most significant bit)
/// to every column of a 2^n-dimensional operator: rho <- U_embed rho U_embed^dag.
void conjugate_by_gate(Mat& rho, const Tensor& gate, const std::vector<int>& qubits,
                       int n_qubits);
/// Full 2^n x 2^n embedding of a small gate.
Mat embed_gate(const Tensor& gate, const std::vector<int>& qubits, int n_qubits);

/// Bridges between the 2^W x 2^W matrix form, the interleaved doubled-space
/// vector used by DoubledMps, and column-stacked superoperator vectors.
Vec doubled_from_rho(const Mat& rho);
Mat rho_from_doubled(const Vec& v);
Vec vec_col(const Mat& m);
Mat unvec_col(const Vec& v);

/// Random pure product state on `width` qubits (deterministic in the seed).
Mat random_product_state(int width, uint64_t seed);
/// Random coefficient table with entries of the given scale.
PauliCoeffTable random_table(double scale, uint64_t seed);

}  // namespace mpsqnn
