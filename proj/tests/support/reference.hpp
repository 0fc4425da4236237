#pragma once

// Test-only reference implementations. Everything here is deliberately
// written from scratch (naive loops, own bit conventions) so it stays
// independent of the library paths it is used to check.

#include <cstdint>
#include <utility>
#include <vector>

#include "mpsqnn/channels.hpp"
#include "mpsqnn/gates.hpp"
#include "mpsqnn/mps.hpp"
#include "mpsqnn/oracle.hpp"
#include "mpsqnn/tensor.hpp"

namespace testref {

using mpsqnn::cplx;
using mpsqnn::DoubledMps;
using mpsqnn::Mat;
using mpsqnn::NetworkConfig;
using mpsqnn::Tensor;
using mpsqnn::Vec;

// Naive nested-loop contraction oracle.
Tensor naive_contract(const Tensor& a, const Tensor& b,
                      const std::vector<std::pair<long, long>>& axes);

Tensor random_tensor(const std::vector<long>& shape, uint64_t seed);
DoubledMps random_mps(int width, long chi, uint64_t seed);

// Dense two-layer gate SWAP_1 (G_2 ... G_W) R_1 on 2W qubits, column
// interleaved ((k,prev) at bit 2(k-1), (k,next) at bit 2(k-1)+1).
Mat dense_layer_gate(const NetworkConfig& cfg);
// Same with one local gate replaced (k_tilde = 1 swaps R_1).
Mat dense_modified_layer_gate(const NetworkConfig& cfg, int k_tilde, const Tensor& gate);

// rho_next = Tr_prev(K (rho x |0..0><0..0|) G^dag) for arbitrary two-layer
// gates K, G: the dense counterpart of the doubled-space MPO construction.
Mat mixed_channel_apply(const Mat& ket_gate, const Mat& bra_gate, const Mat& rho, int width);
// Superoperator of the above in the interleaved doubled basis (2l+r fused,
// site 1 most significant).
Mat mixed_channel_superop(const Mat& ket_gate, const Mat& bra_gate, int width);

// Adjoint channel on an observable: Tr_next((1 x |0><0|) G^dag (1 x e) G).
Mat dense_adjoint_apply(const Mat& gate, const Mat& e, int width);

Vec doubled_vector(const Mat& rho);  // interleaved fused indices
Mat from_doubled_vector(const Vec& v);

Mat dense_error_operator(double m_out, int width);
double dense_mz(const Mat& rho);

// Choi matrix of the layer channel built from the reference gate.
Mat choi_matrix(const NetworkConfig& cfg);

}  // namespace testref
