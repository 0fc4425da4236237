#pragma once

#include <vector>

#include "mpsqnn/gates.hpp"
#include "mpsqnn/mps.hpp"

namespace mpsqnn {

struct InputSpec {
  double mz_in = 0.0;  // target magnetization in [-1/2, 1/2]
  double phi = 0.0;    // azimuthal angle
};

struct PropagationTrace {
  std::vector<double> mz_per_layer;             // entries for layers 0..L
  std::vector<double> trace_defect_per_layer;   // pre-renormalization trace error
  std::vector<long> max_bond_per_layer;
};

/// Translation-invariant product state |psi><psi| per site with
/// |psi> = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>, theta = arccos(2 mz).
DoubledMps product_input_mps(const InputSpec& spec, int width);

/// Vectorized error operator E_z = (1/2W) sum_k sigma^z_k - m_out * 1,
/// built from the exact staircase tensors.
DoubledMps error_operator_mps(double m_out, int width);

struct ForwardOptions {
  bool retain_states = false;  // keep the state after every layer (training)
  bool renormalize = true;     // rescale to unit trace pairing after each compress
};

struct ForwardResult {
  DoubledMps state;
  PropagationTrace trace;
  std::vector<DoubledMps> layer_states;  // layers 0..L when retained
};

ForwardResult propagate_forward(const DoubledMps& s, const NetworkConfig& cfg,
                                int layers, const ForwardOptions& opt = {});
/// Same, reusing a prebuilt forward MPO.
ForwardResult propagate_forward(const DoubledMps& s, const NetworkConfig& cfg,
                                const LayerMpo& forward, int layers,
                                const ForwardOptions& opt = {});

/// Adjoint-channel images {B e, B^2 e, ..., B^layers e}; operators are
/// compressed but never renormalized.
std::vector<DoubledMps> propagate_backward(const DoubledMps& e, const NetworkConfig& cfg,
                                           int layers);
std::vector<DoubledMps> propagate_backward(const DoubledMps& e, const NetworkConfig& cfg,
                                           const LayerMpo& backward, int layers);

/// (1/2W) sum_k Tr(sigma^z_k rho) / Tr(rho). States with a trace defect are
/// normalized first.
double measure_mz(const DoubledMps& s);

struct HistogramReport {
  std::vector<double> centers;
  std::vector<long> counts;
  std::vector<char> labels;  // 'A', 'B', or 'U' (unclassified)
  bool bimodal = false;
  int peak_low = -1;   // bin index of the left selected peak
  int peak_high = -1;  // bin index of the right selected peak
  int trough = -1;
  double score = 0.0;  // 1 - trough/min(peaks) when bimodal
};

/// 40-bin histogram over [lo, hi]; bimodal when two local maxima are
/// separated by a trough below 60% of the smaller peak.
HistogramReport classify_magnetizations(const std::vector<double>& mz, int nbins = 40,
                                        double lo = -0.5, double hi = 0.5);

}  // namespace mpsqnn
