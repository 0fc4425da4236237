#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpsqnn/tensor.hpp"

namespace mpsqnn {

/// Matrix-product state over the doubled (vectorized-operator) space with
/// physical dimension 4 per site. The physical index fuses the ket bit l and
/// bra bit r of one lattice site as 2*l + r (00->0, 01->1, 10->2, 11->3).
struct DoubledMps {
  std::vector<Tensor> sites;  // rank-3 (left bond, 4, right bond)
  std::optional<int> ortho_center;

  int width() const { return static_cast<int>(sites.size()); }
  long max_bond() const;
};

/// Matrix-product operator acting on a DoubledMps.
struct LayerMpo {
  std::vector<Tensor> sites;  // rank-4 (left bond, phys out 4, phys in 4, right bond)
  long max_bond = 1;
  double truncation_error = 0.0;  // sqrt of the summed squared discarded singular values

  int width() const { return static_cast<int>(sites.size()); }
};

void validate_mps(const DoubledMps& s);
void validate_mpo(const LayerMpo& op);

/// Brings the state to mixed-canonical form around `center` via QR sweeps.
/// Pure gauge transformation, no truncation.
DoubledMps canonicalize(const DoubledMps& s, int center);

struct CompressResult {
  DoubledMps state;
  double discarded_weight = 0.0;  // sum over cuts of squared discarded singular values
};

/// One left-to-right QR sweep followed by a right-to-left SVD truncation
/// sweep. The reported weight equals the squared 2-norm distance to the
/// input. No renormalization is applied here; callers owning density-matrix
/// states rescale via trace_pairing afterwards.
CompressResult compress(const DoubledMps& s, long chi_max, double rel_tol);

struct ApplyResult {
  DoubledMps state;
  double discarded_weight = 0.0;
};

/// Exact MPO application (bond dimensions multiply).
DoubledMps apply_mpo_exact(const LayerMpo& op, const DoubledMps& s);
/// Exact application followed by compress to chi_max.
ApplyResult apply_mpo(const LayerMpo& op, const DoubledMps& s, long chi_max,
                      double rel_tol = 0.0);

/// <a|b> with entrywise complex conjugation of a.
cplx overlap(const DoubledMps& a, const DoubledMps& b);

/// Bilinear trace pairing: if a, b vectorize operators A, B then
/// flat_overlap(a, b) = Tr(A B). No conjugation.
cplx flat_overlap(const DoubledMps& a, const DoubledMps& b);

/// Trace of the operator represented by s: pairing with the vectorized identity.
cplx trace_pairing(const DoubledMps& s);

/// Tr(Op(rho) sigma) evaluated as one exact MPS-MPO-MPS contraction,
/// without forming the intermediate state.
cplx sandwich_flat(const DoubledMps& sigma, const LayerMpo& op, const DoubledMps& rho);

/// Multiplies the first site tensor by `factor`.
void scale_state(DoubledMps& s, cplx factor);

/// Full contraction into a 4^W vector (interleaved ket/bra bits, site 1 most
/// significant). Debugging and oracle use only; width <= 8.
std::vector<cplx> densify(const DoubledMps& s);
/// Exact MPS factorization of a 4^W vector.
DoubledMps mps_from_dense(const std::vector<cplx>& v, int width);

LayerMpo identity_mpo(int width);
/// Dense (4^W x 4^W, row-major [out][in]) form of an MPO; width <= 4.
std::vector<cplx> mpo_to_dense(const LayerMpo& op);

struct MpoCompressResult {
  LayerMpo op;
  double discarded_weight = 0.0;
};
MpoCompressResult mpo_compress(const LayerMpo& op, long chi_max, double rel_tol);

/// Binary dump (native little-endian doubles, shapes + raw values).
/// Debugging aid, not a stability-guaranteed format.
void save_mps(const std::string& path, const DoubledMps& s);
DoubledMps load_mps(const std::string& path);

}  // namespace mpsqnn
