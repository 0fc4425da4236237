#include "mpsqnn/gates.hpp"

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace mpsqnn {

namespace {

const cplx kI(0.0, 1.0);

// One split factor of a local gate across the column cut: A acts on the
// prev-layer qubit of column k-1, B on the fused (prev, next) pair of column k.
struct SplitFactor {
  Tensor a;  // 2x2
  Tensor b;  // 4x4
};

// Operator Schmidt decomposition of an 8x8 three-qubit gate between qubit 0
// and qubits (1,2). Singular values below the svd_truncate noise floor drop
// out, so translation-invariant gates give minimal staircase bonds.
std::vector<SplitFactor> split_gate(const Tensor& g) {
  // Row index = (o0, i0) of the shared-column qubit; column index =
  // (fused out)*4 + (fused in) of the gate's own column, fused = 2*prev + next.
  Tensor m({4, 64});
  for (long o0 = 0; o0 < 2; ++o0)
    for (long i0 = 0; i0 < 2; ++i0)
      for (long po = 0; po < 4; ++po)
        for (long pi = 0; pi < 4; ++pi) {
          const long o1 = po / 2, o2 = po % 2, i1 = pi / 2, i2 = pi % 2;
          m[(o0 * 2 + i0) * 64 + po * 4 + pi] =
              g[(o0 * 4 + o1 * 2 + o2) * 8 + (i0 * 4 + i1 * 2 + i2)];
        }

  SvdResult svd = svd_truncate(m, 4, 0.0);
  std::vector<SplitFactor> out;
  const long r = static_cast<long>(svd.s.size());
  for (long t = 0; t < r; ++t) {
    SplitFactor f;
    f.a = Tensor({2, 2});
    f.b = Tensor({4, 4});
    for (long o0 = 0; o0 < 2; ++o0)
      for (long i0 = 0; i0 < 2; ++i0)
        f.a[o0 * 2 + i0] = svd.u[(o0 * 2 + i0) * r + t] * svd.s[static_cast<size_t>(t)];
    for (long po = 0; po < 4; ++po)
      for (long pi = 0; pi < 4; ++pi)
        f.b[po * 4 + pi] = svd.v_dagger[t * 64 + po * 4 + pi];
    out.push_back(std::move(f));
  }
  return out;
}

Tensor two_site_from_table(const std::array<cplx, 16>& coeff) {
  Tensor op({4, 4});
  for (int a1 = 0; a1 < 4; ++a1)
    for (int a2 = 0; a2 < 4; ++a2) {
      const cplx w = coeff[static_cast<size_t>(a1 * 4 + a2)];
      if (w == cplx(0.0)) continue;
      Tensor term = kron(pauli(a1), pauli(a2));
      term *= w;
      op = op + term;
    }
  return op;
}

Tensor one_site_from_table(const std::array<cplx, 16>& coeff) {
  Tensor op({2, 2});
  for (int a2 = 0; a2 < 4; ++a2) {
    const cplx w = coeff[static_cast<size_t>(a2)];  // a1 = 0 row
    if (w == cplx(0.0)) continue;
    Tensor term = pauli(a2);
    term *= w;
    op = op + term;
  }
  return op;
}

std::array<cplx, 16> to_cplx(const std::array<double, 16>& d) {
  std::array<cplx, 16> out;
  for (size_t i = 0; i < 16; ++i) out[i] = d[i];
  return out;
}

// Exponential factors exp(-i sqrt(dt) V) and exp(-i dt H x 1); 8x8 for
// interior columns, 4x4 at the boundary.
struct GateFactors {
  Tensor exp_v;
  Tensor exp_h;
};

GateFactors gate_factors(const PauliCoeffTable& t, double dt, int k) {
  GateFactors f;
  f.exp_v = matrix_exp(coupling_generator(t.c, k), -kI * std::sqrt(dt));
  f.exp_h = matrix_exp(hamiltonian_generator(t.d, k), -kI * dt);
  return f;
}

Tensor swap23() { return kron(Tensor::identity(2), swap_gate()); }

// Column cores of the layer gate written as an MPO over columns, physical
// index = fused (prev-layer qubit, next-layer qubit) = 2*prev + next.
// The layer gate is SWAP_1 (G_2 G_3 ... G_W) R_1 applied right to left;
// overriding one position swaps in a gradient-insertion gate.
std::vector<Tensor> ket_staircase(const NetworkConfig& cfg, int override_k,
                                  const Tensor* override_gate) {
  const int w = cfg.width;
  const Tensor interior = build_local_gate(cfg.coeffs, cfg.dt, 2, w);
  const Tensor r1 = (override_k == 1 && override_gate) ? *override_gate
                                                       : build_local_gate(cfg.coeffs, cfg.dt, 1, w);
  const std::vector<SplitFactor> base = split_gate(interior);
  std::vector<SplitFactor> special;
  if (override_k >= 2 && override_gate) special = split_gate(*override_gate);

  auto factors_at = [&](int k) -> const std::vector<SplitFactor>& {
    return (k == override_k && override_k >= 2) ? special : base;
  };

  std::vector<Tensor> cores;
  cores.reserve(static_cast<size_t>(w));

  // Column 1: SWAP_1 (A_2[a] x 1) R_1.
  {
    const auto& f2 = factors_at(2);
    const long r = static_cast<long>(f2.size());
    Tensor core({1, 4, 4, r});
    const Tensor sw = swap_gate();
    for (long a = 0; a < r; ++a) {
      const Tensor col = matmul(matmul(sw, kron(f2[static_cast<size_t>(a)].a,
                                                Tensor::identity(2))),
                                r1);
      for (long o = 0; o < 4; ++o)
        for (long i = 0; i < 4; ++i) core[(o * 4 + i) * r + a] = col[o * 4 + i];
    }
    cores.push_back(std::move(core));
  }

  // Columns 2..W-1: B_k[a] (A_{k+1}[b] x 1).
  for (int k = 2; k <= w - 1; ++k) {
    const auto& fk = factors_at(k);
    const auto& fn = factors_at(k + 1);
    const long rl = static_cast<long>(fk.size());
    const long rr = static_cast<long>(fn.size());
    Tensor core({rl, 4, 4, rr});
    for (long a = 0; a < rl; ++a)
      for (long b = 0; b < rr; ++b) {
        const Tensor col = matmul(fk[static_cast<size_t>(a)].b,
                                  kron(fn[static_cast<size_t>(b)].a, Tensor::identity(2)));
        for (long o = 0; o < 4; ++o)
          for (long i = 0; i < 4; ++i)
            core[((a * 4 + o) * 4 + i) * rr + b] = col[o * 4 + i];
      }
    cores.push_back(std::move(core));
  }

  // Column W: B_W[a].
  {
    const auto& fw = factors_at(w);
    const long rl = static_cast<long>(fw.size());
    Tensor core({rl, 4, 4, 1});
    for (long a = 0; a < rl; ++a)
      for (long o = 0; o < 4; ++o)
        for (long i = 0; i < 4; ++i)
          core[(a * 4 + o) * 4 + i] = fw[static_cast<size_t>(a)].b[o * 4 + i];
    cores.push_back(std::move(core));
  }
  return cores;
}

// Doubled-space forward core: project the fresh-layer in-legs of both copies
// onto |0>, trace the previous-layer out-legs against each other. `ket` may
// carry a gradient insertion; `bra` is always the plain layer gate.
Tensor doubled_forward_core(const Tensor& ket, const Tensor& bra) {
  const long lk = ket.dim(0), rk = ket.dim(3);
  const long lb = bra.dim(0), rb = bra.dim(3);
  Tensor out({lk * lb, 4, 4, rk * rb});
  for (long ak = 0; ak < lk; ++ak)
    for (long ab = 0; ab < lb; ++ab)
      for (long bk = 0; bk < rk; ++bk)
        for (long bb = 0; bb < rb; ++bb)
          for (long uk = 0; uk < 2; ++uk)
            for (long ub = 0; ub < 2; ++ub)
              for (long ik = 0; ik < 2; ++ik)
                for (long ib = 0; ib < 2; ++ib) {
                  cplx acc = 0.0;
                  for (long lo = 0; lo < 2; ++lo) {
                    const cplx kv = ket[((ak * 4 + (2 * lo + uk)) * 4 + (2 * ik + 0)) * rk + bk];
                    const cplx bv = bra[((ab * 4 + (2 * lo + ub)) * 4 + (2 * ib + 0)) * rb + bb];
                    acc += kv * std::conj(bv);
                  }
                  out[(((ak * lb + ab) * 4 + (2 * uk + ub)) * 4 + (2 * ik + ib)) *
                          (rk * rb) +
                      (bk * rb + bb)] = acc;
                }
  return out;
}

// Doubled-space backward core: the adjoint-channel MPO of (2)'. The fresh
// layer is now the out side (projected onto <0|) and the identity pairing
// closes the previous-layer in-legs.
Tensor doubled_backward_core(const Tensor& ket) {
  const long lk = ket.dim(0), rk = ket.dim(3);
  Tensor out({lk * lk, 4, 4, rk * rk});
  for (long ak = 0; ak < lk; ++ak)
    for (long ab = 0; ab < lk; ++ab)
      for (long bk = 0; bk < rk; ++bk)
        for (long bb = 0; bb < rk; ++bb)
          for (long ok = 0; ok < 2; ++ok)
            for (long ob = 0; ob < 2; ++ob)
              for (long uk = 0; uk < 2; ++uk)
                for (long ub = 0; ub < 2; ++ub) {
                  cplx acc = 0.0;
                  for (long eps = 0; eps < 2; ++eps) {
                    const cplx kv = ket[((ak * 4 + (2 * eps + uk)) * 4 + (2 * ok + 0)) * rk + bk];
                    const cplx bv = ket[((ab * 4 + (2 * eps + ub)) * 4 + (2 * ob + 0)) * rk + bb];
                    acc += std::conj(kv) * bv;
                  }
                  out[(((ak * lk + ab) * 4 + (2 * ok + ob)) * 4 + (2 * uk + ub)) *
                          (rk * rk) +
                      (bk * rk + bb)] = acc;
                }
  return out;
}

LayerMpo finalize_mpo(std::vector<Tensor> cores, long chi_mpo) {
  LayerMpo op;
  op.sites = std::move(cores);
  op.max_bond = 1;
  for (const Tensor& t : op.sites) op.max_bond = std::max(op.max_bond, t.dim(3));
  if (op.max_bond > chi_mpo) {
    MpoCompressResult c = mpo_compress(op, chi_mpo, 0.0);
    c.op.truncation_error = std::sqrt(std::max(0.0, c.discarded_weight));
    return std::move(c.op);
  }
  return op;
}

}  // namespace

void NetworkConfig::validate() const {
  if (width < 2) throw ParameterError("network width must be >= 2");
  if (depth < 1) throw ParameterError("network depth must be >= 1");
  if (!(dt > 0.0)) throw ParameterError("time step dt must be positive");
  if (chi_mps < 1 || chi_mpo < 1) throw ParameterError("bond caps must be >= 1");
}

Tensor pauli(int alpha) {
  Tensor m({2, 2});
  switch (alpha) {
    case 0: m[0] = 1.0; m[3] = 1.0; break;
    case 1: m[1] = 1.0; m[2] = 1.0; break;
    case 2: m[1] = -kI; m[2] = kI; break;
    case 3: m[0] = 1.0; m[3] = -1.0; break;
    default: throw ParameterError("pauli index must be in 0..3");
  }
  return m;
}

Tensor sigma_plus() {
  Tensor m({2, 2});
  m[2] = 1.0;  // |1><0|
  return m;
}

Tensor sigma_minus() {
  Tensor m({2, 2});
  m[1] = 1.0;  // |0><1|
  return m;
}

Tensor swap_gate() {
  Tensor m({4, 4});
  m[0 * 4 + 0] = 1.0;
  m[1 * 4 + 2] = 1.0;
  m[2 * 4 + 1] = 1.0;
  m[3 * 4 + 3] = 1.0;
  return m;
}

PauliCoeffTable ising_coeffs(const IsingParams& p) {
  if (!(p.kappa > 0.0)) throw ParameterError("kappa must be positive");
  PauliCoeffTable t;
  t.d[0 * 4 + 1] = p.omega / 2.0;  // (omega/2) sigma^x_k
  t.d[3 * 4 + 3] = p.v / 4.0;      // (v/4) sigma^z_{k-1} sigma^z_k
  const double sk = std::sqrt(p.kappa);
  // sqrt(kappa) sigma^- = sqrt(kappa) (sigma^x + i sigma^y) / 2
  t.c[0 * 4 + 1] = sk / 2.0;
  t.c[0 * 4 + 2] = kI * sk / 2.0;
  return t;
}

Tensor coupling_generator(const std::array<cplx, 16>& c, int k) {
  if (k < 1) throw ParameterError("column index must be >= 1");
  const Tensor j = (k == 1) ? one_site_from_table(c) : two_site_from_table(c);
  return kron(j, sigma_plus()) + kron(dagger(j), sigma_minus());
}

Tensor hamiltonian_generator(const std::array<double, 16>& d, int k) {
  if (k < 1) throw ParameterError("column index must be >= 1");
  const std::array<cplx, 16> dc = to_cplx(d);
  const Tensor h = (k == 1) ? one_site_from_table(dc) : two_site_from_table(dc);
  return kron(h, Tensor::identity(2));
}

Tensor build_local_gate(const PauliCoeffTable& t, double dt, int k, int width) {
  if (width < 2) throw ParameterError("network width must be >= 2");
  if (k < 1 || k > width) throw ParameterError("column index out of range");
  if (!(dt > 0.0)) throw ParameterError("time step dt must be positive");
  const GateFactors f = gate_factors(t, dt, k);
  if (k == 1) return matmul(f.exp_v, f.exp_h);
  return matmul(swap23(), matmul(f.exp_v, f.exp_h));
}

LayerMpo build_forward_mpo(const NetworkConfig& cfg) {
  cfg.validate();
  const std::vector<Tensor> ket = ket_staircase(cfg, 0, nullptr);
  std::vector<Tensor> cores;
  cores.reserve(ket.size());
  for (const Tensor& c : ket) cores.push_back(doubled_forward_core(c, c));
  return finalize_mpo(std::move(cores), cfg.chi_mpo);
}

LayerMpo build_backward_mpo(const NetworkConfig& cfg) {
  cfg.validate();
  const std::vector<Tensor> ket = ket_staircase(cfg, 0, nullptr);
  std::vector<Tensor> cores;
  cores.reserve(ket.size());
  for (const Tensor& c : ket) cores.push_back(doubled_backward_core(c));
  return finalize_mpo(std::move(cores), cfg.chi_mpo);
}

Tensor gradient_insertion_gate(const PauliCoeffTable& t, double dt, int k, int width,
                               int alpha1, int alpha2, GradientKind kind) {
  if (width < 2) throw ParameterError("network width must be >= 2");
  if (k < 1 || k > width) throw ParameterError("column index out of range");
  if (alpha1 < 0 || alpha1 > 3 || alpha2 < 0 || alpha2 > 3)
    throw ParameterError("pauli index must be in 0..3");
  if (k == 1 && alpha1 != 0)
    throw ParameterError("boundary insertion requires alpha1 = 0");

  const bool boundary = (k == 1);
  const Tensor pair = boundary ? pauli(alpha2) : kron(pauli(alpha1), pauli(alpha2));
  const GateFactors f = gate_factors(t, dt, k);
  const cplx mi(0.0, -1.0);

  Tensor c;
  if (kind == GradientKind::hamiltonian) {
    // d/d(d^a) of exp(-i dt H x 1), left-multiplied by the other factors.
    const Tensor h_gen = hamiltonian_generator(t.d, k);
    const Tensor s = kron(pair, Tensor::identity(2));
    c = matmul(f.exp_v, matrix_exp_derivative(h_gen, mi * dt, s));
  } else {
    // d/dx = S^+ + S^-; d/dy = i (S^+ - S^-). Both directions are Hermitian.
    const Tensor v_gen = coupling_generator(t.c, k);
    const Tensor sp = kron(pair, sigma_plus());
    const Tensor sm = kron(pair, sigma_minus());
    Tensor dir = (kind == GradientKind::jump_plus) ? sp + sm : sp - sm;
    if (kind == GradientKind::jump_minus) dir *= cplx(0.0, 1.0);
    c = matmul(matrix_exp_derivative(v_gen, mi * std::sqrt(dt), dir), f.exp_h);
  }
  if (boundary) return c;
  return matmul(swap23(), c);
}

std::optional<LayerMpo> build_gradient_mpo(const NetworkConfig& cfg, int k_tilde,
                                           int alpha1, int alpha2, GradientKind kind) {
  cfg.validate();
  if (k_tilde < 1 || k_tilde > cfg.width)
    throw ParameterError("k_tilde out of range");
  if (alpha1 < 0 || alpha1 > 3 || alpha2 < 0 || alpha2 > 3)
    throw ParameterError("pauli index must be in 0..3");
  if (k_tilde == 1 && alpha1 != 0) return std::nullopt;

  const Tensor c =
      gradient_insertion_gate(cfg.coeffs, cfg.dt, k_tilde, cfg.width, alpha1, alpha2, kind);
  const std::vector<Tensor> ket = ket_staircase(cfg, k_tilde, &c);
  const std::vector<Tensor> bra = ket_staircase(cfg, 0, nullptr);
  std::vector<Tensor> cores;
  cores.reserve(ket.size());
  for (size_t i = 0; i < ket.size(); ++i)
    cores.push_back(doubled_forward_core(ket[i], bra[i]));
  return finalize_mpo(std::move(cores), cfg.chi_mpo);
}

}  // namespace mpsqnn
