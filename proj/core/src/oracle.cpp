#include "mpsqnn/oracle.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mpsqnn {

namespace {

long pow2(int n) { return 1L << n; }

long pow4(int n) { return 1L << (2 * n); }

// Inserts the bits of `upper` into the odd (next-layer) positions and the
// bits of `lower` into the even (prev-layer) positions of a 2W-bit index,
// column-major interleaving with column 1 most significant.
long interleave_cols(long lower, long upper, int width) {
  long out = 0;
  for (int k = 0; k < width; ++k) {
    const long lb = (lower >> (width - 1 - k)) & 1;
    const long ub = (upper >> (width - 1 - k)) & 1;
    out = (out << 2) | (lb << 1) | ub;
  }
  return out;
}

void apply_gate_to_vector(cplx* data, long stride, const Mat& u,
                          const std::vector<long>& masks, long dim) {
  // Enumerate the subspace spanned by the gate qubits for every setting of
  // the remaining bits.
  const int g = static_cast<int>(masks.size());
  const long gdim = 1L << g;
  long outer_mask = dim - 1;
  for (long m : masks) outer_mask &= ~m;

  std::vector<cplx> buf(static_cast<size_t>(gdim));
  for (long base = 0;; base = ((base | ~outer_mask) + 1) & outer_mask) {
    for (long s = 0; s < gdim; ++s) {
      long idx = base;
      for (int b = 0; b < g; ++b)
        if ((s >> (g - 1 - b)) & 1) idx |= masks[static_cast<size_t>(b)];
      buf[static_cast<size_t>(s)] = data[idx * stride];
    }
    for (long s = 0; s < gdim; ++s) {
      cplx acc = 0.0;
      for (long t = 0; t < gdim; ++t) acc += u(s, t) * buf[static_cast<size_t>(t)];
      long idx = base;
      for (int b = 0; b < g; ++b)
        if ((s >> (g - 1 - b)) & 1) idx |= masks[static_cast<size_t>(b)];
      data[idx * stride] = acc;
    }
    if (base == outer_mask) break;
  }
}

Mat tensor_to_mat(const Tensor& t) {
  const long n = t.dim(0);
  Mat m(n, t.dim(1));
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < t.dim(1); ++j) m(i, j) = t[i * t.dim(1) + j];
  return m;
}

std::vector<long> qubit_masks(const std::vector<int>& qubits, int n_qubits) {
  std::vector<long> masks;
  masks.reserve(qubits.size());
  for (int q : qubits) {
    if (q < 0 || q >= n_qubits) throw ParameterError("qubit index out of range");
    masks.push_back(1L << (n_qubits - 1 - q));
  }
  return masks;
}

// Layer-gate application schedule: R_1 first, then G_W down to G_2, then
// SWAP_1. Qubit (k, prev) sits at position 2(k-1), (k, next) at 2(k-1)+1.
struct GateSchedule {
  std::vector<Mat> gates;
  std::vector<std::vector<int>> qubits;
};

GateSchedule layer_schedule(const NetworkConfig& cfg) {
  GateSchedule sched;
  const int w = cfg.width;
  sched.gates.push_back(tensor_to_mat(build_local_gate(cfg.coeffs, cfg.dt, 1, w)));
  sched.qubits.push_back({0, 1});
  const Mat interior = tensor_to_mat(build_local_gate(cfg.coeffs, cfg.dt, 2, w));
  for (int k = w; k >= 2; --k) {
    sched.gates.push_back(interior);
    sched.qubits.push_back({2 * (k - 2), 2 * (k - 1), 2 * (k - 1) + 1});
  }
  Mat sw = Mat::Zero(4, 4);
  sw(0, 0) = 1.0; sw(1, 2) = 1.0; sw(2, 1) = 1.0; sw(3, 3) = 1.0;
  sched.gates.push_back(sw);
  sched.qubits.push_back({0, 1});
  return sched;
}

void conjugate_by_mat(Mat& rho, const Mat& u, const std::vector<int>& qubits, int n) {
  const std::vector<long> masks = qubit_masks(qubits, n);
  const long dim = pow2(n);
  for (long c = 0; c < dim; ++c) apply_gate_to_vector(rho.data() + c * dim, 1, u, masks, dim);
  const Mat uc = u.conjugate();
  for (long r = 0; r < dim; ++r) apply_gate_to_vector(rho.data() + r, dim, uc, masks, dim);
}

std::mt19937_64 seeded(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace

void DenseState::validate() const {
  if (rho.rows() != rho.cols() || rho.rows() < 2)
    throw DimensionError("density matrix must be square");
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-12) throw ValidationError("density matrix is not Hermitian");
  if (std::abs(rho.trace() - cplx(1.0)) > 1e-12)
    throw ValidationError("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Mat> es((rho + rho.adjoint()) / 2.0);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw ValidationError("density matrix has a negative eigenvalue");
}

Mat dense_channel_step_raw(const Mat& rho, const NetworkConfig& cfg) {
  cfg.validate();
  const int w = cfg.width;
  if (w > 6) throw ParameterError("dense channel step limited to width <= 6");
  const long d = pow2(w);
  if (rho.rows() != d || rho.cols() != d)
    throw DimensionError("state dimension does not match width");

  const long dd = pow2(2 * w);
  Mat joint = Mat::Zero(dd, dd);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      joint(interleave_cols(i, 0, w), interleave_cols(j, 0, w)) = rho(i, j);

  const GateSchedule sched = layer_schedule(cfg);
  for (size_t g = 0; g < sched.gates.size(); ++g)
    conjugate_by_mat(joint, sched.gates[g], sched.qubits[g], 2 * w);

  Mat out = Mat::Zero(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      cplx acc = 0.0;
      for (long m = 0; m < d; ++m)
        acc += joint(interleave_cols(m, i, w), interleave_cols(m, j, w));
      out(i, j) = acc;
    }
  return out;
}

DenseState dense_channel_step(const DenseState& rho, const NetworkConfig& cfg) {
  rho.validate();
  return {dense_channel_step_raw(rho.rho, cfg)};
}

Mat dense_adjoint_step(const Mat& e, const NetworkConfig& cfg) {
  cfg.validate();
  const int w = cfg.width;
  if (w > 6) throw ParameterError("dense adjoint step limited to width <= 6");
  const long d = pow2(w);
  if (e.rows() != d || e.cols() != d)
    throw DimensionError("observable dimension does not match width");

  // 1 x E: identity on the previous layer, E on the next.
  const long dd = pow2(2 * w);
  Mat joint = Mat::Zero(dd, dd);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      for (long m = 0; m < d; ++m)
        joint(interleave_cols(m, i, w), interleave_cols(m, j, w)) = e(i, j);

  // G^dag X G: conjugate by the daggered schedule in reverse order.
  const GateSchedule sched = layer_schedule(cfg);
  for (size_t g = sched.gates.size(); g-- > 0;) {
    const Mat u = sched.gates[g].adjoint();
    conjugate_by_mat(joint, u, sched.qubits[g], 2 * w);
  }

  Mat out(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      out(i, j) = joint(interleave_cols(i, 0, w), interleave_cols(j, 0, w));
  return out;
}

Mat build_lindbladian(const PauliCoeffTable& t, int width) {
  if (width < 1) throw ParameterError("width must be >= 1");
  if (width > 5) throw ParameterError("dense Lindbladian limited to width <= 5");
  const long d = pow2(width);

  if (width == 1) {  // boundary terms only
    Mat h1 = Mat::Zero(2, 2), j1 = Mat::Zero(2, 2);
    for (int a2 = 0; a2 < 4; ++a2) {
      h1 += t.d[static_cast<size_t>(a2)] * tensor_to_mat(pauli(a2));
      j1 += t.c[static_cast<size_t>(a2)] * tensor_to_mat(pauli(a2));
    }
    const Mat id = Mat::Identity(2, 2);
    const Mat jj = j1.adjoint() * j1;
    Mat l = cplx(0.0, -1.0) * (Eigen::kroneckerProduct(id, h1).eval() -
                               Eigen::kroneckerProduct(h1.transpose(), id).eval());
    l += Eigen::kroneckerProduct(j1.conjugate(), j1).eval();
    l -= 0.5 * Eigen::kroneckerProduct(id, jj).eval();
    l -= 0.5 * Eigen::kroneckerProduct(Mat(jj.transpose()), id).eval();
    return l;
  }

  auto embed2 = [&](const Mat& op, int site) {  // two-site op at (site, site+1), 0-based
    Mat full = Mat::Identity(1, 1);
    int k = 0;
    while (k < width) {
      if (k == site) {
        Mat next(full.rows() * 4, full.cols() * 4);
        for (long i = 0; i < full.rows(); ++i)
          for (long j = 0; j < full.cols(); ++j) next.block(i * 4, j * 4, 4, 4) = full(i, j) * op;
        full = std::move(next);
        k += 2;
      } else {
        Mat next(full.rows() * 2, full.cols() * 2);
        for (long i = 0; i < full.rows(); ++i)
          for (long j = 0; j < full.cols(); ++j)
            next.block(i * 2, j * 2, 2, 2) = full(i, j) * Mat::Identity(2, 2);
        full = std::move(next);
        k += 1;
      }
    }
    return full;
  };

  // Hamiltonian and jump operators from the shared table; k = 1 keeps only
  // the a1 = 0 (boundary) entries.
  Mat h_total = Mat::Zero(d, d);
  std::vector<Mat> jumps;
  {
    Mat h1 = Mat::Zero(2, 2);
    Mat j1 = Mat::Zero(2, 2);
    for (int a2 = 0; a2 < 4; ++a2) {
      h1 += t.d[static_cast<size_t>(a2)] * tensor_to_mat(pauli(a2));
      j1 += t.c[static_cast<size_t>(a2)] * tensor_to_mat(pauli(a2));
    }
    // Boundary operators act on site 1 only: h1 x I on the (0,1) pair.
    const Mat i2 = Mat::Identity(2, 2);
    const Mat h1e = Eigen::kroneckerProduct(h1, i2);
    const Mat j1e = Eigen::kroneckerProduct(j1, i2);
    h_total += embed2(h1e, 0);
    jumps.push_back(embed2(j1e, 0));
  }
  Mat h_pair = Mat::Zero(4, 4), j_pair = Mat::Zero(4, 4);
  for (int a1 = 0; a1 < 4; ++a1)
    for (int a2 = 0; a2 < 4; ++a2) {
      const Mat term = Eigen::kroneckerProduct(tensor_to_mat(pauli(a1)),
                                               tensor_to_mat(pauli(a2)));
      h_pair += t.d[static_cast<size_t>(a1 * 4 + a2)] * term;
      j_pair += t.c[static_cast<size_t>(a1 * 4 + a2)] * term;
    }
  for (int k = 2; k <= width; ++k) {
    h_total += embed2(h_pair, k - 2);
    jumps.push_back(embed2(j_pair, k - 2));
  }

  const Mat id = Mat::Identity(d, d);
  auto kr = [](const Mat& a, const Mat& b) { return Eigen::kroneckerProduct(a, b).eval(); };

  Mat l = cplx(0.0, -1.0) * (kr(id, h_total) - kr(h_total.transpose(), id));
  for (const Mat& j : jumps) {
    const Mat jj = j.adjoint() * j;
    l += kr(j.conjugate(), j);
    l -= 0.5 * kr(id, jj);
    l -= 0.5 * kr(jj.transpose(), id);
  }
  return l;
}

Mat dense_forward_superop(const NetworkConfig& cfg) {
  cfg.validate();
  if (cfg.width > 4) throw ParameterError("dense superoperator limited to width <= 4");
  const long d = pow2(cfg.width);
  const long dd = pow4(cfg.width);
  Mat f(dd, dd);
  for (long l = 0; l < d; ++l)
    for (long r = 0; r < d; ++r) {
      Mat basis = Mat::Zero(d, d);
      basis(l, r) = 1.0;
      const Vec col = doubled_from_rho(dense_channel_step_raw(basis, cfg));
      f.col(interleave_cols(l, r, cfg.width)) = col;
    }
  return f;
}

SpectralReport spectral_analysis(const Mat& l_matrix, const GapPolicy& policy) {
  if (l_matrix.rows() != l_matrix.cols()) throw DimensionError("superoperator must be square");
  const long n = l_matrix.rows();
  const long d = static_cast<long>(std::llround(std::sqrt(static_cast<double>(n))));
  if (d * d != n) throw DimensionError("superoperator dimension is not a perfect square");

  Eigen::ComplexEigenSolver<Mat> es(l_matrix);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

  std::vector<long> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const Vec& ev = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
    if (ev(a).imag() != ev(b).imag()) return ev(a).imag() > ev(b).imag();
    return a < b;
  });

  Mat v(n, n);
  SpectralReport rep;
  rep.eigenvalues.resize(n);
  for (long i = 0; i < n; ++i) {
    rep.eigenvalues(i) = ev(order[static_cast<size_t>(i)]);
    v.col(i) = es.eigenvectors().col(order[static_cast<size_t>(i)]);
  }

  Eigen::PartialPivLU<Mat> lu(v);
  const Mat v_inv = lu.solve(Mat::Identity(n, n));
  {
    Eigen::BDCSVD<Mat> svd(v);
    const double smin = svd.singularValues()(n - 1);
    rep.diagonalizable = smin > 0 && svd.singularValues()(0) / smin < 1e10;
  }

  rep.left.reserve(static_cast<size_t>(n));
  rep.right.reserve(static_cast<size_t>(n));
  for (long k = 0; k < n; ++k) {
    rep.right.push_back(unvec_col(v.col(k)));
    rep.left.push_back(unvec_col(v_inv.row(k).transpose()).transpose());
  }

  // Rescale the zero mode so the stationary state has unit trace.
  const cplx tr = rep.right[0].trace();
  if (std::abs(tr) > 1e-12) {
    rep.right[0] /= tr;
    rep.left[0] *= tr;
  }
  rep.stationary = rep.right[0];

  rep.zero_multiplicity = 0;
  for (long k = 0; k < n; ++k)
    if (std::abs(rep.eigenvalues(k)) < 1e-10) rep.zero_multiplicity++;

  int m = 1;
  double best_ratio = 0.0;
  for (long k = 1; k < n; ++k) {  // 1-based index k, next eigenvalue k+1
    const double re_k = std::abs(rep.eigenvalues(k - 1).real());
    const double re_next = std::abs(rep.eigenvalues(k).real());
    if (re_next > 1e-12 && re_k < policy.threshold * re_next) {
      m = static_cast<int>(k);
      best_ratio = re_k / re_next;
    }
  }
  rep.separation_index = m;
  rep.gap_ratio = best_ratio;
  const double re_m = rep.eigenvalues(m - 1).real();
  const double re_m1 = (m < n) ? rep.eigenvalues(m).real() : 0.0;
  rep.tau = (std::abs(re_m) > 1e-14) ? -1.0 / re_m : std::numeric_limits<double>::infinity();
  rep.tau_prime =
      (std::abs(re_m1) > 1e-14) ? -1.0 / re_m1 : std::numeric_limits<double>::infinity();
  return rep;
}

SlopeReport first_order_limit_check(const PauliCoeffTable& t, int width,
                                    const std::vector<double>& dt_list, int n_states,
                                    uint64_t seed) {
  if (width > 4) throw ParameterError("first-order check limited to width <= 4");
  if (dt_list.empty()) throw ParameterError("dt list must be non-empty");
  std::vector<Mat> states;
  for (int s = 0; s < n_states; ++s)
    states.push_back(random_product_state(width, seed + static_cast<uint64_t>(s)));

  const Mat lind = build_lindbladian(t, width);

  SlopeReport rep;
  rep.dt = dt_list;
  for (double dt : dt_list) {
    NetworkConfig cfg;
    cfg.width = width;
    cfg.depth = 1;
    cfg.dt = dt;
    cfg.coeffs = t;
    const Mat prop = matrix_exp_general(lind, dt);
    double worst = 0.0;
    for (const Mat& rho : states) {
      const Mat a = dense_channel_step_raw(rho, cfg);
      const Mat b = unvec_col(prop * vec_col(rho));
      worst = std::max(worst, trace_norm(a - b));
    }
    rep.residual.push_back(worst);
  }

  bool all_zero = true;
  for (double r : rep.residual)
    if (r > 1e-15) all_zero = false;
  if (all_zero) {
    rep.slope = std::numeric_limits<double>::infinity();
    return rep;
  }

  // Least-squares fit of log(residual) against log(dt).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(dt_list.size());
  for (size_t i = 0; i < dt_list.size(); ++i) {
    const double x = std::log(dt_list[i]);
    const double y = std::log(std::max(rep.residual[i], 1e-300));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return rep;
}

Mat metastable_projection(const SpectralReport& report, const Mat& rho0, double t,
                          bool* in_window) {
  if (rho0.rows() != report.stationary.rows())
    throw DimensionError("initial state dimension mismatch");
  if (in_window) *in_window = (t >= report.tau_prime && t <= report.tau);
  Mat out = report.stationary;
  for (int k = 2; k <= report.separation_index; ++k) {
    const cplx c = (report.left[static_cast<size_t>(k - 1)] * rho0).trace();
    const cplx phase = std::exp(cplx(0.0, t * report.eigenvalues(k - 1).imag()));
    out += phase * c * report.right[static_cast<size_t>(k - 1)];
  }
  return out;
}

Mat matrix_exp_general(const Mat& m, cplx scale) {
  return (scale * m).exp();
}

double trace_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().sum();
}

double trace_distance(const Mat& a, const Mat& b) { return 0.5 * trace_norm(a - b); }

void conjugate_by_gate(Mat& rho, const Tensor& gate, const std::vector<int>& qubits,
                       int n_qubits) {
  conjugate_by_mat(rho, tensor_to_mat(gate), qubits, n_qubits);
}

Mat embed_gate(const Tensor& gate, const std::vector<int>& qubits, int n_qubits) {
  const Mat u = tensor_to_mat(gate);
  const std::vector<long> masks = qubit_masks(qubits, n_qubits);
  const long dim = pow2(n_qubits);
  Mat full = Mat::Identity(dim, dim);
  for (long c = 0; c < dim; ++c) apply_gate_to_vector(full.data() + c * dim, 1, u, masks, dim);
  return full;
}

Vec doubled_from_rho(const Mat& rho) {
  const long d = rho.rows();
  int w = 0;
  while ((1L << w) < d) ++w;
  if ((1L << w) != d || rho.cols() != d) throw DimensionError("not a 2^W square matrix");
  Vec v(d * d);
  for (long l = 0; l < d; ++l)
    for (long r = 0; r < d; ++r) v(interleave_cols(l, r, w)) = rho(l, r);
  return v;
}

Mat rho_from_doubled(const Vec& v) {
  long n = v.size();
  int w = 0;
  while ((1L << (2 * w)) < n) ++w;
  if ((1L << (2 * w)) != n) throw DimensionError("not a 4^W vector");
  const long d = 1L << w;
  Mat rho(d, d);
  for (long l = 0; l < d; ++l)
    for (long r = 0; r < d; ++r) rho(l, r) = v(interleave_cols(l, r, w));
  return rho;
}

Vec vec_col(const Mat& m) {
  Vec v(m.rows() * m.cols());
  long idx = 0;
  for (long j = 0; j < m.cols(); ++j)
    for (long i = 0; i < m.rows(); ++i) v(idx++) = m(i, j);
  return v;
}

Mat unvec_col(const Vec& v) {
  const long n = v.size();
  const long d = static_cast<long>(std::llround(std::sqrt(static_cast<double>(n))));
  if (d * d != n) throw DimensionError("vector length is not a perfect square");
  Mat m(d, d);
  long idx = 0;
  for (long j = 0; j < d; ++j)
    for (long i = 0; i < d; ++i) m(i, j) = v(idx++);
  return m;
}

Mat random_product_state(int width, uint64_t seed) {
  std::mt19937_64 rng = seeded(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Vec psi = Vec::Ones(1);
  for (int k = 0; k < width; ++k) {
    const double theta = std::acos(2.0 * uni(rng) - 1.0);
    const double phi = 2.0 * M_PI * uni(rng);
    Eigen::Vector2cd q(std::cos(theta / 2.0),
                       std::exp(cplx(0.0, phi)) * std::sin(theta / 2.0));
    Vec next(psi.size() * 2);
    for (long i = 0; i < psi.size(); ++i) {
      next(2 * i) = psi(i) * q(0);
      next(2 * i + 1) = psi(i) * q(1);
    }
    psi = std::move(next);
  }
  return psi * psi.adjoint();
}

PauliCoeffTable random_table(double scale, uint64_t seed) {
  std::mt19937_64 rng = seeded(seed);
  std::normal_distribution<double> nd(0.0, scale);
  PauliCoeffTable t;
  for (size_t i = 0; i < 16; ++i) {
    t.c[i] = cplx(nd(rng), nd(rng));
    t.d[i] = nd(rng);
  }
  return t;
}

}  // namespace mpsqnn
