#include "mpsqnn/mps.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

namespace mpsqnn {

namespace {

using Eigen::MatrixXcd;
using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fused-index transposition (l,r) -> (r,l): 0<->0, 1<->2, 3<->3.
constexpr int kSwap[4] = {0, 2, 1, 3};

MatrixXcd to_mat(const Tensor& t, long split) {
  long rows = 1, cols = 1;
  for (long i = 0; i < split; ++i) rows *= t.dim(i);
  for (long i = split; i < t.rank(); ++i) cols *= t.dim(i);
  return Eigen::Map<const RowMat>(t.data(), rows, cols);
}

Tensor from_mat(const MatrixXcd& m, std::vector<long> shape) {
  Tensor t(std::move(shape));
  Eigen::Map<RowMat>(t.data(), m.rows(), m.cols()) = m;
  return t;
}

// Thin QR with the R diagonal made real non-negative, so the gauge is
// deterministic and already-canonical tensors pass through unchanged.
void thin_qr(const MatrixXcd& m, MatrixXcd& q, MatrixXcd& r) {
  const long k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<MatrixXcd> qr(m);
  q = qr.householderQ() * MatrixXcd::Identity(m.rows(), k);
  r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (long i = 0; i < k; ++i) {
    const cplx d = r(i, i);
    if (std::abs(d) > 0) {
      const cplx ph = d / std::abs(d);
      q.col(i) *= ph;
      r.row(i) *= std::conj(ph);
    }
  }
}

// Moves the orthogonality center one site to the right via QR.
void left_step(std::vector<Tensor>& sites, int i) {
  const long l = sites[i].dim(0), r = sites[i].dim(2);
  MatrixXcd q, rm;
  thin_qr(to_mat(sites[i], 2), q, rm);
  const long k = q.cols();
  sites[i] = from_mat(q, {l, 4, k});
  sites[i + 1] = contract(from_mat(rm, {k, r}), sites[i + 1], {{1, 0}});
}

// Moves the orthogonality center one site to the left via LQ (QR of the adjoint).
void right_step(std::vector<Tensor>& sites, int i) {
  const long l = sites[i].dim(0), r = sites[i].dim(2);
  MatrixXcd q, rm;
  thin_qr(to_mat(sites[i], 1).adjoint(), q, rm);
  const long k = q.cols();
  sites[i] = from_mat(q.adjoint(), {k, 4, r});
  sites[i - 1] = contract(sites[i - 1], from_mat(rm.adjoint(), {l, k}), {{2, 0}});
}

Tensor phys_slice_swapped(const Tensor& site) {
  const long l = site.dim(0), r = site.dim(2);
  Tensor out({l, 4, r});
  for (long a = 0; a < l; ++a)
    for (long p = 0; p < 4; ++p)
      for (long b = 0; b < r; ++b)
        out[(a * 4 + kSwap[p]) * r + b] = site[(a * 4 + p) * r + b];
  return out;
}

}  // namespace

long DoubledMps::max_bond() const {
  long m = 1;
  for (const Tensor& t : sites) m = std::max({m, t.dim(0), t.dim(2)});
  return m;
}

void validate_mps(const DoubledMps& s) {
  if (s.sites.empty()) throw DimensionError("empty MPS");
  long prev = 1;
  for (size_t i = 0; i < s.sites.size(); ++i) {
    const Tensor& t = s.sites[i];
    if (t.rank() != 3) throw DimensionError("MPS site tensor must be rank 3");
    if (t.dim(1) != 4) throw DimensionError("MPS physical dimension must be 4");
    if (t.dim(0) != prev) throw DimensionError("MPS bond dimensions do not match");
    prev = t.dim(2);
  }
  if (prev != 1) throw DimensionError("MPS right boundary bond must be 1");
}

void validate_mpo(const LayerMpo& op) {
  if (op.sites.empty()) throw DimensionError("empty MPO");
  long prev = 1;
  for (const Tensor& t : op.sites) {
    if (t.rank() != 4) throw DimensionError("MPO site tensor must be rank 4");
    if (t.dim(1) != 4 || t.dim(2) != 4)
      throw DimensionError("MPO physical dimensions must be 4");
    if (t.dim(0) != prev) throw DimensionError("MPO bond dimensions do not match");
    prev = t.dim(3);
  }
  if (prev != 1) throw DimensionError("MPO right boundary bond must be 1");
}

DoubledMps canonicalize(const DoubledMps& s, int center) {
  validate_mps(s);
  if (center < 0 || center >= s.width())
    throw ParameterError("orthogonality center out of range");
  DoubledMps t = s;
  for (int i = 0; i < center; ++i) left_step(t.sites, i);
  for (int i = t.width() - 1; i > center; --i) right_step(t.sites, i);
  t.ortho_center = center;
  return t;
}

CompressResult compress(const DoubledMps& s, long chi_max, double rel_tol) {
  validate_mps(s);
  if (chi_max <= 0) throw ParameterError("chi_max must be positive");
  if (rel_tol < 0) throw ParameterError("rel_tol must be non-negative");

  DoubledMps t = s;
  const int w = t.width();
  for (int i = 0; i < w - 1; ++i) left_step(t.sites, i);

  double weight = 0.0;
  for (int i = w - 1; i > 0; --i) {
    const long l = t.sites[i].dim(0), r = t.sites[i].dim(2);
    SvdResult svd = svd_truncate(reshape(t.sites[i], {l, 4 * r}), chi_max, rel_tol);
    weight += svd.discarded_weight;
    const long k = static_cast<long>(svd.s.size());
    t.sites[i] = reshape(svd.v_dagger, {k, 4, r});
    Tensor us = svd.u;  // l x k, singular values absorbed to the left
    for (long a = 0; a < l; ++a)
      for (long b = 0; b < k; ++b) us[a * k + b] *= svd.s[static_cast<size_t>(b)];
    t.sites[i - 1] = contract(t.sites[i - 1], us, {{2, 0}});
  }
  t.ortho_center = 0;
  return {std::move(t), weight};
}

DoubledMps apply_mpo_exact(const LayerMpo& op, const DoubledMps& s) {
  validate_mps(s);
  validate_mpo(op);
  if (op.width() != s.width()) throw DimensionError("MPO/MPS width mismatch");

  DoubledMps out;
  out.sites.reserve(s.sites.size());
  for (int i = 0; i < s.width(); ++i) {
    const Tensor& core = op.sites[i];  // (ml, o, p, mr)
    const Tensor& site = s.sites[i];   // (l, p, r)
    Tensor merged = contract(core, site, {{2, 1}});       // (ml, o, mr, l, r)
    merged = transpose(merged, {0, 3, 1, 2, 4});          // (ml, l, o, mr, r)
    const long ml = core.dim(0), mr = core.dim(3);
    const long l = site.dim(0), r = site.dim(2);
    out.sites.push_back(reshape(merged, {ml * l, 4, mr * r}));
  }
  out.ortho_center.reset();
  return out;
}

ApplyResult apply_mpo(const LayerMpo& op, const DoubledMps& s, long chi_max,
                      double rel_tol) {
  CompressResult c = compress(apply_mpo_exact(op, s), chi_max, rel_tol);
  return {std::move(c.state), c.discarded_weight};
}

cplx overlap(const DoubledMps& a, const DoubledMps& b) {
  validate_mps(a);
  validate_mps(b);
  if (a.width() != b.width()) throw DimensionError("overlap width mismatch");
  MatrixXcd env = MatrixXcd::Ones(1, 1);
  for (int i = 0; i < a.width(); ++i) {
    const long la = a.sites[i].dim(0), ra = a.sites[i].dim(2);
    const long lb = b.sites[i].dim(0), rb = b.sites[i].dim(2);
    const cplx* pa = a.sites[i].data();
    const cplx* pb = b.sites[i].data();
    MatrixXcd next = MatrixXcd::Zero(ra, rb);
    for (int p = 0; p < 4; ++p) {
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> ma(pa + p * ra, la, ra,
                                                           Eigen::OuterStride<>(4 * ra));
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> mb(pb + p * rb, lb, rb,
                                                           Eigen::OuterStride<>(4 * rb));
      next.noalias() += ma.adjoint() * env * mb;
    }
    env = std::move(next);
  }
  return env(0, 0);
}

cplx flat_overlap(const DoubledMps& a, const DoubledMps& b) {
  validate_mps(a);
  validate_mps(b);
  if (a.width() != b.width()) throw DimensionError("flat_overlap width mismatch");
  MatrixXcd env = MatrixXcd::Ones(1, 1);
  for (int i = 0; i < a.width(); ++i) {
    const long la = a.sites[i].dim(0), ra = a.sites[i].dim(2);
    const long lb = b.sites[i].dim(0), rb = b.sites[i].dim(2);
    const cplx* pa = a.sites[i].data();
    const cplx* pb = b.sites[i].data();
    MatrixXcd next = MatrixXcd::Zero(ra, rb);
    for (int p = 0; p < 4; ++p) {
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> ma(pa + p * ra, la, ra,
                                                           Eigen::OuterStride<>(4 * ra));
      Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> mb(pb + kSwap[p] * rb, lb, rb,
                                                           Eigen::OuterStride<>(4 * rb));
      next.noalias() += ma.transpose() * env * mb;
    }
    env = std::move(next);
  }
  return env(0, 0);
}

cplx trace_pairing(const DoubledMps& s) {
  validate_mps(s);
  Eigen::RowVectorXcd env = Eigen::RowVectorXcd::Ones(1);
  for (const Tensor& site : s.sites) {
    const long l = site.dim(0), r = site.dim(2);
    MatrixXcd m = MatrixXcd::Zero(l, r);
    for (long a = 0; a < l; ++a)
      for (long b = 0; b < r; ++b)
        m(a, b) = site[(a * 4 + 0) * r + b] + site[(a * 4 + 3) * r + b];
    env = env * m;
  }
  return env(0);
}

cplx sandwich_flat(const DoubledMps& sigma, const LayerMpo& op, const DoubledMps& rho) {
  validate_mps(sigma);
  validate_mps(rho);
  validate_mpo(op);
  if (sigma.width() != rho.width() || op.width() != rho.width())
    throw DimensionError("sandwich_flat width mismatch");

  Tensor env({1, 1, 1});
  env[0] = 1.0;
  for (int i = 0; i < rho.width(); ++i) {
    const Tensor ss = phys_slice_swapped(sigma.sites[i]);   // (ls, p, rs)
    Tensor x = contract(env, ss, {{0, 0}});                  // (lm, lr, p, rs)
    Tensor y = contract(x, op.sites[i], {{0, 0}, {2, 1}});   // (lr, rs, pin, rm)
    env = contract(y, rho.sites[i], {{0, 0}, {2, 1}});       // (rs, rm, rr)
  }
  return env[0];
}

void scale_state(DoubledMps& s, cplx factor) {
  if (s.sites.empty()) throw DimensionError("empty MPS");
  s.sites[0] *= factor;
}

std::vector<cplx> densify(const DoubledMps& s) {
  validate_mps(s);
  if (s.width() > 8) throw ParameterError("densify limited to width <= 8");
  Tensor acc = reshape(s.sites[0], {4, s.sites[0].dim(2)});
  for (int i = 1; i < s.width(); ++i) {
    acc = contract(acc, s.sites[i], {{1, 0}});  // (D, 4, r)
    acc = reshape(acc, {acc.dim(0) * 4, acc.dim(2)});
  }
  std::vector<cplx> v(static_cast<size_t>(acc.dim(0)));
  for (long i = 0; i < acc.dim(0); ++i) v[static_cast<size_t>(i)] = acc[i];
  return v;
}

DoubledMps mps_from_dense(const std::vector<cplx>& v, int width) {
  if (width < 1) throw ParameterError("width must be >= 1");
  long expect = 1;
  for (int i = 0; i < width; ++i) expect *= 4;
  if (static_cast<long>(v.size()) != expect)
    throw DimensionError("dense vector length is not 4^width");

  DoubledMps out;
  Tensor carry({1, expect}, v);
  long left = 1;
  for (int i = 0; i < width - 1; ++i) {
    const long cols = carry.dim(1) / 4;
    SvdResult svd = svd_truncate(reshape(carry, {left * 4, cols}),
                                 std::numeric_limits<long>::max() / 4, 0.0);
    const long k = static_cast<long>(svd.s.size());
    out.sites.push_back(reshape(svd.u, {left, 4, k}));
    Tensor sv = svd.v_dagger;  // k x cols
    for (long a = 0; a < k; ++a)
      for (long b = 0; b < cols; ++b) sv[a * cols + b] *= svd.s[static_cast<size_t>(a)];
    carry = std::move(sv);
    left = k;
  }
  out.sites.push_back(reshape(carry, {left, 4, 1}));
  out.ortho_center = width - 1;
  return out;
}

LayerMpo identity_mpo(int width) {
  if (width < 1) throw ParameterError("width must be >= 1");
  LayerMpo op;
  Tensor core({1, 4, 4, 1});
  for (long p = 0; p < 4; ++p) core[p * 4 + p] = 1.0;
  op.sites.assign(static_cast<size_t>(width), core);
  op.max_bond = 1;
  return op;
}

std::vector<cplx> mpo_to_dense(const LayerMpo& op) {
  validate_mpo(op);
  if (op.width() > 4) throw ParameterError("mpo_to_dense limited to width <= 4");
  Tensor acc = reshape(op.sites[0], {4, 4, op.sites[0].dim(3)});  // (O, I, r)
  for (int i = 1; i < op.width(); ++i) {
    Tensor x = contract(acc, op.sites[i], {{2, 0}});  // (O, I, o, p, r)
    x = transpose(x, {0, 2, 1, 3, 4});                // (O, o, I, p, r)
    acc = reshape(x, {acc.dim(0) * 4, acc.dim(1) * 4, op.sites[i].dim(3)});
  }
  const long d = acc.dim(0);
  std::vector<cplx> out(static_cast<size_t>(d * d));
  for (long i = 0; i < d * d; ++i) out[static_cast<size_t>(i)] = acc[i];
  return out;
}

MpoCompressResult mpo_compress(const LayerMpo& op, long chi_max, double rel_tol) {
  validate_mpo(op);
  // Reuse the MPS sweeps on the fused (out,in) physical index.
  DoubledMps fused;
  std::vector<long> dims;
  for (const Tensor& core : op.sites) {
    dims.push_back(core.dim(3));
    fused.sites.push_back(reshape(core, {core.dim(0), 16, core.dim(3)}));
  }
  // The sweeps below only assume a fixed physical dimension; patch it to 16
  // by operating on raw tensors directly.
  const int w = fused.width();
  for (int i = 0; i < w - 1; ++i) {
    const long l = fused.sites[i].dim(0), r = fused.sites[i].dim(2);
    MatrixXcd q, rm;
    thin_qr(to_mat(fused.sites[i], 2), q, rm);
    const long k = q.cols();
    fused.sites[i] = from_mat(q, {l, 16, k});
    fused.sites[i + 1] = contract(from_mat(rm, {k, r}), fused.sites[i + 1], {{1, 0}});
  }
  double weight = 0.0;
  for (int i = w - 1; i > 0; --i) {
    const long l = fused.sites[i].dim(0), r = fused.sites[i].dim(2);
    SvdResult svd = svd_truncate(reshape(fused.sites[i], {l, 16 * r}), chi_max, rel_tol);
    weight += svd.discarded_weight;
    const long k = static_cast<long>(svd.s.size());
    fused.sites[i] = reshape(svd.v_dagger, {k, 16, r});
    Tensor us = svd.u;
    for (long a = 0; a < l; ++a)
      for (long b = 0; b < k; ++b) us[a * k + b] *= svd.s[static_cast<size_t>(b)];
    fused.sites[i - 1] = contract(fused.sites[i - 1], us, {{2, 0}});
  }

  LayerMpo out;
  out.truncation_error = std::sqrt(std::max(0.0, weight));
  for (const Tensor& core : fused.sites) {
    Tensor t = reshape(core, {core.dim(0), 4, 4, core.dim(2)});
    out.max_bond = std::max(out.max_bond, t.dim(3));
    out.sites.push_back(std::move(t));
  }
  return {std::move(out), weight};
}

void save_mps(const std::string& path, const DoubledMps& s) {
  validate_mps(s);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParameterError("cannot open file for writing: " + path);
  const uint32_t magic = 0x4d505331;  // "MPS1"
  const int32_t w = s.width();
  f.write(reinterpret_cast<const char*>(&magic), sizeof magic);
  f.write(reinterpret_cast<const char*>(&w), sizeof w);
  for (const Tensor& t : s.sites) {
    const int32_t dims[3] = {static_cast<int32_t>(t.dim(0)), 4,
                             static_cast<int32_t>(t.dim(2))};
    f.write(reinterpret_cast<const char*>(dims), sizeof dims);
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(sizeof(cplx) * static_cast<size_t>(t.size())));
  }
  if (!f) throw NumericalError("failed writing MPS dump: " + path);
}

DoubledMps load_mps(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParameterError("cannot open file for reading: " + path);
  uint32_t magic = 0;
  int32_t w = 0;
  f.read(reinterpret_cast<char*>(&magic), sizeof magic);
  f.read(reinterpret_cast<char*>(&w), sizeof w);
  if (!f || magic != 0x4d505331 || w < 1) throw ParameterError("bad MPS dump header");
  DoubledMps s;
  for (int32_t i = 0; i < w; ++i) {
    int32_t dims[3];
    f.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!f || dims[0] < 1 || dims[1] != 4 || dims[2] < 1)
      throw ParameterError("bad MPS dump site header");
    Tensor t({dims[0], 4, dims[2]});
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(sizeof(cplx) * static_cast<size_t>(t.size())));
    if (!f) throw ParameterError("truncated MPS dump");
    s.sites.push_back(std::move(t));
  }
  validate_mps(s);
  return s;
}

}  // namespace mpsqnn
