#include "support/reference.hpp"

#include <cmath>
#include <random>

namespace testref {

namespace {

long dim_of(int width) { return 1L << width; }

// Embeds a gate matrix on the listed qubits (0 = most significant bit of a
// 2W-bit column-interleaved index) into the full 2^{n} space, by loops.
Mat embed(const Mat& u, const std::vector<int>& qubits, int n) {
  const long dim = 1L << n;
  const int g = static_cast<int>(qubits.size());
  const long gdim = 1L << g;
  std::vector<long> shifts;
  for (int q : qubits) shifts.push_back(n - 1 - q);

  Mat full = Mat::Zero(dim, dim);
  for (long row = 0; row < dim; ++row) {
    long sub = 0;
    for (int b = 0; b < g; ++b) sub = (sub << 1) | ((row >> shifts[static_cast<size_t>(b)]) & 1);
    for (long t = 0; t < gdim; ++t) {
      if (u(sub, t) == cplx(0.0)) continue;
      long col = row;
      for (int b = 0; b < g; ++b) {
        const long mask = 1L << shifts[static_cast<size_t>(b)];
        if ((t >> (g - 1 - b)) & 1) col |= mask;
        else col &= ~mask;
      }
      full(row, col) += u(sub, t);
    }
  }
  return full;
}

Mat mat_of(const Tensor& t) {
  Mat m(t.dim(0), t.dim(1));
  for (long i = 0; i < t.dim(0); ++i)
    for (long j = 0; j < t.dim(1); ++j) m(i, j) = t[i * t.dim(1) + j];
  return m;
}

long joint_index(long prev, long next, int width) {
  long out = 0;
  for (int k = 0; k < width; ++k) {
    const long pb = (prev >> (width - 1 - k)) & 1;
    const long nb = (next >> (width - 1 - k)) & 1;
    out = (out << 2) | (pb << 1) | nb;
  }
  return out;
}

}  // namespace

Tensor naive_contract(const Tensor& a, const Tensor& b,
                      const std::vector<std::pair<long, long>>& axes) {
  std::vector<bool> ca(static_cast<size_t>(a.rank()), false);
  std::vector<bool> cb(static_cast<size_t>(b.rank()), false);
  for (auto [x, y] : axes) {
    ca[static_cast<size_t>(x)] = true;
    cb[static_cast<size_t>(y)] = true;
  }
  std::vector<long> out_shape, free_a, free_b;
  for (long i = 0; i < a.rank(); ++i)
    if (!ca[static_cast<size_t>(i)]) {
      free_a.push_back(i);
      out_shape.push_back(a.dim(i));
    }
  for (long i = 0; i < b.rank(); ++i)
    if (!cb[static_cast<size_t>(i)]) {
      free_b.push_back(i);
      out_shape.push_back(b.dim(i));
    }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape);

  std::vector<long> idx_a(static_cast<size_t>(a.rank()), 0);
  std::vector<long> idx_b(static_cast<size_t>(b.rank()), 0);
  long k_total = 1;
  for (auto [x, y] : axes) {
    (void)y;
    k_total *= a.dim(x);
  }

  const long out_n = out.size();
  for (long flat = 0; flat < out_n; ++flat) {
    long rem = flat;
    std::vector<long> out_idx(out_shape.size());
    for (long i = static_cast<long>(out_shape.size()) - 1; i >= 0; --i) {
      out_idx[static_cast<size_t>(i)] = rem % out_shape[static_cast<size_t>(i)];
      rem /= out_shape[static_cast<size_t>(i)];
    }
    cplx acc = 0.0;
    for (long k = 0; k < k_total; ++k) {
      long kk = k;
      for (auto [x, y] : axes) {
        const long v = kk % a.dim(x);
        kk /= a.dim(x);
        idx_a[static_cast<size_t>(x)] = v;
        idx_b[static_cast<size_t>(y)] = v;
      }
      size_t pos = 0;
      for (long i = 0; i < static_cast<long>(free_a.size()); ++i)
        idx_a[static_cast<size_t>(free_a[static_cast<size_t>(i)])] = out_idx[pos++];
      for (long i = 0; i < static_cast<long>(free_b.size()); ++i)
        idx_b[static_cast<size_t>(free_b[static_cast<size_t>(i)])] = out_idx[pos++];
      long fa = 0, fb = 0;
      for (long i = 0; i < a.rank(); ++i) fa = fa * a.dim(i) + idx_a[static_cast<size_t>(i)];
      for (long i = 0; i < b.rank(); ++i) fb = fb * b.dim(i) + idx_b[static_cast<size_t>(i)];
      acc += a[fa] * b[fb];
    }
    out[flat] = acc;
  }
  return out;
}

Tensor random_tensor(const std::vector<long>& shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Tensor t(shape);
  for (long i = 0; i < t.size(); ++i) t[i] = cplx(nd(rng), nd(rng));
  return t;
}

DoubledMps random_mps(int width, long chi, uint64_t seed) {
  DoubledMps s;
  long left = 1;
  long right_cap = 1;
  for (int i = 0; i < width; ++i) {
    right_cap = 1;
    for (int j = i + 1; j < width; ++j) {
      right_cap *= 4;
      if (right_cap >= chi) break;
    }
    long right = (i == width - 1) ? 1 : std::min(chi, std::min(left * 4, right_cap));
    s.sites.push_back(random_tensor({left, 4, right}, seed + static_cast<uint64_t>(i)));
    left = right;
  }
  return s;
}

Mat dense_layer_gate(const NetworkConfig& cfg) {
  return dense_modified_layer_gate(cfg, 0, Tensor({1}));
}

Mat dense_modified_layer_gate(const NetworkConfig& cfg, int k_tilde, const Tensor& gate) {
  const int w = cfg.width;
  const int n = 2 * w;
  const long dim = 1L << n;

  Mat sw = Mat::Zero(4, 4);
  sw(0, 0) = 1.0; sw(1, 2) = 1.0; sw(2, 1) = 1.0; sw(3, 3) = 1.0;

  Mat acc = embed(sw, {0, 1}, n);  // SWAP_1, leftmost factor
  for (int k = 2; k <= w; ++k) {
    Mat g = (k == k_tilde) ? mat_of(gate)
                           : mat_of(mpsqnn::build_local_gate(cfg.coeffs, cfg.dt, k, w));
    acc = acc * embed(g, {2 * (k - 2), 2 * (k - 1), 2 * (k - 1) + 1}, n);
  }
  Mat r1 = (k_tilde == 1) ? mat_of(gate)
                          : mat_of(mpsqnn::build_local_gate(cfg.coeffs, cfg.dt, 1, w));
  acc = acc * embed(r1, {0, 1}, n);
  (void)dim;
  return acc;
}

Mat mixed_channel_apply(const Mat& ket_gate, const Mat& bra_gate, const Mat& rho, int width) {
  const long d = dim_of(width);
  const long dd = d * d;
  Mat joint = Mat::Zero(dd, dd);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      joint(joint_index(i, 0, width), joint_index(j, 0, width)) = rho(i, j);
  const Mat moved = ket_gate * joint * bra_gate.adjoint();
  Mat out = Mat::Zero(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      cplx acc = 0.0;
      for (long m = 0; m < d; ++m)
        acc += moved(joint_index(m, i, width), joint_index(m, j, width));
      out(i, j) = acc;
    }
  return out;
}

Mat mixed_channel_superop(const Mat& ket_gate, const Mat& bra_gate, int width) {
  const long d = dim_of(width);
  Mat s(d * d, d * d);
  for (long l = 0; l < d; ++l)
    for (long r = 0; r < d; ++r) {
      Mat basis = Mat::Zero(d, d);
      basis(l, r) = 1.0;
      s.col(joint_index(l, r, width)) =
          doubled_vector(mixed_channel_apply(ket_gate, bra_gate, basis, width));
    }
  return s;
}

Mat dense_adjoint_apply(const Mat& gate, const Mat& e, int width) {
  const long d = dim_of(width);
  const long dd = d * d;
  Mat joint = Mat::Zero(dd, dd);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      for (long m = 0; m < d; ++m)
        joint(joint_index(m, i, width), joint_index(m, j, width)) = e(i, j);
  const Mat moved = gate.adjoint() * joint * gate;
  Mat out(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      out(i, j) = moved(joint_index(i, 0, width), joint_index(j, 0, width));
  return out;
}

Vec doubled_vector(const Mat& rho) {
  const long d = rho.rows();
  int w = 0;
  while ((1L << w) < d) ++w;
  Vec v(d * d);
  for (long l = 0; l < d; ++l)
    for (long r = 0; r < d; ++r) v(joint_index(l, r, w)) = rho(l, r);
  return v;
}

Mat from_doubled_vector(const Vec& v) {
  long n = v.size();
  int w = 0;
  while ((1L << (2 * w)) < n) ++w;
  const long d = 1L << w;
  Mat rho(d, d);
  for (long l = 0; l < d; ++l)
    for (long r = 0; r < d; ++r) rho(l, r) = v(joint_index(l, r, w));
  return rho;
}

Mat dense_error_operator(double m_out, int width) {
  const long d = dim_of(width);
  Mat e = Mat::Zero(d, d);
  for (long i = 0; i < d; ++i) {
    double z = 0.0;
    for (int b = 0; b < width; ++b) z += ((i >> b) & 1) ? -1.0 : 1.0;
    e(i, i) = z / (2.0 * width) - m_out;
  }
  return e;
}

double dense_mz(const Mat& rho) {
  const long d = rho.rows();
  int w = 0;
  while ((1L << w) < d) ++w;
  double mz = 0.0;
  for (long i = 0; i < d; ++i) {
    double z = 0.0;
    for (int b = 0; b < w; ++b) z += ((i >> b) & 1) ? -1.0 : 1.0;
    mz += z * rho(i, i).real();
  }
  return mz / (2.0 * w);
}

Mat choi_matrix(const NetworkConfig& cfg) {
  const long d = dim_of(cfg.width);
  const Mat gate = dense_layer_gate(cfg);
  Mat choi = Mat::Zero(d * d, d * d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      Mat basis = Mat::Zero(d, d);
      basis(i, j) = 1.0;
      const Mat mapped = mixed_channel_apply(gate, gate, basis, cfg.width);
      for (long k = 0; k < d; ++k)
        for (long l = 0; l < d; ++l) choi(i * d + k, j * d + l) = mapped(k, l);
    }
  return choi;
}

}  // namespace testref
