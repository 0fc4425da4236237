#include "mpsqnn/tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mpsqnn {

namespace {

using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::MatrixXcd;

long checked_size(const std::vector<long>& shape) {
  long n = 1;
  for (long d : shape) {
    if (d <= 0) throw ParameterError("tensor axis length must be positive");
    n *= d;
  }
  return n;
}

std::vector<long> strides_of(const std::vector<long>& shape) {
  std::vector<long> st(shape.size(), 1);
  for (long i = static_cast<long>(shape.size()) - 2; i >= 0; --i)
    st[i] = st[i + 1] * shape[i + 1];
  return st;
}

}  // namespace

Tensor::Tensor(std::vector<long> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(checked_size(shape_))) {}

Tensor::Tensor(std::vector<long> shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (checked_size(shape_) != static_cast<long>(data_.size()))
    throw DimensionError("tensor data length does not match shape");
}

Tensor Tensor::identity(long n) {
  Tensor t({n, n});
  for (long i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return t;
}

long Tensor::dim(long axis) const {
  if (axis < 0 || axis >= rank()) throw ParameterError("axis out of range");
  return shape_[static_cast<size_t>(axis)];
}

long Tensor::flat_index(std::initializer_list<long> idx) const {
  if (static_cast<long>(idx.size()) != rank())
    throw ParameterError("index rank mismatch");
  long flat = 0;
  long axis = 0;
  for (long i : idx) {
    if (i < 0 || i >= shape_[static_cast<size_t>(axis)])
      throw ParameterError("index out of range");
    flat = flat * shape_[static_cast<size_t>(axis)] + i;
    ++axis;
  }
  return flat;
}

cplx& Tensor::at(std::initializer_list<long> idx) { return data_[static_cast<size_t>(flat_index(idx))]; }
const cplx& Tensor::at(std::initializer_list<long> idx) const {
  return data_[static_cast<size_t>(flat_index(idx))];
}

bool Tensor::all_finite() const {
  for (const cplx& v : data_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (const cplx& v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor& Tensor::operator*=(cplx factor) {
  for (cplx& v : data_) v *= factor;
  return *this;
}

Tensor Tensor::operator+(const Tensor& other) const {
  if (shape_ != other.shape_) throw DimensionError("tensor shape mismatch in +");
  Tensor out = *this;
  for (long i = 0; i < size(); ++i) out[i] += other[i];
  return out;
}

Tensor Tensor::operator-(const Tensor& other) const {
  if (shape_ != other.shape_) throw DimensionError("tensor shape mismatch in -");
  Tensor out = *this;
  for (long i = 0; i < size(); ++i) out[i] -= other[i];
  return out;
}

Tensor transpose(const Tensor& a, const std::vector<long>& perm) {
  if (static_cast<long>(perm.size()) != a.rank())
    throw ParameterError("permutation rank mismatch");
  std::vector<bool> seen(perm.size(), false);
  std::vector<long> out_shape(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) {
    long p = perm[i];
    if (p < 0 || p >= a.rank() || seen[static_cast<size_t>(p)])
      throw ParameterError("invalid permutation");
    seen[static_cast<size_t>(p)] = true;
    out_shape[i] = a.shape()[static_cast<size_t>(p)];
  }
  Tensor out(out_shape);
  const std::vector<long> in_strides = strides_of(a.shape());
  std::vector<long> out_in_strides(perm.size());
  for (size_t i = 0; i < perm.size(); ++i)
    out_in_strides[i] = in_strides[static_cast<size_t>(perm[i])];

  const long n = out.size();
  std::vector<long> idx(perm.size(), 0);
  long src = 0;
  for (long flat = 0; flat < n; ++flat) {
    out[flat] = a[src];
    for (long axis = static_cast<long>(perm.size()) - 1; axis >= 0; --axis) {
      idx[static_cast<size_t>(axis)]++;
      src += out_in_strides[static_cast<size_t>(axis)];
      if (idx[static_cast<size_t>(axis)] < out_shape[static_cast<size_t>(axis)]) break;
      src -= out_in_strides[static_cast<size_t>(axis)] * out_shape[static_cast<size_t>(axis)];
      idx[static_cast<size_t>(axis)] = 0;
    }
  }
  return out;
}

Tensor reshape(const Tensor& a, std::vector<long> shape) {
  if (checked_size(shape) != a.size())
    throw DimensionError("reshape changes total size");
  Tensor out(std::move(shape), std::vector<cplx>(a.data(), a.data() + a.size()));
  return out;
}

Tensor conj(const Tensor& a) {
  Tensor out = a;
  for (long i = 0; i < out.size(); ++i) out[i] = std::conj(out[i]);
  return out;
}

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<long, long>>& axes) {
  std::vector<bool> ca(static_cast<size_t>(a.rank()), false);
  std::vector<bool> cb(static_cast<size_t>(b.rank()), false);
  long k_size = 1;
  for (auto [ax_a, ax_b] : axes) {
    if (ax_a < 0 || ax_a >= a.rank() || ax_b < 0 || ax_b >= b.rank())
      throw ParameterError("contraction axis out of range");
    if (ca[static_cast<size_t>(ax_a)] || cb[static_cast<size_t>(ax_b)])
      throw ParameterError("axis contracted twice");
    if (a.dim(ax_a) != b.dim(ax_b))
      throw DimensionError("contracted axis lengths differ");
    ca[static_cast<size_t>(ax_a)] = true;
    cb[static_cast<size_t>(ax_b)] = true;
    k_size *= a.dim(ax_a);
  }

  std::vector<long> perm_a, perm_b, out_shape;
  for (long i = 0; i < a.rank(); ++i)
    if (!ca[static_cast<size_t>(i)]) {
      perm_a.push_back(i);
      out_shape.push_back(a.dim(i));
    }
  for (auto [ax_a, ax_b] : axes) {
    perm_a.push_back(ax_a);
    (void)ax_b;
  }
  for (auto [ax_a, ax_b] : axes) {
    perm_b.push_back(ax_b);
    (void)ax_a;
  }
  for (long i = 0; i < b.rank(); ++i)
    if (!cb[static_cast<size_t>(i)]) {
      perm_b.push_back(i);
      out_shape.push_back(b.dim(i));
    }

  const Tensor ta = transpose(a, perm_a);
  const Tensor tb = transpose(b, perm_b);
  const long m_size = a.size() / k_size;
  const long n_size = b.size() / k_size;

  Tensor out(out_shape.empty() ? std::vector<long>{1} : out_shape);
  Eigen::Map<const RowMat> ma(ta.data(), m_size, k_size);
  Eigen::Map<const RowMat> mb(tb.data(), k_size, n_size);
  Eigen::Map<RowMat> mo(out.data(), m_size, n_size);
  mo.noalias() = ma * mb;

  if (!out.all_finite()) throw NumericalError("non-finite entries in contraction result");
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul needs rank-2 tensors");
  return contract(a, b, {{1, 0}});
}

Tensor kron(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("kron needs rank-2 tensors");
  const long ra = a.dim(0), ca = a.dim(1), rb = b.dim(0), cb = b.dim(1);
  Tensor out({ra * rb, ca * cb});
  for (long i = 0; i < ra; ++i)
    for (long j = 0; j < ca; ++j)
      for (long k = 0; k < rb; ++k)
        for (long l = 0; l < cb; ++l)
          out[(i * rb + k) * ca * cb + (j * cb + l)] = a[i * ca + j] * b[k * cb + l];
  return out;
}

Tensor dagger(const Tensor& m) {
  if (m.rank() != 2) throw DimensionError("dagger needs a rank-2 tensor");
  return conj(transpose(m, {1, 0}));
}

SvdResult svd_truncate(const Tensor& m, long chi_max, double rel_tol) {
  if (m.rank() != 2) throw DimensionError("svd_truncate needs a rank-2 tensor");
  if (chi_max <= 0) throw ParameterError("chi_max must be positive");
  if (rel_tol < 0) throw ParameterError("rel_tol must be non-negative");

  const long rows = m.dim(0), cols = m.dim(1);
  MatrixXcd em(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) em(i, j) = m[i * cols + j];

  Eigen::BDCSVD<MatrixXcd> svd(em, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const long nsv = sv.size();

  const double tol = std::max(rel_tol, 1e-14);
  long keep = std::min(chi_max, nsv);
  while (keep > 1 && sv(keep - 1) < tol * sv(0)) --keep;

  double discarded = 0.0;
  for (long i = keep; i < nsv; ++i) discarded += sv(i) * sv(i);

  SvdResult out;
  out.u = Tensor({rows, keep});
  out.v_dagger = Tensor({keep, cols});
  out.s.resize(static_cast<size_t>(keep));
  for (long i = 0; i < keep; ++i) out.s[static_cast<size_t>(i)] = sv(i);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < keep; ++j) out.u[i * keep + j] = svd.matrixU()(i, j);
  const MatrixXcd vdag = svd.matrixV().adjoint();
  for (long i = 0; i < keep; ++i)
    for (long j = 0; j < cols; ++j) out.v_dagger[i * cols + j] = vdag(i, j);
  out.discarded_weight = discarded;

  if (!out.u.all_finite() || !out.v_dagger.all_finite())
    throw NumericalError("non-finite entries in SVD factors");
  return out;
}

namespace {

Eigen::SelfAdjointEigenSolver<MatrixXcd> hermitian_eig(const Tensor& h,
                                                       const char* caller) {
  if (h.rank() != 2 || h.dim(0) != h.dim(1))
    throw DimensionError(std::string(caller) + " needs a square rank-2 tensor");
  const long n = h.dim(0);
  if (n > 16) throw ParameterError(std::string(caller) + " supports dimension <= 16");

  MatrixXcd em(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) em(i, j) = h[i * n + j];

  const double herm_defect = (em - em.adjoint()).cwiseAbs().maxCoeff();
  const double scale_ref = std::max(1.0, em.cwiseAbs().maxCoeff());
  if (herm_defect > 1e-12 * scale_ref)
    throw ValidationError(std::string(caller) + " input is not Hermitian within tolerance");

  return Eigen::SelfAdjointEigenSolver<MatrixXcd>((em + em.adjoint()) / 2.0);
}

Tensor from_eigen(const MatrixXcd& r) {
  Tensor out({r.rows(), r.cols()});
  for (long i = 0; i < r.rows(); ++i)
    for (long j = 0; j < r.cols(); ++j) out[i * r.cols() + j] = r(i, j);
  if (!out.all_finite()) throw NumericalError("non-finite entries in matrix exponential");
  return out;
}

}  // namespace

Tensor matrix_exp(const Tensor& h, cplx scale) {
  const auto es = hermitian_eig(h, "matrix_exp");
  const long n = h.dim(0);
  const MatrixXcd& u = es.eigenvectors();
  Eigen::VectorXcd phases(n);
  for (long i = 0; i < n; ++i) phases(i) = std::exp(scale * es.eigenvalues()(i));
  return from_eigen(u * phases.asDiagonal() * u.adjoint());
}

Tensor matrix_exp_derivative(const Tensor& h, cplx scale, const Tensor& x) {
  const auto es = hermitian_eig(h, "matrix_exp_derivative");
  const long n = h.dim(0);
  if (x.rank() != 2 || x.dim(0) != n || x.dim(1) != n)
    throw DimensionError("direction shape does not match the generator");

  MatrixXcd xm(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) xm(i, j) = x[i * n + j];

  const MatrixXcd& u = es.eigenvectors();
  const MatrixXcd xt = u.adjoint() * xm * u;
  double lam_ref = 1.0;
  for (long i = 0; i < n; ++i) lam_ref = std::max(lam_ref, std::abs(es.eigenvalues()(i)));

  MatrixXcd core(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const double li = es.eigenvalues()(i), lj = es.eigenvalues()(j);
      cplx gamma;
      if (std::abs(li - lj) < 1e-13 * lam_ref) {
        gamma = scale * std::exp(scale * 0.5 * (li + lj));
      } else {
        gamma = (std::exp(scale * li) - std::exp(scale * lj)) / (li - lj);
      }
      core(i, j) = xt(i, j) * gamma;
    }
  return from_eigen(u * core * u.adjoint());
}

}  // namespace mpsqnn
