#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

#include "mpsqnn/errors.hpp"

namespace mpsqnn {

using cplx = std::complex<double>;

/// Dense complex tensor with a fixed row-major layout. The last axis is
/// contiguous; axis ordering is explicit in every operation.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<long> shape);
  Tensor(std::vector<long> shape, std::vector<cplx> data);

  static Tensor matrix(long rows, long cols) { return Tensor({rows, cols}); }
  static Tensor identity(long n);

  long rank() const { return static_cast<long>(shape_.size()); }
  long size() const { return static_cast<long>(data_.size()); }
  const std::vector<long>& shape() const { return shape_; }
  long dim(long axis) const;

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }

  cplx& operator[](long flat) { return data_[static_cast<size_t>(flat)]; }
  const cplx& operator[](long flat) const { return data_[static_cast<size_t>(flat)]; }

  cplx& at(std::initializer_list<long> idx);
  const cplx& at(std::initializer_list<long> idx) const;

  bool all_finite() const;
  double max_abs() const;

  Tensor& operator*=(cplx factor);
  Tensor operator+(const Tensor& other) const;
  Tensor operator-(const Tensor& other) const;

 private:
  long flat_index(std::initializer_list<long> idx) const;

  std::vector<long> shape_;
  std::vector<cplx> data_;
};

/// Pairwise tensor contraction. `axes` lists (axis-of-a, axis-of-b) pairs;
/// the result carries the uncontracted axes of `a` followed by those of `b`.
Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<long, long>>& axes);

Tensor transpose(const Tensor& a, const std::vector<long>& perm);
Tensor reshape(const Tensor& a, std::vector<long> shape);
Tensor conj(const Tensor& a);

/// Matrix product of two rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);
/// Kronecker product of two rank-2 tensors, row-major index fusion
/// (i_a, i_b) -> i_a * dim_b + i_b on both axes.
Tensor kron(const Tensor& a, const Tensor& b);
Tensor dagger(const Tensor& m);

struct SvdResult {
  Tensor u;                // semi-unitary, rows x kept
  std::vector<double> s;   // singular values, descending, >= 0
  Tensor v_dagger;         // semi-unitary, kept x cols
  double discarded_weight = 0.0;  // sum of squared dropped singular values
};

/// Truncated SVD of a rank-2 tensor. At most `chi_max` values are kept and
/// values with s_i / s_1 < rel_tol are dropped as well. Values below
/// 1e-14 * s_1 are always treated as zero. At least one value is kept so
/// factor shapes stay valid.
SvdResult svd_truncate(const Tensor& m, long chi_max, double rel_tol);

/// exp(scale * h) of a Hermitian rank-2 tensor with dimension <= 16,
/// evaluated through the unitary eigendecomposition of h.
Tensor matrix_exp(const Tensor& h, cplx scale);

/// Directional derivative of the exponential map,
/// d/de exp(scale * (h + e*x)) at e = 0, for Hermitian h (same size limits
/// as matrix_exp). Evaluated exactly through divided differences in the
/// eigenbasis of h.
Tensor matrix_exp_derivative(const Tensor& h, cplx scale, const Tensor& x);

}  // namespace mpsqnn
