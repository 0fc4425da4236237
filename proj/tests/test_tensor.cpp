#include <doctest.h>

#include <Eigen/Dense>

#include "support/reference.hpp"

using namespace mpsqnn;

namespace {

double max_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (long i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("contract: identity acting on a basis vector") {
  Tensor id = Tensor::identity(2);
  Tensor v({2}, {1.0, 0.0});
  Tensor out = contract(id, v, {{1, 0}});
  CHECK(out.shape() == std::vector<long>{2});
  CHECK(std::abs(out[0] - cplx(1.0)) < 1e-15);
  CHECK(std::abs(out[1]) < 1e-15);
}

TEST_CASE("contract: matrix against its inverse gives the identity") {
  Tensor a = testref::random_tensor({5, 5}, 42);
  Eigen::MatrixXcd m(5, 5);
  for (long i = 0; i < 5; ++i)
    for (long j = 0; j < 5; ++j) m(i, j) = a[i * 5 + j];
  const Eigen::MatrixXcd minv = m.inverse();
  Tensor b({5, 5});
  for (long i = 0; i < 5; ++i)
    for (long j = 0; j < 5; ++j) b[i * 5 + j] = minv(i, j);
  Tensor prod = contract(a, b, {{1, 0}});
  CHECK(max_diff(prod, Tensor::identity(5)) < 1e-12);
}

TEST_CASE("contract matches the nested-loop oracle") {
  Tensor a = testref::random_tensor({4, 3, 2}, 7);
  Tensor b = testref::random_tensor({2, 5}, 8);
  CHECK(max_diff(contract(a, b, {{2, 0}}), testref::naive_contract(a, b, {{2, 0}})) < 1e-12);

  Tensor c = testref::random_tensor({3, 4, 2, 3}, 9);
  Tensor d = testref::random_tensor({2, 3, 5}, 10);
  CHECK(max_diff(contract(c, d, {{2, 0}, {3, 1}}),
                 testref::naive_contract(c, d, {{2, 0}, {3, 1}})) < 1e-12);
}

TEST_CASE("contract is bilinear") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Tensor a = testref::random_tensor({3, 4}, 100 + seed);
    Tensor a2 = testref::random_tensor({3, 4}, 200 + seed);
    Tensor b = testref::random_tensor({4, 2}, 300 + seed);
    Tensor lhs = contract(a + a2, b, {{1, 0}});
    Tensor rhs = contract(a, b, {{1, 0}}) + contract(a2, b, {{1, 0}});
    CHECK(max_diff(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("contract rejects mismatched axis lengths") {
  Tensor a = testref::random_tensor({3, 4}, 1);
  Tensor b = testref::random_tensor({5, 2}, 2);
  CHECK_THROWS_AS(contract(a, b, {{1, 0}}), DimensionError);
}

TEST_CASE("svd_truncate: rank-1 matrix keeps one value") {
  Tensor u = testref::random_tensor({6}, 11);
  Tensor v = testref::random_tensor({4}, 12);
  Tensor m({6, 4});
  for (long i = 0; i < 6; ++i)
    for (long j = 0; j < 4; ++j) m[i * 4 + j] = u[i] * v[j];
  SvdResult svd = svd_truncate(m, 8, 0.0);
  CHECK(svd.s.size() == 1);
  CHECK(svd.discarded_weight == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("svd_truncate: identity with chi_max 2 drops weight 2") {
  SvdResult svd = svd_truncate(Tensor::identity(4), 2, 0.0);
  REQUIRE(svd.s.size() == 2);
  CHECK(svd.s[0] == doctest::Approx(1.0));
  CHECK(svd.s[1] == doctest::Approx(1.0));
  CHECK(svd.discarded_weight == doctest::Approx(2.0));
}

TEST_CASE("svd_truncate: reconstruction error equals the discarded weight") {
  Tensor m = testref::random_tensor({8, 8}, 13);
  SvdResult svd = svd_truncate(m, 4, 0.0);
  const long k = static_cast<long>(svd.s.size());
  Tensor us = svd.u;
  for (long i = 0; i < 8; ++i)
    for (long j = 0; j < k; ++j) us[i * k + j] *= svd.s[static_cast<size_t>(j)];
  Tensor rec = contract(us, svd.v_dagger, {{1, 0}});
  double err2 = 0.0;
  for (long i = 0; i < m.size(); ++i) err2 += std::norm(m[i] - rec[i]);
  CHECK(err2 == doctest::Approx(svd.discarded_weight).epsilon(1e-12));
}

TEST_CASE("svd_truncate: exact when chi_max covers the rank") {
  Tensor m = testref::random_tensor({5, 7}, 14);
  SvdResult svd = svd_truncate(m, 64, 0.0);
  const long k = static_cast<long>(svd.s.size());
  Tensor us = svd.u;
  for (long i = 0; i < 5; ++i)
    for (long j = 0; j < k; ++j) us[i * k + j] *= svd.s[static_cast<size_t>(j)];
  CHECK(max_diff(contract(us, svd.v_dagger, {{1, 0}}), m) < 1e-12);
  CHECK(svd.discarded_weight < 1e-24);
}

TEST_CASE("svd_truncate: factors are semi-unitary and values descend") {
  Tensor m = testref::random_tensor({9, 6}, 15);
  SvdResult svd = svd_truncate(m, 4, 0.0);
  Tensor utu = contract(conj(svd.u), svd.u, {{0, 0}});
  CHECK(max_diff(utu, Tensor::identity(static_cast<long>(svd.s.size()))) < 1e-12);
  Tensor vvt = contract(svd.v_dagger, conj(svd.v_dagger), {{1, 1}});
  CHECK(max_diff(vvt, Tensor::identity(static_cast<long>(svd.s.size()))) < 1e-12);
  for (size_t i = 1; i < svd.s.size(); ++i) CHECK(svd.s[i] <= svd.s[i - 1]);
  CHECK(svd.s.back() >= 0.0);
}

TEST_CASE("svd_truncate rejects chi_max = 0") {
  CHECK_THROWS_AS(svd_truncate(Tensor::identity(2), 0, 0.0), ParameterError);
}

TEST_CASE("matrix_exp: zero generator gives the identity") {
  Tensor z({4, 4});
  CHECK(max_diff(matrix_exp(z, cplx(0.0, -1.0)), Tensor::identity(4)) < 1e-14);
}

TEST_CASE("matrix_exp: pauli rotation identity") {
  // exp(-i pi/2 sigma^x) = -i sigma^x
  Tensor out = matrix_exp(pauli(1), cplx(0.0, -M_PI / 2.0));
  Tensor expect = pauli(1);
  expect *= cplx(0.0, -1.0);
  CHECK(max_diff(out, expect) < 1e-13);
}

TEST_CASE("matrix_exp matches the scaling-and-squaring oracle") {
  Tensor a = testref::random_tensor({8, 8}, 16);
  Tensor h = a + conj(transpose(a, {1, 0}));
  Mat hm(8, 8);
  for (long i = 0; i < 8; ++i)
    for (long j = 0; j < 8; ++j) hm(i, j) = h[i * 8 + j];
  const Mat ref = matrix_exp_general(hm, cplx(0.0, -0.1));
  Tensor out = matrix_exp(h, cplx(0.0, -0.1));
  double worst = 0.0;
  for (long i = 0; i < 8; ++i)
    for (long j = 0; j < 8; ++j) worst = std::max(worst, std::abs(out[i * 8 + j] - ref(i, j)));
  CHECK(worst < 1e-12);
}

TEST_CASE("matrix_exp: forward and backward rotations cancel") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Tensor a = testref::random_tensor({6, 6}, 500 + seed);
    Tensor h = a + conj(transpose(a, {1, 0}));
    const double t = 0.1 + 0.17 * static_cast<double>(seed);
    Tensor prod = matmul(matrix_exp(h, cplx(0.0, -t)), matrix_exp(h, cplx(0.0, t)));
    CHECK(max_diff(prod, Tensor::identity(6)) < 1e-12);
  }
}

TEST_CASE("matrix_exp rejects non-Hermitian input and large dimensions") {
  Tensor bad({2, 2}, {0.0, 1.0, 0.0, 0.0});
  CHECK_THROWS_AS(matrix_exp(bad, cplx(0.0, -1.0)), ValidationError);
  CHECK_THROWS_AS(matrix_exp(Tensor::identity(32), cplx(0.0, -1.0)), ParameterError);
}

TEST_CASE("transpose and reshape round-trip") {
  Tensor a = testref::random_tensor({2, 3, 4}, 17);
  Tensor t = transpose(a, {2, 0, 1});
  CHECK(t.shape() == std::vector<long>{4, 2, 3});
  Tensor back = transpose(t, {1, 2, 0});
  CHECK(max_diff(a, back) == 0.0);
  CHECK_THROWS_AS(reshape(a, {5, 5}), DimensionError);
}
