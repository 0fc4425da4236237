#include <doctest.h>

#include "support/reference.hpp"

#include "mpsqnn/experiment.hpp"

using namespace mpsqnn;

namespace {

Vec dense_of(const DoubledMps& s) {
  const std::vector<cplx> v = densify(s);
  return Vec::Map(v.data(), static_cast<long>(v.size()));
}

NetworkConfig make_cfg(int width, const PauliCoeffTable& t, int depth = 1,
                       long chi = 256) {
  NetworkConfig cfg;
  cfg.width = width;
  cfg.depth = depth;
  cfg.dt = 0.1;
  cfg.chi_mps = chi;
  cfg.chi_mpo = 64;
  cfg.coeffs = t;
  return cfg;
}

}  // namespace

TEST_CASE("product input: Bloch poles") {
  DoubledMps up = product_input_mps({0.5, 0.0}, 3);
  for (const Tensor& site : up.sites) {
    CHECK(std::abs(site[0] - cplx(1.0)) < 1e-15);
    CHECK(std::abs(site[1]) + std::abs(site[2]) + std::abs(site[3]) < 1e-15);
  }
  DoubledMps down = product_input_mps({-0.5, 0.0}, 3);
  for (const Tensor& site : down.sites) {
    CHECK(std::abs(site[3] - cplx(1.0)) < 1e-15);
    CHECK(std::abs(site[0]) + std::abs(site[1]) + std::abs(site[2]) < 1e-15);
  }
}

TEST_CASE("product input: equator gives uniform components") {
  DoubledMps s = product_input_mps({0.0, 0.0}, 2);
  for (long p = 0; p < 4; ++p)
    CHECK(std::abs(s.sites[0][p] - cplx(0.5)) < 1e-15);
  CHECK(std::abs(trace_pairing(s) - cplx(1.0)) < 1e-15);
  CHECK_THROWS_AS(product_input_mps({0.7, 0.0}, 2), ParameterError);
}

TEST_CASE("product input reproduces its magnetization") {
  for (double m : {-0.5, -0.23, 0.0, 0.11, 0.5})
    CHECK(measure_mz(product_input_mps({m, 0.8}, 4)) == doctest::Approx(m).epsilon(1e-12));
}

TEST_CASE("error operator: W=2 hand contraction") {
  DoubledMps e = error_operator_mps(0.0, 2);
  // Coefficient of the (0,0) fused string: W_z U + U W_z = 1/4 + 1/4 = 1/2.
  const Vec v = dense_of(e);
  CHECK(std::abs(v(0) - cplx(0.5)) < 1e-15);
}

TEST_CASE("error operator: off-diagonal strings vanish") {
  DoubledMps e = error_operator_mps(0.37, 4);
  const Vec v = dense_of(e);
  long idx = 0;
  for (int k = 0; k < 4; ++k) idx = idx * 4 + 1;
  CHECK(std::abs(v(idx)) < 1e-15);
}

TEST_CASE("error operator matches the dense construction") {
  for (int width : {2, 3, 5}) {
    const double m = 0.2;
    DoubledMps e = error_operator_mps(m, width);
    const Mat mat = testref::from_doubled_vector(dense_of(e));
    const Mat ref = testref::dense_error_operator(m, width);
    CHECK((mat - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(error_operator_mps(0.0, 1), ParameterError);
}

TEST_CASE("forward propagation: identity channel keeps mz constant") {
  PauliCoeffTable zero;
  NetworkConfig cfg = make_cfg(3, zero, 10);
  ForwardResult r = propagate_forward(product_input_mps({0.17, 0.0}, 3), cfg, 10);
  for (double mz : r.trace.mz_per_layer) CHECK(mz == doctest::Approx(0.17).epsilon(1e-12));
}

TEST_CASE("forward propagation: pure-decay closed form") {
  NetworkConfig cfg = make_cfg(3, ising_coeffs({0.0, 0.0, 1.0}), 6);
  ForwardResult r = propagate_forward(product_input_mps({-0.5, 0.0}, 3), cfg, 6);
  const double c2 = std::pow(std::cos(std::sqrt(0.1)), 2.0);
  for (int l = 0; l <= 6; ++l) {
    const double expect = 0.5 - std::pow(c2, l);
    CHECK(r.trace.mz_per_layer[static_cast<size_t>(l)] ==
          doctest::Approx(expect).epsilon(1e-10));
  }
  CHECK(r.trace.mz_per_layer[1] == doctest::Approx(-0.403288).epsilon(1e-4));
}

TEST_CASE("forward propagation matches the dense channel layer by layer") {
  NetworkConfig cfg = make_cfg(4, ising_coeffs({59.0, 250.0, 1.0}), 10, 16);
  CHECK(forward_equivalence_max_error(cfg, {0.21, 0.0}, 10) < 1e-8);

  NetworkConfig rnd = make_cfg(3, random_table(0.7, 1100), 10, 16);
  CHECK(forward_equivalence_max_error(rnd, {-0.34, 0.5}, 10) < 1e-8);
}

TEST_CASE("forward propagation: trace defects stay tiny on the exact path") {
  NetworkConfig cfg = make_cfg(4, ising_coeffs({59.0, 250.0, 1.0}), 8, 16);
  ForwardResult r = propagate_forward(product_input_mps({0.05, 0.0}, 4), cfg, 8);
  for (double d : r.trace.trace_defect_per_layer) CHECK(std::abs(d) < 1e-10);
  for (double mz : r.trace.mz_per_layer) CHECK(std::abs(mz) <= 0.5 + 1e-9);
}

TEST_CASE("forward propagation: positivity witness at small width") {
  NetworkConfig cfg = make_cfg(3, random_table(0.8, 1101), 6, 64);
  ForwardOptions opt;
  opt.retain_states = true;
  ForwardResult r = propagate_forward(product_input_mps({0.4, 0.2}, 3), cfg, 6, opt);
  for (const DoubledMps& s : r.layer_states) {
    const Mat rho = testref::from_doubled_vector(dense_of(s));
    Eigen::SelfAdjointEigenSolver<Mat> es((rho + Mat(rho.adjoint())) / 2.0);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("backward propagation: identity channel fixes the error operator") {
  PauliCoeffTable zero;
  NetworkConfig cfg = make_cfg(3, zero, 4);
  DoubledMps e = error_operator_mps(0.3, 3);
  std::vector<DoubledMps> seq = propagate_backward(e, cfg, 4);
  REQUIRE(seq.size() == 4);
  const Vec ref = dense_of(e);
  for (const DoubledMps& s : seq) CHECK((dense_of(s) - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward propagation equals the dense adjoint step") {
  NetworkConfig cfg = make_cfg(3, random_table(0.7, 1102), 1);
  DoubledMps e = error_operator_mps(-0.1, 3);
  std::vector<DoubledMps> seq = propagate_backward(e, cfg, 1);
  const Mat gate = testref::dense_layer_gate(cfg);
  const Mat ref = testref::dense_adjoint_apply(gate, testref::dense_error_operator(-0.1, 3), 3);
  CHECK((testref::from_doubled_vector(dense_of(seq[0])) - ref).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("layerwise duality: backward images pair like the final error operator") {
  NetworkConfig cfg = make_cfg(3, random_table(0.6, 1103), 4, 256);
  const int depth = 4;
  ForwardOptions opt;
  opt.retain_states = true;
  opt.renormalize = false;  // exact arithmetic path
  ForwardResult f = propagate_forward(product_input_mps({0.12, 0.3}, 3), cfg, depth, opt);
  DoubledMps e = error_operator_mps(0.2, 3);
  std::vector<DoubledMps> backs = propagate_backward(e, cfg, depth - 1);

  const cplx expect = flat_overlap(e, f.layer_states.back());
  for (int l = 1; l <= depth - 1; ++l) {
    const DoubledMps& sigma_l = backs[static_cast<size_t>(depth - 1 - l)];
    const cplx got = flat_overlap(sigma_l, f.layer_states[static_cast<size_t>(l)]);
    CHECK(std::abs(got - expect) < 1e-8 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("measure_mz: named values") {
  CHECK(measure_mz(product_input_mps({0.5, 0.0}, 3)) == doctest::Approx(0.5));
  DoubledMps mixed;
  {
    Tensor site({1, 4, 1});
    site[0] = 0.5;
    site[3] = 0.5;
    mixed.sites.assign(4, site);
  }
  CHECK(measure_mz(mixed) == doctest::Approx(0.0));
}

TEST_CASE("measure_mz normalizes unnormalized states first") {
  DoubledMps s = product_input_mps({0.2, 0.0}, 3);
  scale_state(s, 3.7);
  CHECK(measure_mz(s) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("histogram: synthetic bimodal and unimodal data") {
  std::vector<double> bimodal;
  for (int i = 0; i < 50; ++i) bimodal.push_back(-0.30 + 0.004 * (i % 5));
  for (int i = 0; i < 40; ++i) bimodal.push_back(0.35 + 0.004 * (i % 5));
  for (int i = 0; i < 4; ++i) bimodal.push_back(-0.02 + 0.01 * i);
  HistogramReport rep = classify_magnetizations(bimodal);
  CHECK(rep.bimodal);
  CHECK(rep.peak_low < rep.trough);
  CHECK(rep.trough < rep.peak_high);
  CHECK(rep.labels[static_cast<size_t>(rep.peak_low)] == 'A');
  CHECK(rep.labels[static_cast<size_t>(rep.peak_high)] == 'B');

  std::vector<double> unimodal;
  for (int i = 0; i < 200; ++i) unimodal.push_back(0.1 * std::sin(i * 0.7) * 0.3);
  HistogramReport rep2 = classify_magnetizations(unimodal);
  CHECK_FALSE(rep2.bimodal);
  for (char c : rep2.labels) CHECK(c == 'U');
}

TEST_CASE("histogram: counts land in the right bins") {
  HistogramReport rep = classify_magnetizations({-0.49, 0.49, 0.0, 0.0}, 4);
  CHECK(rep.counts[0] == 1);
  CHECK(rep.counts[2] == 2);
  CHECK(rep.counts[3] == 1);
}
