#include <doctest.h>

#include "support/reference.hpp"

#include "mpsqnn/experiment.hpp"

using namespace mpsqnn;

namespace {

NetworkConfig make_cfg(int width, int depth, const PauliCoeffTable& t) {
  NetworkConfig cfg;
  cfg.width = width;
  cfg.depth = depth;
  cfg.dt = 0.1;
  cfg.chi_mps = 64;
  cfg.chi_mpo = 64;
  cfg.coeffs = t;
  return cfg;
}

}  // namespace

TEST_CASE("loss: named values") {
  CHECK(loss({{0.2, 0.2}, {-0.1, -0.1}}) == doctest::Approx(0.0));
  CHECK(loss({{0.3, 0.1}}) == doctest::Approx(0.04));
  CHECK(loss({{0.5, 0.0}, {-0.5, 0.0}}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(loss({}), ParameterError);
}

TEST_CASE("magnetization difference and loss consistency") {
  CHECK(magnetization_difference(0.2, 0.2) == 0.0);
  CHECK(magnetization_difference(0.2, -0.1) == doctest::Approx(0.3));
  const std::vector<std::pair<double, double>> outs = {{0.27, 0.1}, {-0.4, 0.2}, {0.0, 0.05}};
  double acc = 0.0;
  for (auto [a, t] : outs) acc += std::pow(magnetization_difference(a, t), 2);
  CHECK(loss(outs) == doctest::Approx(acc / 3.0));
}

TEST_CASE("update direction vanishes at a stationary point") {
  NetworkConfig cfg = make_cfg(3, 2, random_table(0.5, 3000));
  const std::vector<InputSpec> inputs = {{0.2, 0.0}, {-0.3, 0.0}, {0.45, 0.0}};
  // Targets generated by the network itself: every magnetization difference
  // is exactly zero.
  const std::vector<TrainingPair> pairs = generate_training_data(cfg, inputs);
  const UpdateDirection dir = compute_update_direction(pairs, cfg, ParamMask::full());
  for (int a = 0; a < 16; ++a) {
    CHECK(dir.d_tilde[static_cast<size_t>(a)] == 0.0);
    CHECK(dir.x_tilde[static_cast<size_t>(a)] == 0.0);
    CHECK(dir.y_tilde[static_cast<size_t>(a)] == 0.0);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  NetworkConfig cfg = make_cfg(2, 2, random_table(0.5, 3001));
  const std::vector<TrainingPair> pairs = {{{0.3, 0.0}, 0.1}, {{-0.2, 0.4}, -0.25}};
  const GradientCheckResult res =
      finite_difference_gradient_check(cfg, pairs, ParamMask::full(), 1e-5, 1e-4, 2);
  CHECK(res.n_checked == 48);
  CHECK(res.pass);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("analytic gradient: W=3 instance with depth 3") {
  NetworkConfig cfg = make_cfg(3, 3, random_table(0.4, 3002));
  const std::vector<TrainingPair> pairs = {{{0.1, 0.0}, -0.2}, {{-0.45, 0.0}, 0.3}};
  const GradientCheckResult res =
      finite_difference_gradient_check(cfg, pairs, ParamMask::full(), 1e-5, 1e-4, 2);
  CHECK(res.pass);
}

TEST_CASE("masked components stay exactly zero") {
  NetworkConfig cfg = make_cfg(3, 2, random_table(0.5, 3003));
  const std::vector<TrainingPair> pairs = {{{0.3, 0.0}, 0.0}, {{-0.1, 0.0}, 0.2}};
  const UpdateDirection dir = compute_update_direction(pairs, cfg, ParamMask::jump_x());
  for (int a = 0; a < 16; ++a) {
    CHECK(dir.d_tilde[static_cast<size_t>(a)] == 0.0);
    if (a != 1) {
      CHECK(dir.x_tilde[static_cast<size_t>(a)] == 0.0);
      CHECK(dir.y_tilde[static_cast<size_t>(a)] == 0.0);
    }
  }
  // The unmasked component is generically active.
  CHECK(std::abs(dir.x_tilde[1]) + std::abs(dir.y_tilde[1]) > 0.0);
}

TEST_CASE("identity-insertion Hamiltonian component vanishes") {
  // Shifting d^(0,0) only adds a global phase to the gate, so both the
  // analytic entry and the finite difference are zero.
  NetworkConfig cfg = make_cfg(2, 2, random_table(0.5, 3004));
  const std::vector<TrainingPair> pairs = {{{0.25, 0.0}, -0.1}};
  const UpdateDirection dir = compute_update_direction(pairs, cfg, ParamMask::full());
  CHECK(std::abs(dir.d_tilde[0]) < 1e-12);

  NetworkConfig shifted = cfg;
  shifted.coeffs.d[0] += 1e-3;
  CHECK(dense_loss(cfg, pairs) == doctest::Approx(dense_loss(shifted, pairs)).epsilon(1e-12));
}

TEST_CASE("one gradient step with small eps does not increase the loss") {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    NetworkConfig cfg = make_cfg(2, 2, random_table(0.5, 3100 + seed));
    const std::vector<TrainingPair> pairs = {{{0.3, 0.0}, -0.2}, {{-0.4, 0.0}, 0.25}};
    const UpdateDirection dir = compute_update_direction(pairs, cfg, ParamMask::full());
    NetworkConfig moved = cfg;
    moved.coeffs = apply_update(cfg.coeffs, dir, 1e-6);
    const double before = dense_loss(cfg, pairs);
    const double after = dense_loss(moved, pairs);
    CHECK((after - before) / 1e-6 <= 1e-8);
  }
}

TEST_CASE("apply_update: eps = 0 leaves the table unchanged") {
  PauliCoeffTable t = random_table(0.5, 3200);
  UpdateDirection dir;
  dir.d_tilde.fill(0.3);
  dir.x_tilde.fill(-0.2);
  dir.y_tilde.fill(0.7);
  const PauliCoeffTable out = apply_update(t, dir, 0.0);
  for (size_t a = 0; a < 16; ++a) {
    CHECK(out.c[a] == t.c[a]);
    CHECK(out.d[a] == t.d[a]);
  }
}

TEST_CASE("sandwich-form and shift-form gates differ at order eps * dt^{3/2}") {
  PauliCoeffTable t = random_table(0.6, 4242);
  UpdateDirection dir;
  dir.x_tilde[5] = 0.8;
  dir.y_tilde[6] = -0.5;
  dir.d_tilde[3] = 0.4;
  dir.x_tilde[9] = -0.3;

  auto gate_diff = [&](double eps, double dt) {
    const Tensor a = build_updated_local_gate(t, dir, eps, dt, 2, 4,
                                              GateUpdateForm::parameter_shift);
    const Tensor b = build_updated_local_gate(t, dir, eps, dt, 2, 4,
                                              GateUpdateForm::sandwich);
    return (a - b).max_abs();
  };

  // Linear in eps at fixed dt.
  const double d2 = gate_diff(1e-2, 0.1);
  const double d3 = gate_diff(1e-3, 0.1);
  CHECK(d2 / d3 == doctest::Approx(10.0).epsilon(0.15));
  // Bounded by a modest multiple of eps * dt^{3/2} across epsilon and dt.
  // (The coefficient is the nested coupling commutator; tables with exact
  // symmetries can decay even faster.)
  for (double eps : {1e-1, 1e-2, 1e-3})
    for (double dt : {0.1, 0.025})
      CHECK(gate_diff(eps, dt) < 8.0 * eps * std::pow(dt, 1.5));
  // Approaches the dt^{3/2} rate from below as dt shrinks.
  const double r1 = gate_diff(1e-3, 0.1) / gate_diff(1e-3, 0.025);
  CHECK(r1 > 5.0);
  CHECK(r1 < 17.0);
  // Both forms stay unitary.
  const Tensor g = build_updated_local_gate(t, dir, 0.1, 0.1, 2, 4, GateUpdateForm::sandwich);
  const Tensor defect = matmul(dagger(g), g) - Tensor::identity(8);
  CHECK(defect.max_abs() < 1e-12);
}

TEST_CASE("train: zero rounds returns a single record of initial losses") {
  NetworkConfig cfg = make_cfg(2, 2, ising_coeffs({1.0, 1.0, 1.0}));
  const std::vector<TrainingPair> pairs = {{{0.3, 0.0}, 0.0}, {{-0.2, 0.0}, 0.1}};
  const std::vector<TrainRecord> recs = train(pairs, pairs, cfg, 0, 1.0, ParamMask::jump_x());
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].round == 0);
  CHECK(recs[0].train_loss >= 0.0);
  CHECK(recs[0].train_loss == doctest::Approx(recs[0].val_loss));
}

TEST_CASE("train: small teacher/student run reduces the loss") {
  NetworkConfig teacher = make_cfg(2, 3, ising_coeffs({1.5, 2.0, 1.0}));
  const std::vector<TrainingPair> pairs =
      generate_training_data(teacher, uniform_inputs(6, -0.5, 0.5, 0.0));

  NetworkConfig student = teacher;
  student.coeffs = student_initial_table({1.5, 2.0, 1.0}, "ypauli");
  const std::vector<TrainRecord> recs =
      train(pairs, {}, student, 6, 1.0, ParamMask::jump_x(), 2);
  REQUIRE(recs.size() == 7);
  CHECK(recs.back().train_loss < recs.front().train_loss);
}

TEST_CASE("generate_training_data: identity and pure-decay teachers") {
  PauliCoeffTable zero;
  NetworkConfig id_teacher = make_cfg(3, 4, zero);
  const std::vector<InputSpec> inputs = uniform_inputs(5, -0.5, 0.5, 0.0);
  for (const TrainingPair& p : generate_training_data(id_teacher, inputs))
    CHECK(p.target_mz == doctest::Approx(p.input.mz_in).epsilon(1e-12));

  NetworkConfig decay = make_cfg(3, 4, ising_coeffs({0.0, 0.0, 1.0}));
  const double c2 = std::pow(std::cos(std::sqrt(0.1)), 2.0);
  for (const TrainingPair& p : generate_training_data(decay, inputs)) {
    const double expect = 0.5 - (0.5 - p.input.mz_in) * std::pow(c2, 4);
    CHECK(p.target_mz == doctest::Approx(expect).epsilon(1e-9));
  }
}
