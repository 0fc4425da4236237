#include "mpsqnn/training.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "mpsqnn/parallel.hpp"

namespace mpsqnn {

namespace {

const cplx kI(0.0, 1.0);

struct PairData {
  std::vector<DoubledMps> rho;    // rho_0 .. rho_L
  std::vector<DoubledMps> sigma;  // sigma[l-1] = sigma_l for l = 1..L
  double c_tilde = 0.0;
};

struct EvalResult {
  std::vector<PairData> data;
  double loss_value = 0.0;
};

// Forward pass (with retention when gradients are needed), backward pass of
// the per-pair error operator, and the magnetization difference.
EvalResult eval_pairs(const std::vector<TrainingPair>& pairs, const NetworkConfig& cfg,
                      const LayerMpo& fwd, const LayerMpo& bwd, bool with_backward,
                      int threads) {
  if (pairs.empty()) throw ParameterError("training pair set must be non-empty");
  EvalResult res;
  res.data.resize(pairs.size());
  const int depth = cfg.depth;

  parallel_for(static_cast<long>(pairs.size()), threads, [&](long x) {
    const TrainingPair& pair = pairs[static_cast<size_t>(x)];
    PairData& d = res.data[static_cast<size_t>(x)];
    ForwardOptions opt;
    opt.retain_states = with_backward;
    const DoubledMps in = product_input_mps(pair.input, cfg.width);
    ForwardResult f = propagate_forward(in, cfg, fwd, depth, opt);
    const double actual = f.trace.mz_per_layer.back();
    d.c_tilde = magnetization_difference(actual, pair.target_mz);
    if (with_backward) {
      d.rho = std::move(f.layer_states);
      const DoubledMps e = error_operator_mps(pair.target_mz, cfg.width);

      // Convention tripwire: the bilinear pairing of the error operator with
      // the output state must reproduce C~ up to truncation, and be real.
      const cplx paired = flat_overlap(e, d.rho.back());
      if (std::abs(paired.imag()) > 1e-8 * std::max(1.0, std::abs(paired)))
        throw NumericalError("imaginary residue in error-operator pairing");

      std::vector<DoubledMps> backs = propagate_backward(e, cfg, bwd, depth - 1);
      d.sigma.resize(static_cast<size_t>(depth));
      d.sigma[static_cast<size_t>(depth - 1)] = e;
      for (int l = 1; l <= depth - 1; ++l)
        d.sigma[static_cast<size_t>(l - 1)] = std::move(backs[static_cast<size_t>(depth - 1 - l)]);
    }
  });

  std::vector<std::pair<double, double>> outs;
  outs.reserve(pairs.size());
  for (size_t x = 0; x < pairs.size(); ++x)
    outs.emplace_back(res.data[x].c_tilde + pairs[x].target_mz, pairs[x].target_mz);
  res.loss_value = loss(outs);
  return res;
}

// One gradient MPO per (k, alpha, kind), shared across pairs and layers.
struct GradientMpos {
  struct Entry {
    int k = 0;
    int alpha = 0;  // a1*4 + a2
    LayerMpo u, vp, vm;
    bool has_u = false, has_v = false;
  };
  std::vector<Entry> entries;
};

GradientMpos build_gradient_mpos(const NetworkConfig& cfg, const ParamMask& mask) {
  GradientMpos out;
  for (int k = 1; k <= cfg.width; ++k)
    for (int a = 0; a < 16; ++a) {
      const int a1 = a / 4, a2 = a % 4;
      if (!mask.hamiltonian[static_cast<size_t>(a)] && !mask.jump[static_cast<size_t>(a)]) continue;
      if (k == 1 && a1 != 0) continue;  // vanishing boundary contribution
      GradientMpos::Entry e;
      e.k = k;
      e.alpha = a;
      if (mask.hamiltonian[static_cast<size_t>(a)]) {
        auto mpo = build_gradient_mpo(cfg, k, a1, a2, GradientKind::hamiltonian);
        e.u = std::move(*mpo);
        e.has_u = true;
      }
      if (mask.jump[static_cast<size_t>(a)]) {
        e.vp = std::move(*build_gradient_mpo(cfg, k, a1, a2, GradientKind::jump_plus));
        e.vm = std::move(*build_gradient_mpo(cfg, k, a1, a2, GradientKind::jump_minus));
        e.has_v = true;
      }
      out.entries.push_back(std::move(e));
    }
  return out;
}

UpdateDirection assemble_direction(const std::vector<PairData>& data,
                                   const NetworkConfig& cfg, const ParamMask& mask,
                                   int threads) {
  const double p = static_cast<double>(data.size());
  const GradientMpos mpos = build_gradient_mpos(cfg, mask);

  struct Partial {
    std::array<double, 16> d{}, x{}, y{};
  };
  std::vector<Partial> partials(data.size());

  // Each trace z pairs the gradient-MPO image of rho_{l-1} with sigma_l; the
  // Hermitian-conjugate insertion contributes the complex conjugate, so each
  // (l, k, alpha) adds 2 Re(z) to d(mz)/d(theta) and the loss gradient is
  // (4/P) sum_x C~ Re(z). The direction is its negative.
  parallel_for(static_cast<long>(data.size()), threads, [&](long xi) {
    const PairData& pd = data[static_cast<size_t>(xi)];
    Partial& acc = partials[static_cast<size_t>(xi)];
    const int depth = static_cast<int>(pd.sigma.size());
    for (int l = 1; l <= depth; ++l) {
      const DoubledMps& rho_prev = pd.rho[static_cast<size_t>(l - 1)];
      const DoubledMps& sig = pd.sigma[static_cast<size_t>(l - 1)];
      for (const GradientMpos::Entry& e : mpos.entries) {
        if (e.has_u) {
          const cplx u = sandwich_flat(sig, e.u, rho_prev);
          acc.d[static_cast<size_t>(e.alpha)] -= 4.0 * pd.c_tilde * u.real();
        }
        if (e.has_v) {
          const cplx vp = sandwich_flat(sig, e.vp, rho_prev);
          const cplx vm = sandwich_flat(sig, e.vm, rho_prev);
          acc.x[static_cast<size_t>(e.alpha)] -= 4.0 * pd.c_tilde * vp.real();
          acc.y[static_cast<size_t>(e.alpha)] -= 4.0 * pd.c_tilde * vm.real();
        }
      }
    }
  });

  UpdateDirection dir;
  dir.mask = mask;
  for (const Partial& part : partials)
    for (size_t a = 0; a < 16; ++a) {
      dir.d_tilde[a] += part.d[a] / p;
      dir.x_tilde[a] += part.x[a] / p;
      dir.y_tilde[a] += part.y[a] / p;
    }
  return dir;
}

double forward_only_loss(const std::vector<TrainingPair>& pairs, const NetworkConfig& cfg,
                         const LayerMpo& fwd, int threads) {
  std::vector<double> actual(pairs.size());
  parallel_for(static_cast<long>(pairs.size()), threads, [&](long x) {
    const DoubledMps in = product_input_mps(pairs[static_cast<size_t>(x)].input, cfg.width);
    ForwardResult f = propagate_forward(in, cfg, fwd, cfg.depth);
    actual[static_cast<size_t>(x)] = f.trace.mz_per_layer.back();
  });
  std::vector<std::pair<double, double>> outs;
  outs.reserve(pairs.size());
  for (size_t x = 0; x < pairs.size(); ++x)
    outs.emplace_back(actual[x], pairs[x].target_mz);
  return loss(outs);
}

}  // namespace

ParamMask ParamMask::full() {
  ParamMask m;
  m.hamiltonian.fill(true);
  m.jump.fill(true);
  return m;
}

ParamMask ParamMask::jump_x() {
  ParamMask m;
  m.jump[0 * 4 + 1] = true;
  return m;
}

double loss(const std::vector<std::pair<double, double>>& outputs) {
  if (outputs.empty()) throw ParameterError("loss needs at least one output pair");
  double acc = 0.0;
  for (const auto& [actual, target] : outputs) {
    const double diff = actual - target;
    acc += diff * diff;
  }
  return acc / static_cast<double>(outputs.size());
}

double magnetization_difference(double actual_mz, double target_mz) {
  return actual_mz - target_mz;
}

UpdateDirection compute_update_direction(const std::vector<TrainingPair>& pairs,
                                         const NetworkConfig& cfg, const ParamMask& mask,
                                         int threads) {
  cfg.validate();
  const LayerMpo fwd = build_forward_mpo(cfg);
  const LayerMpo bwd = build_backward_mpo(cfg);
  const EvalResult eval = eval_pairs(pairs, cfg, fwd, bwd, true, threads);
  return assemble_direction(eval.data, cfg, mask, threads);
}

PauliCoeffTable apply_update(const PauliCoeffTable& t, const UpdateDirection& dir,
                             double eps) {
  PauliCoeffTable out = t;
  for (size_t a = 0; a < 16; ++a) {
    out.c[a] += eps * cplx(dir.x_tilde[a], dir.y_tilde[a]);
    out.d[a] += eps * dir.d_tilde[a];
  }
  return out;
}

Tensor build_updated_local_gate(const PauliCoeffTable& t, const UpdateDirection& dir,
                                double eps, double dt, int k, int width,
                                GateUpdateForm form) {
  if (form == GateUpdateForm::parameter_shift)
    return build_local_gate(apply_update(t, dir, eps), dt, k, width);

  std::array<cplx, 16> c_dir{};
  std::array<double, 16> d_dir{};
  for (size_t a = 0; a < 16; ++a) {
    c_dir[a] = cplx(dir.x_tilde[a], dir.y_tilde[a]);
    d_dir[a] = dir.d_tilde[a];
  }
  const Tensor v = coupling_generator(t.c, k);
  const Tensor h = hamiltonian_generator(t.d, k);
  const Tensor v_dir = coupling_generator(c_dir, k);
  const Tensor h_dir = hamiltonian_generator(d_dir, k);

  const double sdt = std::sqrt(dt);
  const Tensor exp_v = matrix_exp(v, -kI * sdt);
  const Tensor exp_h = matrix_exp(h, -kI * dt);
  const Tensor half = matrix_exp(v_dir, -kI * (eps / 2.0) * sdt);
  const Tensor exp_h_dir = matrix_exp(h_dir, -kI * eps * dt);

  const Tensor sandwich = matmul(half, matmul(exp_v, half));
  const Tensor h_part = matmul(exp_h, exp_h_dir);
  if (k == 1) return matmul(sandwich, h_part);
  return matmul(kron(Tensor::identity(2), swap_gate()), matmul(sandwich, h_part));
}

std::vector<TrainRecord> train(const std::vector<TrainingPair>& train_pairs,
                               const std::vector<TrainingPair>& val_pairs,
                               const NetworkConfig& cfg, int rounds, double eps,
                               const ParamMask& mask, int threads) {
  cfg.validate();
  if (train_pairs.empty()) throw ParameterError("training pair set must be non-empty");
  if (rounds < 0) throw ParameterError("round count must be non-negative");

  std::vector<TrainRecord> records;
  NetworkConfig cur = cfg;

  LayerMpo fwd = build_forward_mpo(cur);
  LayerMpo bwd = build_backward_mpo(cur);
  EvalResult train_eval = eval_pairs(train_pairs, cur, fwd, bwd, rounds > 0, threads);
  double val = val_pairs.empty() ? 0.0 : forward_only_loss(val_pairs, cur, fwd, threads);
  records.push_back({0, train_eval.loss_value, val, cur.coeffs});

  for (int r = 1; r <= rounds; ++r) {
    try {
      const UpdateDirection dir = assemble_direction(train_eval.data, cur, mask, threads);
      cur.coeffs = apply_update(cur.coeffs, dir, eps);
      fwd = build_forward_mpo(cur);
      bwd = build_backward_mpo(cur);
      train_eval = eval_pairs(train_pairs, cur, fwd, bwd, r < rounds, threads);
      val = val_pairs.empty() ? 0.0 : forward_only_loss(val_pairs, cur, fwd, threads);
      if (!std::isfinite(train_eval.loss_value) || !std::isfinite(val))
        throw NumericalError("non-finite loss");
    } catch (const NumericalError& err) {
      std::cerr << "training aborted in round " << r << ": " << err.what()
                << " (keeping last good snapshot)\n";
      break;
    }
    records.push_back({r, train_eval.loss_value, val, cur.coeffs});
  }
  return records;
}

std::vector<TrainingPair> generate_training_data(const NetworkConfig& teacher,
                                                 const std::vector<InputSpec>& inputs,
                                                 int threads) {
  teacher.validate();
  const LayerMpo fwd = build_forward_mpo(teacher);
  std::vector<TrainingPair> out(inputs.size());
  parallel_for(static_cast<long>(inputs.size()), threads, [&](long x) {
    try {
      const DoubledMps in = product_input_mps(inputs[static_cast<size_t>(x)], teacher.width);
      ForwardResult f = propagate_forward(in, teacher, fwd, teacher.depth);
      out[static_cast<size_t>(x)] = {inputs[static_cast<size_t>(x)], f.trace.mz_per_layer.back()};
    } catch (const std::exception& e) {
      throw NumericalError("teacher propagation failed for input " + std::to_string(x) +
                           ": " + e.what());
    }
  });
  return out;
}

}  // namespace mpsqnn
