#include "mpsqnn/channels.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace mpsqnn {

namespace {

using Eigen::MatrixXcd;

void check_finite(const DoubledMps& s, int layer) {
  for (const Tensor& t : s.sites)
    if (!t.all_finite())
      throw NumericalError("non-finite MPS entries after layer " + std::to_string(layer));
}

// Per-site closed transfer matrices for the trace pairing (vectorized
// identity) and the sigma^z insertion.
MatrixXcd site_transfer(const Tensor& site, const cplx w0, const cplx w3) {
  const long l = site.dim(0), r = site.dim(2);
  MatrixXcd m = MatrixXcd::Zero(l, r);
  for (long a = 0; a < l; ++a)
    for (long b = 0; b < r; ++b)
      m(a, b) = w0 * site[(a * 4 + 0) * r + b] + w3 * site[(a * 4 + 3) * r + b];
  return m;
}

}  // namespace

DoubledMps product_input_mps(const InputSpec& spec, int width) {
  if (width < 2) throw ParameterError("width must be >= 2");
  if (std::abs(spec.mz_in) > 0.5)
    throw ParameterError("input magnetization must lie in [-1/2, 1/2]");
  const double theta = std::acos(2.0 * spec.mz_in);
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  const cplx phase = std::exp(cplx(0.0, -spec.phi));
  Tensor site({1, 4, 1});
  site[0] = c * c;
  site[1] = c * s * phase;
  site[2] = c * s * std::conj(phase);
  site[3] = s * s;
  DoubledMps out;
  out.sites.assign(static_cast<size_t>(width), site);
  out.ortho_center.reset();
  return out;
}

DoubledMps error_operator_mps(double m_out, int width) {
  if (width < 2) throw ParameterError("width must be >= 2");
  if (!std::isfinite(m_out)) throw ParameterError("m_out must be finite");

  const double wz = 1.0 / (2.0 * width);
  // Fused-basis components: W_z = (delta_{t0} - delta_{t3})/(2W), U = delta_{t0} + delta_{t3}.
  const double wzc[4] = {wz, 0.0, 0.0, -wz};
  const double uc[4] = {1.0, 0.0, 0.0, 1.0};

  DoubledMps out;
  {
    Tensor t({1, 4, 2});
    for (long p = 0; p < 4; ++p) {
      t[p * 2 + 0] = wzc[p];
      t[p * 2 + 1] = uc[p];
    }
    out.sites.push_back(std::move(t));
  }
  for (int j = 2; j <= width - 1; ++j) {
    Tensor t({j, 4, j + 1});
    for (long p = 0; p < 4; ++p) {
      for (long i = 0; i + 1 < j; ++i) t[(i * 4 + p) * (j + 1) + i] = uc[p];
      t[((j - 1) * 4 + p) * (j + 1) + (j - 1)] = wzc[p];
      t[((j - 1) * 4 + p) * (j + 1) + j] = uc[p];
    }
    out.sites.push_back(std::move(t));
  }
  {
    Tensor t({width, 4, 1});
    for (long p = 0; p < 4; ++p) {
      for (long i = 0; i + 1 < width; ++i) t[(i * 4 + p) * 1] = uc[p];
      t[((width - 1) * 4 + p) * 1] = wzc[p] - m_out * uc[p];
    }
    out.sites.push_back(std::move(t));
  }
  out.ortho_center.reset();
  return out;
}

ForwardResult propagate_forward(const DoubledMps& s, const NetworkConfig& cfg,
                                int layers, const ForwardOptions& opt) {
  return propagate_forward(s, cfg, build_forward_mpo(cfg), layers, opt);
}

ForwardResult propagate_forward(const DoubledMps& s, const NetworkConfig& cfg,
                                const LayerMpo& forward, int layers,
                                const ForwardOptions& opt) {
  cfg.validate();
  validate_mps(s);
  if (s.width() != cfg.width) throw DimensionError("state width does not match config");
  if (layers < 0) throw ParameterError("layer count must be non-negative");

  ForwardResult res;
  res.state = s;
  res.trace.mz_per_layer.push_back(measure_mz(res.state));
  res.trace.trace_defect_per_layer.push_back(0.0);
  res.trace.max_bond_per_layer.push_back(res.state.max_bond());
  if (opt.retain_states) res.layer_states.push_back(res.state);

  for (int l = 1; l <= layers; ++l) {
    ApplyResult applied = apply_mpo(forward, res.state, cfg.chi_mps);
    res.state = std::move(applied.state);
    check_finite(res.state, l);

    const cplx tr = trace_pairing(res.state);
    const double defect = std::abs(tr - cplx(1.0));
    if (opt.renormalize) {
      if (std::abs(tr) < 1e-300)
        throw NumericalError("vanishing trace at layer " + std::to_string(l));
      scale_state(res.state, cplx(1.0) / tr);
    }
    res.trace.mz_per_layer.push_back(measure_mz(res.state));
    res.trace.trace_defect_per_layer.push_back(defect);
    res.trace.max_bond_per_layer.push_back(res.state.max_bond());
    if (opt.retain_states) res.layer_states.push_back(res.state);

    if (std::abs(res.trace.mz_per_layer.back()) > 0.5 + 1e-6)
      throw NumericalError("magnetization left [-1/2, 1/2] at layer " + std::to_string(l));
  }
  return res;
}

std::vector<DoubledMps> propagate_backward(const DoubledMps& e, const NetworkConfig& cfg,
                                           int layers) {
  return propagate_backward(e, cfg, build_backward_mpo(cfg), layers);
}

std::vector<DoubledMps> propagate_backward(const DoubledMps& e, const NetworkConfig& cfg,
                                           const LayerMpo& backward, int layers) {
  cfg.validate();
  validate_mps(e);
  if (e.width() != cfg.width) throw DimensionError("operator width does not match config");
  if (layers < 0) throw ParameterError("layer count must be non-negative");

  std::vector<DoubledMps> out;
  out.reserve(static_cast<size_t>(layers));
  DoubledMps cur = e;
  for (int l = 1; l <= layers; ++l) {
    ApplyResult applied = apply_mpo(backward, cur, cfg.chi_mps);
    cur = std::move(applied.state);
    check_finite(cur, l);
    out.push_back(cur);
  }
  return out;
}

double measure_mz(const DoubledMps& s) {
  validate_mps(s);
  const int w = s.width();

  std::vector<MatrixXcd> id_t(static_cast<size_t>(w));
  for (int i = 0; i < w; ++i) id_t[static_cast<size_t>(i)] = site_transfer(s.sites[i], 1.0, 1.0);

  // Prefix products of identity transfers; prefix[i] covers sites < i.
  std::vector<Eigen::RowVectorXcd> prefix(static_cast<size_t>(w) + 1);
  prefix[0] = Eigen::RowVectorXcd::Ones(1);
  for (int i = 0; i < w; ++i) prefix[static_cast<size_t>(i) + 1] = prefix[static_cast<size_t>(i)] * id_t[static_cast<size_t>(i)];
  std::vector<Eigen::VectorXcd> suffix(static_cast<size_t>(w) + 1);
  suffix[static_cast<size_t>(w)] = Eigen::VectorXcd::Ones(1);
  for (int i = w - 1; i >= 0; --i)
    suffix[static_cast<size_t>(i)] = id_t[static_cast<size_t>(i)] * suffix[static_cast<size_t>(i) + 1];

  const cplx trace = prefix[static_cast<size_t>(w)](0);
  if (std::abs(trace) < 1e-300) throw NumericalError("state has vanishing trace");

  cplx acc = 0.0;
  for (int k = 0; k < w; ++k) {
    const MatrixXcd mz_t = site_transfer(s.sites[k], 1.0, -1.0);
    acc += (prefix[static_cast<size_t>(k)] * mz_t * suffix[static_cast<size_t>(k) + 1])(0);
  }
  const cplx value = acc / (2.0 * static_cast<double>(w) * trace);
  if (std::abs(value.imag()) > 1e-8)
    throw NumericalError("magnetization has imaginary residue (conjugation convention?)");
  return value.real();
}

HistogramReport classify_magnetizations(const std::vector<double>& mz, int nbins,
                                        double lo, double hi) {
  if (nbins < 1) throw ParameterError("histogram needs at least one bin");
  if (!(hi > lo)) throw ParameterError("histogram range is empty");

  HistogramReport rep;
  rep.centers.resize(static_cast<size_t>(nbins));
  rep.counts.assign(static_cast<size_t>(nbins), 0);
  rep.labels.assign(static_cast<size_t>(nbins), 'U');
  const double step = (hi - lo) / nbins;
  for (int i = 0; i < nbins; ++i) rep.centers[static_cast<size_t>(i)] = lo + (i + 0.5) * step;
  for (double v : mz) {
    int b = static_cast<int>(std::floor((v - lo) / step));
    b = std::clamp(b, 0, nbins - 1);
    rep.counts[static_cast<size_t>(b)]++;
  }

  // Local maxima with plateau merging: a run of equal counts is one candidate
  // peak if the neighbouring differing counts are both smaller.
  std::vector<int> peaks;
  for (int i = 0; i < nbins;) {
    int j = i;
    while (j + 1 < nbins && rep.counts[static_cast<size_t>(j + 1)] == rep.counts[static_cast<size_t>(i)]) ++j;
    const long c = rep.counts[static_cast<size_t>(i)];
    const bool left_ok = (i == 0) || (rep.counts[static_cast<size_t>(i - 1)] < c);
    const bool right_ok = (j == nbins - 1) || (rep.counts[static_cast<size_t>(j + 1)] < c);
    if (c > 0 && left_ok && right_ok) peaks.push_back((i + j) / 2);
    i = j + 1;
  }

  // Select the bimodal pair maximizing the smaller peak, then the pair sum.
  long best_min = -1, best_sum = -1;
  for (size_t a = 0; a < peaks.size(); ++a)
    for (size_t b = a + 1; b < peaks.size(); ++b) {
      const int p = peaks[a], q = peaks[b];
      long trough = rep.counts[static_cast<size_t>(p)];
      int tpos = p;
      for (int i = p + 1; i < q; ++i)
        if (rep.counts[static_cast<size_t>(i)] < trough) {
          trough = rep.counts[static_cast<size_t>(i)];
          tpos = i;
        }
      const long small = std::min(rep.counts[static_cast<size_t>(p)], rep.counts[static_cast<size_t>(q)]);
      if (q > p + 1 && static_cast<double>(trough) < 0.6 * static_cast<double>(small)) {
        const long sum = rep.counts[static_cast<size_t>(p)] + rep.counts[static_cast<size_t>(q)];
        if (small > best_min || (small == best_min && sum > best_sum)) {
          best_min = small;
          best_sum = sum;
          rep.bimodal = true;
          rep.peak_low = p;
          rep.peak_high = q;
          rep.trough = tpos;
        }
      }
    }

  if (rep.bimodal) {
    const long small = std::min(rep.counts[static_cast<size_t>(rep.peak_low)],
                                rep.counts[static_cast<size_t>(rep.peak_high)]);
    rep.score = 1.0 - static_cast<double>(rep.counts[static_cast<size_t>(rep.trough)]) /
                          static_cast<double>(small);
    for (int i = 0; i < nbins; ++i) {
      char lab;
      if (i <= rep.peak_low) lab = 'A';
      else if (i >= rep.peak_high) lab = 'B';
      else if (static_cast<double>(rep.counts[static_cast<size_t>(i)]) < 0.6 * static_cast<double>(small))
        lab = 'U';
      else
        lab = (i < rep.trough) ? 'A' : (i > rep.trough ? 'B' : 'U');
      rep.labels[static_cast<size_t>(i)] = lab;
    }
  }
  return rep;
}

}  // namespace mpsqnn
