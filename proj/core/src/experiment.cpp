#include "mpsqnn/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "mpsqnn/parallel.hpp"

namespace mpsqnn {

namespace {

using nlohmann::json;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex_hash(uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

class KeyReader {
 public:
  explicit KeyReader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ParameterError("config line " + std::to_string(lineno) + " has no '='");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ParameterError("config line " + std::to_string(lineno) + " is malformed");
      if (values_.count(key))
        throw ParameterError("duplicate config key: " + key);
      values_[key] = value;
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double num(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(it->second, &pos);
    } catch (const std::exception&) {
      throw ParameterError("config key " + key + " is not a number");
    }
    if (pos != it->second.size())
      throw ParameterError("config key " + key + " is not a number");
    return v;
  }

  long integer(const std::string& key, long fallback) {
    const double v = num(key, static_cast<double>(fallback));
    const long r = static_cast<long>(std::llround(v));
    if (static_cast<double>(r) != v)
      throw ParameterError("config key " + key + " must be an integer");
    return r;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      (void)value;
      if (!used_.count(key)) throw ParameterError("unknown config key: " + key);
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream f(path);
  if (!f) throw ParameterError("cannot open output file: " + path);
  return f;
}

void write_hash_line(std::ofstream& f, const ExperimentConfig& cfg) {
  f << "# config_hash = " << hex_hash(cfg.config_hash()) << "\n";
}

json base_report(const ExperimentConfig& cfg) {
  json j;
  j["config_hash"] = hex_hash(cfg.config_hash());
  j["config_echo"] = cfg.canonical_echo();
  return j;
}

// Per-input sweep results; failed inputs keep an error message instead.
struct SweepData {
  std::vector<PropagationTrace> traces;
  std::vector<std::string> errors;  // empty string = success
  std::vector<double> inputs_mz;
};

SweepData sweep_core(const NetworkConfig& net, const SweepSettings& sw, int threads) {
  SweepData data;
  const std::vector<InputSpec> inputs = uniform_inputs(sw.n_inputs, sw.mz_min, sw.mz_max, sw.phi);
  data.traces.resize(inputs.size());
  data.errors.assign(inputs.size(), "");
  for (const InputSpec& in : inputs) data.inputs_mz.push_back(in.mz_in);

  const LayerMpo fwd = build_forward_mpo(net);
  parallel_for(static_cast<long>(inputs.size()), threads, [&](long i) {
    try {
      const DoubledMps s = product_input_mps(inputs[static_cast<size_t>(i)], net.width);
      data.traces[static_cast<size_t>(i)] =
          propagate_forward(s, net, fwd, net.depth).trace;
    } catch (const std::exception& e) {
      data.errors[static_cast<size_t>(i)] = e.what();
    }
  });
  for (size_t i = 0; i < data.errors.size(); ++i)
    if (!data.errors[i].empty())
      std::cerr << "sweep input " << i << " failed: " << data.errors[i] << "\n";
  return data;
}

std::vector<double> layer_magnetizations(const SweepData& data, int layer) {
  std::vector<double> mz;
  for (size_t i = 0; i < data.traces.size(); ++i)
    if (data.errors[i].empty())
      mz.push_back(data.traces[i].mz_per_layer[static_cast<size_t>(layer)]);
  return mz;
}

void write_trajectories(const ExperimentConfig& cfg, const SweepData& data,
                        const std::string& dir, const std::string& name, int depth) {
  std::ofstream f = open_out(dir, name);
  write_hash_line(f, cfg);
  f << "layer,input_index,mz,trace_defect,max_bond\n";
  for (int l = 0; l <= depth; ++l)
    for (size_t i = 0; i < data.traces.size(); ++i) {
      if (!data.errors[i].empty()) continue;
      const PropagationTrace& t = data.traces[i];
      f << l << "," << i << "," << g17(t.mz_per_layer[static_cast<size_t>(l)]) << ","
        << g17(t.trace_defect_per_layer[static_cast<size_t>(l)]) << ","
        << t.max_bond_per_layer[static_cast<size_t>(l)] << "\n";
    }
}

void write_histogram(const ExperimentConfig& cfg, const HistogramReport& rep,
                     const std::string& dir, const std::string& name) {
  std::ofstream f = open_out(dir, name);
  write_hash_line(f, cfg);
  f << "bin_center,count,class_label\n";
  for (size_t b = 0; b < rep.centers.size(); ++b)
    f << g17(rep.centers[b]) << "," << rep.counts[b] << "," << rep.labels[b] << "\n";
}

// Best-bimodality layer: maximal separation score, ties to the earliest layer.
int best_bimodality_layer(const SweepData& data, const SweepSettings& sw, int depth,
                          double* best_score) {
  int best = 0;
  double score = -1.0;
  for (int l = 0; l <= depth; ++l) {
    const HistogramReport rep =
        classify_magnetizations(layer_magnetizations(data, l), sw.bins, sw.mz_min, sw.mz_max);
    if (rep.score > score + 1e-12) {
      score = rep.score;
      best = l;
    }
  }
  if (best_score) *best_score = std::max(score, 0.0);
  return best;
}

void guard_long_running(const ExperimentConfig& cfg, bool training) {
  if (cfg.long_running) return;
  if (training && (cfg.network.width > 12 || cfg.network.chi_mps > 96))
    throw ParameterError(
        "paper-scale training run requested; pass --long-running to confirm");
  if (!training && (cfg.network.width > 16 || cfg.network.depth > 200))
    throw ParameterError("paper-scale sweep requested; pass --long-running to confirm");
}

json params_json(const PauliCoeffTable& t) {
  json j;
  for (int a = 0; a < 16; ++a) {
    const std::string suffix = std::to_string(a / 4) + std::to_string(a % 4);
    j["d_" + suffix] = t.d[static_cast<size_t>(a)];
    j["x_" + suffix] = t.c[static_cast<size_t>(a)].real();
    j["y_" + suffix] = t.c[static_cast<size_t>(a)].imag();
  }
  return j;
}

}  // namespace

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::sweep: return "sweep";
    case RunMode::train: return "train";
    case RunMode::spectrum: return "spectrum";
    case RunMode::validate: return "validate";
  }
  throw ParameterError("bad mode");
}

std::string ExperimentConfig::canonical_echo() const {
  std::ostringstream o;
  o << "mode = " << mode_name(mode) << "\n";
  o << "network.width = " << network.width << "\n";
  o << "network.depth = " << network.depth << "\n";
  o << "network.dt = " << g17(network.dt) << "\n";
  o << "network.chi_mps = " << network.chi_mps << "\n";
  o << "network.chi_mpo = " << network.chi_mpo << "\n";
  if (has_ising) {
    o << "ising.omega = " << g17(ising.omega) << "\n";
    o << "ising.v = " << g17(ising.v) << "\n";
    o << "ising.kappa = " << g17(ising.kappa) << "\n";
  }
  o << "sweep.n_inputs = " << sweep.n_inputs << "\n";
  o << "sweep.mz_min = " << g17(sweep.mz_min) << "\n";
  o << "sweep.mz_max = " << g17(sweep.mz_max) << "\n";
  o << "sweep.phi = " << g17(sweep.phi) << "\n";
  o << "sweep.readout_layer = " << sweep.readout_layer << "\n";
  o << "sweep.bins = " << sweep.bins << "\n";
  o << "train.rounds = " << training.rounds << "\n";
  o << "train.eps = " << g17(training.eps) << "\n";
  o << "train.mask = " << training.mask << "\n";
  o << "train.n_train = " << training.n_train << "\n";
  o << "train.n_val = " << training.n_val << "\n";
  o << "teacher.omega = " << g17(training.teacher.omega) << "\n";
  o << "teacher.v = " << g17(training.teacher.v) << "\n";
  o << "teacher.kappa = " << g17(training.teacher.kappa) << "\n";
  o << "student.omega = " << g17(training.student.omega) << "\n";
  o << "student.v = " << g17(training.student.v) << "\n";
  o << "student.kappa = " << g17(training.student.kappa) << "\n";
  o << "student.jump = " << training.student_jump << "\n";
  o << "spectrum.gap_threshold = " << g17(spectrum.gap_threshold) << "\n";
  o << "validate.n_tables = " << validation.n_tables << "\n";
  o << "validate.layers = " << validation.layers << "\n";
  o << "rng_seed = " << rng_seed << "\n";
  return o.str();
}

uint64_t ExperimentConfig::config_hash() const { return fnv1a(canonical_echo()); }

ExperimentConfig parse_config_text(const std::string& text) {
  KeyReader r(text);
  ExperimentConfig cfg;

  const std::string mode = r.str("mode", "sweep");
  if (mode == "sweep") cfg.mode = RunMode::sweep;
  else if (mode == "train") cfg.mode = RunMode::train;
  else if (mode == "spectrum") cfg.mode = RunMode::spectrum;
  else if (mode == "validate") cfg.mode = RunMode::validate;
  else throw ParameterError("unknown mode: " + mode);

  cfg.network.width = static_cast<int>(r.integer("network.width", 4));
  cfg.network.depth = static_cast<int>(r.integer("network.depth", 10));
  cfg.network.dt = r.num("network.dt", 0.1);
  cfg.network.chi_mps = r.integer("network.chi_mps", 64);
  cfg.network.chi_mpo = r.integer("network.chi_mpo", 16);

  cfg.has_ising = r.has("ising.omega") || r.has("ising.v") || r.has("ising.kappa");
  cfg.ising.omega = r.num("ising.omega", 0.0);
  cfg.ising.v = r.num("ising.v", 0.0);
  cfg.ising.kappa = r.num("ising.kappa", 1.0);

  cfg.sweep.n_inputs = static_cast<int>(r.integer("sweep.n_inputs", 200));
  cfg.sweep.mz_min = r.num("sweep.mz_min", -0.5);
  cfg.sweep.mz_max = r.num("sweep.mz_max", 0.5);
  cfg.sweep.phi = r.num("sweep.phi", 0.0);
  cfg.sweep.readout_layer = static_cast<int>(r.integer("sweep.readout_layer", -1));
  cfg.sweep.bins = static_cast<int>(r.integer("sweep.bins", 40));

  cfg.training.rounds = static_cast<int>(r.integer("train.rounds", 20));
  cfg.training.eps = r.num("train.eps", 10.0);
  cfg.training.mask = r.str("train.mask", "jump_x");
  cfg.training.n_train = static_cast<int>(r.integer("train.n_train", 20));
  cfg.training.n_val = static_cast<int>(r.integer("train.n_val", 10));
  cfg.training.teacher.omega = r.num("teacher.omega", 70.0);
  cfg.training.teacher.v = r.num("teacher.v", 250.0);
  cfg.training.teacher.kappa = r.num("teacher.kappa", 1.0);
  cfg.training.student.omega = r.num("student.omega", cfg.training.teacher.omega);
  cfg.training.student.v = r.num("student.v", cfg.training.teacher.v);
  cfg.training.student.kappa = r.num("student.kappa", cfg.training.teacher.kappa);
  cfg.training.student_jump = r.str("student.jump", "ypauli");

  cfg.spectrum.gap_threshold = r.num("spectrum.gap_threshold", 0.2);
  cfg.validation.n_tables = static_cast<int>(r.integer("validate.n_tables", 5));
  cfg.validation.layers = static_cast<int>(r.integer("validate.layers", 10));

  cfg.rng_seed = static_cast<uint64_t>(r.integer("rng_seed", 12345));
  cfg.threads = static_cast<int>(r.integer("threads", 1));
  r.reject_unknown();

  if (cfg.training.mask != "jump_x" && cfg.training.mask != "full")
    throw ParameterError("train.mask must be jump_x or full");
  if (cfg.training.student_jump != "ypauli" && cfg.training.student_jump != "decay" &&
      cfg.training.student_jump != "none")
    throw ParameterError("student.jump must be ypauli, decay or none");
  if (cfg.sweep.n_inputs < 1) throw ParameterError("sweep.n_inputs must be >= 1");
  if (cfg.threads < 1) throw ParameterError("threads must be >= 1");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParameterError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<InputSpec> uniform_inputs(int n, double lo, double hi, double phi) {
  if (n < 1) throw ParameterError("need at least one input");
  std::vector<InputSpec> out;
  out.reserve(static_cast<size_t>(n));
  if (n == 1) {
    out.push_back({(lo + hi) / 2.0, phi});
    return out;
  }
  for (int i = 0; i < n; ++i)
    out.push_back({lo + (hi - lo) * static_cast<double>(i) / (n - 1), phi});
  return out;
}

PauliCoeffTable student_initial_table(const IsingParams& base, const std::string& jump_kind) {
  PauliCoeffTable t = ising_coeffs(base);
  if (jump_kind == "decay") return t;
  t.c.fill(cplx(0.0));
  if (jump_kind == "none") return t;
  if (jump_kind == "ypauli") {
    // J = -i sqrt(kappa) sigma^y
    t.c[0 * 4 + 2] = cplx(0.0, -std::sqrt(base.kappa));
    return t;
  }
  throw ParameterError("unknown student jump kind: " + jump_kind);
}

void run_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (!cfg.has_ising)
    throw ParameterError("sweep mode needs ising.omega / ising.v / ising.kappa");
  guard_long_running(cfg, false);
  NetworkConfig net = cfg.network;
  net.coeffs = ising_coeffs(cfg.ising);
  net.validate();

  const int readout = cfg.sweep.readout_layer < 0 ? std::min(11, net.depth)
                                                  : cfg.sweep.readout_layer;
  if (readout > net.depth) throw ParameterError("readout layer exceeds depth");

  const SweepData data = sweep_core(net, cfg.sweep, cfg.threads);
  write_trajectories(cfg, data, out_dir, "trajectories.csv", net.depth);

  const HistogramReport at_readout = classify_magnetizations(
      layer_magnetizations(data, readout), cfg.sweep.bins, cfg.sweep.mz_min, cfg.sweep.mz_max);
  write_histogram(cfg, at_readout, out_dir, "histogram_readout.csv");

  double best_score = 0.0;
  const int best = best_bimodality_layer(data, cfg.sweep, net.depth, &best_score);
  const HistogramReport at_best = classify_magnetizations(
      layer_magnetizations(data, best), cfg.sweep.bins, cfg.sweep.mz_min, cfg.sweep.mz_max);
  write_histogram(cfg, at_best, out_dir, "histogram_best.csv");

  const std::vector<double> last = layer_magnetizations(data, net.depth);
  double spread = 0.0;
  if (!last.empty())
    spread = *std::max_element(last.begin(), last.end()) -
             *std::min_element(last.begin(), last.end());

  json rep = base_report(cfg);
  rep["readout_layer"] = readout;
  rep["readout_bimodal"] = at_readout.bimodal;
  rep["best_layer"] = best;
  rep["best_bimodal"] = at_best.bimodal;
  rep["best_score"] = best_score;
  rep["final_layer_spread"] = spread;
  int failures = 0;
  for (const std::string& e : data.errors)
    if (!e.empty()) ++failures;
  rep["failed_inputs"] = failures;
  std::ofstream f = open_out(out_dir, "sweep_report.json");
  f << rep.dump(2) << "\n";
}

void run_training(const ExperimentConfig& cfg, const std::string& out_dir) {
  guard_long_running(cfg, true);
  NetworkConfig teacher = cfg.network;
  teacher.coeffs = ising_coeffs(cfg.training.teacher);
  teacher.validate();

  NetworkConfig student = cfg.network;
  student.coeffs = student_initial_table(cfg.training.student, cfg.training.student_jump);
  student.validate();

  const std::vector<InputSpec> train_inputs =
      uniform_inputs(cfg.training.n_train, -0.5, 0.5, cfg.sweep.phi);
  // Validation inputs sit at uniform offsets between the training grid points.
  std::vector<InputSpec> val_inputs;
  for (int i = 0; i < cfg.training.n_val; ++i)
    val_inputs.push_back(
        {-0.5 + (static_cast<double>(i) + 0.5) / cfg.training.n_val, cfg.sweep.phi});

  const std::vector<TrainingPair> train_pairs =
      generate_training_data(teacher, train_inputs, cfg.threads);
  const std::vector<TrainingPair> val_pairs =
      generate_training_data(teacher, val_inputs, cfg.threads);

  SweepSettings sw = cfg.sweep;
  sw.readout_layer = cfg.network.depth;  // the output layer is the comparison point
  const SweepData pre = sweep_core(student, sw, cfg.threads);
  write_trajectories(cfg, pre, out_dir, "sweep_pre_trajectories.csv", student.depth);
  const HistogramReport pre_hist = classify_magnetizations(
      layer_magnetizations(pre, student.depth), sw.bins, sw.mz_min, sw.mz_max);
  write_histogram(cfg, pre_hist, out_dir, "sweep_pre_histogram.csv");

  const ParamMask mask =
      cfg.training.mask == "full" ? ParamMask::full() : ParamMask::jump_x();
  const std::vector<TrainRecord> records = train(
      train_pairs, val_pairs, student, cfg.training.rounds, cfg.training.eps, mask,
      cfg.threads);

  {
    std::ofstream f = open_out(out_dir, "training_log.csv");
    write_hash_line(f, cfg);
    f << "round,train_loss,val_loss";
    for (int a = 0; a < 16; ++a) {
      const std::string s = std::to_string(a / 4) + std::to_string(a % 4);
      f << ",d_" << s << ",x_" << s << ",y_" << s;
    }
    f << "\n";
    for (const TrainRecord& r : records) {
      f << r.round << "," << g17(r.train_loss) << "," << g17(r.val_loss);
      for (int a = 0; a < 16; ++a) {
        f << "," << g17(r.snapshot.d[static_cast<size_t>(a)]) << ","
          << g17(r.snapshot.c[static_cast<size_t>(a)].real()) << ","
          << g17(r.snapshot.c[static_cast<size_t>(a)].imag());
      }
      f << "\n";
    }
  }

  NetworkConfig trained = student;
  trained.coeffs = records.back().snapshot;
  const SweepData post = sweep_core(trained, sw, cfg.threads);
  write_trajectories(cfg, post, out_dir, "sweep_post_trajectories.csv", trained.depth);
  const HistogramReport post_hist = classify_magnetizations(
      layer_magnetizations(post, trained.depth), sw.bins, sw.mz_min, sw.mz_max);
  write_histogram(cfg, post_hist, out_dir, "sweep_post_histogram.csv");

  {
    json j = base_report(cfg);
    j["params"] = params_json(records.back().snapshot);
    std::ofstream f = open_out(out_dir, "final_params.json");
    f << j.dump(2) << "\n";
  }
  {
    json j = base_report(cfg);
    j["rounds_run"] = static_cast<int>(records.size()) - 1;
    j["initial_train_loss"] = records.front().train_loss;
    j["final_train_loss"] = records.back().train_loss;
    j["initial_val_loss"] = records.front().val_loss;
    j["final_val_loss"] = records.back().val_loss;
    j["pre_bimodal"] = pre_hist.bimodal;
    j["post_bimodal"] = post_hist.bimodal;
    j["eps"] = cfg.training.eps;
    j["mask"] = cfg.training.mask;
    j["k_tilde_sum_mode"] = "explicit-loop";
    std::ofstream f = open_out(out_dir, "train_report.json");
    f << j.dump(2) << "\n";
  }
}

void run_spectrum(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (!cfg.has_ising)
    throw ParameterError("spectrum mode needs ising.omega / ising.v / ising.kappa");
  const PauliCoeffTable table = ising_coeffs(cfg.ising);
  const Mat lind = build_lindbladian(table, cfg.network.width);
  const SpectralReport rep = spectral_analysis(lind, {cfg.spectrum.gap_threshold});

  {
    std::ofstream f = open_out(out_dir, "spectrum.csv");
    write_hash_line(f, cfg);
    f << "k,re_lambda,im_lambda\n";
    for (long k = 0; k < rep.eigenvalues.size(); ++k)
      f << (k + 1) << "," << g17(rep.eigenvalues(k).real()) << ","
        << g17(rep.eigenvalues(k).imag()) << "\n";
  }
  {
    json j = base_report(cfg);
    j["tau"] = std::isfinite(rep.tau) ? json(rep.tau) : json("inf");
    j["tau_prime"] = std::isfinite(rep.tau_prime) ? json(rep.tau_prime) : json("inf");
    j["separation_index"] = rep.separation_index;
    j["gap_ratio"] = rep.gap_ratio;
    j["zero_multiplicity"] = rep.zero_multiplicity;
    j["diagonalizable"] = rep.diagonalizable;
    // Magnetization of the stationary state.
    const long d = rep.stationary.rows();
    int w = 0;
    while ((1L << w) < d) ++w;
    double mz = 0.0;
    for (long i = 0; i < d; ++i) {
      int up = 0;
      for (int b = 0; b < w; ++b) up += ((i >> b) & 1) ? -1 : 1;
      mz += up * rep.stationary(i, i).real();
    }
    j["stationary_mz"] = mz / (2.0 * w);
    std::ofstream f = open_out(out_dir, "spectral_report.json");
    f << j.dump(2) << "\n";
  }
}

double forward_equivalence_max_error(const NetworkConfig& cfg, const InputSpec& input,
                                     int layers) {
  if (cfg.width > 4) throw ParameterError("oracle equivalence limited to width <= 4");
  const LayerMpo fwd = build_forward_mpo(cfg);
  DoubledMps state = product_input_mps(input, cfg.width);

  const double theta = std::acos(2.0 * input.mz_in);
  Eigen::Vector2cd q(std::cos(theta / 2.0),
                     std::exp(cplx(0.0, input.phi)) * std::sin(theta / 2.0));
  Vec psi = Vec::Ones(1);
  for (int k = 0; k < cfg.width; ++k) {
    Vec next(psi.size() * 2);
    for (long i = 0; i < psi.size(); ++i) {
      next(2 * i) = psi(i) * q(0);
      next(2 * i + 1) = psi(i) * q(1);
    }
    psi = std::move(next);
  }
  Mat rho = psi * psi.adjoint();

  double worst = 0.0;
  for (int l = 1; l <= layers; ++l) {
    ApplyResult applied = apply_mpo(fwd, state, cfg.chi_mps);
    state = std::move(applied.state);
    const cplx tr = trace_pairing(state);
    scale_state(state, cplx(1.0) / tr);
    rho = dense_channel_step_raw(rho, cfg);

    const std::vector<cplx> dense_mps = densify(state);
    const Vec ref = doubled_from_rho(rho);
    for (long i = 0; i < ref.size(); ++i)
      worst = std::max(worst, std::abs(dense_mps[static_cast<size_t>(i)] - ref(i)));
  }
  return worst;
}

double dense_loss(const NetworkConfig& cfg, const std::vector<TrainingPair>& pairs) {
  if (cfg.width > 3) throw ParameterError("dense loss limited to width <= 3");
  if (pairs.empty()) throw ParameterError("loss needs at least one pair");
  const long d = 1L << cfg.width;
  double acc = 0.0;
  for (const TrainingPair& pair : pairs) {
    const double theta = std::acos(2.0 * pair.input.mz_in);
    Eigen::Vector2cd q(std::cos(theta / 2.0),
                       std::exp(cplx(0.0, pair.input.phi)) * std::sin(theta / 2.0));
    Vec psi = Vec::Ones(1);
    for (int k = 0; k < cfg.width; ++k) {
      Vec next(psi.size() * 2);
      for (long i = 0; i < psi.size(); ++i) {
        next(2 * i) = psi(i) * q(0);
        next(2 * i + 1) = psi(i) * q(1);
      }
      psi = std::move(next);
    }
    Mat rho = psi * psi.adjoint();
    for (int l = 0; l < cfg.depth; ++l) rho = dense_channel_step_raw(rho, cfg);
    double mz = 0.0;
    for (long i = 0; i < d; ++i) {
      int up = 0;
      for (int b = 0; b < cfg.width; ++b) up += ((i >> b) & 1) ? -1 : 1;
      mz += up * rho(i, i).real();
    }
    mz /= 2.0 * cfg.width;
    const double diff = mz - pair.target_mz;
    acc += diff * diff;
  }
  return acc / static_cast<double>(pairs.size());
}

GradientCheckResult finite_difference_gradient_check(const NetworkConfig& cfg,
                                                     const std::vector<TrainingPair>& pairs,
                                                     const ParamMask& mask, double step,
                                                     double rel_tol, int threads) {
  const UpdateDirection dir = compute_update_direction(pairs, cfg, mask, threads);

  struct Component {
    int kind;  // 0 = d, 1 = x, 2 = y
    int alpha;
    double analytic;
  };
  std::vector<Component> comps;
  for (int a = 0; a < 16; ++a) {
    if (mask.hamiltonian[static_cast<size_t>(a)])
      comps.push_back({0, a, dir.d_tilde[static_cast<size_t>(a)]});
    if (mask.jump[static_cast<size_t>(a)]) {
      comps.push_back({1, a, dir.x_tilde[static_cast<size_t>(a)]});
      comps.push_back({2, a, dir.y_tilde[static_cast<size_t>(a)]});
    }
  }

  std::vector<double> fd(comps.size());
  parallel_for(static_cast<long>(comps.size()), threads, [&](long i) {
    const Component& c = comps[static_cast<size_t>(i)];
    NetworkConfig plus = cfg, minus = cfg;
    auto shift = [&](NetworkConfig& target, double h) {
      if (c.kind == 0) target.coeffs.d[static_cast<size_t>(c.alpha)] += h;
      else if (c.kind == 1) target.coeffs.c[static_cast<size_t>(c.alpha)] += h;
      else target.coeffs.c[static_cast<size_t>(c.alpha)] += cplx(0.0, h);
    };
    shift(plus, step);
    shift(minus, -step);
    fd[static_cast<size_t>(i)] = (dense_loss(plus, pairs) - dense_loss(minus, pairs)) / (2.0 * step);
  });

  GradientCheckResult res;
  res.n_checked = static_cast<int>(comps.size());
  double scale = 0.0;
  for (double v : fd) scale = std::max(scale, std::abs(v));
  const double floor = std::max(1e-8, 1e-6 * scale);
  for (size_t i = 0; i < comps.size(); ++i) {
    // The analytic direction is the negative gradient.
    const double err = std::abs(fd[i] + comps[i].analytic);
    res.max_abs_err = std::max(res.max_abs_err, err);
    if (std::abs(fd[i]) < floor && std::abs(comps[i].analytic) < floor) continue;
    res.max_rel_err = std::max(res.max_rel_err, err / std::max(std::abs(fd[i]), floor));
  }
  res.pass = res.max_rel_err < rel_tol;
  return res;
}

bool run_validate(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.network.width > 4)
    throw ParameterError("validate mode requires width <= 4 for oracle comparisons");
  json checks = json::array();
  bool all_pass = true;
  auto record = [&](const std::string& name, bool pass, json detail) {
    detail["name"] = name;
    detail["pass"] = pass;
    checks.push_back(detail);
    all_pass = all_pass && pass;
    std::cerr << (pass ? "PASS " : "FAIL ") << name << "\n";
  };

  std::vector<PauliCoeffTable> tables;
  for (int i = 0; i < cfg.validation.n_tables; ++i)
    tables.push_back(random_table(0.7, cfg.rng_seed + static_cast<uint64_t>(i)));
  if (cfg.has_ising) tables.push_back(ising_coeffs(cfg.ising));

  {  // gate unitarity
    double worst = 0.0;
    for (const PauliCoeffTable& t : tables)
      for (int k = 1; k <= 2; ++k) {
        const Tensor g = build_local_gate(t, cfg.network.dt, k, cfg.network.width);
        const Tensor delta = matmul(dagger(g), g) - Tensor::identity(g.dim(0));
        worst = std::max(worst, delta.max_abs());
      }
    record("gate_unitarity", worst < 1e-12, {{"max_defect", worst}});
  }
  {  // forward oracle equivalence
    double worst = 0.0;
    for (size_t i = 0; i < tables.size(); ++i) {
      NetworkConfig net = cfg.network;
      net.coeffs = tables[i];
      net.chi_mps = std::max<long>(net.chi_mps, 16);
      const double mz_in = -0.4 + 0.8 * static_cast<double>(i) / std::max<size_t>(tables.size() - 1, 1);
      worst = std::max(worst,
                       forward_equivalence_max_error(net, {mz_in, 0.3}, cfg.validation.layers));
    }
    record("forward_oracle_equivalence", worst < 1e-8, {{"max_entry_error", worst}});
  }
  {  // adjoint duality (dense route)
    double worst = 0.0;
    for (size_t i = 0; i < tables.size(); ++i) {
      NetworkConfig net = cfg.network;
      net.coeffs = tables[i];
      const Mat rho = random_product_state(net.width, cfg.rng_seed + 100 + static_cast<uint64_t>(i));
      Mat e = Mat::Zero(rho.rows(), rho.cols());
      {
        std::mt19937_64 rng(cfg.rng_seed + 200 + static_cast<uint64_t>(i));
        std::normal_distribution<double> nd;
        for (long a = 0; a < e.rows(); ++a)
          for (long b = 0; b < e.cols(); ++b) e(a, b) = cplx(nd(rng), nd(rng));
        e = (e + Mat(e.adjoint())).eval() / 2.0;
      }
      Mat fwd = rho;
      Mat back = e;
      for (int l = 1; l <= 3; ++l) {
        fwd = dense_channel_step_raw(fwd, net);
        back = dense_adjoint_step(back, net);
        const cplx lhs = (e * fwd).trace();
        const cplx rhs = (back * rho).trace();
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
    record("adjoint_duality", worst < 1e-10, {{"max_pairing_error", worst}});
  }
  {  // analytic gradient vs finite differences
    NetworkConfig net = cfg.network;
    net.width = 2;
    net.depth = 2;
    net.chi_mps = 64;
    net.coeffs = random_table(0.5, cfg.rng_seed + 300);
    const std::vector<TrainingPair> pairs = {{{0.3, 0.0}, 0.1}, {{-0.2, 0.0}, -0.3}};
    const GradientCheckResult res =
        finite_difference_gradient_check(net, pairs, ParamMask::full(), 1e-5, 1e-4, cfg.threads);
    record("gradient_finite_difference", res.pass,
           {{"max_rel_err", res.max_rel_err}, {"components", res.n_checked}});
  }
  {  // first-order Lindblad limit
    const PauliCoeffTable ising = ising_coeffs({1.0, 2.0, 1.0});
    PauliCoeffTable h_only = ising;
    h_only.c.fill(cplx(0.0));
    const std::vector<double> dts = {0.1, 0.05, 0.025, 0.0125};
    const SlopeReport a = first_order_limit_check(ising, 3, dts, 4, cfg.rng_seed + 400);
    const SlopeReport b = first_order_limit_check(h_only, 3, dts, 4, cfg.rng_seed + 401);
    record("first_order_limit", a.slope >= 1.4 && b.slope >= 1.9,
           {{"ising_slope", a.slope}, {"h_only_slope", b.slope}});
  }
  {  // spectral sanity
    double worst_zero = 0.0, worst_re = -1.0;
    for (const PauliCoeffTable& t : tables) {
      const SpectralReport rep = spectral_analysis(build_lindbladian(t, std::min(cfg.network.width, 3)));
      worst_zero = std::max(worst_zero, std::abs(rep.eigenvalues(0)));
      worst_re = std::max(worst_re, rep.eigenvalues.real().maxCoeff());
    }
    record("spectral_sanity", worst_zero < 1e-10 && worst_re <= 1e-10,
           {{"max_abs_lambda1", worst_zero}, {"max_re_lambda", worst_re}});
  }
  {  // bond-dimension robustness
    NetworkConfig net = cfg.network;
    net.coeffs = cfg.has_ising ? ising_coeffs(cfg.ising) : tables[0];
    net.chi_mps = std::max<long>(net.chi_mps, 16);
    NetworkConfig doubled = net;
    doubled.chi_mps = 2 * net.chi_mps;
    const LayerMpo f1 = build_forward_mpo(net);
    const LayerMpo f2 = build_forward_mpo(doubled);
    double worst = 0.0;
    const std::vector<InputSpec> inputs = uniform_inputs(20, -0.5, 0.5, 0.0);
    for (const InputSpec& in : inputs) {
      const DoubledMps s = product_input_mps(in, net.width);
      const ForwardResult r1 = propagate_forward(s, net, f1, cfg.validation.layers);
      const ForwardResult r2 = propagate_forward(s, doubled, f2, cfg.validation.layers);
      for (size_t l = 0; l < r1.trace.mz_per_layer.size(); ++l)
        worst = std::max(worst,
                         std::abs(r1.trace.mz_per_layer[l] - r2.trace.mz_per_layer[l]));
    }
    record("chi_doubling_robustness", worst < 1e-6, {{"max_mz_shift", worst}});
  }

  json rep = base_report(cfg);
  rep["checks"] = checks;
  rep["all_pass"] = all_pass;
  std::ofstream f = open_out(out_dir, "validation_report.json");
  f << rep.dump(2) << "\n";
  return all_pass;
}

}  // namespace mpsqnn
