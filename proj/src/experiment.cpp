#include "fmpols/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>

#include "fmpols/analysis.hpp"
#include "fmpols/predictor.hpp"

namespace fmpols {

std::string_view to_string(HintSpecKind kind) {
  switch (kind) {
    case HintSpecKind::Luenberger: return "luenberger";
    case HintSpecKind::Polynomial: return "polynomial";
    case HintSpecKind::Zero: return "zero";
    case HintSpecKind::SelfConsistent: return "self_consistent";
  }
  return "zero";
}

HintSpecKind hint_spec_kind_from_string(std::string_view s) {
  if (s == "luenberger") return HintSpecKind::Luenberger;
  if (s == "polynomial") return HintSpecKind::Polynomial;
  if (s == "zero") return HintSpecKind::Zero;
  if (s == "self_consistent") return HintSpecKind::SelfConsistent;
  throw Error(ErrorCode::ConfigError, "unknown hint kind '" + std::string(s) + "'");
}

std::string_view to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::FmPols: return "fmpols";
    case PredictorKind::Kalman: return "kalman";
    case PredictorKind::Hinf: return "hinf";
    case PredictorKind::FixedGain: return "fixed_gain";
  }
  return "fmpols";
}

PredictorKind predictor_kind_from_string(std::string_view s) {
  if (s == "fmpols") return PredictorKind::FmPols;
  if (s == "kalman") return PredictorKind::Kalman;
  if (s == "hinf") return PredictorKind::Hinf;
  if (s == "fixed_gain") return PredictorKind::FixedGain;
  throw Error(ErrorCode::ConfigError, "unknown predictor '" + std::string(s) + "'");
}

std::string_view to_string(ComparatorKind kind) {
  switch (kind) {
    case ComparatorKind::Grid: return "grid";
    case ComparatorKind::Kalman: return "kalman";
    case ComparatorKind::Hinf: return "hinf";
    case ComparatorKind::FixedGain: return "fixed_gain";
    case ComparatorKind::None: return "none";
  }
  return "none";
}

ComparatorKind comparator_kind_from_string(std::string_view s) {
  if (s == "grid") return ComparatorKind::Grid;
  if (s == "kalman") return ComparatorKind::Kalman;
  if (s == "hinf") return ComparatorKind::Hinf;
  if (s == "fixed_gain") return ComparatorKind::FixedGain;
  if (s == "none") return ComparatorKind::None;
  throw Error(ErrorCode::ConfigError, "unknown comparator '" + std::string(s) + "'");
}

PolyCoeffs resolve_coeffs(const HintSpec& spec) {
  if (spec.family == "coeffs") return spec.coeffs;
  if (spec.family == "diff") return diff_coeffs(spec.order);
  if (spec.family == "lag") return lag_coeffs(spec.order);
  if (spec.family == "oracle") return oracle_complex_coeffs(spec.theta, spec.order);
  if (spec.family == "ch") {
    std::vector<std::complex<double>> roots(spec.roots.begin(), spec.roots.end());
    if (roots.empty()) throw Error(ErrorCode::ConfigError, "ch hint needs at least one root");
    return cayley_hamilton_coeffs(roots);
  }
  throw Error(ErrorCode::ConfigError, "unknown polynomial family '" + spec.family + "'");
}

BuiltHint build_hint(const HintSpec& spec, const SystemSpec& sys) {
  switch (spec.kind) {
    case HintSpecKind::Luenberger: {
      LuenbergerGain g = spec.gain ? characterize_gain(sys, *spec.gain) : design_gain(sys, spec.gamma_tilde);
      HintProvider provider = HintProvider::luenberger(sys, g.L);
      return {std::move(provider), std::move(g), {}};
    }
    case HintSpecKind::Polynomial: {
      PolyCoeffs c = resolve_coeffs(spec);
      return {HintProvider::polynomial(c, sys.p()), std::nullopt, std::move(c)};
    }
    case HintSpecKind::Zero: return {HintProvider::zero(sys.p()), std::nullopt, {}};
    case HintSpecKind::SelfConsistent: return {HintProvider::self_consistent(sys.p()), std::nullopt, {}};
  }
  throw Error(ErrorCode::ConfigError, "unreachable hint kind");
}

void ExperimentConfig::validate() const {
  if (T < 1) throw Error(ErrorCode::InvalidArgument, "config: T must be >= 1");
  if (H < 1) throw Error(ErrorCode::InvalidArgument, "config: H must be >= 1");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "config: lambda must be > 0");
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "config: trials must be >= 1");
  const std::size_t n = system.n(), p = system.p();
  if (n == 0 || p == 0) throw Error(ErrorCode::InvalidArgument, "config: system is empty");
  if (noise.bias_w.size() != n || noise.amp_w.size() != n || noise.bias_v.size() != p || noise.amp_v.size() != p) {
    throw Error(ErrorCode::InvalidArgument, "config: noise vector dimensions do not match the system");
  }
  for (const Variant& v : effective_variants()) {
    if (v.H && *v.H < 1) throw Error(ErrorCode::InvalidArgument, "config: variant " + v.label + " has H < 1");
    if (v.lambda && !(*v.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "config: variant " + v.label + " has lambda <= 0");
    if (v.predictor == PredictorKind::FixedGain && !v.gain) {
      throw Error(ErrorCode::InvalidArgument, "config: variant " + v.label + " needs a gain");
    }
  }
  if (comparator.kind == ComparatorKind::FixedGain && !comparator.gain) {
    throw Error(ErrorCode::InvalidArgument, "config: fixed_gain comparator needs a gain");
  }
}

std::vector<Variant> ExperimentConfig::effective_variants() const {
  if (!variants.empty()) return variants;
  Variant v;
  v.label = "fmpols";
  v.hint = hint;
  return {v};
}

// ---------------------------------------------------------------- presets

namespace {

HintSpec lb_hint(double gamma_tilde) {
  HintSpec h;
  h.kind = HintSpecKind::Luenberger;
  h.gamma_tilde = gamma_tilde;
  return h;
}

HintSpec poly_hint(std::string family, int order, std::vector<double> roots = {}, double theta = 0.7) {
  HintSpec h;
  h.kind = HintSpecKind::Polynomial;
  h.family = std::move(family);
  h.order = order;
  h.roots = std::move(roots);
  h.theta = theta;
  return h;
}

HintSpec ols_hint() {
  HintSpec h;
  h.kind = HintSpecKind::SelfConsistent;
  return h;
}

Variant fm_variant(std::string label, HintSpec hint) {
  Variant v;
  v.label = std::move(label);
  v.hint = std::move(hint);
  return v;
}

NoiseModel nonstochastic(std::size_t n, std::size_t p, double bias, double amp, double c_w, double c_v) {
  NoiseModel m;
  m.bias_w.assign(n, bias);
  m.amp_w.assign(n, amp);
  m.bias_v.assign(p, bias);
  m.amp_v.assign(p, amp);
  m.uniform_w = c_w;
  m.uniform_v = c_v;
  m.kind = NoiseKind::Nonstochastic;
  return m;
}

NoiseModel gaussian(std::size_t n, std::size_t p, double c_w, double c_v) {
  NoiseModel m = nonstochastic(n, p, 0.0, 0.0, c_w, c_v);
  m.kind = NoiseKind::Gaussian;
  return m;
}

ExperimentConfig exp1_base(std::string name) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.system = builtin_system("double_integrator");
  c.noise = nonstochastic(2, 1, 0.01, 0.02, 0.3, 0.3);
  c.T = 2000;
  c.H = 15;
  c.lambda = 1.0;
  c.comparator.kind = ComparatorKind::Grid;
  c.comparator.grid = GainGrid{};
  c.comparator.grid.steps = 161;
  c.seed = 1;
  c.notes = {"bias 0.01 and sinusoid amplitude 0.02 on every coordinate (assumed, not published)",
             "sinusoid frequencies 0.05 and 0.08 rad/step (assumed, not published)",
             "comparator lattice [-2, 2] x 161 per gain entry, kappa = 20, gamma = 0.1 (assumed, not published)"};
  return c;
}

}  // namespace

std::vector<std::string> preset_names() { return {"exp1", "exp2", "exp3_H", "exp3_lambda", "expA1", "expA2", "expA3"}; }

ExperimentConfig preset(std::string_view name) {
  if (name == "exp1") {
    ExperimentConfig c = exp1_base("exp1");
    c.variants = {fm_variant("ols", ols_hint()), fm_variant("ch", poly_hint("ch", 2, {1.0, 1.0})),
                  fm_variant("lb_0.3", lb_hint(0.3)), fm_variant("lb_0.8", lb_hint(0.8))};
    return c;
  }
  if (name == "exp2") {
    ExperimentConfig c;
    c.name = "exp2";
    c.system = builtin_system("symmetric_swap");
    c.noise = nonstochastic(2, 1, 0.1, 0.1, 0.01, 0.01);
    c.T = 2000;
    c.H = 8;
    c.lambda = 1.0;
    Variant kal;
    kal.label = "kalman";
    kal.predictor = PredictorKind::Kalman;
    Variant hinf;
    hinf.label = "hinf";
    hinf.predictor = PredictorKind::Hinf;
    hinf.hinf_level = 1.0;
    c.variants = {kal, hinf, fm_variant("lb", lb_hint(0.8)), fm_variant("lag2", poly_hint("lag", 2))};
    c.notes = {"sinusoid frequencies 0.05 and 0.08 rad/step (assumed, not published)",
               "Luenberger hint placed at radius 0.2 (assumed, not published)",
               "H-infinity baseline: RMS covariance with Q inflated by a factor 2 (assumed, not published)"};
    return c;
  }
  if (name == "exp3_H") {
    ExperimentConfig c = exp1_base("exp3_H");
    for (int H : {5, 10, 15, 20, 30}) {
      Variant v = fm_variant("H" + std::to_string(H), lb_hint(0.8));
      v.H = H;
      c.variants.push_back(v);
    }
    c.notes.push_back("memory sweep H in {5, 10, 15, 20, 30} (assumed, not published)");
    return c;
  }
  if (name == "exp3_lambda") {
    ExperimentConfig c = exp1_base("exp3_lambda");
    for (double lam : {0.01, 0.1, 1.0, 10.0}) {
      Variant v = fm_variant("lambda" + format_double(lam), lb_hint(0.8));
      v.lambda = lam;
      c.variants.push_back(v);
    }
    return c;
  }
  if (name == "expA1") {
    ExperimentConfig c;
    c.name = "expA1";
    c.system = builtin_system("double_integrator");
    c.noise = gaussian(2, 1, 0.2, 0.05);
    c.T = 5000;
    c.H = 15;
    c.lambda = 1.0;
    c.trials = 50;
    c.seed = 11;
    c.comparator.kind = ComparatorKind::Kalman;
    c.variants = {fm_variant("ols", ols_hint()), fm_variant("ch", poly_hint("ch", 2, {1.0, 1.0})),
                  fm_variant("lb_0.25", lb_hint(0.25)), fm_variant("lb_0.65", lb_hint(0.65))};
    return c;
  }
  if (name == "expA2") {
    ExperimentConfig c;
    c.name = "expA2";
    c.system = builtin_system("jordan3");
    c.noise = gaussian(3, 1, 0.02, 0.01);
    c.T = 2000;
    c.H = 12;
    c.lambda = 1.0;
    c.trials = 50;
    c.seed = 12;
    c.comparator.kind = ComparatorKind::Kalman;
    c.variants = {fm_variant("lb", lb_hint(0.5)), fm_variant("ch", poly_hint("ch", 3, {1.0, 1.0, 1.0})),
                  fm_variant("diff3", poly_hint("diff", 3))};
    c.notes = {"horizon T = 2000 (assumed, not published)", "Luenberger hint placed at radius 0.5 (assumed, not published)"};
    return c;
  }
  if (name == "expA3") {
    ExperimentConfig c;
    c.name = "expA3";
    c.system = builtin_system("rotation_jordan");
    c.noise = nonstochastic(4, 1, 0.01, 0.02, 0.1, 0.1);
    c.T = 2000;
    c.H = 15;
    c.lambda = 1.0;
    c.seed = 13;
    c.variants = {fm_variant("lb", lb_hint(0.5)), fm_variant("oracle", poly_hint("oracle", 2, {}, 0.7)),
                  fm_variant("lag2", poly_hint("lag", 2)), fm_variant("lag4", poly_hint("lag", 4))};
    c.notes = {"bias 0.01, sinusoid amplitude 0.02, uniform bound 0.1, H = 15, T = 2000 (assumed, not published)",
               "Luenberger hint placed at radius 0.5 (assumed, not published)", "no comparator: losses and residuals only"};
    return c;
  }
  throw Error(ErrorCode::UnknownPreset, "unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- driver

namespace {

// Hands out y_t only after the prediction for step t has been recorded.
class SealedOutputs {
 public:
  explicit SealedOutputs(std::span<const Vec> outputs) : outputs_(outputs) {}

  std::span<const Vec> history() const { return outputs_.first(revealed_); }

  void record_prediction(std::int64_t t) {
    if (t != static_cast<std::int64_t>(revealed_) + 1) throw Error(ErrorCode::InvalidArgument, "sealed outputs: out-of-order step");
    predicted_ = true;
  }

  const Vec& reveal(std::int64_t t) {
    if (!predicted_ || t != static_cast<std::int64_t>(revealed_) + 1) {
      throw Error(ErrorCode::InvalidArgument, "sealed outputs: y_t requested before the prediction was recorded");
    }
    predicted_ = false;
    return outputs_[revealed_++];
  }

 private:
  std::span<const Vec> outputs_;
  std::size_t revealed_ = 0;
  bool predicted_ = false;
};

struct ComparatorRun {
  std::vector<double> step_loss;  // empty when no comparator
  std::string id;
};

std::string gain_text(const Mat& L) {
  std::string s = "[";
  for (std::size_t i = 0; i < L.rows(); ++i) {
    if (i) s += "; ";
    for (std::size_t j = 0; j < L.cols(); ++j) {
      if (j) s += ", ";
      s += format_double(L(i, j));
    }
  }
  return s + "]";
}

std::vector<double> rollout_losses(const SystemSpec& sys, const Mat& L, std::span<const Vec> outputs) {
  const std::vector<Vec> pred = luenberger_rollout(sys, L, outputs);
  std::vector<double> out(outputs.size());
  for (std::size_t t = 0; t < outputs.size(); ++t) out[t] = norm2_squared(vec_sub(pred[t], outputs[t]));
  return out;
}

Mat baseline_gain(const ExperimentConfig& cfg, PredictorKind kind, double level, const std::optional<Mat>& explicit_gain) {
  const NoiseCovariance cov = rms_covariance(cfg.noise);
  switch (kind) {
    case PredictorKind::Kalman: return kalman_gain(cfg.system, cov.Q, cov.R).L;
    case PredictorKind::Hinf: return hinf_gain(cfg.system, cov.Q, cov.R, level).L;
    case PredictorKind::FixedGain: return *explicit_gain;
    case PredictorKind::FmPols: break;
  }
  throw Error(ErrorCode::InvalidArgument, "baseline_gain: not a fixed-gain predictor");
}

ComparatorRun run_comparator(const ExperimentConfig& cfg, std::span<const Vec> outputs) {
  ComparatorRun run;
  const ComparatorSpec& spec = cfg.comparator;
  switch (spec.kind) {
    case ComparatorKind::None: return run;
    case ComparatorKind::Grid: {
      HindsightResult h = best_in_hindsight(cfg.system, spec.grid, outputs);
      run.step_loss = std::move(h.step_loss);
      return run;
    }
    case ComparatorKind::Kalman:
      run.step_loss = rollout_losses(cfg.system, baseline_gain(cfg, PredictorKind::Kalman, 0.0, std::nullopt), outputs);
      return run;
    case ComparatorKind::Hinf:
      run.step_loss = rollout_losses(cfg.system, baseline_gain(cfg, PredictorKind::Hinf, spec.level, std::nullopt), outputs);
      return run;
    case ComparatorKind::FixedGain:
      run.step_loss = rollout_losses(cfg.system, *spec.gain, outputs);
      return run;
  }
  return run;
}

std::string comparator_description(const ExperimentConfig& cfg) {
  const ComparatorSpec& spec = cfg.comparator;
  switch (spec.kind) {
    case ComparatorKind::None: return "none";
    case ComparatorKind::Grid:
      return "grid best-in-hindsight over [" + format_double(spec.grid.lo) + ", " + format_double(spec.grid.hi) + "] x " +
             std::to_string(spec.grid.steps) + " per entry, kappa = " + format_double(spec.grid.kappa) +
             ", gamma = " + format_double(spec.grid.gamma);
    case ComparatorKind::Kalman:
      return "kalman L = " + gain_text(baseline_gain(cfg, PredictorKind::Kalman, 0.0, std::nullopt));
    case ComparatorKind::Hinf:
      return "hinf(level " + format_double(spec.level) + ") L = " +
             gain_text(baseline_gain(cfg, PredictorKind::Hinf, spec.level, std::nullopt));
    case ComparatorKind::FixedGain: return "fixed gain L = " + gain_text(*spec.gain);
  }
  return "none";
}

struct TrialOutput {
  std::vector<std::vector<StepRow>> rows;  // per variant
  std::vector<TrialSummary> summaries;
};

TrialOutput run_trial(const ExperimentConfig& cfg, const std::vector<Variant>& variants, int trial) {
  const auto start = std::chrono::steady_clock::now();
  NoiseModel model = cfg.noise;
  model.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  const Trajectory traj = simulate(cfg.system, model, cfg.T);
  const std::span<const Vec> outputs(traj.outputs);
  const ComparatorRun comp = run_comparator(cfg, outputs);
  const bool has_comparator = !comp.step_loss.empty();
  const std::size_t p = cfg.system.p();

  TrialOutput out;
  for (const Variant& var : variants) {
    std::vector<double> learner(static_cast<std::size_t>(cfg.T));
    std::vector<double> dmax(static_cast<std::size_t>(cfg.T), 0.0);
    bool has_hint = false;
    if (var.predictor == PredictorKind::FmPols) {
      const int H = var.H.value_or(cfg.H);
      const double lambda = var.lambda.value_or(cfg.lambda);
      BuiltHint hint = build_hint(var.hint, cfg.system);
      has_hint = var.hint.kind == HintSpecKind::Luenberger || var.hint.kind == HintSpecKind::Polynomial;
      PolsState state = PolsState::initial(p, p * static_cast<std::size_t>(H), lambda);
      SealedOutputs sealed(outputs);
      ResidualTrace trace;
      for (std::int64_t t = 1; t <= cfg.T; ++t) {
        try {
          const std::span<const Vec> hist = sealed.history();
          const Feature f = build_feature(hist, t, H, p);
          const Vec hint_t = hint.provider.next(HintContext{hist, t, &state, &f});
          StagedStep staged = pols_step(std::move(state), f, hint_t);
          const Vec prediction = staged.prediction;
          sealed.record_prediction(t);
          const Vec& y = sealed.reveal(t);
          state = pols_commit(std::move(staged), y);
          learner[static_cast<std::size_t>(t - 1)] = norm2_squared(vec_sub(prediction, y));
          trace.push(y, hint_t);
          dmax[static_cast<std::size_t>(t - 1)] = trace.delta_max();
        } catch (const Error& e) {
          throw Error(e.code(), std::string(e.what()) + " [variant " + var.label + ", trial " + std::to_string(trial) +
                                    ", t = " + std::to_string(t) + "]");
        }
      }
    } else {
      learner = rollout_losses(cfg.system, baseline_gain(cfg, var.predictor, var.hinf_level, var.gain), outputs);
    }

    std::vector<StepRow> rows(static_cast<std::size_t>(cfg.T));
    double cum = 0.0, loss_sum = 0.0, comp_sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      StepRow& r = rows[i];
      r.t = static_cast<int>(i) + 1;
      r.y_norm = norm2(outputs[i]);
      r.learner_loss = learner[i];
      loss_sum += learner[i];
      if (has_comparator) {
        r.comparator_loss = comp.step_loss[i];
        comp_sum += comp.step_loss[i];
        cum += learner[i] - comp.step_loss[i];
        r.cum_regret = cum;
      }
      if (has_hint) r.delta_max = dmax[i];
    }
    TrialSummary s;
    s.trial = trial;
    s.seed = model.seed;
    s.final_regret = cum;
    s.delta_max = has_hint ? dmax.back() : 0.0;
    s.cumulative_loss = loss_sum;
    s.comparator_cumulative_loss = comp_sum;
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.rows.push_back(std::move(rows));
    out.summaries.push_back(s);
  }
  return out;
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::vector<Variant> variants = config.effective_variants();
  RunRecord run;
  run.config = config;
  run.comparator_id = comparator_description(config);

  for (const Variant& var : variants) {
    VariantRecord rec;
    rec.label = var.label;
    rec.has_comparator = config.comparator.kind != ComparatorKind::None;
    if (var.predictor == PredictorKind::FmPols) {
      rec.H = var.H.value_or(config.H);
      rec.lambda = var.lambda.value_or(config.lambda);
      rec.has_hint = var.hint.kind == HintSpecKind::Luenberger || var.hint.kind == HintSpecKind::Polynomial;
      BuiltHint hint = build_hint(var.hint, config.system);
      rec.detail = "fmpols, hint " + std::string(to_string(var.hint.kind));
      if (hint.gain) {
        rec.detail += ", L~ = " + gain_text(hint.gain->L) + ", kappa~ = " + format_double(hint.gain->kappa) +
                      ", gamma~ = " + format_double(hint.gain->gamma);
        rec.hint_gain = hint.gain;
      }
      if (!hint.coeffs.empty()) {
        std::string cs;
        for (double c : hint.coeffs) cs += (cs.empty() ? "" : ", ") + format_double(c);
        rec.detail += ", q = (" + cs + ")";
        rec.hint_coeffs = hint.coeffs;
      }
    } else {
      rec.detail = std::string(to_string(var.predictor)) + " L = " +
                   gain_text(baseline_gain(config, var.predictor, var.hinf_level, var.gain));
    }
    rec.trials.resize(static_cast<std::size_t>(config.trials));
    rec.summaries.resize(static_cast<std::size_t>(config.trials));
    run.variants.push_back(std::move(rec));
  }

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(config.trials));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int k = next++; k < config.trials; k = next++) {
      try {
        TrialOutput out = run_trial(config, variants, k);
        for (std::size_t v = 0; v < variants.size(); ++v) {
          run.variants[v].trials[static_cast<std::size_t>(k)] = std::move(out.rows[v]);
          run.variants[v].summaries[static_cast<std::size_t>(k)] = out.summaries[v];
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return run;
}

MeasuredConstants system_constants(const ExperimentConfig& config) {
  MeasuredConstants m;
  m.norm_C = operator_norm(config.system.C);
  if (config.noise.kind == NoiseKind::Nonstochastic) {
    m.C_w = config.noise.effective_bound_w();
    m.C_v = config.noise.effective_bound_v();
    m.C_y = growth_envelope(config.system, config.noise).C_y;
    m.bounded = true;
  }
  return m;
}

}  // namespace fmpols
