#include "fmpols/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "fmpols/analysis.hpp"
#include "fmpols/comparators.hpp"
#include "fmpols/experiment.hpp"
#include "fmpols/hints.hpp"
#include "fmpols/predictor.hpp"

namespace fmpols {

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

double max_abs_diff(const Mat& a, const Mat& b) { return max_abs_entry(a - b); }

std::vector<Vec> random_walk(std::mt19937_64& rng, int T, std::size_t p, double step) {
  std::normal_distribution<double> g(0.0, step);
  std::vector<Vec> ys;
  Vec y(p, 0.0);
  for (int t = 0; t < T; ++t) {
    for (auto& v : y) v += g(rng);
    ys.push_back(y);
  }
  return ys;
}

// 1
CriterionResult ols_recovery() {
  CriterionResult r{1, "ols-recovery", false, "", 0.0};
  std::mt19937_64 rng(20240101);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t p = 1 + inst % 2;
    const int H = 1 + static_cast<int>(rng() % (6 / p));
    const std::size_t d = p * static_cast<std::size_t>(H);
    const double lambda = std::pow(10.0, -1.0 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng));
    const std::vector<Vec> ys = random_walk(rng, 200, p, 1.0);
    PolsState state = PolsState::initial(p, d, lambda);
    HintProvider hint = HintProvider::self_consistent(p);
    std::vector<Vec> features;
    for (int t = 1; t <= 200; ++t) {
      const std::span<const Vec> hist(ys.data(), static_cast<std::size_t>(t - 1));
      const Feature f = build_feature(hist, t, H, p);
      features.push_back(f.z);
      const Vec h = hint.next(HintContext{hist, t, &state, &f});
      StagedStep st = pols_step(std::move(state), f, h);
      const Mat direct = ols_closed_form(lambda, features, hist, p);
      worst = std::max(worst, max_abs_diff(st.M_pols, direct));
      state = pols_commit(std::move(st), ys[static_cast<std::size_t>(t - 1)]);
    }
  }
  r.pass = worst <= 1e-8;
  r.detail = "max entrywise |M_pols - M_ols| = " + num(worst) + " over 100 streams";
  return r;
}

// 2
CriterionResult recursion_vs_closed_form() {
  CriterionResult r{2, "recursion-vs-closed-form", false, "", 0.0};
  const ExperimentConfig cfg = preset("exp1");
  NoiseModel model = cfg.noise;
  model.seed = mix_seed(cfg.seed, 0);
  const Trajectory traj = simulate(cfg.system, model, cfg.T);
  const std::size_t p = cfg.system.p();
  const std::size_t d = p * static_cast<std::size_t>(cfg.H);
  BuiltHint hint = build_hint(cfg.variants.back().hint, cfg.system);
  PolsState state = PolsState::initial(p, d, cfg.lambda);
  std::vector<Vec> features;
  double worst = 0.0;
  for (int t = 1; t <= cfg.T; ++t) {
    const std::span<const Vec> hist(traj.outputs.data(), static_cast<std::size_t>(t - 1));
    const Feature f = build_feature(hist, t, cfg.H, p);
    features.push_back(f.z);
    const Vec h = hint.provider.next(HintContext{hist, t, &state, &f});
    StagedStep st = pols_step(std::move(state), f, h);
    const Mat closed = pols_closed_form(cfg.lambda, features, hist, h);
    worst = std::max(worst, frobenius_norm(st.M_pols - closed));
    state = pols_commit(std::move(st), traj.y(t));
  }
  r.pass = worst <= 1e-7;
  r.detail = "max_t ||M_pols - closed form||_F = " + num(worst) + ", T = 2000";
  return r;
}

// 3
CriterionResult regression_inequality() {
  CriterionResult r{3, "regression-regret-inequality", false, "", 0.0};
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst_slack = INFINITY, worst_chain = INFINITY;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t p = 1 + inst % 2;
    const int H = 1 + static_cast<int>(rng() % 3);
    const std::size_t d = p * static_cast<std::size_t>(H);
    const int T = 150;
    const double lambda = std::pow(10.0, -1.0 + 2.0 * unit(rng));
    const double hint_noise = 2.0 * unit(rng);
    const std::vector<Vec> ys = random_walk(rng, T, p, 1.0);
    PolsState state = PolsState::initial(p, d, lambda);
    std::vector<Vec> zs, preds;
    double max_delta = 0.0, sum_z2 = 0.0, potential = 0.0;
    for (int t = 1; t <= T; ++t) {
      const std::span<const Vec> hist(ys.data(), static_cast<std::size_t>(t - 1));
      const Feature f = build_feature(hist, t, H, p);
      const Vec& y = ys[static_cast<std::size_t>(t - 1)];
      Vec h = y;
      for (auto& v : h) v += hint_noise * gauss(rng);
      StagedStep st = pols_step(std::move(state), f, h);
      max_delta = std::max(max_delta, norm2(vec_sub(y, h)));
      potential += dot(f.z, st.state.P * f.z);  // z^T G_t^-1 z
      sum_z2 += norm2_squared(f.z);
      zs.push_back(f.z);
      preds.push_back(st.prediction);
      state = pols_commit(std::move(st), y);
    }
    // Chain: sum z^T G_t^-1 z <= log det G_T - log det G_0 <= d log(1 + sum ||z||^2 / (lambda d))
    const Mat G = regularized_gram(lambda, zs, d);
    const double logdet_ratio = log_abs_determinant(G) - static_cast<double>(d) * std::log(lambda);
    const double cap = static_cast<double>(d) * std::log1p(sum_z2 / (lambda * static_cast<double>(d)));
    worst_chain = std::min({worst_chain, logdet_ratio - potential + 1e-9 * (1 + logdet_ratio),
                            cap - logdet_ratio + 1e-9 * (1 + cap)});

    double learner = 0.0;
    for (int t = 0; t < T; ++t) learner += norm2_squared(vec_sub(preds[static_cast<std::size_t>(t)], ys[static_cast<std::size_t>(t)]));
    // Comparators: ridge optimum over the full stream plus random matrices.
    std::vector<Mat> comps;
    Mat B(p, d);
    for (int t = 0; t < T; ++t) B += outer(ys[static_cast<std::size_t>(t)], zs[static_cast<std::size_t>(t)]);
    comps.push_back(solve(G, B.transpose()).transpose());
    for (int k = 0; k < 5; ++k) {
      Mat M(p, d);
      for (auto& v : M.data()) v = gauss(rng);
      comps.push_back(M);
    }
    for (const Mat& M : comps) {
      double comp = 0.0;
      for (int t = 0; t < T; ++t) {
        comp += norm2_squared(vec_sub(M * zs[static_cast<std::size_t>(t)], ys[static_cast<std::size_t>(t)]));
      }
      const double bound = regression_regret_bound(lambda, frobenius_norm(M), max_delta, d, sum_z2);
      worst_slack = std::min(worst_slack, bound - (learner - comp));
    }
  }
  r.pass = worst_slack >= -1e-6 && worst_chain >= 0.0;
  r.detail = "min slack = " + num(worst_slack) + ", min potential-chain gap = " + num(worst_chain);
  return r;
}

// 4
CriterionResult filtered_sum_oracle() {
  CriterionResult r{4, "filtered-sum-oracle", false, "", 0.0};
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool ok = true;
  double worst_ratio = 0.0, worst_tail = 0.0;
  auto check = [&](const Mat& A, double kappa_A) {
    const FilteredSum s = filtered_jordan_sum(A, 1, 500);
    const double cap = 2.0 * static_cast<double>(A.rows()) * kappa_A;
    worst_ratio = std::max(worst_ratio, s.total() / cap);
    worst_tail = std::max(worst_tail, s.last_increment);
    ok = ok && s.total() <= cap && s.converged(1e-10);
  };
  const SystemSpec swap = builtin_system("symmetric_swap");
  check(swap.A, swap.kappa_A);
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 2 + rng() % 4;
    Vec eig(n);
    for (auto& e : eig) {
      const double u = unit(rng);
      e = u < 0.15 ? 1.0 : (u < 0.3 ? -1.0 : -0.9 + 1.8 * unit(rng));
    }
    Mat S = Mat::identity(n);
    for (auto& v : S.data()) v += 0.3 * (2.0 * unit(rng) - 1.0);
    const Mat Sinv = inverse(S);
    const Mat A = S * Mat::diag(eig) * Sinv;
    check(A, operator_norm(S) * operator_norm(Sinv));
  }
  r.pass = ok;
  r.detail = "max sum / (2 n kappa_A) = " + num(worst_ratio) + ", max last increment = " + num(worst_tail);
  return r;
}

// 5
CriterionResult marginal_annihilation() {
  CriterionResult r{5, "marginal-annihilation", false, "", 0.0};
  double worst = 0.0;
  for (int size = 1; size <= 3; ++size) {
    for (double lam : {-1.0, 1.0}) {
      Mat J(static_cast<std::size_t>(size), static_cast<std::size_t>(size));
      for (int i = 0; i < size; ++i) {
        J(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = lam;
        if (i + 1 < size) J(static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1)) = 1.0;
      }
      const Mat base = J * J - Mat::identity(static_cast<std::size_t>(size));
      Mat f = Mat::identity(static_cast<std::size_t>(size));
      for (int k = 0; k < size; ++k) f = f * base;
      worst = std::max(worst, operator_norm(f));
    }
  }
  r.pass = worst <= 1e-12;
  r.detail = "max ||(J^2 - I)^r|| = " + num(worst);
  return r;
}

ExperimentConfig only_variant(ExperimentConfig cfg, const std::string& label) {
  std::erase_if(cfg.variants, [&](const Variant& v) { return v.label != label; });
  if (cfg.variants.empty()) throw Error(ErrorCode::InvalidArgument, "preset has no variant " + label);
  return cfg;
}

// 6
CriterionResult exp1_log_regret() {
  CriterionResult r{6, "exp1-log-regret", false, "", 0.0};
  const ExperimentConfig cfg = only_variant(preset("exp1"), "lb_0.8");
  const RunRecord run = run_experiment(cfg);
  const VariantRecord& rec = run.variants.front();
  std::vector<double> regret;
  for (const StepRow& row : rec.trials.front()) regret.push_back(row.cum_regret);
  const Fit fit = log_fit(regret, 100, 2000);
  BoundInputs in;
  const MeasuredConstants mc = system_constants(cfg);
  in.norm_C = mc.norm_C;
  in.C_w = mc.C_w;
  in.C_v = mc.C_v;
  in.kappa_tilde = rec.hint_gain->kappa;
  in.gamma_tilde = rec.hint_gain->gamma;
  const double bound = residual_bound(ResidualKind::LuenbergerHint, in);
  const double dmax = rec.summaries.front().delta_max;
  r.pass = fit.r_squared >= 0.95 && dmax <= bound;
  r.detail = "R^2 = " + num(fit.r_squared) + " (slope " + num(fit.slope) + "), delta_max = " + num(dmax) +
             " <= " + num(bound);
  return r;
}

// 7
CriterionResult two_lag_bound() {
  CriterionResult r{7, "two-lag-residual-bound", false, "", 0.0};
  ExperimentConfig cfg = only_variant(preset("exp2"), "lag2");
  const SystemSpec& sys = cfg.system;
  const MeasuredConstants mc = system_constants(cfg);
  BoundInputs in;
  in.norm_C = mc.norm_C;
  in.n = sys.n();
  in.kappa_A = sys.kappa_A;
  in.C_w = mc.C_w;
  in.C_v = mc.C_v;
  const double bound = residual_bound(ResidualKind::TwoLag, in);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    NoiseModel model = cfg.noise;
    model.seed = mix_seed(991, static_cast<std::uint64_t>(s));
    const Trajectory traj = simulate(sys, model, cfg.T);
    HintProvider hint = HintProvider::polynomial(lag_coeffs(2), sys.p());
    ResidualTrace trace;
    for (int t = 1; t <= cfg.T; ++t) {
      const std::span<const Vec> hist(traj.outputs.data(), static_cast<std::size_t>(t - 1));
      trace.push(traj.y(t), hint.next(HintContext{hist, t, nullptr, nullptr}));
    }
    worst = std::max(worst, trace.delta_max());
  }
  r.pass = worst <= bound;
  r.detail = "max delta_max over 20 seeds = " + num(worst) + " <= " + num(bound);
  return r;
}

// 8
CriterionResult decomposition_check() {
  CriterionResult r{8, "residual-decomposition", false, "", 0.0};
  const ExperimentConfig e2 = preset("exp2");
  NoiseModel m2 = e2.noise;
  m2.seed = 5;
  const double a = residual_decomposition_check(e2.system, lag_coeffs(2), simulate(e2.system, m2, 500));
  const ExperimentConfig a2 = preset("expA2");
  NoiseModel m3 = a2.noise;
  m3.seed = 6;
  const double b = residual_decomposition_check(a2.system, diff_coeffs(3), simulate(a2.system, m3, 500));
  r.pass = a <= 1e-8 && b <= 1e-8;
  r.detail = "symmetric_swap/2-lag " + num(a) + ", jordan3/diff(3) " + num(b);
  return r;
}

// 9
CriterionResult truncation_and_prediction() {
  CriterionResult r{9, "truncation-and-prediction-error", false, "", 0.0};
  const ExperimentConfig cfg = preset("exp1");
  const SystemSpec& sys = cfg.system;
  NoiseModel model = cfg.noise;
  model.seed = mix_seed(cfg.seed, 0);
  const Trajectory traj = simulate(sys, model, cfg.T);
  const GainGrid& grid = cfg.comparator.grid;
  HindsightResult all = best_in_hindsight(sys, grid, std::span<const Vec>(traj.outputs).first(1));
  const std::size_t K = all.candidates.size();
  const MeasuredConstants mc = system_constants(cfg);
  BoundInputs in;
  in.norm_C = mc.norm_C;
  in.r = sys.jordan_r;
  in.kappa = grid.kappa;
  in.gamma = grid.gamma;
  in.C_w = mc.C_w;
  in.C_v = mc.C_v;
  in.C_y = mc.C_y;
  in.H = cfg.H;
  const double cpred = c_pred(in);
  double worst_trunc = 0.0, worst_pred = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Mat& L = all.candidates[(K - 1) * static_cast<std::size_t>(k) / 9];
    const std::vector<Vec> lb = luenberger_rollout(sys, L, traj.outputs);
    const TruncatedPredictor tr = truncated_predictor(sys, L, cfg.H);
    for (int t = 1; t <= cfg.T; ++t) {
      const std::span<const Vec> hist(traj.outputs.data(), static_cast<std::size_t>(t - 1));
      const Vec trunc = tr.predict(build_feature(hist, t, cfg.H, sys.p()));
      const Vec& lbt = lb[static_cast<std::size_t>(t - 1)];
      worst_trunc = std::max(worst_trunc, norm2(vec_sub(lbt, trunc)) / truncation_bound(in, t));
      worst_pred = std::max(worst_pred, norm2(vec_sub(lbt, traj.y(t))) / cpred);
    }
  }
  r.pass = worst_trunc <= 1.0 && worst_pred <= 1.0;
  r.detail = "max truncation error / envelope = " + num(worst_trunc) + ", max prediction error / C_pred = " +
             num(worst_pred) + " (10 of " + std::to_string(K) + " certified gains)";
  return r;
}

std::vector<double> cumulative_loss(const VariantRecord& rec) {
  std::vector<double> out;
  double acc = 0.0;
  for (const StepRow& row : rec.trials.front()) out.push_back(acc += row.learner_loss);
  return out;
}

const VariantRecord& variant(const RunRecord& run, const std::string& label) {
  for (const VariantRecord& v : run.variants) {
    if (v.label == label) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "no variant " + label);
}

// 10
CriterionResult exp2_fixed_gain() {
  CriterionResult r{10, "exp2-fixed-gain-comparison", false, "", 0.0};
  const RunRecord run = run_experiment(preset("exp2"));
  const auto kal = cumulative_loss(variant(run, "kalman"));
  const auto hinf = cumulative_loss(variant(run, "hinf"));
  const auto lag = cumulative_loss(variant(run, "lag2"));
  const double ratio = lag.back() / std::min(kal.back(), hinf.back());
  const Fit fk = linear_fit(kal, 1);
  const Fit fh = linear_fit(hinf, 1);
  r.pass = ratio <= 0.5 && fk.r_squared >= 0.95 && fh.r_squared >= 0.95;
  r.detail = "2-lag / min(kalman, hinf) = " + num(ratio) + ", linear R^2 kalman " + num(fk.r_squared) + ", hinf " +
             num(fh.r_squared);
  return r;
}

// 11
CriterionResult expA3_negative_control() {
  CriterionResult r{11, "complex-spectrum-negative-control", false, "", 0.0};
  const RunRecord run = run_experiment(preset("expA3"));
  auto at = [](const VariantRecord& v, int t) { return v.trials.front()[static_cast<std::size_t>(t - 1)].delta_max; };
  const int T = run.config.T;
  const VariantRecord& lag = variant(run, "lag2");
  const VariantRecord& oracle = variant(run, "oracle");
  const double lag_ratio = at(lag, T) / at(lag, T / 2);
  const double oracle_ratio = at(oracle, T) / at(oracle, T / 2);
  const double oracle_tail = at(oracle, T) / at(oracle, 3 * T / 4) - 1.0;
  r.pass = lag_ratio >= 1.5 && oracle_ratio <= 2.0 && oracle_tail <= 0.05;
  r.detail = "2-lag ratio " + num(lag_ratio) + ", oracle ratio " + num(oracle_ratio) + ", oracle last-quartile rise " +
             num(100.0 * oracle_tail) + "%";
  return r;
}

// 12
CriterionResult exp3_lambda() {
  CriterionResult r{12, "exp3-lambda-sensitivity", false, "", 0.0};
  const RunRecord run = run_experiment(preset("exp3_lambda"));
  auto fin = [&](const std::string& label) { return variant(run, label).summaries.front().final_regret; };
  const double a = fin("lambda0.01"), b = fin("lambda0.1"), c = fin("lambda1"), d = fin("lambda10");
  const double lo = std::min({a, b, c}), hi = std::max({a, b, c});
  const bool close = lo > 0.0 && hi <= 1.25 * lo;
  r.pass = close && d > c;
  r.detail = "final regrets " + num(a) + ", " + num(b) + ", " + num(c) + " (spread " + num(hi / lo) + "), lambda 10: " +
             num(d);
  return r;
}

std::string slurp_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    std::ifstream is(f, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    all += f.filename().string() + "\n" + ss.str();
  }
  return all;
}

// 13
CriterionResult determinism() {
  CriterionResult r{13, "determinism", false, "", 0.0};
  const auto base = std::filesystem::temp_directory_path() /
                    ("fmpols_det_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  bool same = true;
  std::string checked;
  for (const char* name : {"exp1", "exp2", "expA1"}) {
    const ExperimentConfig cfg = preset(name);
    write_outputs(run_experiment(cfg), base / name / "a");
    write_outputs(run_experiment(cfg), base / name / "b");
    const std::string a = slurp_dir(base / name / "a");
    const std::string b = slurp_dir(base / name / "b");
    same = same && !a.empty() && a == b;
    checked += std::string(checked.empty() ? "" : ", ") + name;
  }
  std::error_code ec;
  std::filesystem::remove_all(base, ec);
  r.pass = same;
  r.detail = same ? "byte-identical CSV for " + checked : "CSV differs between runs";
  return r;
}

struct Entry {
  std::function<CriterionResult()> run;
  double budget_seconds;  // 0: no runtime criterion
};

}  // namespace

std::vector<CriterionResult> run_acceptance() {
  const std::vector<Entry> entries = {
      {ols_recovery, 5.0},       {recursion_vs_closed_form, 5.0}, {regression_inequality, 0.0},
      {filtered_sum_oracle, 10.0},     {marginal_annihilation, 0.0},    {exp1_log_regret, 60.0},
      {two_lag_bound, 10.0},    {decomposition_check, 0.0},     {truncation_and_prediction, 0.0},
      {exp2_fixed_gain, 30.0},   {expA3_negative_control, 0.0},   {exp3_lambda, 0.0},
      {determinism, 0.0},
  };
  std::vector<CriterionResult> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = entries[i].run();
    } catch (const std::exception& e) {
      r.id = static_cast<int>(i) + 1;
      r.name = "criterion";
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (entries[i].budget_seconds > 0.0 && r.seconds >= entries[i].budget_seconds) {
      r.pass = false;
      r.detail += "; runtime over " + num(entries[i].budget_seconds) + " s";
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS " : "FAIL ") << (r.id < 10 ? " " : "") << r.id << " " << r.name << "  " << r.detail << " ("
     << num(r.seconds) << " s)";
  return os.str();
}

}  // namespace fmpols
