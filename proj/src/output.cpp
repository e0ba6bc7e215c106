#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "fmpols/analysis.hpp"
#include "fmpols/experiment.hpp"

namespace fmpols {

std::string format_double(double x) {
  if (x == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

AggregateColumn aggregate(const VariantRecord& rec, double StepRow::*field) {
  AggregateColumn col;
  if (rec.trials.empty()) return col;
  const std::size_t T = rec.trials.front().size();
  const double k = static_cast<double>(rec.trials.size());
  col.mean.assign(T, 0.0);
  col.std.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (const auto& tr : rec.trials) sum += tr[t].*field;
    const double mean = sum / k;
    double ss = 0.0;
    for (const auto& tr : rec.trials) {
      const double d = tr[t].*field - mean;
      ss += d * d;
    }
    col.mean[t] = mean;
    col.std[t] = rec.trials.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
  }
  return col;
}

namespace {

struct Column {
  const char* name;
  double StepRow::*field;
};

std::vector<Column> columns_for(const VariantRecord& rec) {
  std::vector<Column> cols{{"y_norm", &StepRow::y_norm}, {"learner_loss", &StepRow::learner_loss}};
  if (rec.has_comparator) {
    cols.push_back({"comparator_loss", &StepRow::comparator_loss});
    cols.push_back({"cum_regret", &StepRow::cum_regret});
  }
  if (rec.has_hint) cols.push_back({"delta_max", &StepRow::delta_max});
  return cols;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os << body;
  os.flush();
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::string single_trial_body(const VariantRecord& rec, const std::vector<StepRow>& rows) {
  std::string out = csv_header(rec, false) + "\n";
  const auto cols = columns_for(rec);
  for (const StepRow& r : rows) {
    out += std::to_string(r.t);
    for (const Column& c : cols) out += "," + format_double(r.*(c.field));
    out += "\n";
  }
  return out;
}

}  // namespace

std::string csv_header(const VariantRecord& rec, bool aggregated) {
  std::string h = "t";
  for (const Column& c : columns_for(rec)) {
    if (aggregated) {
      h += std::string(",") + c.name + "_mean," + c.name + "_std";
    } else {
      h += std::string(",") + c.name;
    }
  }
  return h;
}

void emit_trial_csv(const VariantRecord& rec, std::size_t trial, const std::filesystem::path& path) {
  if (trial >= rec.trials.size()) throw Error(ErrorCode::InvalidArgument, "emit_trial_csv: no such trial");
  write_file(path, single_trial_body(rec, rec.trials[trial]));
}

void emit_csv(const VariantRecord& rec, const std::filesystem::path& path) {
  if (rec.trials.size() <= 1) {
    static const std::vector<StepRow> none;
    write_file(path, single_trial_body(rec, rec.trials.empty() ? none : rec.trials.front()));
    return;
  }
  const auto cols = columns_for(rec);
  std::vector<AggregateColumn> agg;
  for (const Column& c : cols) agg.push_back(aggregate(rec, c.field));
  std::string out = csv_header(rec, true) + "\n";
  const std::size_t T = rec.trials.front().size();
  for (std::size_t t = 0; t < T; ++t) {
    out += std::to_string(rec.trials.front()[t].t);
    for (const AggregateColumn& a : agg) out += "," + format_double(a.mean[t]) + "," + format_double(a.std[t]);
    out += "\n";
  }
  write_file(path, out);
}

std::vector<std::filesystem::path> write_outputs(const RunRecord& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const VariantRecord& rec : run.variants) {
    const std::string stem = run.config.name + "_" + rec.label;
    written.push_back(dir / (stem + ".csv"));
    emit_csv(rec, written.back());
    if (run.config.emit_trials && rec.trials.size() > 1) {
      for (std::size_t k = 0; k < rec.trials.size(); ++k) {
        written.push_back(dir / (stem + "_trial" + std::to_string(k) + ".csv"));
        emit_trial_csv(rec, k, written.back());
      }
    }
  }
  written.push_back(dir / "summary.txt");
  write_file(written.back(), summary_text(run));
  return written;
}

namespace {

struct Stat {
  double mean = 0.0;
  double std = 0.0;
};

template <class F>
Stat stat_of(const VariantRecord& rec, F get) {
  Stat s;
  const double k = static_cast<double>(rec.summaries.size());
  for (const auto& t : rec.summaries) s.mean += get(t);
  s.mean /= k;
  if (rec.summaries.size() > 1) {
    double ss = 0.0;
    for (const auto& t : rec.summaries) ss += (get(t) - s.mean) * (get(t) - s.mean);
    s.std = std::sqrt(ss / (k - 1.0));
  }
  return s;
}

std::string stat_text(const Stat& s, std::size_t trials) {
  if (trials <= 1) return format_double(s.mean);
  return format_double(s.mean) + " (std " + format_double(s.std) + ")";
}

// Residual family implied by the resolved filter, when one of the closed
// bounds applies.
std::optional<ResidualKind> residual_family(const VariantRecord& rec, int r) {
  if (rec.hint_gain) return ResidualKind::LuenbergerHint;
  if (rec.hint_coeffs.empty()) return std::nullopt;
  if (rec.hint_coeffs == lag_coeffs(2)) return ResidualKind::TwoLag;
  if (rec.hint_coeffs == diff_coeffs(r)) return ResidualKind::HighOrderDiff;
  return std::nullopt;
}

BoundInputs base_inputs(const RunRecord& run, const VariantRecord& rec) {
  const MeasuredConstants mc = system_constants(run.config);
  BoundInputs in;
  in.norm_C = mc.norm_C;
  in.n = run.config.system.n();
  in.p = run.config.system.p();
  in.r = run.config.system.jordan_r;
  in.kappa_A = run.config.system.kappa_A;
  in.C_w = mc.C_w;
  in.C_v = mc.C_v;
  in.C_y = mc.C_y;
  in.lambda = rec.lambda > 0.0 ? rec.lambda : run.config.lambda;
  in.H = rec.H > 0 ? rec.H : run.config.H;
  in.T = run.config.T;
  if (run.config.comparator.kind == ComparatorKind::Grid) {
    in.kappa = run.config.comparator.grid.kappa;
    in.gamma = run.config.comparator.grid.gamma;
  }
  if (rec.hint_gain) {
    in.kappa_tilde = std::max(1.0, rec.hint_gain->kappa);
    in.gamma_tilde = rec.hint_gain->gamma;
  }
  return in;
}

std::string bound_lines(const RunRecord& run, const VariantRecord& rec) {
  std::ostringstream os;
  const MeasuredConstants mc = system_constants(run.config);
  if (!mc.bounded) {
    os << "  bounds: not applicable (unbounded Gaussian noise)\n";
    return os.str();
  }
  BoundInputs in = base_inputs(run, rec);
  double worst_delta = 0.0;
  for (const auto& s : rec.summaries) worst_delta = std::max(worst_delta, s.delta_max);
  if (rec.has_hint) {
    if (auto fam = residual_family(rec, in.r)) {
      const double b = std::isfinite(in.kappa_tilde) ? residual_bound(*fam, in) : INFINITY;
      os << "  residual bound (" << to_string(*fam) << "): " << format_double(b) << "  measured max delta_max "
         << format_double(worst_delta) << (worst_delta <= b ? "  [holds]" : "  [VIOLATED]") << "\n";
    } else {
      os << "  residual bound: no closed form for this filter\n";
    }
  }
  if (run.config.comparator.kind == ComparatorKind::Grid && rec.has_hint) {
    in.delta_max = worst_delta;
    const double b = regret_bound(in);
    double worst_regret = -INFINITY;
    for (const auto& s : rec.summaries) worst_regret = std::max(worst_regret, s.final_regret);
    os << "  regret bound over the comparator class: " << format_double(b) << "  measured final regret "
       << format_double(worst_regret) << (worst_regret <= b ? "  [holds]" : "  [VIOLATED]") << "\n";
    os << "  C_trun " << format_double(c_trun(in)) << ", C_pred " << format_double(c_pred(in)) << ", memory for the "
       << "bound " << recommended_memory(in.gamma, in.r, in.T) << " (run uses " << in.H << ")\n";
  }
  return os.str();
}

}  // namespace

std::string summary_text(const RunRecord& run) {
  std::ostringstream os;
  const ExperimentConfig& c = run.config;
  os << "experiment " << c.name << "\n";
  os << "system " << c.system.name << " (n = " << c.system.n() << ", p = " << c.system.p() << ", r = "
     << c.system.jordan_r << ", kappa_A = " << format_double(c.system.kappa_A) << ")\n";
  os << "noise " << to_string(c.noise.kind) << ", C_w " << format_double(c.noise.uniform_w) << ", C_v "
     << format_double(c.noise.uniform_v) << "\n";
  os << "T " << c.T << ", H " << c.H << ", lambda " << format_double(c.lambda) << ", trials " << c.trials << ", seed "
     << c.seed << "\n";
  os << "comparator " << run.comparator_id << "\n";
  for (const std::string& n : c.notes) os << "note: " << n << "\n";
  for (const VariantRecord& rec : run.variants) {
    const std::size_t k = rec.summaries.size();
    os << "\n[" << rec.label << "] " << rec.detail << "\n";
    if (rec.H > 0) os << "  H " << rec.H << ", lambda " << format_double(rec.lambda) << "\n";
    os << "  cumulative loss " << stat_text(stat_of(rec, [](const TrialSummary& s) { return s.cumulative_loss; }), k)
       << "\n";
    if (rec.has_comparator) {
      os << "  comparator cumulative loss "
         << stat_text(stat_of(rec, [](const TrialSummary& s) { return s.comparator_cumulative_loss; }), k) << "\n";
      os << "  final regret " << stat_text(stat_of(rec, [](const TrialSummary& s) { return s.final_regret; }), k)
         << "\n";
      if (c.T >= 109) {
        const AggregateColumn reg = aggregate(rec, &StepRow::cum_regret);
        const Fit f = log_fit(reg.mean, 100);
        os << "  log fit of regret over t >= 100: slope " << format_double(f.slope) << ", R^2 "
           << format_double(f.r_squared) << "\n";
      }
    } else if (c.T >= 109) {
      const AggregateColumn loss = aggregate(rec, &StepRow::learner_loss);
      std::vector<double> cum(loss.mean.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < cum.size(); ++i) cum[i] = acc += loss.mean[i];
      const Fit f = linear_fit(cum, 100);
      os << "  linear fit of cumulative loss over t >= 100: slope " << format_double(f.slope) << ", R^2 "
         << format_double(f.r_squared) << "\n";
    }
    if (rec.has_hint) {
      os << "  delta_max " << stat_text(stat_of(rec, [](const TrialSummary& s) { return s.delta_max; }), k) << "\n";
    }
    os << bound_lines(run, rec);
  }
  return os.str();
}

std::string bounds_text(const RunRecord& run) {
  std::ostringstream os;
  const MeasuredConstants mc = system_constants(run.config);
  os << "preset " << run.config.name << ": ||C|| = " << format_double(mc.norm_C);
  if (mc.bounded) {
    os << ", C_w = " << format_double(mc.C_w) << ", C_v = " << format_double(mc.C_v) << ", C_y = "
       << format_double(mc.C_y);
  }
  os << "\n";
  for (const VariantRecord& rec : run.variants) {
    os << "[" << rec.label << "] " << rec.detail << "\n";
    os << bound_lines(run, rec);
  }
  return os.str();
}

}  // namespace fmpols
