#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fmpols/comparators.hpp"
#include "fmpols/hints.hpp"
#include "fmpols/lds.hpp"

namespace fmpols {

enum class HintSpecKind { Luenberger, Polynomial, Zero, SelfConsistent };
std::string_view to_string(HintSpecKind kind);
HintSpecKind hint_spec_kind_from_string(std::string_view s);

// Declarative hint. Luenberger hints take an explicit gain or are placed at
// radius 1 - gamma_tilde. Polynomial hints name a family:
//   coeffs  explicit c_0..c_m
//   ch      monic polynomial with the listed real roots
//   diff    (z^2 - 1)^order
//   lag     z^order - 1
//   oracle  (z^2 - 2 cos(theta) z + 1)^order
struct HintSpec {
  HintSpecKind kind = HintSpecKind::Zero;
  double gamma_tilde = 0.8;
  std::optional<Mat> gain;
  std::string family = "coeffs";
  std::vector<double> roots;
  int order = 1;
  double theta = 0.7;
  PolyCoeffs coeffs;
};

PolyCoeffs resolve_coeffs(const HintSpec& spec);

struct BuiltHint {
  HintProvider provider;
  std::optional<LuenbergerGain> gain;  // realized observer gain, Luenberger only
  PolyCoeffs coeffs;                   // resolved filter, Polynomial only
};
BuiltHint build_hint(const HintSpec& spec, const SystemSpec& sys);

enum class PredictorKind { FmPols, Kalman, Hinf, FixedGain };
std::string_view to_string(PredictorKind kind);
PredictorKind predictor_kind_from_string(std::string_view s);

// One line of a figure: an FM-POLS run with its own hint (and optionally its
// own H, lambda), or a fixed-gain baseline predictor.
struct Variant {
  std::string label;
  PredictorKind predictor = PredictorKind::FmPols;
  HintSpec hint;
  std::optional<int> H;
  std::optional<double> lambda;
  double hinf_level = 1.0;
  std::optional<Mat> gain;  // FixedGain predictor
};

enum class ComparatorKind { Grid, Kalman, Hinf, FixedGain, None };
std::string_view to_string(ComparatorKind kind);
ComparatorKind comparator_kind_from_string(std::string_view s);

struct ComparatorSpec {
  ComparatorKind kind = ComparatorKind::None;
  GainGrid grid;
  double level = 1.0;  // Hinf
  std::optional<Mat> gain;  // FixedGain
};

struct ExperimentConfig {
  std::string name = "custom";
  SystemSpec system;
  NoiseModel noise;
  int T = 2000;
  int H = 15;
  double lambda = 1.0;
  HintSpec hint;
  std::vector<Variant> variants;  // empty: one FM-POLS run with `hint`
  ComparatorSpec comparator;
  int trials = 1;
  std::uint64_t seed = 1;
  bool emit_trials = false;
  std::vector<std::string> notes;  // assumed settings, echoed in summary.txt

  /// Throws InvalidArgument on T, H, trials < 1, lambda <= 0 or shape mismatches.
  void validate() const;
  std::vector<Variant> effective_variants() const;
};

std::vector<std::string> preset_names();
/// exp1, exp2, exp3_H, exp3_lambda, expA1, expA2, expA3. UnknownPreset otherwise.
ExperimentConfig preset(std::string_view name);

struct StepRow {
  int t = 0;
  double y_norm = 0.0;
  double learner_loss = 0.0;
  double comparator_loss = 0.0;
  double cum_regret = 0.0;
  double delta_max = 0.0;
};

struct TrialSummary {
  int trial = 0;
  std::uint64_t seed = 0;
  double final_regret = 0.0;
  double delta_max = 0.0;
  double cumulative_loss = 0.0;
  double comparator_cumulative_loss = 0.0;
  double wall_seconds = 0.0;
};

struct VariantRecord {
  std::string label;
  bool has_comparator = false;
  bool has_hint = false;
  int H = 0;
  double lambda = 0.0;
  std::string detail;  // realized gain / filter, for summary.txt
  std::optional<LuenbergerGain> hint_gain;
  PolyCoeffs hint_coeffs;
  std::vector<std::vector<StepRow>> trials;  // trials[k][t-1]
  std::vector<TrialSummary> summaries;
};

struct RunRecord {
  ExperimentConfig config;
  std::string comparator_id;
  std::vector<VariantRecord> variants;
};

/// Simulates every trial (concurrently), drives each variant's step loop and
/// the comparator on the shared trajectory, merged by trial index.
RunRecord run_experiment(const ExperimentConfig& config);

// Per-step mean and sample standard deviation across trials.
struct AggregateColumn {
  std::vector<double> mean;
  std::vector<double> std;
};
AggregateColumn aggregate(const VariantRecord& rec, double StepRow::*field);

std::string csv_header(const VariantRecord& rec, bool aggregated);
/// One file for a variant: the single trial when trials == 1, otherwise
/// mean/std columns. Shortest round-trip decimals. IoError when unwritable.
void emit_csv(const VariantRecord& rec, const std::filesystem::path& path);
/// Per-trial file (always the single-trial schema).
void emit_trial_csv(const VariantRecord& rec, std::size_t trial, const std::filesystem::path& path);
std::string format_double(double x);

/// Writes <name>_<label>.csv per variant (plus per-trial files when asked)
/// and summary.txt into `dir`. Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const RunRecord& run, const std::filesystem::path& dir);

/// Final metrics, log fits and bound comparisons as plain text.
std::string summary_text(const RunRecord& run);
/// Bound evaluations next to the measured quantities.
std::string bounds_text(const RunRecord& run);

/// Reads the constants that the bound calculators need from a config.
struct MeasuredConstants {
  double norm_C = 0.0;
  double C_w = 0.0;
  double C_v = 0.0;
  double C_y = 0.0;
  bool bounded = false;  // false for Gaussian noise
};
MeasuredConstants system_constants(const ExperimentConfig& config);

}  // namespace fmpols
