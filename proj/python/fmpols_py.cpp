#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fmpols/acceptance.hpp"
#include "fmpols/analysis.hpp"
#include "fmpols/comparators.hpp"
#include "fmpols/config.hpp"
#include "fmpols/experiment.hpp"
#include "fmpols/hints.hpp"
#include "fmpols/predictor.hpp"

namespace py = pybind11;
using namespace fmpols;

namespace {

using Rows = std::vector<std::vector<double>>;

Mat to_mat(const Rows& rows) {
  if (rows.empty()) return Mat();
  Mat m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw Error(ErrorCode::InvalidArgument, "ragged matrix");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Rows from_mat(const Mat& m) {
  Rows r(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

ExperimentConfig resolve(const std::string& preset_name, const std::string& config_json,
                         const std::vector<std::string>& overrides) {
  ExperimentConfig c = config_json.empty() ? preset(preset_name) : config_from_json(config_json);
  return overrides.empty() ? c : apply_overrides(c, overrides);
}

py::dict record_to_dict(const RunRecord& run) {
  py::dict out;
  out["name"] = run.config.name;
  out["comparator"] = run.comparator_id;
  py::dict variants;
  for (const VariantRecord& rec : run.variants) {
    py::dict v;
    auto column = [&](double StepRow::*field) {
      const AggregateColumn a = aggregate(rec, field);
      return a.mean;
    };
    std::vector<int> ts;
    for (const StepRow& r : rec.trials.front()) ts.push_back(r.t);
    v["t"] = ts;
    v["y_norm"] = column(&StepRow::y_norm);
    v["learner_loss"] = column(&StepRow::learner_loss);
    if (rec.has_comparator) {
      v["comparator_loss"] = column(&StepRow::comparator_loss);
      v["cum_regret"] = column(&StepRow::cum_regret);
    }
    if (rec.has_hint) v["delta_max"] = column(&StepRow::delta_max);
    py::list summaries;
    for (const TrialSummary& s : rec.summaries) {
      py::dict d;
      d["trial"] = s.trial;
      d["seed"] = s.seed;
      d["final_regret"] = s.final_regret;
      d["delta_max"] = s.delta_max;
      d["cumulative_loss"] = s.cumulative_loss;
      summaries.append(d);
    }
    v["trials"] = summaries;
    v["detail"] = rec.detail;
    variants[py::str(rec.label)] = v;
  }
  out["variants"] = variants;
  return out;
}

// Runs the predict/commit loop over a whole output stream with caller hints.
py::dict fm_pols(const Rows& outputs, const Rows& hints, int H, double lambda) {
  if (outputs.size() != hints.size()) throw Error(ErrorCode::LengthMismatch, "outputs and hints differ in length");
  if (outputs.empty()) throw Error(ErrorCode::InvalidArgument, "empty stream");
  const std::size_t p = outputs.front().size();
  PolsState state = PolsState::initial(p, p * static_cast<std::size_t>(H), lambda);
  Rows preds;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const std::int64_t t = static_cast<std::int64_t>(k) + 1;
    const Feature f = build_feature(std::span<const Vec>(outputs).first(k), t, H, p);
    StagedStep st = pols_step(std::move(state), f, hints[k]);
    preds.push_back(st.prediction);
    state = pols_commit(std::move(st), outputs[k]);
  }
  py::dict out;
  out["predictions"] = preds;
  out["M"] = from_mat(state.M);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "FM-POLS online predictor, hints, comparators and experiment presets";

  py::register_exception<Error>(m, "FmpolsError", PyExc_RuntimeError);

  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return config_to_json(preset(name)); }, py::arg("name"));
  m.def(
      "run",
      [](const std::string& preset_name, const std::string& config_json, const std::vector<std::string>& overrides) {
        ExperimentConfig cfg = resolve(preset_name, config_json, overrides);
        RunRecord run;
        {
          py::gil_scoped_release release;
          run = run_experiment(cfg);
        }
        return record_to_dict(run);
      },
      py::arg("preset") = "", py::arg("config_json") = "", py::arg("overrides") = std::vector<std::string>{});
  m.def(
      "run_to_dir",
      [](const std::string& preset_name, const std::string& out, const std::vector<std::string>& overrides) {
        const ExperimentConfig cfg = resolve(preset_name, "", overrides);
        std::vector<std::string> paths;
        py::gil_scoped_release release;
        for (const auto& p : write_outputs(run_experiment(cfg), out)) paths.push_back(p.string());
        return paths;
      },
      py::arg("preset"), py::arg("out"), py::arg("overrides") = std::vector<std::string>{});

  m.def(
      "simulate",
      [](const std::string& preset_name, std::uint64_t seed, int T) {
        const ExperimentConfig cfg = preset(preset_name);
        NoiseModel model = cfg.noise;
        model.seed = seed;
        return simulate(cfg.system, model, T > 0 ? T : cfg.T).outputs;
      },
      py::arg("preset"), py::arg("seed") = 1, py::arg("T") = 0);

  m.def("fm_pols", &fm_pols, py::arg("outputs"), py::arg("hints"), py::arg("H"), py::arg("lam") = 1.0);

  m.def("diff_coeffs", &diff_coeffs, py::arg("r"));
  m.def("lag_coeffs", &lag_coeffs, py::arg("k"));
  m.def("oracle_complex_coeffs", &oracle_complex_coeffs, py::arg("theta"), py::arg("r"));

  m.def(
      "design_gain",
      [](const std::string& system, double gamma) {
        const LuenbergerGain g = design_gain(builtin_system(system), gamma);
        py::dict d;
        d["L"] = from_mat(g.L);
        d["kappa"] = g.kappa;
        d["gamma"] = g.gamma;
        d["certified"] = g.certified;
        d["spectral_radius"] = g.spectral_radius;
        return d;
      },
      py::arg("system"), py::arg("gamma"));
  m.def(
      "certify_gain",
      [](const std::string& system, const Rows& L, double kappa, double gamma) {
        return certify_gain(builtin_system(system), to_mat(L), kappa, gamma).certified;
      },
      py::arg("system"), py::arg("L"), py::arg("kappa"), py::arg("gamma"));

  py::class_<BoundInputs>(m, "BoundInputs")
      .def(py::init<>())
      .def_readwrite("norm_C", &BoundInputs::norm_C)
      .def_readwrite("n", &BoundInputs::n)
      .def_readwrite("p", &BoundInputs::p)
      .def_readwrite("r", &BoundInputs::r)
      .def_readwrite("kappa_A", &BoundInputs::kappa_A)
      .def_readwrite("kappa", &BoundInputs::kappa)
      .def_readwrite("gamma", &BoundInputs::gamma)
      .def_readwrite("kappa_tilde", &BoundInputs::kappa_tilde)
      .def_readwrite("gamma_tilde", &BoundInputs::gamma_tilde)
      .def_readwrite("C_w", &BoundInputs::C_w)
      .def_readwrite("C_v", &BoundInputs::C_v)
      .def_readwrite("C_y", &BoundInputs::C_y)
      .def_readwrite("lam", &BoundInputs::lambda)
      .def_readwrite("H", &BoundInputs::H)
      .def_readwrite("T", &BoundInputs::T)
      .def_readwrite("delta_max", &BoundInputs::delta_max);

  m.def("regret_bound", &regret_bound, py::arg("inputs"));
  m.def(
      "residual_bound",
      [](const std::string& kind, const BoundInputs& in) {
        if (kind == "luenberger") return residual_bound(ResidualKind::LuenbergerHint, in);
        if (kind == "two_lag") return residual_bound(ResidualKind::TwoLag, in);
        if (kind == "high_order_diff") return residual_bound(ResidualKind::HighOrderDiff, in);
        throw Error(ErrorCode::InvalidArgument, "unknown residual kind " + kind);
      },
      py::arg("kind"), py::arg("inputs"));
  m.def(
      "log_fit",
      [](const std::vector<double>& series, int t_min, int t_max) {
        const Fit f = log_fit(series, t_min, t_max);
        return py::make_tuple(f.slope, f.intercept, f.r_squared);
      },
      py::arg("series"), py::arg("t_min") = 1, py::arg("t_max") = 0);

  m.def("verify", [] {
    std::vector<std::tuple<int, std::string, bool, std::string>> out;
    std::vector<CriterionResult> res;
    {
      py::gil_scoped_release release;
      res = run_acceptance();
    }
    for (const auto& r : res) out.emplace_back(r.id, r.name, r.pass, r.detail);
    return out;
  });
}
