#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eopr/baselines.hpp"
#include "eopr/errors.hpp"
#include "eopr/estimator.hpp"
#include "eopr/evaluation.hpp"
#include "eopr/io.hpp"
#include "eopr/panel.hpp"
#include "eopr/rng.hpp"
#include "eopr/simulation.hpp"

namespace py = pybind11;
using namespace eopr;

namespace {

Estimator estimator_from_args(const std::string& method,
                              const std::vector<double>& lambda_grid,
                              double rsc_ratio, double rsc_ridge) {
  return make_estimator(method, lambda_grid, RscConfig{rsc_ratio, rsc_ridge});
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Panel-data counterfactual estimation: ellipsoidal optimal "
            "recovery with classical synthetic-control baselines";

  py::register_exception<Error>(m, "EoprError");

  // ---- panel ----
  py::class_<PanelData>(m, "PanelData")
      .def(py::init([](Eigen::MatrixXd controls, Eigen::VectorXd treated,
                       int t0, std::vector<std::string> unit_labels,
                       std::vector<std::string> time_labels) {
             PanelData panel;
             panel.controls = std::move(controls);
             panel.treated = std::move(treated);
             panel.t0 = t0;
             panel.unit_labels = std::move(unit_labels);
             panel.time_labels = std::move(time_labels);
             ensure_labels(panel);
             panel.validate();
             return panel;
           }),
           py::arg("controls"), py::arg("treated"), py::arg("t0"),
           py::arg("unit_labels") = std::vector<std::string>{},
           py::arg("time_labels") = std::vector<std::string>{})
      .def_readwrite("controls", &PanelData::controls)
      .def_readwrite("treated", &PanelData::treated)
      .def_readwrite("t0", &PanelData::t0)
      .def_readwrite("unit_labels", &PanelData::unit_labels)
      .def_readwrite("time_labels", &PanelData::time_labels)
      .def_property_readonly("n_units", &PanelData::n_units)
      .def_property_readonly("n_periods", &PanelData::n_periods)
      .def("validate", &PanelData::validate);

  m.def(
      "load_panel",
      [](const std::string& path, const std::string& layout,
         const std::string& treated, int t0, char delimiter) {
        return load_panel(path, parse_layout(layout), treated, t0, delimiter);
      },
      py::arg("path"), py::arg("layout"), py::arg("treated"), py::arg("t0"),
      py::arg("delimiter") = ',');

  m.def("write_wide_panel", &write_wide_panel, py::arg("path"),
        py::arg("panel"));
  m.def("write_long_panel", &write_long_panel, py::arg("path"),
        py::arg("panel"));

  m.def("moving_average", &moving_average, py::arg("series"),
        py::arg("window"),
        "Trailing moving average; output has the input's length.");
  m.def("smooth_panel", &smooth_panel, py::arg("panel"), py::arg("window"));

  m.def(
      "split",
      [](const PanelData& panel) {
        SplitPanel parts = split(panel);
        return py::make_tuple(parts.controls_pre, parts.controls_post,
                              parts.treated_pre, parts.treated_post);
      },
      py::arg("panel"),
      "Returns (controls_pre, controls_post, treated_pre, treated_post).");

  py::class_<NormalizationRecord>(m, "NormalizationRecord")
      .def_property_readonly(
          "scheme",
          [](const NormalizationRecord& r) { return to_string(r.scheme); })
      .def_readonly("scale", &NormalizationRecord::scale)
      .def_readonly("shift", &NormalizationRecord::shift);

  m.def(
      "normalize",
      [](const PanelData& panel, const std::string& scheme) {
        auto [out, record] = normalize(panel, parse_norm_scheme(scheme));
        return py::make_tuple(out, record);
      },
      py::arg("panel"), py::arg("scheme") = "none");
  m.def("denormalize", &denormalize, py::arg("panel"), py::arg("record"));
  m.def("denormalize_series", &denormalize_series, py::arg("series"),
        py::arg("record"));

  py::class_<AlignedUnit>(m, "AlignedUnit")
      .def(py::init([](std::string label, long intervention_day,
                       std::map<long, double> series) {
             AlignedUnit unit;
             unit.label = std::move(label);
             unit.intervention_day = intervention_day;
             unit.series = std::move(series);
             return unit;
           }),
           py::arg("label"), py::arg("intervention_day"), py::arg("series"))
      .def_readwrite("label", &AlignedUnit::label)
      .def_readwrite("intervention_day", &AlignedUnit::intervention_day)
      .def_readwrite("series", &AlignedUnit::series);

  py::class_<AlignmentSpec>(m, "AlignmentSpec")
      .def(py::init([](std::string treated_label,
                       std::vector<AlignedUnit> units) {
             AlignmentSpec spec;
             spec.treated_label = std::move(treated_label);
             spec.units = std::move(units);
             return spec;
           }),
           py::arg("treated_label"), py::arg("units"))
      .def_readwrite("treated_label", &AlignmentSpec::treated_label)
      .def_readwrite("units", &AlignmentSpec::units);

  m.def("load_alignment_spec", &load_alignment_spec, py::arg("series_path"),
        py::arg("dates_path"), py::arg("treated"), py::arg("delimiter") = ',');
  m.def(
      "align_by_intervention",
      [](const AlignmentSpec& spec, int pre_days, int post_days) {
        return align_by_intervention(spec,
                                     AlignmentWindow{pre_days, post_days});
      },
      py::arg("spec"), py::arg("pre_days"), py::arg("post_days"));
  m.def("parse_iso_date", &parse_iso_date, py::arg("text"));
  m.def("format_iso_date", &format_iso_date, py::arg("day"));

  // ---- estimator ----
  py::class_<EllipsoidModel>(m, "EllipsoidModel")
      .def_readonly("sigma", &EllipsoidModel::sigma)
      .def_readonly("q", &EllipsoidModel::q)
      .def_readonly("lambda_", &EllipsoidModel::lambda)
      .def_readonly("radius", &EllipsoidModel::radius)
      .def_readonly("rank", &EllipsoidModel::rank)
      .def_readonly("controls", &EllipsoidModel::controls);

  py::class_<RepresentorSystem>(m, "RepresentorSystem")
      .def_readonly("phi", &RepresentorSystem::phi)
      .def_readonly("pre_columns", &RepresentorSystem::pre_columns)
      .def_readonly("t0", &RepresentorSystem::t0)
      .def_readonly("phi_singular", &RepresentorSystem::phi_singular);

  py::class_<EoprEstimate>(m, "EoprEstimate")
      .def_readonly("s_hat", &EoprEstimate::s_hat)
      .def_readonly("weights", &EoprEstimate::weights)
      .def_readonly("qform", &EoprEstimate::qform)
      .def_readonly("band_lower", &EoprEstimate::band_lower)
      .def_readonly("band_upper", &EoprEstimate::band_upper)
      .def_readonly("half_widths", &EoprEstimate::half_widths)
      .def_readonly("band_clamped", &EoprEstimate::band_clamped)
      .def_property_readonly("has_band", &EoprEstimate::has_band);

  py::class_<EoprFit>(m, "EoprFit")
      .def_readonly("model", &EoprFit::model)
      .def_readonly("reps", &EoprFit::reps)
      .def_readonly("estimate", &EoprFit::estimate);

  m.def("learn_ellipsoid", &learn_ellipsoid, py::arg("controls"),
        py::arg("lambda_"));
  m.def("default_lambda_grid", &default_lambda_grid);
  m.def("select_lambda", &select_lambda, py::arg("panel"), py::arg("grid"),
        py::arg("holdout_fraction") = 0.2);
  m.def("representors", &representors, py::arg("model"), py::arg("t0"));
  m.def("extrapolate", &extrapolate, py::arg("model"), py::arg("reps"),
        py::arg("s1_pre"));
  m.def("worst_case_band", &worst_case_band, py::arg("model"),
        py::arg("reps"), py::arg("estimate"));
  m.def("effect_series", &effect_series, py::arg("estimate"),
        py::arg("treated_observed"), py::arg("t0"),
        "Post-period counterfactual minus observed.");
  m.def("fit_eopr", &fit_eopr, py::arg("panel"), py::arg("lambda_"));

  // ---- baselines ----
  py::class_<RscConfig>(m, "RscConfig")
      .def(py::init<double, double>(),
           py::arg("singular_value_cutoff_ratio") = 0.1,
           py::arg("ridge") = 0.0)
      .def_readwrite("singular_value_cutoff_ratio",
                     &RscConfig::singular_value_cutoff_ratio)
      .def_readwrite("ridge", &RscConfig::ridge);

  py::class_<WeightedEstimate>(m, "WeightedEstimate")
      .def_readonly("s_hat", &WeightedEstimate::s_hat)
      .def_readonly("weights", &WeightedEstimate::weights)
      .def_readonly("intercept", &WeightedEstimate::intercept)
      .def_readonly("method", &WeightedEstimate::method);

  m.def("solve_simplex_qp", &solve_simplex_qp, py::arg("a"), py::arg("b"),
        py::arg("max_iters") = 50000, py::arg("tol") = 1e-10);
  m.def("sc_fit", &sc_fit, py::arg("panel"), py::arg("qp_max_iters") = 50000,
        py::arg("qp_tol") = 1e-10);
  m.def("dsc_fit", &dsc_fit, py::arg("panel"),
        py::arg("qp_max_iters") = 50000, py::arg("qp_tol") = 1e-10);
  m.def("rsc_fit", &rsc_fit, py::arg("panel"),
        py::arg("config") = RscConfig{});

  // ---- simulation ----
  py::class_<SimulationConfig>(m, "SimulationConfig")
      .def(py::init([](int n_units, int t_total, int t0, int pool_size,
                       double noise_sigma, bool treated_noise,
                       std::uint64_t seed, const std::string& weight_mode) {
             SimulationConfig config;
             config.n_units = n_units;
             config.t_total = t_total;
             config.t0 = t0;
             config.pool_size = pool_size;
             config.noise_sigma = noise_sigma;
             config.treated_noise = treated_noise;
             config.seed = seed;
             config.weight_mode = parse_weight_mode(weight_mode);
             config.validate();
             return config;
           }),
           py::arg("n_units"), py::arg("t_total"), py::arg("t0"),
           py::arg("pool_size") = 10, py::arg("noise_sigma") = 1.0,
           py::arg("treated_noise") = true, py::arg("seed") = 0,
           py::arg("weight_mode") = "equal")
      .def_readwrite("n_units", &SimulationConfig::n_units)
      .def_readwrite("t_total", &SimulationConfig::t_total)
      .def_readwrite("t0", &SimulationConfig::t0)
      .def_readwrite("pool_size", &SimulationConfig::pool_size)
      .def_readwrite("noise_sigma", &SimulationConfig::noise_sigma)
      .def_readwrite("treated_noise", &SimulationConfig::treated_noise)
      .def_readwrite("seed", &SimulationConfig::seed);

  py::class_<SimOutput>(m, "SimOutput")
      .def_readonly("panel", &SimOutput::panel)
      .def_readonly("truth", &SimOutput::truth)
      .def_readonly("theta", &SimOutput::theta)
      .def_readonly("rho", &SimOutput::rho)
      .def_readonly("treated_weights", &SimOutput::treated_weights)
      .def_readonly("weight_mode", &SimOutput::weight_mode);

  m.def("generate_panel", &generate_panel, py::arg("config"));
  m.def("latent_value", &latent_value, py::arg("theta"), py::arg("rho"));
  m.def(
      "treated_from_controls",
      [](const Eigen::MatrixXd& noiseless_controls,
         const std::string& weight_mode, std::uint64_t seed) {
        Rng rng(seed);
        auto [treated, weights] = treated_from_controls(
            noiseless_controls, parse_weight_mode(weight_mode), rng);
        return py::make_tuple(treated, weights);
      },
      py::arg("noiseless_controls"), py::arg("weight_mode") = "equal",
      py::arg("seed") = 0);

  // ---- evaluation ----
  py::class_<ScoreReport>(m, "ScoreReport")
      .def_readonly("method", &ScoreReport::method)
      .def_readonly("pre_rmse", &ScoreReport::pre_rmse)
      .def_readonly("post_rmse", &ScoreReport::post_rmse)
      .def_readonly("panel_desc", &ScoreReport::panel_desc);

  m.def(
      "rmse",
      [](const Eigen::VectorXd& u, const Eigen::VectorXd& u_hat, int begin,
         int end) {
        if (end < 0) end = static_cast<int>(u.size());
        return rmse(u, u_hat, Range{begin, end});
      },
      py::arg("u"), py::arg("u_hat"), py::arg("begin") = 0,
      py::arg("end") = -1);
  m.def("score", &score, py::arg("panel"), py::arg("estimate"),
        py::arg("method") = "");

  py::class_<PlaceboEntry>(m, "PlaceboEntry")
      .def_readonly("label", &PlaceboEntry::label)
      .def_readonly("is_treated", &PlaceboEntry::is_treated)
      .def_readonly("ok", &PlaceboEntry::ok)
      .def_readonly("error", &PlaceboEntry::error)
      .def_readonly("gap", &PlaceboEntry::gap)
      .def_readonly("post_gap_rmse", &PlaceboEntry::post_gap_rmse);

  py::class_<PlaceboReport>(m, "PlaceboReport")
      .def_readonly("method", &PlaceboReport::method)
      .def_readonly("entries", &PlaceboReport::entries)
      .def_readonly("treated_rank", &PlaceboReport::treated_rank);

  m.def(
      "placebo_run",
      [](const PanelData& panel, const std::string& method,
         const std::vector<double>& lambda_grid, double rsc_ratio,
         double rsc_ridge) {
        return placebo_run(panel, estimator_from_args(method, lambda_grid,
                                                      rsc_ratio, rsc_ridge));
      },
      py::arg("panel"), py::arg("method") = "eopr",
      py::arg("lambda_grid") = std::vector<double>{},
      py::arg("rsc_ratio") = 0.1, py::arg("rsc_ridge") = 0.0);

  m.def(
      "inject_effect",
      [](const PanelData& panel, const std::string& shape, double magnitude) {
        return inject_effect(panel, parse_effect_shape(shape), magnitude);
      },
      py::arg("panel"), py::arg("shape"), py::arg("magnitude"));

  py::class_<AblationRow>(m, "AblationRow")
      .def_readonly("lambda_", &AblationRow::lambda)
      .def_readonly("ok", &AblationRow::ok)
      .def_readonly("error", &AblationRow::error)
      .def_readonly("pre_rmse", &AblationRow::pre_rmse)
      .def_readonly("post_rmse", &AblationRow::post_rmse);

  m.def("lambda_ablation", &lambda_ablation, py::arg("panel"),
        py::arg("grid"));

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("config", &SweepRow::config)
      .def_readonly("method", &SweepRow::method)
      .def_readonly("repeats", &SweepRow::repeats)
      .def_readonly("failures", &SweepRow::failures)
      .def_readonly("pre_mean", &SweepRow::pre_mean)
      .def_readonly("pre_std", &SweepRow::pre_std)
      .def_readonly("pre_median", &SweepRow::pre_median)
      .def_readonly("post_mean", &SweepRow::post_mean)
      .def_readonly("post_std", &SweepRow::post_std)
      .def_readonly("post_median", &SweepRow::post_median);

  m.def(
      "sweep",
      [](const std::vector<SimulationConfig>& configs,
         const std::vector<std::string>& methods, int repeats,
         const std::vector<double>& lambda_grid, double rsc_ratio,
         double rsc_ridge) {
        std::vector<Estimator> estimators;
        for (const auto& name : methods)
          estimators.push_back(estimator_from_args(name, lambda_grid,
                                                   rsc_ratio, rsc_ridge));
        return sweep(configs, estimators, repeats);
      },
      py::arg("configs"), py::arg("methods"), py::arg("repeats") = 10,
      py::arg("lambda_grid") = std::vector<double>{},
      py::arg("rsc_ratio") = 0.1, py::arg("rsc_ridge") = 0.0);

#ifdef VERSION_INFO
#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
