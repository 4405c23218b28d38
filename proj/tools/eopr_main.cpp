// Batch front end: ingest or simulate panels, fit counterfactual estimators,
// and run placebo / ablation / sweep studies. Subcommands write plot-ready
// tables into --out; rendering is left to external tools.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "eopr/baselines.hpp"
#include "eopr/errors.hpp"
#include "eopr/estimator.hpp"
#include "eopr/evaluation.hpp"
#include "eopr/io.hpp"
#include "eopr/panel.hpp"
#include "eopr/simulation.hpp"

namespace fs = std::filesystem;
using namespace eopr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(errc code) {
  switch (code) {
    case errc::non_finite:
    case errc::singular_phi:
    case errc::degenerate_spectrum:
    case errc::degenerate_scale:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

// Options shared by the panel-consuming subcommands.
struct InputOptions {
  std::string input;
  std::string layout = "long";
  std::string treated;
  int t0 = 0;
  std::string delimiter = ",";
  int smooth = 0;
  std::string normalize = "none";
};

void add_input_options(CLI::App* cmd, InputOptions& opts) {
  cmd->add_option("--input", opts.input, "panel file")->required();
  cmd->add_option("--layout", opts.layout, "file layout: long|wide")
      ->check(CLI::IsMember({"long", "wide"}));
  cmd->add_option("--treated", opts.treated, "label of the treated unit")
      ->required();
  cmd->add_option("--t0", opts.t0, "number of pre-intervention periods")
      ->required();
  cmd->add_option("--delimiter", opts.delimiter, "field delimiter")
      ->default_str(",");
  cmd->add_option("--smooth", opts.smooth,
                  "trailing moving-average window (0 = off)");
  cmd->add_option("--normalize", opts.normalize,
                  "none|treated_pre_max|zscore")
      ->check(CLI::IsMember({"none", "treated_pre_max", "zscore"}));
}

struct LoadedPanel {
  PanelData raw;            // as read from disk
  PanelData fit;            // after smoothing + normalization
  NormalizationRecord record;
};

LoadedPanel load_input(const InputOptions& opts) {
  if (opts.delimiter.size() != 1)
    fail(errc::invalid_argument, "delimiter must be a single character");
  LoadedPanel loaded;
  loaded.raw = load_panel(opts.input, parse_layout(opts.layout), opts.treated,
                          opts.t0, opts.delimiter[0]);
  if (opts.smooth > 1) loaded.raw = smooth_panel(loaded.raw, opts.smooth);
  auto [fit, record] =
      eopr::normalize(loaded.raw, parse_norm_scheme(opts.normalize));
  loaded.fit = std::move(fit);
  loaded.record = record;
  return loaded;
}

std::string out_path(const std::string& dir, const std::string& stem,
                     OutFormat format) {
  return (fs::path(dir) /
          (stem + (format == OutFormat::kCsv ? ".csv" : ".jsonl")))
      .string();
}

std::vector<double> parsed_grid_or_default(const std::vector<double>& grid) {
  return grid.empty() ? default_lambda_grid() : grid;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  InputOptions input;
  std::vector<std::string> methods = {"eopr", "sc", "dsc", "rsc"};
  std::vector<double> lambda_grid;
  double holdout = 0.2;
  double rsc_ratio = 0.1;
  double rsc_ridge = 0.0;
  int qp_max_iters = 50000;
  double qp_tol = 1e-10;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

int run_fit(const FitArgs& args) {
  LoadedPanel loaded = load_input(args.input);
  const PanelData& panel = loaded.fit;
  OutFormat format = parse_out_format(args.format);

  struct Fitted {
    std::string method;
    Eigen::VectorXd estimate_fit;  // normalized scale
    Eigen::VectorXd estimate_raw;  // original scale
  };
  std::vector<Fitted> fits;
  EoprEstimate band_raw;
  bool have_band = false;
  double selected_lambda = 0.0;

  for (const auto& method : args.methods) {
    Fitted fitted;
    fitted.method = method;
    if (method == "eopr") {
      std::vector<double> grid = parsed_grid_or_default(args.lambda_grid);
      selected_lambda = grid.size() == 1
                            ? grid[0]
                            : select_lambda(panel, grid, args.holdout);
      EoprFit fit = fit_eopr(panel, selected_lambda);
      fitted.estimate_fit = fit.estimate.s_hat;
      band_raw = fit.estimate;
      band_raw.s_hat = denormalize_series(fit.estimate.s_hat, loaded.record);
      band_raw.band_lower =
          denormalize_series(fit.estimate.band_lower, loaded.record);
      band_raw.band_upper =
          denormalize_series(fit.estimate.band_upper, loaded.record);
      band_raw.half_widths = fit.estimate.half_widths * loaded.record.scale;
      have_band = true;
    } else if (method == "sc") {
      fitted.estimate_fit =
          sc_fit(panel, args.qp_max_iters, args.qp_tol).s_hat;
    } else if (method == "dsc") {
      fitted.estimate_fit =
          dsc_fit(panel, args.qp_max_iters, args.qp_tol).s_hat;
    } else if (method == "rsc") {
      fitted.estimate_fit =
          rsc_fit(panel, RscConfig{args.rsc_ratio, args.rsc_ridge}).s_hat;
    } else {
      fail(errc::invalid_argument, "unknown method '" + method + "'");
    }
    fitted.estimate_raw =
        denormalize_series(fitted.estimate_fit, loaded.record);
    fits.push_back(std::move(fitted));
  }

  fs::create_directories(args.out);
  std::vector<ScoreRow> scores;
  std::vector<MethodEffects> effects;
  for (const auto& fitted : fits) {
    MethodSeries series;
    series.method = fitted.method;
    series.estimate = fitted.estimate_raw;
    if (fitted.method == "eopr" && have_band) series.band = &band_raw;
    write_estimate_file(
        out_path(args.out, "estimate_" + fitted.method, format), format,
        loaded.raw, series);

    EoprEstimate as_estimate;
    as_estimate.s_hat = fitted.estimate_raw;
    effects.push_back(
        {fitted.method,
         effect_series(as_estimate, loaded.raw.treated, loaded.raw.t0)});

    ScoreReport raw = score(loaded.raw, fitted.estimate_raw, fitted.method);
    ScoreReport fit = score(panel, fitted.estimate_fit, fitted.method);
    scores.push_back({fitted.method, raw.pre_rmse, raw.post_rmse,
                      fit.pre_rmse, fit.post_rmse});
  }
  if (have_band)
    write_band_file(out_path(args.out, "band", format), format, loaded.raw,
                    band_raw);
  write_effects_file(out_path(args.out, "effects", format), format,
                     loaded.raw, effects);
  write_scores_file(out_path(args.out, "scores", format), format, scores);
  if (have_band)
    std::cerr << "eopr: selected lambda = " << selected_lambda << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  SimulationConfig config;
  std::string weight_mode = "equal";
  std::string out;
};

int run_simulate(SimulateArgs args) {
  args.config.weight_mode = parse_weight_mode(args.weight_mode);
  args.config.validate();
  SimOutput sim = generate_panel(args.config);
  fs::create_directories(args.out);
  write_wide_panel((fs::path(args.out) / "panel.csv").string(), sim.panel);
  write_wide_panel((fs::path(args.out) / "truth.csv").string(), sim.truth);
  write_sim_metadata((fs::path(args.out) / "metadata.json").string(),
                     args.config, sim);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// placebo

struct PlaceboArgs {
  InputOptions input;
  std::string method = "eopr";
  std::vector<double> lambda_grid;
  double rsc_ratio = 0.1;
  double rsc_ridge = 0.0;
  int qp_max_iters = 50000;
  double qp_tol = 1e-10;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

int run_placebo(const PlaceboArgs& args) {
  LoadedPanel loaded = load_input(args.input);
  Estimator estimator = make_estimator(
      args.method, parsed_grid_or_default(args.lambda_grid),
      RscConfig{args.rsc_ratio, args.rsc_ridge}, args.qp_max_iters,
      args.qp_tol);
  PlaceboReport report = placebo_run(loaded.fit, estimator);
  OutFormat format = parse_out_format(args.format);
  fs::create_directories(args.out);
  write_placebo_summary(out_path(args.out, "placebo_summary", format), format,
                        report);
  write_placebo_gaps(out_path(args.out, "placebo_gaps", format), format,
                     report, loaded.fit.time_labels);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  InputOptions input;
  std::vector<double> lambda_grid;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

int run_ablate(const AblateArgs& args) {
  LoadedPanel loaded = load_input(args.input);
  std::vector<double> grid = args.lambda_grid;
  if (grid.empty()) {
    grid = default_lambda_grid();
    grid.insert(grid.begin(), 0.0);
  }
  std::vector<AblationRow> rows = lambda_ablation(loaded.fit, grid);
  OutFormat format = parse_out_format(args.format);
  fs::create_directories(args.out);
  write_ablation_file(out_path(args.out, "ablation", format), format, rows);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::vector<int> n_units = {50};
  std::vector<int> t_totals = {200};
  std::vector<double> t0_fracs = {0.25};
  int pool_size = 10;
  double noise_sigma = 1.0;
  bool no_treated_noise = false;
  std::string weight_mode = "equal";
  std::vector<std::string> methods = {"eopr", "sc", "dsc", "rsc"};
  std::vector<double> lambda_grid;
  double rsc_ratio = 0.1;
  double rsc_ridge = 0.0;
  int repeats = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

int run_sweep(const SweepArgs& args) {
  std::vector<SimulationConfig> configs;
  std::uint64_t config_index = 0;
  for (int n : args.n_units)
    for (int t : args.t_totals)
      for (double frac : args.t0_fracs) {
        SimulationConfig config;
        config.n_units = n;
        config.t_total = t;
        config.t0 = std::max(
            1, std::min(t - 1, static_cast<int>(std::lround(frac * t))));
        config.pool_size = args.pool_size;
        config.noise_sigma = args.noise_sigma;
        config.treated_noise = !args.no_treated_noise;
        config.weight_mode = parse_weight_mode(args.weight_mode);
        // Seeds spaced so per-repeat offsets never collide across configs.
        config.seed = args.seed + 1000003ull * config_index++;
        config.validate();
        configs.push_back(config);
      }
  std::vector<Estimator> estimators;
  for (const auto& name : args.methods)
    estimators.push_back(make_estimator(
        name, parsed_grid_or_default(args.lambda_grid),
        RscConfig{args.rsc_ratio, args.rsc_ridge}));
  std::vector<SweepRow> rows = sweep(configs, estimators, args.repeats);
  OutFormat format = parse_out_format(args.format);
  fs::create_directories(args.out);
  write_sweep_file(out_path(args.out, "sweep", format), format, rows);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// align

struct AlignArgs {
  std::string input;
  std::string dates;
  std::string treated;
  int pre_days = 0;
  int post_days = 0;
  std::string delimiter = ",";
  int smooth = 0;
  std::string out;
};

int run_align(const AlignArgs& args) {
  if (args.delimiter.size() != 1)
    fail(errc::invalid_argument, "delimiter must be a single character");
  AlignmentSpec spec = load_alignment_spec(args.input, args.dates,
                                           args.treated, args.delimiter[0]);
  if (args.smooth > 1) {
    // Trailing moving average over each unit's date-ordered raw series,
    // before re-indexing to intervention offsets.
    for (auto& unit : spec.units) {
      Eigen::VectorXd values(static_cast<int>(unit.series.size()));
      std::vector<long> days;
      days.reserve(unit.series.size());
      int k = 0;
      for (const auto& [day, value] : unit.series) {
        days.push_back(day);
        values[k++] = value;
      }
      Eigen::VectorXd smoothed = moving_average(values, args.smooth);
      for (std::size_t i = 0; i < days.size(); ++i)
        unit.series[days[i]] = smoothed[static_cast<int>(i)];
    }
  }
  PanelData panel = align_by_intervention(
      spec, AlignmentWindow{args.pre_days, args.post_days});
  fs::create_directories(args.out);
  write_wide_panel((fs::path(args.out) / "aligned.csv").string(), panel);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panel-data counterfactual estimation toolkit"};
  app.require_subcommand(1);
  // Config file: flat key=value lines under a [subcommand] section (or
  // dotted subcommand.key=value). Command-line flags take precedence;
  // unknown keys are rejected. The flag goes before the subcommand:
  //   eopr --config run.cfg fit --out dir
  app.set_config("--config", "", "read options from a config file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand(
      "fit", "fit counterfactual estimators and write estimates/band/"
             "effects/scores");
  add_input_options(fit, fit_args.input);
  fit->add_option("--methods", fit_args.methods,
                  "comma-separated subset of eopr,sc,dsc,rsc")
      ->delimiter(',');
  fit->add_option("--lambda-grid", fit_args.lambda_grid,
                  "ellipsoid regularizer candidates in (0,1]")
      ->delimiter(',');
  fit->add_option("--holdout", fit_args.holdout,
                  "pre-period fraction held out for lambda selection");
  fit->add_option("--rsc-ratio", fit_args.rsc_ratio,
                  "rsc singular value cutoff ratio");
  fit->add_option("--rsc-ridge", fit_args.rsc_ridge, "rsc ridge penalty");
  fit->add_option("--qp-max-iters", fit_args.qp_max_iters,
                  "simplex QP iteration cap");
  fit->add_option("--qp-tol", fit_args.qp_tol, "simplex QP duality gap");
  fit->add_option("--seed", fit_args.seed,
                  "accepted for config uniformity; fit is deterministic");
  fit->add_option("--out", fit_args.out, "output directory")->required();
  fit->add_option("--format", fit_args.format, "csv|json-lines")
      ->check(CLI::IsMember({"csv", "json-lines"}));

  SimulateArgs sim_args;
  CLI::App* simulate =
      app.add_subcommand("simulate", "generate a synthetic panel with known "
                                     "ground truth");
  simulate->add_option("--n-units", sim_args.config.n_units)->required();
  simulate->add_option("--t-total", sim_args.config.t_total)->required();
  simulate->add_option("--t0", sim_args.config.t0)->required();
  simulate->add_option("--pool-size", sim_args.config.pool_size);
  simulate->add_option("--noise-sigma", sim_args.config.noise_sigma);
  simulate->add_flag("--treated-noise,!--no-treated-noise",
                     sim_args.config.treated_noise,
                     "add noise to the treated unit (default on)");
  simulate->add_option("--treated-weights", sim_args.weight_mode,
                       "equal|dirichlet")
      ->check(CLI::IsMember({"equal", "dirichlet"}));
  simulate->add_option("--seed", sim_args.config.seed);
  simulate->add_option("--out", sim_args.out, "output directory")->required();

  PlaceboArgs placebo_args;
  CLI::App* placebo = app.add_subcommand(
      "placebo", "refit with each control unit cast as treated");
  add_input_options(placebo, placebo_args.input);
  placebo->add_option("--method", placebo_args.method,
                      "eopr|sc|dsc|rsc")
      ->check(CLI::IsMember({"eopr", "sc", "dsc", "rsc"}));
  placebo->add_option("--lambda-grid", placebo_args.lambda_grid)
      ->delimiter(',');
  placebo->add_option("--rsc-ratio", placebo_args.rsc_ratio);
  placebo->add_option("--rsc-ridge", placebo_args.rsc_ridge);
  placebo->add_option("--qp-max-iters", placebo_args.qp_max_iters);
  placebo->add_option("--qp-tol", placebo_args.qp_tol);
  placebo->add_option("--seed", placebo_args.seed);
  placebo->add_option("--out", placebo_args.out)->required();
  placebo->add_option("--format", placebo_args.format)
      ->check(CLI::IsMember({"csv", "json-lines"}));

  AblateArgs ablate_args;
  CLI::App* ablate = app.add_subcommand(
      "ablate", "score the ellipsoidal estimator over a lambda grid");
  add_input_options(ablate, ablate_args.input);
  ablate->add_option("--lambda-grid", ablate_args.lambda_grid,
                     "grid; may include 0 (default: 0 plus the standard "
                     "grid)")
      ->delimiter(',');
  ablate->add_option("--seed", ablate_args.seed);
  ablate->add_option("--out", ablate_args.out)->required();
  ablate->add_option("--format", ablate_args.format)
      ->check(CLI::IsMember({"csv", "json-lines"}));

  SweepArgs sweep_args;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "simulate-and-score grids of (N, T, t0 fraction) per method");
  sweep_cmd->add_option("--n-units", sweep_args.n_units)->delimiter(',');
  sweep_cmd->add_option("--t-totals", sweep_args.t_totals)->delimiter(',');
  sweep_cmd->add_option("--t0-fracs", sweep_args.t0_fracs)->delimiter(',');
  sweep_cmd->add_option("--pool-size", sweep_args.pool_size);
  sweep_cmd->add_option("--noise-sigma", sweep_args.noise_sigma);
  sweep_cmd->add_flag("--no-treated-noise", sweep_args.no_treated_noise);
  sweep_cmd->add_option("--treated-weights", sweep_args.weight_mode)
      ->check(CLI::IsMember({"equal", "dirichlet"}));
  sweep_cmd->add_option("--methods", sweep_args.methods)->delimiter(',');
  sweep_cmd->add_option("--lambda-grid", sweep_args.lambda_grid)
      ->delimiter(',');
  sweep_cmd->add_option("--rsc-ratio", sweep_args.rsc_ratio);
  sweep_cmd->add_option("--rsc-ridge", sweep_args.rsc_ridge);
  sweep_cmd->add_option("--repeats", sweep_args.repeats);
  sweep_cmd->add_option("--seed", sweep_args.seed);
  sweep_cmd->add_option("--out", sweep_args.out)->required();
  sweep_cmd->add_option("--format", sweep_args.format)
      ->check(CLI::IsMember({"csv", "json-lines"}));

  AlignArgs align_args;
  CLI::App* align = app.add_subcommand(
      "align", "re-index units to offsets around their own intervention "
               "dates");
  align->add_option("--input", align_args.input, "long file with ISO dates")
      ->required();
  align->add_option("--dates", align_args.dates,
                    "unit,intervention_date file")
      ->required();
  align->add_option("--treated", align_args.treated)->required();
  align->add_option("--pre-days", align_args.pre_days)->required();
  align->add_option("--post-days", align_args.post_days)->required();
  align->add_option("--delimiter", align_args.delimiter);
  align->add_option("--smooth", align_args.smooth,
                    "trailing moving-average window applied before alignment");
  align->add_option("--out", align_args.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*fit) return run_fit(fit_args);
    if (*simulate) return run_simulate(sim_args);
    if (*placebo) return run_placebo(placebo_args);
    if (*ablate) return run_ablate(ablate_args);
    if (*sweep_cmd) return run_sweep(sweep_args);
    if (*align) return run_align(align_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitValidation;
}
