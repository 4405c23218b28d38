#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "eopr/baselines.hpp"
#include "eopr/estimator.hpp"
#include "eopr/panel.hpp"
#include "eopr/simulation.hpp"

namespace eopr {

// Half-open index interval [begin, end).
struct Range {
  int begin = 0;
  int end = 0;
};

double rmse(const Eigen::VectorXd& u, const Eigen::VectorXd& u_hat,
            Range range);
double rmse(const Eigen::VectorXd& u, const Eigen::VectorXd& u_hat);

struct ScoreReport {
  std::string method;
  double pre_rmse = 0.0;
  double post_rmse = 0.0;
  std::string panel_desc;
};

ScoreReport score(const PanelData& panel, const Eigen::VectorXd& estimate,
                  const std::string& method = "");

// A named counterfactual estimator: maps a panel to a length-T estimate of
// the treated unit.
struct Estimator {
  std::string name;
  std::function<Eigen::VectorXd(const PanelData&)> fit;
};

Estimator make_eopr_estimator(std::vector<double> lambda_grid,
                              double holdout_fraction = 0.2);
Estimator make_eopr_estimator(double lambda);
Estimator make_sc_estimator(int qp_max_iters = 50000, double qp_tol = 1e-10);
Estimator make_dsc_estimator(int qp_max_iters = 50000,
                             double qp_tol = 1e-10);
Estimator make_rsc_estimator(RscConfig config = {});

// "eopr", "sc", "dsc" or "rsc" with the given parameters where they apply.
Estimator make_estimator(const std::string& name,
                         const std::vector<double>& lambda_grid,
                         const RscConfig& rsc_config = {},
                         int qp_max_iters = 50000, double qp_tol = 1e-10);

struct PlaceboEntry {
  std::string label;
  bool is_treated = false;
  bool ok = false;
  std::string error;        // estimator failure, recorded not rethrown
  Eigen::VectorXd gap;      // estimate - observed, length T
  double post_gap_rmse = 0.0;
};

struct PlaceboReport {
  std::string method;
  std::vector<PlaceboEntry> entries;  // treated first, then controls
  // 1 = most divergent post-period gap among units that fit successfully;
  // 0 when the treated fit itself failed.
  int treated_rank = 0;
};

// Refits the estimator with each control unit cast as the treated unit. The
// true treated unit is excluded from every placebo's control pool. Per-unit
// estimator errors are recorded as diagnostics and do not abort the run.
PlaceboReport placebo_run(const PanelData& panel, const Estimator& estimator);

enum class EffectShape { kStep, kRamp };

EffectShape parse_effect_shape(const std::string& name);

// Adds a known perturbation to the treated post-period: a constant shift
// (step) or a linear ramp reaching `magnitude` at the final period.
PanelData inject_effect(const PanelData& panel, EffectShape shape,
                        double magnitude);

struct AblationRow {
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  double pre_rmse = 0.0;
  double post_rmse = 0.0;
};

// Fits the ellipsoidal estimator for every lambda in the grid (zero
// allowed); rows come back sorted by lambda, per-lambda failures recorded.
std::vector<AblationRow> lambda_ablation(const PanelData& panel,
                                         std::vector<double> grid);

struct SweepRow {
  SimulationConfig config;
  std::string method;
  int repeats = 0;
  int failures = 0;
  double pre_mean = 0.0, pre_std = 0.0, pre_median = 0.0;
  double post_mean = 0.0, post_std = 0.0, post_median = 0.0;
};

// repeats seeded runs per (config, method): run r uses seed config.seed + r.
// Rows are ordered by (config index, method index) regardless of scheduling.
std::vector<SweepRow> sweep(const std::vector<SimulationConfig>& configs,
                            const std::vector<Estimator>& methods,
                            int repeats);

}  // namespace eopr
