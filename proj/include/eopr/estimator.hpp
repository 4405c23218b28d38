#pragma once

#include <Eigen/Core>
#include <vector>

#include "eopr/panel.hpp"

namespace eopr {

// Quadratic signal class {x : x'Qx <= radius} learned from control rows.
// sigma is the T x T time-by-time Gram matrix S'S + lambda*I and q its
// Moore-Penrose pseudo-inverse (plain inverse for lambda > 0). radius is the
// largest quadratic form over the control rows, so every control lies in the
// class. The training rows are kept for the factored solves downstream.
struct EllipsoidModel {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd q;
  double lambda = 0.0;
  double radius = 0.0;
  int rank = 0;
  Eigen::MatrixXd controls;

  int n_periods() const { return static_cast<int>(sigma.rows()); }
};

// Pre-period representors (columns of sigma) and their Gram matrix phi under
// the q inner product. phi_singular marks the lambda = 0 rank-deficient case
// where downstream solves must go through the pseudo-inverse.
struct RepresentorSystem {
  Eigen::MatrixXd phi;          // t0 x t0
  Eigen::MatrixXd pre_columns;  // T x t0
  int t0 = 0;
  bool phi_singular = false;
};

struct EoprEstimate {
  Eigen::VectorXd s_hat;    // length T
  Eigen::VectorXd weights;  // length t0
  double qform = 0.0;       // s_hat' q s_hat
  // Set by worst_case_band; empty until then.
  Eigen::VectorXd band_lower;
  Eigen::VectorXd band_upper;
  Eigen::VectorXd half_widths;
  // True when a negative slack or residual term had to be clamped to zero.
  bool band_clamped = false;

  bool has_band() const { return half_widths.size() > 0; }
};

// Relative eigenvalue cutoff for pseudo-inverse rank decisions.
inline constexpr double kPinvCutoff = 1e-12;

EllipsoidModel learn_ellipsoid(const Eigen::MatrixXd& controls,
                               double lambda);

// Holdout selection: for each candidate, fit on the first
// ceil(t0*(1-holdout_fraction)) pre-periods (using only pre-intervention
// data) and score RMSE on the remaining pre-period tail. Ties break toward
// the largest lambda.
double select_lambda(const PanelData& panel, const std::vector<double>& grid,
                     double holdout_fraction = 0.2);

// {1e-6, 1e-5, ..., 1e-1, 1}
std::vector<double> default_lambda_grid();

RepresentorSystem representors(const EllipsoidModel& model, int t0);

// Chebyshev-center extrapolation: weights solve phi*w = s1_pre (through the
// pseudo-inverse when phi is singular) and s_hat = pre_columns * w. For
// lambda > 0 the solve is done in its equivalent factored form, which keeps
// the pre-period fit exact to machine precision.
EoprEstimate extrapolate(const EllipsoidModel& model,
                         const RepresentorSystem& reps,
                         const Eigen::VectorXd& s1_pre);

// Per-coordinate worst-case interval: with slack = max(0, radius - qform)
// and r(t) the squared q-orthogonal residual of coordinate t's representor
// against the pre-period representors,
//   half_width[t] = sqrt(slack * r(t)),
// zero on the pre-period where the fit is exact.
EoprEstimate worst_case_band(const EllipsoidModel& model,
                             const RepresentorSystem& reps,
                             EoprEstimate est);

// Post-period effect: counterfactual minus observed, so tau > 0 means the
// outcome would have been higher without the intervention.
Eigen::VectorXd effect_series(const EoprEstimate& est,
                              const Eigen::VectorXd& treated_observed,
                              int t0);

// learn_ellipsoid + representors + extrapolate + worst_case_band in one call.
struct EoprFit {
  EllipsoidModel model;
  RepresentorSystem reps;
  EoprEstimate estimate;
};

EoprFit fit_eopr(const PanelData& panel, double lambda);

}  // namespace eopr
