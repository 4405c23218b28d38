#include "eopr/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "eopr/evaluation.hpp"
#include "eopr/parallel.hpp"

namespace eopr {

namespace {

// Pseudo-inverse application through a symmetric eigendecomposition with
// relative cutoff kPinvCutoff * max eigenvalue.
struct SymPinv {
  explicit SymPinv(const Eigen::MatrixXd& m) : es(m) {
    const Eigen::VectorXd& d = es.eigenvalues();
    double dmax = d.size() ? d.maxCoeff() : 0.0;
    double cutoff = kPinvCutoff * dmax;
    inv_d.resize(d.size());
    for (int i = 0; i < d.size(); ++i)
      inv_d[i] = d[i] > cutoff ? 1.0 / d[i] : 0.0;
    rank = static_cast<int>((inv_d.array() > 0.0).count());
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    return es.eigenvectors() *
           (inv_d.array() * (es.eigenvectors().transpose() * b).array())
               .matrix();
  }

  Eigen::MatrixXd matrix() const {
    return es.eigenvectors() * inv_d.asDiagonal() *
           es.eigenvectors().transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  Eigen::VectorXd inv_d;
  int rank = 0;
};

// Cholesky of the dual matrix S_pre*S_pre' + lambda*I. Solving against it
// instead of phi avoids the ill-conditioning phi inherits from small lambda.
Eigen::LLT<Eigen::MatrixXd> dual_llt(const Eigen::MatrixXd& controls_pre,
                                     double lambda) {
  Eigen::MatrixXd dual = controls_pre * controls_pre.transpose();
  dual.diagonal().array() += lambda;
  return Eigen::LLT<Eigen::MatrixXd>(dual);
}

}  // namespace

std::vector<double> default_lambda_grid() {
  return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
}

EllipsoidModel learn_ellipsoid(const Eigen::MatrixXd& controls,
                               double lambda) {
  if (!controls.allFinite())
    fail(errc::non_finite, "control matrix contains NaN or Inf");
  if (!std::isfinite(lambda))
    fail(errc::non_finite, "lambda is not finite");
  if (lambda < 0.0) fail(errc::invalid_argument, "lambda must be >= 0");
  if (controls.rows() < 1 || controls.cols() < 1)
    fail(errc::invalid_argument, "control matrix is empty");

  EllipsoidModel model;
  model.lambda = lambda;
  model.controls = controls;
  model.sigma = controls.transpose() * controls;
  model.sigma.diagonal().array() += lambda;
  // Guard against asymmetry from the product accumulation order.
  model.sigma = ((model.sigma + model.sigma.transpose()) * 0.5).eval();

  SymPinv pinv(model.sigma);
  model.q = pinv.matrix();
  model.q = ((model.q + model.q.transpose()) * 0.5).eval();
  model.rank = pinv.rank;

  // Largest quadratic form over the training rows, evaluated in the
  // eigenbasis so every term is nonnegative.
  const Eigen::MatrixXd& v = pinv.es.eigenvectors();
  model.radius = 0.0;
  for (int i = 0; i < controls.rows(); ++i) {
    Eigen::VectorXd z = v.transpose() * controls.row(i).transpose();
    double qf = (pinv.inv_d.array() * z.array().square()).sum();
    model.radius = std::max(model.radius, qf);
  }
  return model;
}

RepresentorSystem representors(const EllipsoidModel& model, int t0) {
  const int t_total = model.n_periods();
  if (t0 < 1 || t0 > t_total)
    fail(errc::invalid_argument,
         "t0=" + std::to_string(t0) + " outside [1, " +
             std::to_string(t_total) + "]");

  RepresentorSystem reps;
  reps.t0 = t0;
  reps.pre_columns = model.sigma.leftCols(t0);
  // pre_columns' * q * pre_columns collapses to the leading block of sigma
  // because sigma * q * sigma = sigma for any Moore-Penrose q.
  reps.phi = model.sigma.topLeftCorner(t0, t0);
  reps.phi = ((reps.phi + reps.phi.transpose()) * 0.5).eval();

  if (model.lambda == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reps.phi);
    double dmax = es.eigenvalues().maxCoeff();
    double dmin = es.eigenvalues().minCoeff();
    reps.phi_singular = dmax <= 0.0 || dmin <= kPinvCutoff * dmax;
  }
  return reps;
}

EoprEstimate extrapolate(const EllipsoidModel& model,
                         const RepresentorSystem& reps,
                         const Eigen::VectorXd& s1_pre) {
  if (!s1_pre.allFinite())
    fail(errc::non_finite, "pre-period series contains NaN or Inf");
  if (s1_pre.size() != reps.t0)
    fail(errc::invalid_argument,
         "pre-period series length " + std::to_string(s1_pre.size()) +
             " != t0 " + std::to_string(reps.t0));

  const int t0 = reps.t0;
  EoprEstimate est;
  if (model.lambda > 0.0) {
    // Factored solve: with g = (S_pre S_pre' + lambda I)^-1 S_pre b the
    // weights are (b - S_pre' g) / lambda and s_hat = S' g + lambda * w on
    // the pre-period block, which reproduces b up to rounding.
    const Eigen::MatrixXd controls_pre = model.controls.leftCols(t0);
    auto llt = dual_llt(controls_pre, model.lambda);
    Eigen::VectorXd g = llt.solve(controls_pre * s1_pre);
    Eigen::VectorXd fitted = controls_pre.transpose() * g;
    Eigen::VectorXd resid = s1_pre - fitted;
    est.weights = resid / model.lambda;
    est.s_hat = model.controls.transpose() * g;
    est.s_hat.head(t0) += resid;
  } else {
    SymPinv pinv(reps.phi);
    est.weights = pinv.solve(s1_pre);
    est.s_hat = reps.pre_columns * est.weights;
  }
  if (!est.weights.allFinite() || !est.s_hat.allFinite())
    fail(errc::singular_phi, "extrapolation produced non-finite values");
  // s_hat' q s_hat = w' phi w = w' b for both solve paths.
  est.qform = std::max(0.0, est.weights.dot(s1_pre));
  return est;
}

EoprEstimate worst_case_band(const EllipsoidModel& model,
                             const RepresentorSystem& reps,
                             EoprEstimate est) {
  const int t_total = model.n_periods();
  const int t0 = reps.t0;
  if (est.s_hat.size() != t_total)
    fail(errc::invalid_argument, "estimate does not match the model");

  double slack = model.radius - est.qform;
  est.band_clamped = slack < 0.0;
  slack = std::max(0.0, slack);

  est.half_widths = Eigen::VectorXd::Zero(t_total);
  if (model.lambda > 0.0) {
    // Squared residual of coordinate t's representor against the pre-period
    // span: lambda * (1 + s_t' (S_pre S_pre' + lambda I)^-1 s_t) for post
    // coordinates and identically zero on the pre-period.
    const Eigen::MatrixXd controls_pre = model.controls.leftCols(t0);
    auto llt = dual_llt(controls_pre, model.lambda);
    for (int t = t0; t < t_total; ++t) {
      Eigen::VectorXd s_t = model.controls.col(t);
      double resid_sq = model.lambda * (1.0 + s_t.dot(llt.solve(s_t)));
      est.half_widths[t] = std::sqrt(slack * resid_sq);
    }
  } else {
    SymPinv phi_pinv(reps.phi);
    for (int t = 0; t < t_total; ++t) {
      Eigen::VectorXd rep_t = model.sigma.col(t);
      Eigen::VectorXd q_rep = model.q * rep_t;
      Eigen::VectorXd v = reps.pre_columns.transpose() * q_rep;
      double resid_sq = rep_t.dot(q_rep) - v.dot(phi_pinv.solve(v));
      if (resid_sq < 0.0) {
        est.band_clamped = true;
        resid_sq = 0.0;
      }
      est.half_widths[t] = std::sqrt(slack * resid_sq);
    }
  }
  est.band_lower = est.s_hat - est.half_widths;
  est.band_upper = est.s_hat + est.half_widths;
  return est;
}

Eigen::VectorXd effect_series(const EoprEstimate& est,
                              const Eigen::VectorXd& treated_observed,
                              int t0) {
  if (est.s_hat.size() != treated_observed.size())
    fail(errc::invalid_argument, "estimate and observed lengths differ");
  if (t0 < 1 || t0 >= treated_observed.size())
    fail(errc::bad_t0, "t0 outside [1, T)");
  const int post = static_cast<int>(treated_observed.size()) - t0;
  return est.s_hat.tail(post) - treated_observed.tail(post);
}

double select_lambda(const PanelData& panel, const std::vector<double>& grid,
                     double holdout_fraction) {
  panel.validate();
  if (grid.empty()) fail(errc::empty_grid, "lambda grid is empty");
  for (double v : grid)
    if (!(v > 0.0 && v <= 1.0))
      fail(errc::invalid_argument, "lambda grid values must lie in (0, 1]");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    fail(errc::invalid_argument, "holdout_fraction must lie in (0, 1)");

  const int t0 = panel.t0;
  const int fit_len =
      static_cast<int>(std::ceil(t0 * (1.0 - holdout_fraction)));
  const int holdout = t0 - fit_len;
  if (fit_len < 1 || holdout < 1)
    fail(errc::too_short_pre,
         "pre-period too short for a holdout at fraction " +
             std::to_string(holdout_fraction));

  // Only pre-intervention data enters the selection.
  const Eigen::MatrixXd controls_pre = panel.controls.leftCols(t0);
  const Eigen::VectorXd treated_pre = panel.treated.head(t0);

  std::vector<double> errors(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    EllipsoidModel model = learn_ellipsoid(controls_pre, grid[i]);
    RepresentorSystem reps = representors(model, fit_len);
    EoprEstimate est = extrapolate(model, reps, treated_pre.head(fit_len));
    errors[i] = rmse(est.s_hat, treated_pre, Range{fit_len, t0});
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (errors[i] < errors[best] ||
        (errors[i] == errors[best] && grid[i] > grid[best]))
      best = i;
  }
  return grid[best];
}

EoprFit fit_eopr(const PanelData& panel, double lambda) {
  panel.validate();
  EoprFit fit;
  fit.model = learn_ellipsoid(panel.controls, lambda);
  fit.reps = representors(fit.model, panel.t0);
  fit.estimate =
      extrapolate(fit.model, fit.reps, panel.treated.head(panel.t0));
  fit.estimate = worst_case_band(fit.model, fit.reps, fit.estimate);
  return fit;
}

}  // namespace eopr
