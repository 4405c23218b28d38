#include "eopr/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

namespace eopr {

namespace {

// Minimizer of ||A_S u - b||^2 over the affine hull of the active face
// (sum u = 1, signs free), via the KKT system. Rank-revealing LU keeps
// duplicate donors from blowing up the solve.
Eigen::VectorXd face_minimizer(const Eigen::MatrixXd& h,
                               const Eigen::VectorXd& c,
                               const std::vector<int>& active) {
  const int m = static_cast<int>(active.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd rhs(m + 1);
  for (int r = 0; r < m; ++r) {
    for (int col = 0; col < m; ++col)
      kkt(r, col) = 2.0 * h(active[r], active[col]);
    kkt(r, m) = 1.0;
    kkt(m, r) = 1.0;
    rhs[r] = 2.0 * c[active[r]];
  }
  rhs[m] = 1.0;
  Eigen::VectorXd solution = Eigen::FullPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
  return solution.head(m);
}

}  // namespace

Eigen::VectorXd solve_simplex_qp(const Eigen::MatrixXd& a,
                                 const Eigen::VectorXd& b, int max_iters,
                                 double tol) {
  if (!a.allFinite() || !b.allFinite())
    fail(errc::non_finite, "simplex QP inputs contain NaN or Inf");
  if (a.rows() != b.size())
    fail(errc::invalid_argument, "A rows != b length");
  const int n = static_cast<int>(a.cols());
  if (n < 1) fail(errc::invalid_argument, "A has no columns");
  if (n == 1) return Eigen::VectorXd::Ones(1);

  const Eigen::MatrixXd h = a.transpose() * a;
  const Eigen::VectorXd c = a.transpose() * b;
  auto objective = [&](const Eigen::VectorXd& x) {
    return x.dot(h * x) - 2.0 * c.dot(x);
  };

  // Start at the best single vertex (lowest index on ties).
  int start = 0;
  double best = (a.col(0) - b).squaredNorm();
  for (int j = 1; j < n; ++j) {
    double value = (a.col(j) - b).squaredNorm();
    if (value < best) {
      best = value;
      start = j;
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  w[start] = 1.0;

  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::VectorXd g = h * w - c;  // half the gradient of ||Aw - b||^2

    int fw = 0;
    for (int j = 1; j < n; ++j)
      if (g[j] < g[fw]) fw = j;
    double gap = 2.0 * (w.dot(g) - g[fw]);
    if (gap <= tol) break;

    int away = -1;
    for (int j = 0; j < n; ++j)
      if (w[j] > 0.0 && (away < 0 || g[j] > g[away])) away = j;
    if (away < 0 || away == fw) break;  // gap is 0 up to rounding

    // Pairwise step: shift mass from the worst active vertex to the best
    // one. Exact line search on the quadratic, capped by the mass available.
    double slope = g[fw] - g[away];  // < 0 here
    double quad = h(fw, fw) - 2.0 * h(fw, away) + h(away, away);
    double gamma_max = w[away];
    double gamma =
        quad > 0.0 ? std::min(gamma_max, -slope / quad) : gamma_max;
    if (!(gamma > 0.0) || !std::isfinite(gamma)) break;

    w[fw] += gamma;
    w[away] -= gamma;
    if (w[away] < 0.0) w[away] = 0.0;  // drop step

    // Fully-corrective sweep: pairwise steps crawl when donors are nearly
    // collinear, so periodically jump to the exact minimizer over the
    // current face, shrinking the face when that point sits outside it.
    if ((iter & 31) == 31) {
      for (int sweep = 0; sweep < n; ++sweep) {
        std::vector<int> active;
        for (int j = 0; j < n; ++j)
          if (w[j] > 0.0) active.push_back(j);
        if (active.size() < 2) break;
        Eigen::VectorXd u = face_minimizer(h, c, active);
        if (!u.allFinite()) break;
        Eigen::VectorXd candidate = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < active.size(); ++k)
          candidate[active[k]] = u[k];
        if (u.minCoeff() >= 0.0) {
          if (objective(candidate) <= objective(w)) w = candidate;
          break;
        }
        // Ratio test toward the face minimizer; a coordinate reaches zero.
        double step = 1.0;
        for (int j : active)
          if (candidate[j] < w[j])
            step = std::min(step, w[j] / (w[j] - candidate[j]));
        if (!(step > 0.0) || !std::isfinite(step)) break;
        w += step * (candidate - w);
        for (int j : active)
          if (w[j] < 1e-15) w[j] = 0.0;
      }
    }
  }

  w = w.cwiseMax(0.0);
  w /= w.sum();
  return w;
}

WeightedEstimate sc_fit(const PanelData& panel, int qp_max_iters,
                        double qp_tol) {
  panel.validate();
  SplitPanel parts = split(panel);
  WeightedEstimate est;
  est.method = "sc";
  est.weights = solve_simplex_qp(parts.controls_pre.transpose(),
                                 parts.treated_pre, qp_max_iters, qp_tol);
  est.s_hat = panel.controls.transpose() * est.weights;
  return est;
}

WeightedEstimate dsc_fit(const PanelData& panel, int qp_max_iters,
                         double qp_tol) {
  panel.validate();
  const Eigen::VectorXd control_means =
      panel.controls.leftCols(panel.t0).rowwise().mean();
  const double treated_mean = panel.treated.head(panel.t0).mean();

  Eigen::MatrixXd demeaned = panel.controls.colwise() - control_means;
  Eigen::VectorXd treated_demeaned =
      panel.treated.head(panel.t0).array() - treated_mean;

  WeightedEstimate est;
  est.method = "dsc";
  est.intercept = treated_mean;
  est.weights = solve_simplex_qp(demeaned.leftCols(panel.t0).transpose(),
                                 treated_demeaned, qp_max_iters, qp_tol);
  est.s_hat =
      (demeaned.transpose() * est.weights).array() + treated_mean;
  return est;
}

WeightedEstimate rsc_fit(const PanelData& panel, const RscConfig& config) {
  panel.validate();
  const double ratio = config.singular_value_cutoff_ratio;
  if (!(ratio >= 0.0 && ratio <= 1.0))
    fail(errc::invalid_argument, "cutoff ratio must lie in [0, 1]");
  if (!(config.ridge >= 0.0))
    fail(errc::invalid_argument, "ridge must be >= 0");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      panel.controls, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double sv_max = sv.size() ? sv[0] : 0.0;
  if (sv_max == 0.0)
    fail(errc::degenerate_spectrum, "control matrix is identically zero");

  Eigen::VectorXd kept = sv;
  for (int k = 0; k < kept.size(); ++k)
    if (kept[k] < ratio * sv_max) kept[k] = 0.0;
  const Eigen::MatrixXd denoised =
      svd.matrixU() * kept.asDiagonal() * svd.matrixV().transpose();

  // t0 x (N-1) design: columns are denoised control units on the pre-period.
  const Eigen::MatrixXd design = denoised.leftCols(panel.t0).transpose();
  const Eigen::VectorXd target = panel.treated.head(panel.t0);

  WeightedEstimate est;
  est.method = "rsc";
  if (config.ridge > 0.0) {
    Eigen::MatrixXd normal = design.transpose() * design;
    normal.diagonal().array() += config.ridge;
    est.weights = Eigen::LLT<Eigen::MatrixXd>(normal).solve(
        design.transpose() * target);
  } else {
    // Minimum-norm least squares.
    est.weights =
        Eigen::BDCSVD<Eigen::MatrixXd>(design,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV)
            .solve(target);
  }
  est.s_hat = denoised.transpose() * est.weights;
  return est;
}

}  // namespace eopr
