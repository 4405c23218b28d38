#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "../support.hpp"
#include "eopr/baselines.hpp"
#include "eopr/estimator.hpp"
#include "eopr/evaluation.hpp"
#include "eopr/simulation.hpp"

using namespace eopr;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("learn_ellipsoid") {
  SUBCASE("lambda > 0 gives Q Sigma = I") {
    Eigen::MatrixXd s(2, 2);
    s << 1, 0, 0, 1;
    EllipsoidModel model = learn_ellipsoid(s, 0.5);
    Eigen::MatrixXd expected = s.transpose() * s;
    expected.diagonal().array() += 0.5;
    CHECK(max_abs(model.sigma - expected) == 0.0);
    CHECK(max_abs(model.q * model.sigma -
                  Eigen::MatrixXd::Identity(2, 2)) <= 1e-10);
    CHECK(model.rank == 2);
  }
  SUBCASE("lambda = 0 rank-deficient input gives a Moore-Penrose inverse") {
    Rng rng(21);
    Eigen::MatrixXd s(2, 6);  // rank <= 2 < T
    for (int i = 0; i < s.rows(); ++i)
      for (int t = 0; t < s.cols(); ++t) s(i, t) = rng.normal();
    EllipsoidModel model = learn_ellipsoid(s, 0.0);
    CHECK(model.rank == 2);
    CHECK(max_abs(model.q * model.sigma * model.q - model.q) <= 1e-8);
    CHECK(max_abs(model.sigma * model.q * model.sigma - model.sigma) <= 1e-8);
    CHECK(max_abs(model.q - model.q.transpose()) <= 1e-10);
  }
  SUBCASE("every control row lies inside the ellipsoid") {
    Rng rng(22);
    for (double lambda : {0.0, 1e-3, 1.0}) {
      Eigen::MatrixXd s(4, 7);
      for (int i = 0; i < s.rows(); ++i)
        for (int t = 0; t < s.cols(); ++t) s(i, t) = rng.normal();
      EllipsoidModel model = learn_ellipsoid(s, lambda);
      double max_row_form = 0.0;
      for (int i = 0; i < s.rows(); ++i) {
        Eigen::VectorXd row = s.row(i).transpose();
        max_row_form = std::max(max_row_form, row.dot(model.q * row));
      }
      CHECK(max_row_form <= model.radius * (1.0 + 1e-8) + 1e-12);
    }
  }
  SUBCASE("non-finite input raises NonFinite") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Ones(2, 3);
    s(1, 2) = std::nan("");
    try {
      learn_ellipsoid(s, 0.1);
      FAIL("expected NonFinite");
    } catch (const Error& e) {
      CHECK(e.code() == errc::non_finite);
    }
  }
}

TEST_CASE("representors") {
  Rng rng(31);
  SUBCASE("phi matches the sandwich product pre' Q pre for lambda > 0") {
    Eigen::MatrixXd s(5, 9);
    for (int i = 0; i < s.rows(); ++i)
      for (int t = 0; t < s.cols(); ++t) s(i, t) = rng.normal();
    EllipsoidModel model = learn_ellipsoid(s, 0.3);
    RepresentorSystem reps = representors(model, 4);
    Eigen::MatrixXd sandwich =
        reps.pre_columns.transpose() * model.q * reps.pre_columns;
    CHECK(max_abs(reps.phi - sandwich) <= 1e-8 * max_abs(reps.phi));
    CHECK(max_abs(reps.phi - model.sigma.topLeftCorner(4, 4)) == 0.0);
  }
  SUBCASE("t0 = T gives phi = sigma") {
    Eigen::MatrixXd s(3, 5);
    for (int i = 0; i < s.rows(); ++i)
      for (int t = 0; t < s.cols(); ++t) s(i, t) = rng.normal();
    EllipsoidModel model = learn_ellipsoid(s, 0.7);
    RepresentorSystem reps = representors(model, 5);
    CHECK(max_abs(reps.phi - model.sigma) == 0.0);
  }
  SUBCASE("phi is positive definite for lambda > 0") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 6);
    EllipsoidModel model = learn_ellipsoid(s, 0.4);
    RepresentorSystem reps = representors(model, 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reps.phi);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK_FALSE(reps.phi_singular);
  }
  SUBCASE("lambda = 0 with t0 beyond the rank flags SingularPhi") {
    Eigen::MatrixXd s(2, 8);
    for (int i = 0; i < s.rows(); ++i)
      for (int t = 0; t < s.cols(); ++t) s(i, t) = rng.normal();
    EllipsoidModel model = learn_ellipsoid(s, 0.0);
    RepresentorSystem reps = representors(model, 5);  // rank 2 < t0
    CHECK(reps.phi_singular);
  }
}

TEST_CASE("extrapolate") {
  SUBCASE("t0 = T reproduces the pre-period and nothing else") {
    Rng rng(41);
    Eigen::MatrixXd s(4, 6);
    for (int i = 0; i < s.rows(); ++i)
      for (int t = 0; t < s.cols(); ++t) s(i, t) = rng.normal();
    EllipsoidModel model = learn_ellipsoid(s, 0.2);
    RepresentorSystem reps = representors(model, 6);
    Eigen::VectorXd b(6);
    for (int t = 0; t < 6; ++t) b[t] = rng.normal();
    EoprEstimate est = extrapolate(model, reps, b);
    CHECK(max_abs(est.s_hat - b) <= 1e-8 * max_abs(b));
  }

  SUBCASE("exact pre-period interpolation for lambda > 0") {
    Rng rng(42);
    for (int trial = 0; trial < 25; ++trial) {
      int n = 3 + static_cast<int>(rng.below(8));
      int t_total = 8 + static_cast<int>(rng.below(23));
      int t0 = 1 + static_cast<int>(rng.below(t_total - 1));
      PanelData panel = testsupport::random_panel(rng, n, t_total, t0, 3.0);
      double lambda = std::pow(10.0, -6.0 * rng.uniform());
      EoprFit fit = fit_eopr(panel, lambda);
      double scale = panel.treated.head(t0).cwiseAbs().maxCoeff();
      CHECK(max_abs(fit.estimate.s_hat.head(t0) - panel.treated.head(t0)) <=
            1e-8 * scale);
    }
  }

  SUBCASE("matches the KKT interpolation oracle") {
    Rng rng(43);
    for (int trial = 0; trial < 20; ++trial) {
      int n = 4 + static_cast<int>(rng.below(7));
      int t_total = 8 + static_cast<int>(rng.below(15));
      int t0 = 2 + static_cast<int>(rng.below(t_total - 3));
      PanelData panel = testsupport::random_panel(rng, n, t_total, t0);
      double lambda = trial % 2 ? 1e-2 : 1.0;
      EoprFit fit = fit_eopr(panel, lambda);
      Eigen::VectorXd oracle = testsupport::kkt_interpolator(
          fit.model.q, panel.treated.head(t0));
      double scale = std::max(1.0, max_abs(oracle));
      CHECK(max_abs(fit.estimate.s_hat - oracle) <= 1e-8 * scale);
    }
  }

  SUBCASE("qform stays within the learned radius when the treated unit "
          "interpolates a control") {
    Rng rng(44);
    PanelData panel = testsupport::combination_panel(rng, 6, 12, 7);
    EoprFit fit = fit_eopr(panel, 1e-3);
    CHECK(fit.estimate.qform <=
          fit.model.radius * (1.0 + 1e-8) + 1e-12);
  }

  SUBCASE("singular phi falls back to the pseudo-inverse solve") {
    Rng rng(45);
    Eigen::MatrixXd s(2, 8);
    for (int i = 0; i < s.rows(); ++i)
      for (int t = 0; t < s.cols(); ++t) s(i, t) = rng.normal();
    EllipsoidModel model = learn_ellipsoid(s, 0.0);
    RepresentorSystem reps = representors(model, 5);
    REQUIRE(reps.phi_singular);
    Eigen::VectorXd b = s.row(0).head(5).transpose();  // consistent system
    EoprEstimate est = extrapolate(model, reps, b);
    CHECK(est.s_hat.allFinite());
    CHECK(max_abs(est.s_hat.head(5) - b) <= 1e-8 * max_abs(b));
  }

  SUBCASE("scaling covariance: inputs scaled by c scale s_hat by c") {
    Rng rng(46);
    PanelData panel = testsupport::random_panel(rng, 5, 10, 6);
    const double c = 37.5;
    const double lambda = 1e-2;
    EoprFit base = fit_eopr(panel, lambda);
    PanelData scaled = panel;
    scaled.controls *= c;
    scaled.treated *= c;
    EoprFit rescaled = fit_eopr(scaled, lambda * c * c);
    CHECK(max_abs(rescaled.estimate.s_hat - c * base.estimate.s_hat) <=
          1e-8 * c * max_abs(base.estimate.s_hat));
  }
}

TEST_CASE("worst_case_band") {
  SUBCASE("pre-period half-widths vanish; band brackets s_hat") {
    Rng rng(51);
    for (double lambda : {0.0, 1e-2, 1.0}) {
      PanelData panel = testsupport::combination_panel(rng, 6, 14, 8);
      EoprFit fit = fit_eopr(panel, lambda);
      const EoprEstimate& est = fit.estimate;
      double scale = panel.treated.head(8).cwiseAbs().maxCoeff();
      CHECK(est.half_widths.head(8).maxCoeff() <= 1e-6 * scale);
      CHECK(est.half_widths.minCoeff() >= 0.0);
      CHECK(((est.band_upper - est.s_hat).array() >= -1e-12).all());
      CHECK(((est.s_hat - est.band_lower).array() >= -1e-12).all());
    }
  }

  SUBCASE("zero slack collapses the band onto the estimate") {
    Rng rng(52);
    Eigen::MatrixXd s(3, 6);
    for (int i = 0; i < 3; ++i)
      for (int t = 0; t < 6; ++t) s(i, t) = rng.normal();
    EllipsoidModel model = learn_ellipsoid(s, 1e-2);
    RepresentorSystem reps = representors(model, 3);
    EoprEstimate est = extrapolate(model, reps, s.row(0).head(3).transpose());
    est.qform = model.radius;  // a treated unit sitting on the boundary
    est = worst_case_band(model, reps, est);
    CHECK(est.half_widths.maxCoeff() == 0.0);
    CHECK(est.band_lower == est.s_hat);
    CHECK(est.band_upper == est.s_hat);
  }

  SUBCASE("a control trajectory interpolating the treated pre-period lies "
          "inside the band") {
    Rng rng(53);
    PanelData panel = testsupport::random_panel(rng, 7, 12, 6);
    panel.treated = panel.controls.row(2).transpose();  // duplicate a control
    EoprFit fit = fit_eopr(panel, 1e-2);
    Eigen::VectorXd member = panel.controls.row(2).transpose();
    CHECK(((member - fit.estimate.band_lower).array() >= -1e-8).all());
    CHECK(((fit.estimate.band_upper - member).array() >= -1e-8).all());
  }

  SUBCASE("matches the constrained-extremum oracle") {
    Rng rng(54);
    for (int trial = 0; trial < 8; ++trial) {
      PanelData panel = testsupport::combination_panel(rng, 6, 12, 7);
      double lambda = trial % 2 ? 1e-1 : 1e-2;
      EoprFit fit = fit_eopr(panel, lambda);
      testsupport::BandOracle oracle = testsupport::band_oracle(
          fit.model.q, fit.model.radius, panel.treated.head(7));
      double scale = std::max(1.0, max_abs(oracle.upper));
      CHECK(max_abs(fit.estimate.band_lower - oracle.lower) <= 1e-6 * scale);
      CHECK(max_abs(fit.estimate.band_upper - oracle.upper) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("effect_series") {
  Rng rng(61);
  PanelData panel = testsupport::random_panel(rng, 4, 9, 5);
  EoprEstimate est;
  est.s_hat = panel.treated;

  SUBCASE("estimate equal to observed gives a zero effect") {
    Eigen::VectorXd tau = effect_series(est, panel.treated, 5);
    CHECK(tau.size() == 4);
    CHECK(max_abs(tau) == 0.0);
  }
  SUBCASE("an additive shift in the estimate shows up verbatim") {
    est.s_hat = panel.treated.array() + 3.0;
    Eigen::VectorXd tau = effect_series(est, panel.treated, 5);
    CHECK((tau.array() == 3.0).all());
  }
  SUBCASE("recovers an injected shift up to noise") {
    const double delta = 4.0;
    std::vector<double> means;
    for (int rep = 0; rep < 20; ++rep) {
      SimulationConfig cfg;
      cfg.n_units = 12;
      cfg.t_total = 60;
      cfg.t0 = 30;
      cfg.noise_sigma = 0.5;
      cfg.seed = 900 + rep;
      SimOutput sim = generate_panel(cfg);
      PanelData shifted = inject_effect(sim.panel, EffectShape::kStep, -delta);
      EoprFit fit = fit_eopr(shifted, select_lambda(shifted,
                                                    default_lambda_grid()));
      Eigen::VectorXd tau = effect_series(fit.estimate, shifted.treated,
                                          shifted.t0);
      means.push_back(tau.mean());
    }
    double grand = 0.0;
    for (double m : means) grand += m;
    grand /= static_cast<double>(means.size());
    CHECK(grand == doctest::Approx(delta).epsilon(0.25));
  }
}

TEST_CASE("case-study-scale panel: exact pre-fit where simplex weights "
          "cannot match") {
  // 43 units observed over 200 periods, intervention after 50. The
  // interpolating estimator drives the pre-period error to numerical zero;
  // convex-combination weights leave a visible residual on noisy data.
  SimulationConfig cfg;
  cfg.n_units = 43;
  cfg.t_total = 200;
  cfg.t0 = 50;
  cfg.noise_sigma = 1.0;
  cfg.seed = 4343;
  SimOutput sim = generate_panel(cfg);
  PanelData panel = normalize(sim.panel, NormScheme::kTreatedPreMax).first;

  double lambda = select_lambda(panel, default_lambda_grid());
  EoprFit fit = fit_eopr(panel, lambda);
  double scale = panel.treated.head(cfg.t0).cwiseAbs().maxCoeff();
  double eopr_pre = score(panel, fit.estimate.s_hat, "eopr").pre_rmse;
  double sc_pre = score(panel, sc_fit(panel).s_hat, "sc").pre_rmse;
  CHECK(eopr_pre <= 1e-8 * scale);
  CHECK(sc_pre > 100.0 * eopr_pre + 1e-3);
}

TEST_CASE("select_lambda") {
  SUBCASE("singleton grid returns its element") {
    Rng rng(71);
    PanelData panel = testsupport::random_panel(rng, 4, 12, 6);
    CHECK(select_lambda(panel, {0.1}) == 0.1);
  }
  SUBCASE("selected value attains the exhaustively evaluated minimum") {
    SimulationConfig cfg;
    cfg.n_units = 8;
    cfg.t_total = 40;
    cfg.t0 = 20;
    cfg.noise_sigma = 0.0;  // noiseless low-rank panel
    cfg.seed = 77;
    SimOutput sim = generate_panel(cfg);
    std::vector<double> grid = default_lambda_grid();
    double chosen = select_lambda(sim.panel, grid, 0.2);

    // Independent oracle: re-evaluate every candidate from scratch.
    const int t0 = sim.panel.t0;
    const int fit_len = static_cast<int>(std::ceil(t0 * 0.8));
    double best = std::numeric_limits<double>::infinity();
    double chosen_err = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
      EllipsoidModel model =
          learn_ellipsoid(sim.panel.controls.leftCols(t0), lambda);
      RepresentorSystem reps = representors(model, fit_len);
      EoprEstimate est =
          extrapolate(model, reps, sim.panel.treated.head(fit_len));
      double err = rmse(est.s_hat, sim.panel.treated.head(t0),
                        Range{fit_len, t0});
      best = std::min(best, err);
      if (lambda == chosen) chosen_err = err;
    }
    CHECK(chosen_err <= best + 1e-6);
  }
  SUBCASE("default grid is log-spaced over (0, 1]") {
    std::vector<double> grid = default_lambda_grid();
    CHECK(grid.size() == 7);
    CHECK(grid.front() == 1e-6);
    CHECK(grid.back() == 1.0);
  }
  SUBCASE("errors: empty grid, out-of-range values, holdout too small") {
    Rng rng(72);
    PanelData panel = testsupport::random_panel(rng, 4, 12, 6);
    try {
      select_lambda(panel, {});
      FAIL("expected EmptyGrid");
    } catch (const Error& e) {
      CHECK(e.code() == errc::empty_grid);
    }
    CHECK_THROWS_AS(select_lambda(panel, {2.0}), Error);
    PanelData tiny = testsupport::random_panel(rng, 4, 12, 1);
    try {
      select_lambda(tiny, {0.1});
      FAIL("expected TooShortPre");
    } catch (const Error& e) {
      CHECK(e.code() == errc::too_short_pre);
    }
  }
}
