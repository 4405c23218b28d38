#include "eopr/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "eopr/parallel.hpp"

namespace eopr {

double rmse(const Eigen::VectorXd& u, const Eigen::VectorXd& u_hat,
            Range range) {
  if (u.size() != u_hat.size())
    fail(errc::invalid_argument, "series lengths differ");
  if (range.begin < 0 || range.end > u.size() || range.begin >= range.end)
    fail(errc::empty_range, "range [" + std::to_string(range.begin) + ", " +
                                std::to_string(range.end) + ") is empty");
  const int n = range.end - range.begin;
  double ss = (u.segment(range.begin, n) - u_hat.segment(range.begin, n))
                  .squaredNorm();
  return std::sqrt(ss / n);
}

double rmse(const Eigen::VectorXd& u, const Eigen::VectorXd& u_hat) {
  return rmse(u, u_hat, Range{0, static_cast<int>(u.size())});
}

ScoreReport score(const PanelData& panel, const Eigen::VectorXd& estimate,
                  const std::string& method) {
  panel.validate();
  if (estimate.size() != panel.treated.size())
    fail(errc::invalid_argument, "estimate length != panel length");
  ScoreReport report;
  report.method = method;
  report.pre_rmse = rmse(panel.treated, estimate, Range{0, panel.t0});
  report.post_rmse =
      rmse(panel.treated, estimate, Range{panel.t0, panel.n_periods()});
  report.panel_desc = "N=" + std::to_string(panel.n_units()) +
                      ",T=" + std::to_string(panel.n_periods()) +
                      ",t0=" + std::to_string(panel.t0);
  return report;
}

Estimator make_eopr_estimator(std::vector<double> lambda_grid,
                              double holdout_fraction) {
  return Estimator{
      "eopr", [grid = std::move(lambda_grid),
               holdout_fraction](const PanelData& panel) -> Eigen::VectorXd {
        double lambda = grid.size() == 1
                            ? grid[0]
                            : select_lambda(panel, grid, holdout_fraction);
        return fit_eopr(panel, lambda).estimate.s_hat;
      }};
}

Estimator make_eopr_estimator(double lambda) {
  return Estimator{"eopr", [lambda](const PanelData& panel) {
                     return fit_eopr(panel, lambda).estimate.s_hat;
                   }};
}

Estimator make_sc_estimator(int qp_max_iters, double qp_tol) {
  return Estimator{"sc", [qp_max_iters, qp_tol](const PanelData& panel) {
                     return sc_fit(panel, qp_max_iters, qp_tol).s_hat;
                   }};
}

Estimator make_dsc_estimator(int qp_max_iters, double qp_tol) {
  return Estimator{"dsc", [qp_max_iters, qp_tol](const PanelData& panel) {
                     return dsc_fit(panel, qp_max_iters, qp_tol).s_hat;
                   }};
}

Estimator make_rsc_estimator(RscConfig config) {
  return Estimator{"rsc", [config](const PanelData& panel) {
                     return rsc_fit(panel, config).s_hat;
                   }};
}

Estimator make_estimator(const std::string& name,
                         const std::vector<double>& lambda_grid,
                         const RscConfig& rsc_config, int qp_max_iters,
                         double qp_tol) {
  if (name == "eopr")
    return make_eopr_estimator(lambda_grid.empty() ? default_lambda_grid()
                                                   : lambda_grid);
  if (name == "sc") return make_sc_estimator(qp_max_iters, qp_tol);
  if (name == "dsc") return make_dsc_estimator(qp_max_iters, qp_tol);
  if (name == "rsc") return make_rsc_estimator(rsc_config);
  fail(errc::invalid_argument, "unknown method '" + name + "'");
}

PlaceboReport placebo_run(const PanelData& panel,
                          const Estimator& estimator) {
  panel.validate();
  const int n_units = panel.n_units();
  if (n_units < 3)
    fail(errc::invalid_argument, "placebo tests need at least 3 units");
  const int n_controls = n_units - 1;
  const int t_total = panel.n_periods();

  PlaceboReport report;
  report.method = estimator.name;
  report.entries.resize(n_units);

  parallel_for(static_cast<std::size_t>(n_units), [&](std::size_t u) {
    PlaceboEntry& entry = report.entries[u];
    PanelData candidate;
    Eigen::VectorXd observed;
    if (u == 0) {
      entry.label = panel.unit_labels.empty() ? "treated"
                                              : panel.unit_labels[0];
      entry.is_treated = true;
      candidate = panel;
      observed = panel.treated;
    } else {
      const int j = static_cast<int>(u) - 1;  // control cast as treated
      entry.label = panel.unit_labels.empty()
                        ? "control_" + std::to_string(j + 1)
                        : panel.unit_labels[u];
      observed = panel.controls.row(j).transpose();
      candidate.treated = observed;
      candidate.t0 = panel.t0;
      candidate.controls.resize(n_controls - 1, t_total);
      int row = 0;
      for (int i = 0; i < n_controls; ++i)
        if (i != j) candidate.controls.row(row++) = panel.controls.row(i);
    }
    try {
      Eigen::VectorXd estimate = estimator.fit(candidate);
      entry.gap = estimate - observed;
      entry.post_gap_rmse =
          rmse(estimate, observed, Range{panel.t0, t_total});
      entry.ok = true;
    } catch (const std::exception& e) {
      entry.ok = false;
      entry.error = e.what();
    }
  });

  const PlaceboEntry& treated = report.entries[0];
  if (treated.ok) {
    int rank = 1;
    for (const auto& entry : report.entries)
      if (entry.ok && !entry.is_treated &&
          entry.post_gap_rmse > treated.post_gap_rmse)
        ++rank;
    report.treated_rank = rank;
  }
  return report;
}

EffectShape parse_effect_shape(const std::string& name) {
  if (name == "step") return EffectShape::kStep;
  if (name == "ramp") return EffectShape::kRamp;
  fail(errc::invalid_argument, "unknown effect shape '" + name + "'");
}

PanelData inject_effect(const PanelData& panel, EffectShape shape,
                        double magnitude) {
  panel.validate();
  PanelData out = panel;
  const int post = panel.n_periods() - panel.t0;
  for (int k = 0; k < post; ++k) {
    double bump = shape == EffectShape::kStep
                      ? magnitude
                      : magnitude * static_cast<double>(k + 1) / post;
    out.treated[panel.t0 + k] += bump;
  }
  return out;
}

std::vector<AblationRow> lambda_ablation(const PanelData& panel,
                                         std::vector<double> grid) {
  panel.validate();
  if (grid.empty()) fail(errc::empty_grid, "lambda grid is empty");
  std::sort(grid.begin(), grid.end());

  std::vector<AblationRow> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    AblationRow& row = rows[i];
    row.lambda = grid[i];
    try {
      EoprFit fit = fit_eopr(panel, grid[i]);
      ScoreReport report = score(panel, fit.estimate.s_hat, "eopr");
      row.pre_rmse = report.pre_rmse;
      row.post_rmse = report.post_rmse;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });
  return rows;
}

namespace {

struct Stats {
  double mean = 0.0, sd = 0.0, median = 0.0;
};

Stats summarize(std::vector<double> values) {
  Stats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  std::sort(values.begin(), values.end());
  std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid]
                               : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

}  // namespace

std::vector<SweepRow> sweep(const std::vector<SimulationConfig>& configs,
                            const std::vector<Estimator>& methods,
                            int repeats) {
  if (repeats < 1) fail(errc::invalid_argument, "repeats must be >= 1");
  if (configs.empty() || methods.empty())
    fail(errc::invalid_argument, "sweep needs configs and methods");

  struct Cell {
    std::vector<double> pre, post;
    int failures = 0;
  };
  const std::size_t n_cells = configs.size() * methods.size();
  std::vector<Cell> cells(n_cells);

  // One task per (config, method, repeat); reduction below is by cell index,
  // so scheduling order cannot change the result.
  const std::size_t n_tasks = n_cells * static_cast<std::size_t>(repeats);
  std::vector<double> pre_values(n_tasks, -1.0), post_values(n_tasks, -1.0);
  parallel_for(n_tasks, [&](std::size_t task) {
    const std::size_t cell = task / repeats;
    const int rep = static_cast<int>(task % repeats);
    const std::size_t ci = cell / methods.size();
    const std::size_t mi = cell % methods.size();
    SimulationConfig config = configs[ci];
    config.seed += static_cast<std::uint64_t>(rep);
    try {
      SimOutput sim = generate_panel(config);
      Eigen::VectorXd estimate = methods[mi].fit(sim.panel);
      ScoreReport report = score(sim.panel, estimate, methods[mi].name);
      pre_values[task] = report.pre_rmse;
      post_values[task] = report.post_rmse;
    } catch (const std::exception&) {
      // left as the -1 sentinel
    }
  });

  for (std::size_t task = 0; task < n_tasks; ++task) {
    Cell& cell = cells[task / repeats];
    if (pre_values[task] < 0.0) {
      ++cell.failures;
    } else {
      cell.pre.push_back(pre_values[task]);
      cell.post.push_back(post_values[task]);
    }
  }

  std::vector<SweepRow> rows(n_cells);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    SweepRow& row = rows[cell];
    row.config = configs[cell / methods.size()];
    row.method = methods[cell % methods.size()].name;
    row.repeats = repeats;
    row.failures = cells[cell].failures;
    Stats pre = summarize(cells[cell].pre);
    Stats post = summarize(cells[cell].post);
    row.pre_mean = pre.mean;
    row.pre_std = pre.sd;
    row.pre_median = pre.median;
    row.post_mean = post.mean;
    row.post_std = post.sd;
    row.post_median = post.median;
  }
  return rows;
}

}  // namespace eopr
