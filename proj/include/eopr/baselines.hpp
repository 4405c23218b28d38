#pragma once

#include <Eigen/Core>
#include <string>

#include "eopr/panel.hpp"

namespace eopr {

struct WeightedEstimate {
  Eigen::VectorXd s_hat;    // length T
  Eigen::VectorXd weights;  // length N-1
  double intercept = 0.0;   // 0 for plain SC
  std::string method;
};

struct RscConfig {
  // Retain singular values >= ratio * sigma_max.
  double singular_value_cutoff_ratio = 0.1;
  double ridge = 0.0;
};

// min ||A w - b||^2 over the probability simplex, Frank-Wolfe with away
// steps and exact line search. Stops when the duality gap drops below tol or
// after max_iters. Ties in vertex selection break toward the lowest index,
// so the result is deterministic.
Eigen::VectorXd solve_simplex_qp(const Eigen::MatrixXd& a,
                                 const Eigen::VectorXd& b,
                                 int max_iters = 50000, double tol = 1e-10);

// Classical synthetic control: simplex weights fitted on the pre-period.
WeightedEstimate sc_fit(const PanelData& panel, int qp_max_iters = 50000,
                        double qp_tol = 1e-10);

// Demeaned synthetic control: simplex weights on per-unit demeaned
// pre-periods; the treated pre-mean is restored as the intercept.
WeightedEstimate dsc_fit(const PanelData& panel, int qp_max_iters = 50000,
                         double qp_tol = 1e-10);

// Robust synthetic control: SVD-threshold the control matrix, then (ridge)
// regression of the treated pre-period on the denoised controls.
WeightedEstimate rsc_fit(const PanelData& panel, const RscConfig& config = {});

}  // namespace eopr
