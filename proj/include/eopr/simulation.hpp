#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>

#include "eopr/panel.hpp"
#include "eopr/rng.hpp"

namespace eopr {

enum class WeightMode { kEqual, kDirichlet };

WeightMode parse_weight_mode(const std::string& name);
const char* to_string(WeightMode mode);

struct SimulationConfig {
  int n_units = 0;
  int t_total = 0;
  int t0 = 0;
  int pool_size = 10;
  double noise_sigma = 1.0;
  bool treated_noise = true;
  std::uint64_t seed = 0;
  WeightMode weight_mode = WeightMode::kEqual;

  void validate() const;
};

struct SimOutput {
  PanelData panel;                  // noisy observations
  PanelData truth;                  // noiseless signal, same shape/labels
  Eigen::VectorXd theta;            // unit features, length N-1
  Eigen::VectorXd rho;              // time features, length T
  Eigen::VectorXd treated_weights;  // combination weights, length N-1
  std::string weight_mode;
};

// Latent outcome surface: 10 / (1 + exp(-theta - rho - theta*rho)).
double latent_value(double theta, double rho);

// Low-rank panel generator. Draw order from one seeded generator: row
// feature pool, column feature pool, per-unit pool picks, per-time pool
// picks, combination weights (dirichlet mode only), control noise in row
// major order, then treated noise when enabled. The treated unit is a convex
// combination of the noiseless control rows.
SimOutput generate_panel(const SimulationConfig& config);

// Convex combination of the rows: equal weights or a uniform draw from the
// simplex. Returns the combined series and the weights used.
std::pair<Eigen::VectorXd, Eigen::VectorXd> treated_from_controls(
    const Eigen::MatrixXd& noiseless_controls, WeightMode mode, Rng& rng);

}  // namespace eopr
