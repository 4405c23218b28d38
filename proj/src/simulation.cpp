#include "eopr/simulation.hpp"

#include <cmath>

namespace eopr {

WeightMode parse_weight_mode(const std::string& name) {
  if (name == "equal") return WeightMode::kEqual;
  if (name == "dirichlet") return WeightMode::kDirichlet;
  fail(errc::invalid_argument, "unknown weight mode '" + name + "'");
}

const char* to_string(WeightMode mode) {
  return mode == WeightMode::kEqual ? "equal" : "dirichlet";
}

void SimulationConfig::validate() const {
  if (n_units < 2) fail(errc::invalid_argument, "n_units must be >= 2");
  if (t_total < 2) fail(errc::invalid_argument, "t_total must be >= 2");
  if (t0 < 1 || t0 >= t_total)
    fail(errc::bad_t0, "t0=" + std::to_string(t0) + " outside [1, " +
                           std::to_string(t_total) + ")");
  if (pool_size < 1) fail(errc::invalid_argument, "pool_size must be >= 1");
  if (!(noise_sigma >= 0.0))
    fail(errc::invalid_argument, "noise_sigma must be >= 0");
}

double latent_value(double theta, double rho) {
  return 10.0 / (1.0 + std::exp(-theta - rho - theta * rho));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> treated_from_controls(
    const Eigen::MatrixXd& noiseless_controls, WeightMode mode, Rng& rng) {
  const int n = static_cast<int>(noiseless_controls.rows());
  if (n < 1) fail(errc::invalid_argument, "need at least one control row");
  Eigen::VectorXd weights(n);
  if (mode == WeightMode::kEqual) {
    weights.setConstant(1.0 / n);
  } else {
    // Uniform on the simplex: normalized unit exponentials.
    for (int i = 0; i < n; ++i)
      weights[i] = -std::log(1.0 - rng.uniform());
    weights /= weights.sum();
  }
  return {noiseless_controls.transpose() * weights, weights};
}

SimOutput generate_panel(const SimulationConfig& config) {
  config.validate();
  const int n_controls = config.n_units - 1;
  const int t_total = config.t_total;
  Rng rng(config.seed);

  Eigen::VectorXd row_pool(config.pool_size), col_pool(config.pool_size);
  for (int k = 0; k < config.pool_size; ++k) row_pool[k] = rng.uniform();
  for (int k = 0; k < config.pool_size; ++k) col_pool[k] = rng.uniform();

  SimOutput out;
  out.theta.resize(n_controls);
  for (int i = 0; i < n_controls; ++i)
    out.theta[i] = row_pool[rng.below(config.pool_size)];
  out.rho.resize(t_total);
  for (int t = 0; t < t_total; ++t)
    out.rho[t] = col_pool[rng.below(config.pool_size)];

  Eigen::MatrixXd signal(n_controls, t_total);
  for (int i = 0; i < n_controls; ++i)
    for (int t = 0; t < t_total; ++t)
      signal(i, t) = latent_value(out.theta[i], out.rho[t]);

  auto [treated_signal, weights] =
      treated_from_controls(signal, config.weight_mode, rng);
  out.treated_weights = weights;
  out.weight_mode = to_string(config.weight_mode);

  Eigen::MatrixXd noisy = signal;
  if (config.noise_sigma > 0.0)
    for (int i = 0; i < n_controls; ++i)
      for (int t = 0; t < t_total; ++t)
        noisy(i, t) += config.noise_sigma * rng.normal();
  Eigen::VectorXd treated_noisy = treated_signal;
  if (config.noise_sigma > 0.0 && config.treated_noise)
    for (int t = 0; t < t_total; ++t)
      treated_noisy[t] += config.noise_sigma * rng.normal();

  out.truth.controls = std::move(signal);
  out.truth.treated = std::move(treated_signal);
  out.truth.t0 = config.t0;
  ensure_labels(out.truth);
  out.panel.controls = std::move(noisy);
  out.panel.treated = std::move(treated_noisy);
  out.panel.t0 = config.t0;
  out.panel.unit_labels = out.truth.unit_labels;
  out.panel.time_labels = out.truth.time_labels;
  out.panel.validate();
  return out;
}

}  // namespace eopr
