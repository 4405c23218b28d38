#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// deliberately take different algebraic routes than the library so agreement
// is evidence, not tautology.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "eopr/panel.hpp"
#include "eopr/rng.hpp"

namespace testsupport {

inline eopr::PanelData random_panel(eopr::Rng& rng, int n_units, int t_total,
                                    int t0, double scale = 1.0) {
  eopr::PanelData panel;
  panel.controls.resize(n_units - 1, t_total);
  for (int i = 0; i < n_units - 1; ++i)
    for (int t = 0; t < t_total; ++t)
      panel.controls(i, t) = scale * rng.normal();
  panel.treated.resize(t_total);
  for (int t = 0; t < t_total; ++t) panel.treated[t] = scale * rng.normal();
  panel.t0 = t0;
  eopr::ensure_labels(panel);
  return panel;
}

// Panel whose treated unit is an exact convex combination of the controls.
inline eopr::PanelData combination_panel(eopr::Rng& rng, int n_units,
                                         int t_total, int t0) {
  eopr::PanelData panel = random_panel(rng, n_units, t_total, t0);
  Eigen::VectorXd weights(n_units - 1);
  for (int i = 0; i < n_units - 1; ++i)
    weights[i] = -std::log(1.0 - rng.uniform());
  weights /= weights.sum();
  panel.treated = panel.controls.transpose() * weights;
  return panel;
}

// Equality-constrained quadratic minimization via the KKT system:
// minimize x'Qx subject to x_pre = b. Solves the full (T+t0) saddle system
// with a rank-revealing LU, touching none of the library's solve paths.
inline Eigen::VectorXd kkt_interpolator(const Eigen::MatrixXd& q,
                                        const Eigen::VectorXd& b) {
  const int t_total = static_cast<int>(q.rows());
  const int t0 = static_cast<int>(b.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(t_total + t0, t_total + t0);
  kkt.topLeftCorner(t_total, t_total) = 2.0 * q;
  for (int i = 0; i < t0; ++i) {
    kkt(t_total + i, i) = 1.0;
    kkt(i, t_total + i) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(t_total + t0);
  rhs.tail(t0) = b;
  Eigen::VectorXd solution = Eigen::FullPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
  return solution.head(t_total);
}

// Closed-form extremes of x_t over {x'Qx <= radius, x_pre = b} for every
// post coordinate, eliminating the constraint and maximizing a linear
// functional over the residual ellipsoid in the free block.
struct BandOracle {
  Eigen::VectorXd center;  // length T: b on the pre block, z* after
  Eigen::VectorXd lower;   // length T
  Eigen::VectorXd upper;   // length T
};

inline BandOracle band_oracle(const Eigen::MatrixXd& q, double radius,
                              const Eigen::VectorXd& b) {
  const int t_total = static_cast<int>(q.rows());
  const int t0 = static_cast<int>(b.size());
  const int post = t_total - t0;
  const Eigen::MatrixXd q22 = q.bottomRightCorner(post, post);
  const Eigen::MatrixXd q21 = q.bottomLeftCorner(post, t0);
  Eigen::LLT<Eigen::MatrixXd> llt(q22);
  Eigen::VectorXd z_star = llt.solve(-q21 * b);

  BandOracle oracle;
  oracle.center.resize(t_total);
  oracle.center.head(t0) = b;
  oracle.center.tail(post) = z_star;
  double value = oracle.center.dot(q * oracle.center);
  double slack = std::max(0.0, radius - value);

  Eigen::MatrixXd q22_inv =
      llt.solve(Eigen::MatrixXd::Identity(post, post));
  oracle.lower = oracle.center;
  oracle.upper = oracle.center;
  for (int k = 0; k < post; ++k) {
    double width = std::sqrt(slack * std::max(0.0, q22_inv(k, k)));
    oracle.lower[t0 + k] -= width;
    oracle.upper[t0 + k] += width;
  }
  return oracle;
}

inline std::string write_temp(const std::string& name,
                              const std::string& content) {
  std::string path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR")
                                                       : "/tmp") +
                     "/" + name;
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write " + path);
  std::fwrite(content.data(), 1, content.size(), f);
  std::fclose(f);
  return path;
}

}  // namespace testsupport
