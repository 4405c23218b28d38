#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "eopr/estimator.hpp"
#include "eopr/evaluation.hpp"
#include "eopr/panel.hpp"
#include "eopr/simulation.hpp"

namespace eopr {

// Every report file starts with a schema-version marker: a `# schema: ...`
// comment for csv, a {"schema": ...} record for json-lines.
enum class OutFormat { kCsv, kJsonLines };

OutFormat parse_out_format(const std::string& name);

// Shortest exact decimal for a double (%.17g); rereading gives the same bits.
std::string fmt_double(double value);

// Writes to a temporary file in the same directory, then renames over the
// target, so rerunning a command never leaves partial output.
void atomic_write(const std::string& path, const std::string& content);

void write_wide_panel(const std::string& path, const PanelData& panel);
void write_long_panel(const std::string& path, const PanelData& panel);

struct MethodSeries {
  std::string method;
  Eigen::VectorXd estimate;
  const EoprEstimate* band = nullptr;  // set for eopr only
};

void write_estimate_file(const std::string& path, OutFormat format,
                         const PanelData& panel, const MethodSeries& series);

void write_band_file(const std::string& path, OutFormat format,
                     const PanelData& panel, const EoprEstimate& est);

struct MethodEffects {
  std::string method;
  Eigen::VectorXd tau;  // post-period, counterfactual minus observed
};

void write_effects_file(const std::string& path, OutFormat format,
                        const PanelData& panel,
                        const std::vector<MethodEffects>& effects);

struct ScoreRow {
  std::string method;
  double pre_rmse = 0.0;      // original scale
  double post_rmse = 0.0;     // original scale
  double pre_rmse_fit = 0.0;  // scale the estimator saw (after --normalize)
  double post_rmse_fit = 0.0;
};

void write_scores_file(const std::string& path, OutFormat format,
                       const std::vector<ScoreRow>& rows);

void write_placebo_summary(const std::string& path, OutFormat format,
                           const PlaceboReport& report);

void write_placebo_gaps(const std::string& path, OutFormat format,
                        const PlaceboReport& report,
                        const std::vector<std::string>& time_labels);

void write_ablation_file(const std::string& path, OutFormat format,
                         const std::vector<AblationRow>& rows);

void write_sweep_file(const std::string& path, OutFormat format,
                      const std::vector<SweepRow>& rows);

void write_sim_metadata(const std::string& path,
                        const SimulationConfig& config, const SimOutput& out);

}  // namespace eopr
