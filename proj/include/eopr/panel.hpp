#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eopr/errors.hpp"

namespace eopr {

// Cross-sectional time series: one treated unit plus N-1 control units on a
// shared time grid. t0 counts pre-intervention periods, so columns [0, t0)
// are pre and [t0, T) are post.
struct PanelData {
  Eigen::MatrixXd controls;              // (N-1) x T, one row per control unit
  Eigen::VectorXd treated;               // length T
  int t0 = 0;
  std::vector<std::string> unit_labels;  // N labels, treated first
  std::vector<std::string> time_labels;  // T labels

  int n_units() const { return static_cast<int>(controls.rows()) + 1; }
  int n_periods() const { return static_cast<int>(controls.cols()); }

  // Throws on shape mismatch, t0 out of [1, T), or non-finite values.
  // Label vectors may be empty (see ensure_labels) but otherwise must match.
  void validate() const;
};

// Fills unit_labels ("treated", "control_1", ...) and time_labels
// ("1", ..., "T") when they are empty.
void ensure_labels(PanelData& panel);

enum class Layout { kLong, kWide };

Layout parse_layout(const std::string& name);

// Reads a delimiter-separated panel file. Wide: first column is the unit
// label, header row carries the time labels. Long: header `unit,time,value`,
// one observation per row. Lines starting with '#' are skipped. Every unit
// must cover every time label; the treated unit is pulled out by label and
// the remaining units become control rows in file order.
PanelData load_panel(const std::string& path, Layout layout,
                     const std::string& treated_label, int t0,
                     char delimiter = ',');

// One unit's raw history keyed by calendar day plus its intervention date.
struct AlignedUnit {
  std::string label;
  long intervention_day = 0;      // days since 1970-01-01
  std::map<long, double> series;  // day -> value
};

struct AlignmentSpec {
  std::string treated_label;
  std::vector<AlignedUnit> units;  // file order preserved

  // Every unit must have an intervention date inside its observed range.
  void validate() const;
};

struct AlignmentWindow {
  int pre_days = 0;
  int post_days = 0;
};

// Series file is long-format (unit,time,value) with ISO-8601 dates; dates
// file has header `unit,intervention_date`.
AlignmentSpec load_alignment_spec(const std::string& series_path,
                                  const std::string& dates_path,
                                  const std::string& treated_label,
                                  char delimiter = ',');

// Re-indexes every unit to day offsets [-pre_days, post_days) relative to
// its own intervention date, so offset 0 is each unit's intervention day and
// the result has t0 = pre_days. Units missing any day in the window raise
// InsufficientHistory naming the unit.
PanelData align_by_intervention(const AlignmentSpec& spec,
                                AlignmentWindow window);

// Trailing moving average: output[t] is the mean of the last `window`
// observations up to and including t (fewer near the start). Output length
// equals input length.
Eigen::VectorXd moving_average(const Eigen::VectorXd& series, int window);

// Applies the trailing moving average to the treated series and every
// control row.
PanelData smooth_panel(const PanelData& panel, int window);

struct SplitPanel {
  Eigen::MatrixXd controls_pre;   // (N-1) x t0
  Eigen::MatrixXd controls_post;  // (N-1) x (T-t0)
  Eigen::VectorXd treated_pre;    // t0
  Eigen::VectorXd treated_post;   // T-t0
};

// Column-wise partition at t0; concatenating the parts reproduces the panel
// bit for bit.
SplitPanel split(const PanelData& panel);

enum class NormScheme { kNone, kTreatedPreMax, kZScore };

NormScheme parse_norm_scheme(const std::string& name);
const char* to_string(NormScheme scheme);

// Enough state to invert the transform: x_norm = (x - shift) / scale.
struct NormalizationRecord {
  NormScheme scheme = NormScheme::kNone;
  double scale = 1.0;
  double shift = 0.0;
};

// treated_pre_max divides everything by max |treated pre value|; zscore
// centers and scales by the mean/std of the pooled pre-intervention values
// of all units. Both use a single panel-wide transform.
std::pair<PanelData, NormalizationRecord> normalize(const PanelData& panel,
                                                    NormScheme scheme);

PanelData denormalize(const PanelData& panel,
                      const NormalizationRecord& record);

Eigen::VectorXd denormalize_series(const Eigen::VectorXd& series,
                                   const NormalizationRecord& record);

// ISO-8601 calendar date (YYYY-MM-DD) <-> days since 1970-01-01.
long parse_iso_date(const std::string& text);
std::string format_iso_date(long day);

}  // namespace eopr
