#include "eopr/panel.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace eopr {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, delimiter)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

// Non-comment, non-blank lines of a text file.
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

double parse_value(const std::string& cell, const std::string& context) {
  if (cell.empty()) fail(errc::missing_value, "empty value " + context);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    fail(errc::io_error, "cannot parse '" + cell + "' " + context);
  }
  if (pos != cell.size())
    fail(errc::io_error, "cannot parse '" + cell + "' " + context);
  if (!std::isfinite(v))
    fail(errc::missing_value, "non-finite value " + context);
  return v;
}

PanelData assemble_panel(const std::vector<std::string>& unit_order,
                         const std::vector<std::string>& time_order,
                         const std::vector<Eigen::VectorXd>& series,
                         const std::string& treated_label, int t0) {
  const int t_total = static_cast<int>(time_order.size());
  int treated_index = -1;
  for (std::size_t i = 0; i < unit_order.size(); ++i)
    if (unit_order[i] == treated_label) treated_index = static_cast<int>(i);
  if (treated_index < 0)
    fail(errc::unknown_treated, "no unit named '" + treated_label + "'");
  if (unit_order.size() < 2)
    fail(errc::invalid_argument, "need at least one control unit");
  if (t0 < 1 || t0 >= t_total)
    fail(errc::bad_t0, "t0=" + std::to_string(t0) + " outside [1, " +
                           std::to_string(t_total) + ")");

  PanelData panel;
  panel.t0 = t0;
  panel.time_labels = time_order;
  panel.treated = series[treated_index];
  panel.unit_labels.push_back(treated_label);
  panel.controls.resize(static_cast<int>(unit_order.size()) - 1, t_total);
  int row = 0;
  for (std::size_t i = 0; i < unit_order.size(); ++i) {
    if (static_cast<int>(i) == treated_index) continue;
    panel.controls.row(row++) = series[i].transpose();
    panel.unit_labels.push_back(unit_order[i]);
  }
  panel.validate();
  return panel;
}

PanelData load_wide(const std::string& path, const std::string& treated_label,
                    int t0, char delimiter) {
  auto lines = read_lines(path);
  if (lines.size() < 3) fail(errc::io_error, "'" + path + "' is too short");
  auto header = split_line(lines[0], delimiter);
  if (header.size() < 3)
    fail(errc::io_error, "wide header needs at least two time columns");
  std::vector<std::string> time_order(header.begin() + 1, header.end());
  const int t_total = static_cast<int>(time_order.size());

  std::vector<std::string> unit_order;
  std::vector<Eigen::VectorXd> series;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto cells = split_line(lines[r], delimiter);
    if (static_cast<int>(cells.size()) != t_total + 1) {
      if (static_cast<int>(cells.size()) < t_total + 1)
        fail(errc::missing_value,
             "unit '" + (cells.empty() ? "?" : cells[0]) + "' has " +
                 std::to_string(static_cast<int>(cells.size()) - 1) + " of " +
                 std::to_string(t_total) + " observations");
      fail(errc::io_error, "row " + std::to_string(r + 1) + " has " +
                               std::to_string(cells.size()) + " cells");
    }
    if (std::find(unit_order.begin(), unit_order.end(), cells[0]) !=
        unit_order.end())
      fail(errc::io_error, "duplicate unit '" + cells[0] + "'");
    Eigen::VectorXd values(t_total);
    for (int t = 0; t < t_total; ++t)
      values[t] = parse_value(
          cells[t + 1], "for unit '" + cells[0] + "' at " + time_order[t]);
    unit_order.push_back(cells[0]);
    series.push_back(std::move(values));
  }
  return assemble_panel(unit_order, time_order, series, treated_label, t0);
}

PanelData load_long(const std::string& path, const std::string& treated_label,
                    int t0, char delimiter) {
  auto lines = read_lines(path);
  if (lines.size() < 2) fail(errc::io_error, "'" + path + "' is too short");
  auto header = split_line(lines[0], delimiter);
  if (header.size() != 3 || lower(header[0]) != "unit" ||
      lower(header[1]) != "time" || lower(header[2]) != "value")
    fail(errc::io_error, "long header must be unit,time,value");

  std::vector<std::string> unit_order, time_order;
  std::unordered_map<std::string, int> unit_index, time_index;
  std::vector<std::vector<std::pair<int, double>>> observations;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto cells = split_line(lines[r], delimiter);
    if (cells.size() != 3)
      fail(errc::io_error, "row " + std::to_string(r + 1) + " has " +
                               std::to_string(cells.size()) + " cells");
    auto [uit, inserted_u] =
        unit_index.emplace(cells[0], static_cast<int>(unit_order.size()));
    if (inserted_u) {
      unit_order.push_back(cells[0]);
      observations.emplace_back();
    }
    auto [tit, inserted_t] =
        time_index.emplace(cells[1], static_cast<int>(time_order.size()));
    if (inserted_t) time_order.push_back(cells[1]);
    double v = parse_value(
        cells[2], "for unit '" + cells[0] + "' at " + cells[1]);
    observations[uit->second].emplace_back(tit->second, v);
  }

  const int t_total = static_cast<int>(time_order.size());
  std::vector<Eigen::VectorXd> series;
  for (std::size_t u = 0; u < unit_order.size(); ++u) {
    Eigen::VectorXd values = Eigen::VectorXd::Constant(
        t_total, std::numeric_limits<double>::quiet_NaN());
    for (auto& [t, v] : observations[u]) {
      if (!std::isnan(values[t]))
        fail(errc::io_error, "duplicate observation for unit '" +
                                 unit_order[u] + "' at " + time_order[t]);
      values[t] = v;
    }
    for (int t = 0; t < t_total; ++t)
      if (std::isnan(values[t]))
        fail(errc::missing_value, "unit '" + unit_order[u] +
                                      "' lacks an observation at " +
                                      time_order[t]);
    series.push_back(std::move(values));
  }
  return assemble_panel(unit_order, time_order, series, treated_label, t0);
}

}  // namespace

void PanelData::validate() const {
  const int t_total = n_periods();
  if (controls.rows() < 1)
    fail(errc::invalid_argument, "panel needs at least one control unit");
  if (treated.size() != t_total)
    fail(errc::invalid_argument,
         "treated length " + std::to_string(treated.size()) +
             " != control columns " + std::to_string(t_total));
  if (t0 < 1 || t0 >= t_total)
    fail(errc::bad_t0, "t0=" + std::to_string(t0) + " outside [1, " +
                           std::to_string(t_total) + ")");
  if (!controls.allFinite() || !treated.allFinite())
    fail(errc::non_finite, "panel contains NaN or Inf");
  if (!unit_labels.empty() &&
      static_cast<int>(unit_labels.size()) != n_units())
    fail(errc::invalid_argument, "unit_labels size mismatch");
  if (!time_labels.empty() &&
      static_cast<int>(time_labels.size()) != t_total)
    fail(errc::invalid_argument, "time_labels size mismatch");
}

void ensure_labels(PanelData& panel) {
  if (panel.unit_labels.empty()) {
    panel.unit_labels.push_back("treated");
    for (int i = 1; i < panel.n_units(); ++i)
      panel.unit_labels.push_back("control_" + std::to_string(i));
  }
  if (panel.time_labels.empty()) {
    for (int t = 1; t <= panel.n_periods(); ++t)
      panel.time_labels.push_back(std::to_string(t));
  }
}

Layout parse_layout(const std::string& name) {
  std::string n = lower(trim(name));
  if (n == "long") return Layout::kLong;
  if (n == "wide") return Layout::kWide;
  fail(errc::invalid_argument, "unknown layout '" + name + "'");
}

PanelData load_panel(const std::string& path, Layout layout,
                     const std::string& treated_label, int t0,
                     char delimiter) {
  return layout == Layout::kWide
             ? load_wide(path, treated_label, t0, delimiter)
             : load_long(path, treated_label, t0, delimiter);
}

void AlignmentSpec::validate() const {
  if (units.size() < 2)
    fail(errc::invalid_argument, "alignment needs at least two units");
  for (const auto& unit : units) {
    if (unit.series.empty())
      fail(errc::invalid_argument, "unit '" + unit.label + "' has no data");
    long lo = unit.series.begin()->first;
    long hi = unit.series.rbegin()->first;
    if (unit.intervention_day < lo || unit.intervention_day > hi)
      fail(errc::invalid_argument,
           "unit '" + unit.label +
               "' intervention date outside its observed range");
  }
}

AlignmentSpec load_alignment_spec(const std::string& series_path,
                                  const std::string& dates_path,
                                  const std::string& treated_label,
                                  char delimiter) {
  AlignmentSpec spec;
  spec.treated_label = treated_label;

  auto lines = read_lines(series_path);
  if (lines.size() < 2)
    fail(errc::io_error, "'" + series_path + "' is too short");
  auto header = split_line(lines[0], delimiter);
  if (header.size() != 3 || lower(header[0]) != "unit" ||
      lower(header[1]) != "time" || lower(header[2]) != "value")
    fail(errc::io_error, "series header must be unit,time,value");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto cells = split_line(lines[r], delimiter);
    if (cells.size() != 3)
      fail(errc::io_error, "series row " + std::to_string(r + 1) +
                               " has " + std::to_string(cells.size()) +
                               " cells");
    auto [it, inserted] = index.emplace(cells[0], spec.units.size());
    if (inserted) {
      spec.units.emplace_back();
      spec.units.back().label = cells[0];
    }
    long day = parse_iso_date(cells[1]);
    double v =
        parse_value(cells[2], "for unit '" + cells[0] + "' at " + cells[1]);
    if (!spec.units[it->second].series.emplace(day, v).second)
      fail(errc::io_error, "duplicate observation for unit '" + cells[0] +
                               "' at " + cells[1]);
  }

  auto date_lines = read_lines(dates_path);
  if (date_lines.size() < 2)
    fail(errc::io_error, "'" + dates_path + "' is too short");
  auto date_header = split_line(date_lines[0], delimiter);
  if (date_header.size() != 2 || lower(date_header[0]) != "unit" ||
      lower(date_header[1]) != "intervention_date")
    fail(errc::io_error, "dates header must be unit,intervention_date");
  std::unordered_map<std::string, long> dates;
  for (std::size_t r = 1; r < date_lines.size(); ++r) {
    auto cells = split_line(date_lines[r], delimiter);
    if (cells.size() != 2)
      fail(errc::io_error, "dates row " + std::to_string(r + 1) +
                               " has " + std::to_string(cells.size()) +
                               " cells");
    dates[cells[0]] = parse_iso_date(cells[1]);
  }
  for (auto& unit : spec.units) {
    auto it = dates.find(unit.label);
    if (it == dates.end())
      fail(errc::missing_value,
           "no intervention date for unit '" + unit.label + "'");
    unit.intervention_day = it->second;
  }
  spec.validate();
  return spec;
}

PanelData align_by_intervention(const AlignmentSpec& spec,
                                AlignmentWindow window) {
  spec.validate();
  if (window.pre_days < 1 || window.post_days < 1)
    fail(errc::invalid_argument, "alignment window must be at least (1, 1)");

  const int t_total = window.pre_days + window.post_days;
  std::vector<std::string> unit_order;
  std::vector<Eigen::VectorXd> series;
  for (const auto& unit : spec.units) {
    Eigen::VectorXd values(t_total);
    for (int k = 0; k < t_total; ++k) {
      long day = unit.intervention_day + (k - window.pre_days);
      auto it = unit.series.find(day);
      if (it == unit.series.end())
        fail(errc::insufficient_history,
             "unit '" + unit.label + "' has no observation at day offset " +
                 std::to_string(k - window.pre_days) +
                 " from its intervention date");
      values[k] = it->second;
    }
    unit_order.push_back(unit.label);
    series.push_back(std::move(values));
  }

  std::vector<std::string> time_order;
  for (int k = 0; k < t_total; ++k)
    time_order.push_back(std::to_string(k - window.pre_days));
  return assemble_panel(unit_order, time_order, series, spec.treated_label,
                        window.pre_days);
}

Eigen::VectorXd moving_average(const Eigen::VectorXd& series, int window) {
  if (window < 1) fail(errc::invalid_argument, "window must be >= 1");
  const int n = static_cast<int>(series.size());
  Eigen::VectorXd out(n);
  for (int t = 0; t < n; ++t) {
    int lo = std::max(0, t - window + 1);
    int count = t - lo + 1;
    // Mean of deviations from the first element; exact for constant runs.
    double base = series[lo];
    double dev = 0.0;
    for (int i = lo; i <= t; ++i) dev += series[i] - base;
    out[t] = base + dev / count;
  }
  return out;
}

PanelData smooth_panel(const PanelData& panel, int window) {
  PanelData out = panel;
  out.treated = moving_average(panel.treated, window);
  for (int i = 0; i < panel.controls.rows(); ++i)
    out.controls.row(i) =
        moving_average(panel.controls.row(i).transpose(), window).transpose();
  return out;
}

SplitPanel split(const PanelData& panel) {
  panel.validate();
  const int t_total = panel.n_periods();
  SplitPanel parts;
  parts.controls_pre = panel.controls.leftCols(panel.t0);
  parts.controls_post = panel.controls.rightCols(t_total - panel.t0);
  parts.treated_pre = panel.treated.head(panel.t0);
  parts.treated_post = panel.treated.tail(t_total - panel.t0);
  return parts;
}

NormScheme parse_norm_scheme(const std::string& name) {
  std::string n = lower(trim(name));
  if (n == "none") return NormScheme::kNone;
  if (n == "treated_pre_max") return NormScheme::kTreatedPreMax;
  if (n == "zscore") return NormScheme::kZScore;
  fail(errc::invalid_argument, "unknown normalization scheme '" + name + "'");
}

const char* to_string(NormScheme scheme) {
  switch (scheme) {
    case NormScheme::kNone: return "none";
    case NormScheme::kTreatedPreMax: return "treated_pre_max";
    case NormScheme::kZScore: return "zscore";
  }
  return "?";
}

std::pair<PanelData, NormalizationRecord> normalize(const PanelData& panel,
                                                    NormScheme scheme) {
  panel.validate();
  NormalizationRecord record;
  record.scheme = scheme;
  if (scheme == NormScheme::kTreatedPreMax) {
    record.scale = panel.treated.head(panel.t0).cwiseAbs().maxCoeff();
    if (record.scale == 0.0)
      fail(errc::degenerate_scale, "treated pre-period is all zero");
  } else if (scheme == NormScheme::kZScore) {
    // Pooled over the pre-intervention values of every unit.
    const int n_units = panel.n_units();
    const double count = static_cast<double>(n_units) * panel.t0;
    double mean = (panel.controls.leftCols(panel.t0).sum() +
                   panel.treated.head(panel.t0).sum()) /
                  count;
    double ss =
        (panel.controls.leftCols(panel.t0).array() - mean).square().sum() +
        (panel.treated.head(panel.t0).array() - mean).square().sum();
    double sd = std::sqrt(ss / count);
    if (sd == 0.0)
      fail(errc::degenerate_scale, "pre-period values are constant");
    record.shift = mean;
    record.scale = sd;
  }

  PanelData out = panel;
  if (scheme != NormScheme::kNone) {
    out.controls = (panel.controls.array() - record.shift) / record.scale;
    out.treated = (panel.treated.array() - record.shift) / record.scale;
  }
  return {std::move(out), record};
}

PanelData denormalize(const PanelData& panel,
                      const NormalizationRecord& record) {
  PanelData out = panel;
  if (record.scheme != NormScheme::kNone) {
    out.controls = panel.controls.array() * record.scale + record.shift;
    out.treated = panel.treated.array() * record.scale + record.shift;
  }
  return out;
}

Eigen::VectorXd denormalize_series(const Eigen::VectorXd& series,
                                   const NormalizationRecord& record) {
  if (record.scheme == NormScheme::kNone) return series;
  return series.array() * record.scale + record.shift;
}

long parse_iso_date(const std::string& text) {
  int y = 0, m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3)
    fail(errc::io_error, "expected YYYY-MM-DD, got '" + text + "'");
  std::chrono::year_month_day ymd{std::chrono::year{y},
                                  std::chrono::month{unsigned(m)},
                                  std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) fail(errc::io_error, "invalid date '" + text + "'");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(long day) {
  std::chrono::year_month_day ymd{
      std::chrono::sys_days{std::chrono::days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

}  // namespace eopr
