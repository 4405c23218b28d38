#include "eopr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace eopr {

namespace {

using nlohmann::json;

constexpr const char* kSchemaEstimate = "eopr.estimate/1";
constexpr const char* kSchemaBand = "eopr.band/1";
constexpr const char* kSchemaEffects = "eopr.effects/1";
constexpr const char* kSchemaScores = "eopr.scores/1";
constexpr const char* kSchemaPlaceboSummary = "eopr.placebo.summary/1";
constexpr const char* kSchemaPlaceboGaps = "eopr.placebo.gaps/1";
constexpr const char* kSchemaAblation = "eopr.ablation/1";
constexpr const char* kSchemaSweep = "eopr.sweep/1";
constexpr const char* kSchemaPanelWide = "eopr.panel.wide/1";
constexpr const char* kSchemaPanelLong = "eopr.panel.long/1";
constexpr const char* kSchemaSimMeta = "eopr.sim.metadata/1";

std::string time_label(const PanelData& panel, int t) {
  return panel.time_labels.empty() ? std::to_string(t + 1)
                                   : panel.time_labels[t];
}

// Rows are emitted either as csv cells or as a json object per line; empty
// csv cells become nulls.
class ReportWriter {
 public:
  ReportWriter(OutFormat format, const std::string& schema,
               std::vector<std::string> columns,
               const std::string& note = "")
      : format_(format), columns_(std::move(columns)) {
    if (format_ == OutFormat::kCsv) {
      body_ << "# schema: " << schema << "\n";
      if (!note.empty()) body_ << "# " << note << "\n";
      for (std::size_t i = 0; i < columns_.size(); ++i)
        body_ << (i ? "," : "") << columns_[i];
      body_ << "\n";
    } else {
      json header{{"schema", schema}};
      if (!note.empty()) header["note"] = note;
      body_ << header.dump() << "\n";
    }
  }

  void row(const std::vector<json>& cells) {
    if (format_ == OutFormat::kCsv) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) body_ << ",";
        const json& cell = cells[i];
        if (cell.is_null()) continue;
        if (cell.is_string())
          body_ << cell.get<std::string>();
        else if (cell.is_number_float())
          body_ << fmt_double(cell.get<double>());
        else
          body_ << cell.dump();
      }
      body_ << "\n";
    } else {
      json obj;
      for (std::size_t i = 0; i < cells.size(); ++i)
        obj[columns_[i]] = cells[i];
      body_ << obj.dump() << "\n";
    }
  }

  void save(const std::string& path) const { atomic_write(path, body_.str()); }

 private:
  OutFormat format_;
  std::vector<std::string> columns_;
  std::ostringstream body_;
};

}  // namespace

OutFormat parse_out_format(const std::string& name) {
  if (name == "csv") return OutFormat::kCsv;
  if (name == "json-lines" || name == "jsonl") return OutFormat::kJsonLines;
  fail(errc::invalid_argument, "unknown output format '" + name + "'");
}

std::string fmt_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(errc::io_error, "cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) fail(errc::io_error, "failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    fail(errc::io_error, "cannot rename '" + tmp + "' to '" + path + "'");
}

void write_wide_panel(const std::string& path, const PanelData& panel) {
  PanelData labeled = panel;
  ensure_labels(labeled);
  std::ostringstream body;
  body << "# schema: " << kSchemaPanelWide << "\n";
  body << "# t0: " << labeled.t0 << "\n";
  body << "unit";
  for (const auto& t : labeled.time_labels) body << "," << t;
  body << "\n";
  body << labeled.unit_labels[0];
  for (int t = 0; t < labeled.n_periods(); ++t)
    body << "," << fmt_double(labeled.treated[t]);
  body << "\n";
  for (int i = 0; i < labeled.controls.rows(); ++i) {
    body << labeled.unit_labels[i + 1];
    for (int t = 0; t < labeled.n_periods(); ++t)
      body << "," << fmt_double(labeled.controls(i, t));
    body << "\n";
  }
  atomic_write(path, body.str());
}

void write_long_panel(const std::string& path, const PanelData& panel) {
  PanelData labeled = panel;
  ensure_labels(labeled);
  std::ostringstream body;
  body << "# schema: " << kSchemaPanelLong << "\n";
  body << "# t0: " << labeled.t0 << "\n";
  body << "unit,time,value\n";
  for (int t = 0; t < labeled.n_periods(); ++t)
    body << labeled.unit_labels[0] << "," << labeled.time_labels[t] << ","
         << fmt_double(labeled.treated[t]) << "\n";
  for (int i = 0; i < labeled.controls.rows(); ++i)
    for (int t = 0; t < labeled.n_periods(); ++t)
      body << labeled.unit_labels[i + 1] << "," << labeled.time_labels[t]
           << "," << fmt_double(labeled.controls(i, t)) << "\n";
  atomic_write(path, body.str());
}

void write_estimate_file(const std::string& path, OutFormat format,
                         const PanelData& panel, const MethodSeries& series) {
  ReportWriter writer(format, kSchemaEstimate,
                      {"time", "observed", "method", "estimate", "band_lower",
                       "band_upper"});
  for (int t = 0; t < panel.n_periods(); ++t) {
    json lower, upper;
    if (series.band && series.band->has_band()) {
      lower = series.band->band_lower[t];
      upper = series.band->band_upper[t];
    }
    writer.row({time_label(panel, t), panel.treated[t], series.method,
                series.estimate[t], lower, upper});
  }
  writer.save(path);
}

void write_band_file(const std::string& path, OutFormat format,
                     const PanelData& panel, const EoprEstimate& est) {
  ReportWriter writer(format, kSchemaBand,
                      {"time", "band_lower", "band_upper", "half_width"},
                      est.band_clamped
                          ? "band_clamped: the treated unit sits outside the "
                            "learned signal class; intervals are degenerate"
                          : "");
  for (int t = 0; t < panel.n_periods(); ++t)
    writer.row({time_label(panel, t), est.band_lower[t], est.band_upper[t],
                est.half_widths[t]});
  writer.save(path);
}

void write_effects_file(const std::string& path, OutFormat format,
                        const PanelData& panel,
                        const std::vector<MethodEffects>& effects) {
  ReportWriter writer(format, kSchemaEffects, {"time", "method", "tau"},
                      "tau = counterfactual estimate minus observed outcome");
  for (const auto& m : effects)
    for (int k = 0; k < m.tau.size(); ++k)
      writer.row({time_label(panel, panel.t0 + k), m.method, m.tau[k]});
  writer.save(path);
}

void write_scores_file(const std::string& path, OutFormat format,
                       const std::vector<ScoreRow>& rows) {
  ReportWriter writer(format, kSchemaScores,
                      {"method", "pre_rmse", "post_rmse", "pre_rmse_fit",
                       "post_rmse_fit"});
  for (const auto& row : rows)
    writer.row({row.method, row.pre_rmse, row.post_rmse, row.pre_rmse_fit,
                row.post_rmse_fit});
  writer.save(path);
}

void write_placebo_summary(const std::string& path, OutFormat format,
                           const PlaceboReport& report) {
  ReportWriter writer(format, kSchemaPlaceboSummary,
                      {"unit", "is_treated", "ok", "post_gap_rmse", "rank",
                       "error"});
  const PlaceboEntry& treated = report.entries[0];
  for (const auto& entry : report.entries) {
    json rank, gap_rmse, error;
    if (entry.ok) {
      gap_rmse = entry.post_gap_rmse;
      int r = 1;
      for (const auto& other : report.entries)
        if (other.ok && &other != &entry &&
            other.post_gap_rmse > entry.post_gap_rmse)
          ++r;
      if (treated.ok) rank = r;
    } else {
      error = entry.error;
    }
    writer.row({entry.label, entry.is_treated ? 1 : 0, entry.ok ? 1 : 0,
                gap_rmse, rank, error});
  }
  writer.save(path);
}

void write_placebo_gaps(const std::string& path, OutFormat format,
                        const PlaceboReport& report,
                        const std::vector<std::string>& time_labels) {
  ReportWriter writer(format, kSchemaPlaceboGaps, {"unit", "time", "gap"});
  for (const auto& entry : report.entries) {
    if (!entry.ok) continue;
    for (int t = 0; t < entry.gap.size(); ++t)
      writer.row({entry.label,
                  static_cast<std::size_t>(t) < time_labels.size()
                      ? json(time_labels[t])
                      : json(std::to_string(t + 1)),
                  entry.gap[t]});
  }
  writer.save(path);
}

void write_ablation_file(const std::string& path, OutFormat format,
                         const std::vector<AblationRow>& rows) {
  ReportWriter writer(format, kSchemaAblation,
                      {"lambda", "ok", "pre_rmse", "post_rmse", "error"});
  for (const auto& row : rows) {
    json pre, post, error;
    if (row.ok) {
      pre = row.pre_rmse;
      post = row.post_rmse;
    } else {
      error = row.error;
    }
    writer.row({row.lambda, row.ok ? 1 : 0, pre, post, error});
  }
  writer.save(path);
}

void write_sweep_file(const std::string& path, OutFormat format,
                      const std::vector<SweepRow>& rows) {
  ReportWriter writer(
      format, kSchemaSweep,
      {"n_units", "t_total", "t0", "noise_sigma", "pool_size", "weight_mode",
       "base_seed", "method", "repeats", "failures", "pre_mean", "pre_std",
       "pre_median", "post_mean", "post_std", "post_median"});
  for (const auto& row : rows)
    writer.row({row.config.n_units, row.config.t_total, row.config.t0,
                row.config.noise_sigma, row.config.pool_size,
                to_string(row.config.weight_mode), row.config.seed,
                row.method, row.repeats, row.failures, row.pre_mean,
                row.pre_std, row.pre_median, row.post_mean, row.post_std,
                row.post_median});
  writer.save(path);
}

void write_sim_metadata(const std::string& path,
                        const SimulationConfig& config, const SimOutput& out) {
  json meta;
  meta["schema"] = kSchemaSimMeta;
  meta["seed"] = config.seed;
  meta["n_units"] = config.n_units;
  meta["t_total"] = config.t_total;
  meta["t0"] = config.t0;
  meta["pool_size"] = config.pool_size;
  meta["noise_sigma"] = config.noise_sigma;
  meta["treated_noise"] = config.treated_noise;
  meta["weight_mode"] = out.weight_mode;
  meta["theta"] = std::vector<double>(out.theta.begin(), out.theta.end());
  meta["rho"] = std::vector<double>(out.rho.begin(), out.rho.end());
  meta["treated_weights"] = std::vector<double>(out.treated_weights.begin(),
                                                out.treated_weights.end());
  atomic_write(path, meta.dump(2) + "\n");
}

}  // namespace eopr
