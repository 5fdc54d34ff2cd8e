#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "craft/corpus.hpp"
#include "craft/metrics.hpp"
#include "craft/stats.hpp"

namespace craft {

/// Whether a rise in a metric is good news.
enum class Polarity { HigherBetter, LowerBetter, Neutral };

Polarity polarity(std::string_view metric);

/// "↑" when tl > en, "↓" when tl < en, "" when equal or either is NaN.
std::string_view shift_arrow(double en_mean, double tl_mean);

/// "improvement" / "decline" / "unchanged" under the metric's polarity; "n/a" for neutral metrics.
std::string_view shift_verdict(std::string_view metric, double en_mean, double tl_mean);

/// "0.330 / 0.282 ↓"; missing means render as "—".
std::string format_shift_cell(double en_mean, double tl_mean);

/// "p < 0.001" below 0.001, else "p = 0.141".
std::string format_p(double p);

/// Markdown table for one culture: per metric and model the EN / TL shift or pooled mean±sd,
/// the best model in bold, and the Kruskal-Wallis summary per row; followed by the
/// per-polarity verdicts and the Wilcoxon table.
std::string render_culture_table(Culture culture, const std::vector<AggregateRow>& rows, const StatSuite& stats);

// ---------------------------------------------------------------------------

enum class AxisFlag { Normal, Degenerate, SingleModel };

std::string_view to_string(AxisFlag f);

struct RadarAxis {
  std::string metric;  // cultural_fluency | deviation | consistency | linguistic_adaptation
  double min = 0;
  double max = 0;
  AxisFlag flag = AxisFlag::Normal;
  std::map<std::string, double> raw;         // model -> aggregate value
  std::map<std::string, double> normalized;  // model -> value in [0, 1]
};

struct RadarPanel {
  Culture culture = Culture::AR;
  std::vector<std::string> models;
  std::vector<RadarAxis> axes;  // always four, in a fixed order
};

struct RadarData {
  std::vector<RadarPanel> panels;
};

inline constexpr std::string_view kRadarAxes[] = {"cultural_fluency", "deviation", "consistency",
                                                  "linguistic_adaptation"};

/// Axis values: TL means for CF and deviation, the mean of pooled answer and explanation
/// consistency, pooled adaptation. Min-max normalized per axis across models; equal values
/// map to 0.5 (Degenerate); a lone model keeps its raw value (SingleModel).
RadarData radar_data(const std::vector<AggregateRow>& aggregates);

std::string radar_to_json(const RadarData& radar);
std::string radar_to_svg(const RadarData& radar);

// ---------------------------------------------------------------------------

struct StageEntry {
  std::string stage;
  std::string finished_at;  // UTC ISO-8601
  std::map<std::string, std::string> details;
};

struct Manifest {
  std::string tool_version;
  std::string config_digest;
  std::string corpus_digest;
  std::string inventory_digest;
  std::string lexicon_digest;
  std::string provider_model_id;
  std::uint64_t bootstrap_seed = 0;
  int bootstrap_resamples = 0;
  double bootstrap_level = 0;
  double lambda = 0;
  int run_count = 0;
  std::vector<StageEntry> stages;

  /// Replaces an existing entry for the same stage.
  void record(StageEntry entry);
  std::string to_json() const;
  static Manifest from_json(std::string_view text);
};

struct ReportBundle {
  std::vector<AggregateRow> aggregates;
  StatSuite stats;
  RadarData radar;
  Manifest manifest;
};

enum class ExportFormat { StructuredRecords, DelimitedTables, Markdown, RadarSvg };

/// Writes under `reports_dir`: structured records -> radar.json and summary.json;
/// delimited tables -> metrics.csv and stats.csv; markdown -> <culture>.md per culture;
/// radar-svg -> radar.svg. Returns the paths written.
std::vector<std::string> export_bundle(const ReportBundle& bundle, ExportFormat format, const std::string& reports_dir);

/// All four formats plus manifest.json.
std::vector<std::string> export_all(const ReportBundle& bundle, const std::string& reports_dir);

}  // namespace craft
