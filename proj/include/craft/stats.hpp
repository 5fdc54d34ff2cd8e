#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "craft/corpus.hpp"
#include "craft/metrics.hpp"

namespace craft {

struct KWResult {
  double H = 0;  // tie-corrected
  int df = 0;
  double p = 1;
  double epsilon_squared = 0;  // H / (n - 1)
  std::vector<std::size_t> group_sizes;
  std::size_t n = 0;
};

/// Kruskal-Wallis H with midranks and the standard tie correction; p from the
/// chi-square upper tail with k - 1 degrees of freedom.
/// Throws DomainError for k < 2, an empty group, or n < k + 1.
/// When every value is identical, H = 0 and p = 1.
KWResult kruskal_wallis(std::span<const std::vector<double>> groups);

enum class ShiftDirection { Increase, Decrease, None };

std::string_view to_string(ShiftDirection d);

struct WilcoxonResult {
  double W = 0;        // rank sum of positive differences (after - before > 0)
  double W_minus = 0;  // rank sum of negative differences
  std::size_t n_effective = 0;
  double p = 1;  // two-sided
  double z = 0;  // continuity-corrected, signed; 0 for exact results
  bool exact = false;
  ShiftDirection direction = ShiftDirection::None;
};

inline constexpr std::size_t kWilcoxonExactMax = 12;

/// Wilcoxon signed-rank on after - before. Zero differences are dropped; |d| gets midranks.
/// n_eff <= 12: exact two-sided p by enumerating all sign assignments.
/// Otherwise: normal approximation with tie-corrected variance and continuity correction.
/// All-zero (or empty) input gives n_eff = 0, p = 1, direction None.
WilcoxonResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs);

// ---------------------------------------------------------------------------

/// Which observations the cross-model Kruskal-Wallis test pools.
enum class KwLanguage { Pooled, EN, TL };

struct StatPlan {
  std::vector<std::string> kw_metrics{metric::kAll, metric::kAll + 5};
  std::vector<std::string> wilcoxon_metrics{std::string(metric::kCulturalFluency), std::string(metric::kDeviation)};
  KwLanguage kw_language = KwLanguage::Pooled;
};

struct KWEntry {
  Culture culture = Culture::AR;
  std::string metric;
  std::vector<std::string> models;
  KWResult result;
};

struct WilcoxonEntry {
  std::string model;
  Culture culture = Culture::AR;
  std::string metric;
  WilcoxonResult result;
};

struct StatSuite {
  std::vector<KWEntry> kruskal_wallis;
  std::vector<WilcoxonEntry> wilcoxon;
  std::vector<std::string> notes;  // skipped cells

  const KWEntry* find_kw(Culture culture, std::string_view metric) const;
  const WilcoxonEntry* find_wilcoxon(const std::string& model, Culture culture, std::string_view metric) const;
};

/// One KW per (culture, metric) across that culture's models; one Wilcoxon per
/// (model, culture, metric) pairing EN and TL instance scores on (question_id, run_id).
/// Cells that cannot be tested are skipped with a note.
StatSuite run_stat_suite(const ScoreSet& scores, const StatPlan& plan = {});

/// Columns: test, culture, model, metric, statistic, df_or_n, p, effect_size, direction.
std::string stats_to_csv(const StatSuite& suite);

}  // namespace craft
