#include "craft/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "craft/csv.hpp"
#include "craft/errors.hpp"
#include "craft/io.hpp"

namespace craft {

namespace {

/// Midranks (1-based) of `values`, plus the tie term sum(t^3 - t) over tie blocks.
std::pair<std::vector<double>, double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  return {std::move(ranks), ties};
}

}  // namespace

KWResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  const std::size_t k = groups.size();
  if (k < 2) throw DomainError("Kruskal-Wallis needs at least two groups");
  KWResult out;
  std::vector<double> pooled;
  for (std::size_t g = 0; g < k; ++g) {
    if (groups[g].empty()) throw DomainError(fmt::format("Kruskal-Wallis group {} is empty", g));
    out.group_sizes.push_back(groups[g].size());
    pooled.insert(pooled.end(), groups[g].begin(), groups[g].end());
  }
  const std::size_t n = pooled.size();
  if (n < k + 1) throw DomainError(fmt::format("Kruskal-Wallis needs n >= k + 1 (n = {}, k = {})", n, k));
  out.n = n;
  out.df = static_cast<int>(k) - 1;

  const auto [ranks, ties] = midranks(pooled);
  const double nd = static_cast<double>(n);
  const double correction = 1.0 - ties / (nd * nd * nd - nd);
  if (correction <= 0.0) {
    out.H = 0.0;
    out.p = 1.0;
    out.epsilon_squared = 0.0;
    return out;
  }

  double sum = 0.0;
  std::size_t offset = 0;
  for (std::size_t g = 0; g < k; ++g) {
    double r = 0.0;
    for (std::size_t i = 0; i < groups[g].size(); ++i) r += ranks[offset + i];
    offset += groups[g].size();
    sum += r * r / static_cast<double>(groups[g].size());
  }
  const double h = (12.0 / (nd * (nd + 1.0)) * sum - 3.0 * (nd + 1.0)) / correction;
  out.H = std::max(0.0, h);
  out.p = out.H == 0.0 ? 1.0 : boost::math::gamma_q(out.df / 2.0, out.H / 2.0);
  out.epsilon_squared = out.H / (nd - 1.0);
  return out;
}

std::string_view to_string(ShiftDirection d) {
  switch (d) {
    case ShiftDirection::Increase: return "increase";
    case ShiftDirection::Decrease: return "decrease";
    case ShiftDirection::None: return "none";
  }
  return "none";
}

WilcoxonResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs) {
  WilcoxonResult out;
  std::vector<double> diffs;
  for (const auto& [before, after] : pairs) {
    const double d = after - before;
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  out.n_effective = n;
  if (n == 0) return out;

  std::vector<double> magnitudes(n);
  for (std::size_t i = 0; i < n; ++i) magnitudes[i] = std::fabs(diffs[i]);
  const auto [ranks, ties] = midranks(magnitudes);
  for (std::size_t i = 0; i < n; ++i) (diffs[i] > 0 ? out.W : out.W_minus) += ranks[i];

  const double nd = static_cast<double>(n);
  const double expected = nd * (nd + 1.0) / 4.0;
  if (out.W > expected) {
    out.direction = ShiftDirection::Increase;
  } else if (out.W < expected) {
    out.direction = ShiftDirection::Decrease;
  }

  if (n <= kWilcoxonExactMax) {
    // Midranks are multiples of 1/2, so doubled ranks make the comparison exact.
    std::vector<long long> twice(n);
    long long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      twice[i] = std::llround(2.0 * ranks[i]);
      total += twice[i];
    }
    const long long observed = std::llround(2.0 * out.W);
    // |2W - total/2| compared as |4W - total| to stay in integers.
    const long long obs_dev = std::llabs(2 * observed - total);
    std::size_t extreme = 0;
    const std::size_t count = std::size_t{1} << n;
    for (std::size_t mask = 0; mask < count; ++mask) {
      long long w = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::size_t{1} << i)) w += twice[i];
      }
      if (std::llabs(2 * w - total) >= obs_dev) ++extreme;
    }
    out.exact = true;
    out.p = std::min(1.0, static_cast<double>(extreme) / static_cast<double>(count));
    return out;
  }

  const double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - ties / 48.0;
  const double deviation = out.W - expected;
  const double corrected = std::max(0.0, std::fabs(deviation) - 0.5);
  out.z = variance > 0.0 ? std::copysign(corrected / std::sqrt(variance), deviation) : 0.0;
  out.p = variance > 0.0 ? std::min(1.0, std::erfc(std::fabs(out.z) / std::sqrt(2.0))) : 1.0;
  return out;
}

// ---------------------------------------------------------------------------

const KWEntry* StatSuite::find_kw(Culture culture, std::string_view metric) const {
  for (const auto& e : kruskal_wallis) {
    if (e.culture == culture && e.metric == metric) return &e;
  }
  return nullptr;
}

const WilcoxonEntry* StatSuite::find_wilcoxon(const std::string& model, Culture culture,
                                              std::string_view metric) const {
  for (const auto& e : wilcoxon) {
    if (e.model == model && e.culture == culture && e.metric == metric) return &e;
  }
  return nullptr;
}

namespace {

/// EN/TL value pairs for one (model, culture) matched on (question_id, run_id);
/// group-level metrics match on question_id alone.
std::vector<std::pair<double, double>> paired_values(const ScoreSet& scores, const std::string& model, Culture culture,
                                                     std::string_view metric) {
  std::map<std::pair<int, int>, std::pair<std::optional<double>, std::optional<double>>> slots;
  auto place = [&](int q, int run, QuestionLanguage lang, double v) {
    auto& slot = slots[{q, run}];
    (lang == QuestionLanguage::EN ? slot.first : slot.second) = v;
  };
  if (metric == metric::kCulturalFluency || metric == metric::kDeviation) {
    const bool cf = metric == metric::kCulturalFluency;
    for (const auto& s : scores.instances) {
      if (s.key.model == model && s.key.culture == culture) {
        place(s.key.question_id, s.key.run_id, s.key.language, cf ? s.cultural_fluency : s.deviation);
      }
    }
  } else {
    const bool ac = metric == metric::kAnswerConsistency;
    for (const auto& g : scores.groups) {
      if (g.key.model == model && g.key.culture == culture) {
        place(g.key.question_id, 0, g.key.language, ac ? g.answer_consistency : g.explanation_consistency);
      }
    }
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [_, slot] : slots) {
    if (slot.first && slot.second) out.emplace_back(*slot.first, *slot.second);
  }
  return out;
}

}  // namespace

StatSuite run_stat_suite(const ScoreSet& scores, const StatPlan& plan) {
  StatSuite suite;
  for (const auto& m : plan.kw_metrics) {
    if (!metric::is_known(m)) throw ConfigError("unknown metric '" + m + "' in stat plan");
  }
  for (const auto& m : plan.wilcoxon_metrics) {
    if (!metric::is_known(m)) throw ConfigError("unknown metric '" + m + "' in stat plan");
  }

  for (Culture culture : scores.cultures()) {
    const auto models = scores.models(culture);
    for (const auto& m : plan.kw_metrics) {
      std::optional<QuestionLanguage> lang;
      if (plan.kw_language == KwLanguage::EN) lang = QuestionLanguage::EN;
      if (plan.kw_language == KwLanguage::TL) lang = QuestionLanguage::TL;
      std::vector<std::vector<double>> groups;
      std::vector<std::string> names;
      for (const auto& model : models) {
        auto v = scores.values(m, model, culture, lang);
        if (v.empty()) {
          suite.notes.push_back(fmt::format("KW {} {}: no {} values for {}; model left out", to_string(culture), m,
                                            m, model));
          continue;
        }
        groups.push_back(std::move(v));
        names.push_back(model);
      }
      if (groups.size() < 2) {
        suite.notes.push_back(
            fmt::format("KW {} {}: skipped, needs at least two models with scores", to_string(culture), m));
        continue;
      }
      try {
        suite.kruskal_wallis.push_back({culture, m, names, kruskal_wallis(groups)});
      } catch (const DomainError& e) {
        suite.notes.push_back(fmt::format("KW {} {}: skipped, {}", to_string(culture), m, e.what()));
      }
    }

    for (const auto& model : models) {
      for (const auto& m : plan.wilcoxon_metrics) {
        if (m == metric::kLinguisticAdaptation) {
          suite.notes.push_back(fmt::format("Wilcoxon {} {} {}: skipped, metric has no EN/TL split", model,
                                            to_string(culture), m));
          continue;
        }
        const auto pairs = paired_values(scores, model, culture, m);
        if (pairs.empty()) {
          suite.notes.push_back(
              fmt::format("Wilcoxon {} {} {}: skipped, no EN/TL pairs", model, to_string(culture), m));
          continue;
        }
        suite.wilcoxon.push_back({model, culture, m, wilcoxon_signed_rank(pairs)});
      }
    }
  }
  return suite;
}

std::string stats_to_csv(const StatSuite& suite) {
  std::string out = csv::format_row(
      {"test", "culture", "model", "metric", "statistic", "df_or_n", "p", "effect_size", "direction"});
  for (const auto& e : suite.kruskal_wallis) {
    std::string models;
    for (const auto& m : e.models) models += (models.empty() ? "" : ";") + m;
    out += csv::format_row({"kruskal_wallis", std::string(to_string(e.culture)), models, e.metric,
                            io::format_double(e.result.H), std::to_string(e.result.df),
                            io::format_double(e.result.p), io::format_double(e.result.epsilon_squared), ""});
  }
  for (const auto& e : suite.wilcoxon) {
    out += csv::format_row({"wilcoxon_signed_rank", std::string(to_string(e.culture)), e.model, e.metric,
                            io::format_double(e.result.W), std::to_string(e.result.n_effective),
                            io::format_double(e.result.p), "", std::string(to_string(e.result.direction))});
  }
  return out;
}

}  // namespace craft
