#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "craft/corpus.hpp"
#include "craft/culture.hpp"
#include "craft/depth.hpp"
#include "craft/embedding.hpp"

namespace craft {

inline constexpr double kDefaultLambda = 0.7;

namespace metric {
inline constexpr std::string_view kCulturalFluency = "cultural_fluency";
inline constexpr std::string_view kDeviation = "deviation";
inline constexpr std::string_view kAnswerConsistency = "answer_consistency";
inline constexpr std::string_view kExplanationConsistency = "explanation_consistency";
inline constexpr std::string_view kLinguisticAdaptation = "linguistic_adaptation";

inline constexpr std::string_view kAll[] = {kCulturalFluency, kDeviation, kAnswerConsistency,
                                            kExplanationConsistency, kLinguisticAdaptation};

bool is_known(std::string_view name);
/// "Cultural Fluency", "Deviation", ...
std::string_view display_name(std::string_view name);
}  // namespace metric

// ---------------------------------------------------------------------------
// Per-item formulas

/// lambda * cos(e, c) + (1 - lambda) * depth. Throws DomainError for lambda outside [0, 1].
double cultural_fluency(const EmbeddingVector& explanation, const CulturalVector& culture, double depth,
                        double lambda = kDefaultLambda);
/// Same blend from an already computed alignment cos(e, c).
double cultural_fluency(double alignment, double depth, double lambda = kDefaultLambda);

/// 1 - cos(e, q).
double deviation(const EmbeddingVector& explanation, const EmbeddingVector& question);

/// 1 - (U - 1) / (R - 1), U = distinct answers. Throws DomainError unless answers.size() == R >= 2.
double answer_consistency(std::span<const std::string> answers, int run_count);

/// Mean cosine over all unordered pairs. Throws DomainError for fewer than two vectors.
double explanation_consistency(std::span<const EmbeddingVector> explanations);

/// 1 - cos(e_EN, e_TL).
double linguistic_adaptation(const EmbeddingVector& en, const EmbeddingVector& tl);

// ---------------------------------------------------------------------------
// Corpus scoring

struct InstanceScore {
  RecordKey key;
  double cultural_fluency = 0;
  double deviation = 0;
  double depth = 0;
  double alignment = 0;  // cos(e, c)
  TextFeatures features;
  bool degenerate = false;  // explanation embedding was the zero vector
};

struct GroupScore {
  GroupKey key;
  double answer_consistency = 0;
  double explanation_consistency = 0;
  int unique_answers = 0;
  bool degenerate = false;  // some run's explanation embedding was the zero vector
};

struct PairScore {
  PairKey key;
  double linguistic_adaptation = 0;
  bool degenerate = false;
};

struct ScoreSet {
  std::vector<InstanceScore> instances;  // sorted by RecordKey
  std::vector<GroupScore> groups;        // sorted by GroupKey
  std::vector<PairScore> pairs;          // sorted by PairKey
  std::size_t skipped_incomplete_groups = 0;
  std::size_t skipped_records = 0;

  /// Values of `metric` for (model, culture), optionally restricted to one question language
  /// (ignored for linguistic adaptation), in key order.
  std::vector<double> values(std::string_view metric, const std::string& model, Culture culture,
                             std::optional<QuestionLanguage> language = std::nullopt) const;
  std::vector<std::string> models(Culture culture) const;
  std::vector<Culture> cultures() const;
};

struct ScoringConfig {
  double lambda = kDefaultLambda;
  unsigned jobs = 1;
};

/// Scores every record of a complete (model, culture, question, language) group.
/// Records in incomplete groups are skipped and counted. Throws DomainError when a present
/// culture has no cultural vector.
ScoreSet score_corpus(const EvaluationCorpus& corpus, const std::map<Culture, CulturalVector>& cultural_vectors,
                      Embedder& embedder, const MarkerLexicon& lexicon, const ScoringConfig& config = {});

std::string instances_to_csv(const ScoreSet& s);
std::string groups_to_csv(const ScoreSet& s);
std::string pairs_to_csv(const ScoreSet& s);
/// One JSON object per line, tagged with "type": instance | group | pair.
std::string scores_to_jsonl(const ScoreSet& s);

// ---------------------------------------------------------------------------
// Aggregation

struct BootstrapConfig {
  double level = 0.95;
  int resamples = 1000;
  std::uint64_t seed = 42;
};

struct Interval {
  double low = 0;
  double high = 0;
};

/// Percentile bootstrap CI of the mean. Resample b draws n indices with
/// mt19937_64(seed) as `rng() % n`; bounds are linear-interpolated quantiles of the
/// sorted resample means. Empty input gives NaN bounds.
Interval bootstrap_mean_ci(std::span<const double> values, const BootstrapConfig& config);

/// Mean computed as x0 + sum(x - x0) / n, which is exact for constant input.
double mean(std::span<const double> values);
/// Population standard deviation.
double population_sd(std::span<const double> values);

struct AggregateRow {
  std::string model;
  Culture culture = Culture::AR;
  std::string metric;
  std::optional<QuestionLanguage> language;  // nullopt: pooled over EN and TL
  double mean = 0;
  double sd = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::size_t n = 0;
};

/// Rows per (culture, model): CF and deviation by EN / TL; answer and explanation consistency
/// by EN / TL / pooled; linguistic adaptation pooled. Empty cells give n = 0 and NaN statistics.
std::vector<AggregateRow> aggregate(const ScoreSet& scores, const BootstrapConfig& ci);

const AggregateRow* find_row(const std::vector<AggregateRow>& rows, const std::string& model, Culture culture,
                             std::string_view metric, std::optional<QuestionLanguage> language);

std::string aggregates_to_csv(const std::vector<AggregateRow>& rows);

}  // namespace craft
