#include "craft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "craft/csv.hpp"
#include "craft/errors.hpp"
#include "craft/io.hpp"
#include "craft/parallel.hpp"

namespace craft {

namespace metric {

bool is_known(std::string_view name) { return std::find(std::begin(kAll), std::end(kAll), name) != std::end(kAll); }

std::string_view display_name(std::string_view name) {
  if (name == kCulturalFluency) return "Cultural Fluency";
  if (name == kDeviation) return "Deviation";
  if (name == kAnswerConsistency) return "Answer Consistency";
  if (name == kExplanationConsistency) return "Explanation Consistency";
  if (name == kLinguisticAdaptation) return "Linguistic Adaptation";
  return name;
}

}  // namespace metric

double cultural_fluency(double alignment, double depth, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError(fmt::format("lambda {} outside [0, 1]", lambda));
  return lambda * alignment + (1.0 - lambda) * depth;
}

double cultural_fluency(const EmbeddingVector& explanation, const CulturalVector& culture, double depth,
                        double lambda) {
  if (explanation.degenerate) return cultural_fluency(0.0, depth, lambda);
  return cultural_fluency(cosine_similarity(explanation.components, culture.vector), depth, lambda);
}

double deviation(const EmbeddingVector& explanation, const EmbeddingVector& question) {
  return 1.0 - cosine(explanation, question);
}

double answer_consistency(std::span<const std::string> answers, int run_count) {
  if (run_count < 2) throw DomainError("answer consistency needs R >= 2");
  if (answers.size() != static_cast<std::size_t>(run_count)) {
    throw DomainError(fmt::format("answer consistency needs {} answers, got {}", run_count, answers.size()));
  }
  const std::set<std::string> distinct(answers.begin(), answers.end());
  return 1.0 - static_cast<double>(distinct.size() - 1) / static_cast<double>(run_count - 1);
}

double explanation_consistency(std::span<const EmbeddingVector> explanations) {
  if (explanations.size() < 2) throw DomainError("explanation consistency needs at least two explanations");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t r = 0; r < explanations.size(); ++r) {
    for (std::size_t s = r + 1; s < explanations.size(); ++s) {
      sum += cosine(explanations[r], explanations[s]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double linguistic_adaptation(const EmbeddingVector& en, const EmbeddingVector& tl) { return 1.0 - cosine(en, tl); }

// ---------------------------------------------------------------------------

std::vector<double> ScoreSet::values(std::string_view metric, const std::string& model, Culture culture,
                                     std::optional<QuestionLanguage> language) const {
  std::vector<double> out;
  if (metric == metric::kCulturalFluency || metric == metric::kDeviation) {
    const bool cf = metric == metric::kCulturalFluency;
    for (const auto& s : instances) {
      if (s.key.model != model || s.key.culture != culture) continue;
      if (language && s.key.language != *language) continue;
      out.push_back(cf ? s.cultural_fluency : s.deviation);
    }
  } else if (metric == metric::kAnswerConsistency || metric == metric::kExplanationConsistency) {
    const bool ac = metric == metric::kAnswerConsistency;
    for (const auto& g : groups) {
      if (g.key.model != model || g.key.culture != culture) continue;
      if (language && g.key.language != *language) continue;
      out.push_back(ac ? g.answer_consistency : g.explanation_consistency);
    }
  } else if (metric == metric::kLinguisticAdaptation) {
    for (const auto& p : pairs) {
      if (p.key.model == model && p.key.culture == culture) out.push_back(p.linguistic_adaptation);
    }
  } else {
    throw DomainError("unknown metric '" + std::string(metric) + "'");
  }
  return out;
}

std::vector<std::string> ScoreSet::models(Culture culture) const {
  std::set<std::string> out;
  for (const auto& s : instances) {
    if (s.key.culture == culture) out.insert(s.key.model);
  }
  for (const auto& g : groups) {
    if (g.key.culture == culture) out.insert(g.key.model);
  }
  return {out.begin(), out.end()};
}

std::vector<Culture> ScoreSet::cultures() const {
  std::set<Culture> out;
  for (const auto& s : instances) out.insert(s.key.culture);
  for (const auto& g : groups) out.insert(g.key.culture);
  return {out.begin(), out.end()};
}

ScoreSet score_corpus(const EvaluationCorpus& corpus, const std::map<Culture, CulturalVector>& cultural_vectors,
                      Embedder& embedder, const MarkerLexicon& lexicon, const ScoringConfig& config) {
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) {
    throw DomainError(fmt::format("lambda {} outside [0, 1]", config.lambda));
  }
  for (Culture c : corpus.cultures()) {
    if (!cultural_vectors.count(c)) {
      throw DomainError(fmt::format("no cultural vector for culture {}", to_string(c)));
    }
  }

  ScoreSet out;
  const int runs = corpus.run_count();

  // Records arrive sorted by key, so each group's runs are contiguous.
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) into records
  const auto& records = corpus.records();
  for (std::size_t i = 0; i < records.size();) {
    std::size_t j = i;
    while (j < records.size() && records[j].group_key() == records[i].group_key()) ++j;
    if (static_cast<int>(j - i) == runs) {
      groups.emplace_back(i, j);
    } else {
      ++out.skipped_incomplete_groups;
      out.skipped_records += j - i;
    }
    i = j;
  }

  std::vector<std::size_t> scored;  // indices of records in complete groups
  for (const auto& [b, e] : groups) {
    for (std::size_t k = b; k < e; ++k) scored.push_back(k);
  }

  std::vector<std::string> texts;
  texts.reserve(scored.size() * 2);
  for (std::size_t k : scored) texts.push_back(records[k].explanation);
  for (std::size_t k : scored) texts.push_back(records[k].question_text);
  const auto vectors = embedder.embed_batch(texts);

  for (const auto& [_, cv] : cultural_vectors) {
    if (!vectors.empty() && cv.vector.size() != vectors.front().dim()) {
      throw DimensionError(fmt::format("cultural vector for {} has dim {}, embeddings have dim {}",
                                       to_string(cv.culture), cv.vector.size(), vectors.front().dim()));
    }
  }

  std::map<std::size_t, std::size_t> position;  // record index -> slot in `scored`
  for (std::size_t s = 0; s < scored.size(); ++s) position[scored[s]] = s;
  auto explanation_of = [&](std::size_t record) -> const EmbeddingVector& { return vectors[position.at(record)]; };

  out.instances.resize(scored.size());
  parallel_for(scored.size(), config.jobs, [&](std::size_t s) {
    const auto& r = records[scored[s]];
    const auto& e = vectors[s];
    const auto& q = vectors[scored.size() + s];
    InstanceScore& score = out.instances[s];
    score.key = r.key();
    score.features = extract_features(r.explanation, text_language(r.culture, r.question_language), lexicon);
    score.depth = depth_score(score.features);
    score.degenerate = e.degenerate;
    score.alignment = e.degenerate ? 0.0 : cosine_similarity(e.components, cultural_vectors.at(r.culture).vector);
    score.cultural_fluency = cultural_fluency(score.alignment, score.depth, config.lambda);
    score.deviation = deviation(e, q);
  });

  out.groups.resize(groups.size());
  parallel_for(groups.size(), config.jobs, [&](std::size_t gi) {
    const auto [b, e] = groups[gi];
    std::vector<std::string> answers;
    std::vector<EmbeddingVector> expl;
    GroupScore& g = out.groups[gi];
    g.key = records[b].group_key();
    for (std::size_t k = b; k < e; ++k) {
      answers.push_back(records[k].answer_label);
      expl.push_back(explanation_of(k));
      g.degenerate = g.degenerate || expl.back().degenerate;
    }
    g.unique_answers = static_cast<int>(std::set<std::string>(answers.begin(), answers.end()).size());
    g.answer_consistency = answer_consistency(answers, runs);
    g.explanation_consistency = explanation_consistency(expl);
  });

  // Pairs over records that survived the completeness filter.
  std::map<PairKey, std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> slots;
  for (std::size_t k : scored) {
    auto& slot = slots[records[k].pair_key()];
    (records[k].question_language == QuestionLanguage::EN ? slot.first : slot.second) = k;
  }
  for (const auto& [key, slot] : slots) {
    if (!slot.first || !slot.second) continue;
    const auto& en = explanation_of(*slot.first);
    const auto& tl = explanation_of(*slot.second);
    out.pairs.push_back({key, linguistic_adaptation(en, tl), en.degenerate || tl.degenerate});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) { return std::isnan(v) ? std::string() : io::format_double(v); }

}  // namespace

std::string instances_to_csv(const ScoreSet& s) {
  std::string out = csv::format_row({"model", "culture", "question_id", "question_language", "run_id",
                                     "cultural_fluency", "deviation", "depth", "alignment", "word_count",
                                     "marker_count", "sentence_count", "sentence_word_ratio", "degenerate"});
  for (const auto& i : s.instances) {
    out += csv::format_row({i.key.model, std::string(to_string(i.key.culture)), std::to_string(i.key.question_id),
                            std::string(to_string(i.key.language)), std::to_string(i.key.run_id),
                            num(i.cultural_fluency), num(i.deviation), num(i.depth), num(i.alignment),
                            std::to_string(i.features.word_count), std::to_string(i.features.marker_count),
                            std::to_string(i.features.sentence_count), num(i.features.sentence_word_ratio),
                            i.degenerate ? "1" : "0"});
  }
  return out;
}

std::string groups_to_csv(const ScoreSet& s) {
  std::string out = csv::format_row({"model", "culture", "question_id", "question_language", "answer_consistency",
                                     "explanation_consistency", "unique_answers", "degenerate"});
  for (const auto& g : s.groups) {
    out += csv::format_row({g.key.model, std::string(to_string(g.key.culture)), std::to_string(g.key.question_id),
                            std::string(to_string(g.key.language)), num(g.answer_consistency),
                            num(g.explanation_consistency), std::to_string(g.unique_answers),
                            g.degenerate ? "1" : "0"});
  }
  return out;
}

std::string pairs_to_csv(const ScoreSet& s) {
  std::string out =
      csv::format_row({"model", "culture", "question_id", "run_id", "linguistic_adaptation", "degenerate"});
  for (const auto& p : s.pairs) {
    out += csv::format_row({p.key.model, std::string(to_string(p.key.culture)), std::to_string(p.key.question_id),
                            std::to_string(p.key.run_id), num(p.linguistic_adaptation), p.degenerate ? "1" : "0"});
  }
  return out;
}

std::string scores_to_jsonl(const ScoreSet& s) {
  std::string out;
  for (const auto& i : s.instances) {
    nlohmann::ordered_json j;
    j["type"] = "instance";
    j["model"] = i.key.model;
    j["culture"] = to_string(i.key.culture);
    j["question_id"] = i.key.question_id;
    j["question_language"] = to_string(i.key.language);
    j["run_id"] = i.key.run_id;
    j["cultural_fluency"] = i.cultural_fluency;
    j["deviation"] = i.deviation;
    j["depth"] = i.depth;
    j["alignment"] = i.alignment;
    j["degenerate"] = i.degenerate;
    out += j.dump() + "\n";
  }
  for (const auto& g : s.groups) {
    nlohmann::ordered_json j;
    j["type"] = "group";
    j["model"] = g.key.model;
    j["culture"] = to_string(g.key.culture);
    j["question_id"] = g.key.question_id;
    j["question_language"] = to_string(g.key.language);
    j["answer_consistency"] = g.answer_consistency;
    j["explanation_consistency"] = g.explanation_consistency;
    j["unique_answers"] = g.unique_answers;
    j["degenerate"] = g.degenerate;
    out += j.dump() + "\n";
  }
  for (const auto& p : s.pairs) {
    nlohmann::ordered_json j;
    j["type"] = "pair";
    j["model"] = p.key.model;
    j["culture"] = to_string(p.key.culture);
    j["question_id"] = p.key.question_id;
    j["run_id"] = p.key.run_id;
    j["linguistic_adaptation"] = p.linguistic_adaptation;
    j["degenerate"] = p.degenerate;
    out += j.dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double x0 = values.front();
  double acc = 0.0;
  for (double x : values) acc += x - x0;
  return x0 + acc / static_cast<double>(values.size());
}

double population_sd(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(values);
  double acc = 0.0;
  for (double x : values) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Interval bootstrap_mean_ci(std::span<const double> values, const BootstrapConfig& config) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  if (values.empty()) return {kNaN, kNaN};
  if (!(config.level > 0.0 && config.level < 1.0)) throw DomainError("bootstrap level must lie in (0, 1)");
  if (config.resamples < 1) throw DomainError("bootstrap needs at least one resample");

  const std::size_t n = values.size();
  const double x0 = values.front();
  std::mt19937_64 rng(config.seed);
  std::vector<double> means(static_cast<std::size_t>(config.resamples));
  for (auto& m : means) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += values[rng() % n] - x0;
    m = x0 + acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = 1.0 - config.level;
  return {quantile_sorted(means, alpha / 2.0), quantile_sorted(means, 1.0 - alpha / 2.0)};
}

std::vector<AggregateRow> aggregate(const ScoreSet& scores, const BootstrapConfig& ci) {
  using QL = QuestionLanguage;
  std::vector<AggregateRow> rows;
  for (Culture culture : scores.cultures()) {
    for (const auto& model : scores.models(culture)) {
      auto emit = [&](std::string_view metric, std::optional<QL> lang) {
        const auto v = scores.values(metric, model, culture, lang);
        AggregateRow row;
        row.model = model;
        row.culture = culture;
        row.metric = std::string(metric);
        row.language = lang;
        row.n = v.size();
        row.mean = mean(v);
        row.sd = population_sd(v);
        const auto interval = bootstrap_mean_ci(v, ci);
        row.ci_low = interval.low;
        row.ci_high = interval.high;
        rows.push_back(std::move(row));
      };
      for (auto m : {metric::kCulturalFluency, metric::kDeviation}) {
        emit(m, QL::EN);
        emit(m, QL::TL);
      }
      for (auto m : {metric::kAnswerConsistency, metric::kExplanationConsistency}) {
        emit(m, QL::EN);
        emit(m, QL::TL);
        emit(m, std::nullopt);
      }
      emit(metric::kLinguisticAdaptation, std::nullopt);
    }
  }
  return rows;
}

const AggregateRow* find_row(const std::vector<AggregateRow>& rows, const std::string& model, Culture culture,
                             std::string_view metric, std::optional<QuestionLanguage> language) {
  for (const auto& r : rows) {
    if (r.model == model && r.culture == culture && r.metric == metric && r.language == language) return &r;
  }
  return nullptr;
}

std::string aggregates_to_csv(const std::vector<AggregateRow>& rows) {
  std::string out =
      csv::format_row({"culture", "model", "metric", "question_language", "n", "mean", "sd", "ci_low", "ci_high"});
  for (const auto& r : rows) {
    out += csv::format_row({std::string(to_string(r.culture)), r.model, r.metric,
                            r.language ? std::string(to_string(*r.language)) : "ALL", std::to_string(r.n),
                            num(r.mean), num(r.sd), num(r.ci_low), num(r.ci_high)});
  }
  return out;
}

}  // namespace craft
