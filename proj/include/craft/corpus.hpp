#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace craft {

/// Cultural condition: the identity system prompt under which both question variants are posed.
enum class Culture { AR, BN, SP };

/// Which variant of the question the model saw.
enum class QuestionLanguage { EN, TL };

std::string_view to_string(Culture c);
std::string_view to_string(QuestionLanguage l);
std::optional<Culture> parse_culture(std::string_view s);
std::optional<QuestionLanguage> parse_question_language(std::string_view s);

inline constexpr Culture kAllCultures[] = {Culture::AR, Culture::BN, Culture::SP};

/// Language code of the text a record carries: "EN" for English-variant rows,
/// the culture code otherwise. Used to pick a marker lexicon.
std::string text_language(Culture culture, QuestionLanguage lang);

struct RecordKey {
  std::string model;
  Culture culture = Culture::AR;
  int question_id = 0;
  QuestionLanguage language = QuestionLanguage::EN;
  int run_id = 0;

  auto operator<=>(const RecordKey&) const = default;
  std::string to_string() const;
};

/// (model, culture, question, language): the unit answer/explanation consistency is computed over.
struct GroupKey {
  std::string model;
  Culture culture = Culture::AR;
  int question_id = 0;
  QuestionLanguage language = QuestionLanguage::EN;

  auto operator<=>(const GroupKey&) const = default;
  std::string to_string() const;
};

/// (model, culture, question, run): the unit linguistic adaptation is computed over.
struct PairKey {
  std::string model;
  Culture culture = Culture::AR;
  int question_id = 0;
  int run_id = 0;

  auto operator<=>(const PairKey&) const = default;
  std::string to_string() const;
};

struct ResponseRecord {
  int question_id = 0;
  Culture culture = Culture::AR;
  QuestionLanguage question_language = QuestionLanguage::EN;
  int run_id = 0;
  std::string question_text;
  std::string answer_label;
  std::string explanation;
  std::string model_name;

  RecordKey key() const { return {model_name, culture, question_id, question_language, run_id}; }
  GroupKey group_key() const { return {model_name, culture, question_id, question_language}; }
  PairKey pair_key() const { return {model_name, culture, question_id, run_id}; }

  bool operator==(const ResponseRecord&) const = default;
};

/// Immutable after construction; records are held sorted by key.
class EvaluationCorpus {
 public:
  EvaluationCorpus() = default;
  /// Sorts the records; throws DomainError on a duplicate key or a run_id outside 1..run_count.
  EvaluationCorpus(std::vector<ResponseRecord> records, int run_count);

  const std::vector<ResponseRecord>& records() const noexcept { return records_; }
  int run_count() const noexcept { return run_count_; }
  const std::set<Culture>& cultures() const noexcept { return cultures_; }
  std::set<std::string> models() const;
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const ResponseRecord* find(const RecordKey& key) const;

 private:
  std::vector<ResponseRecord> records_;
  int run_count_ = 3;
  std::set<Culture> cultures_;
};

enum class CorpusFormat { DelimitedTable, RecordLines };

std::optional<CorpusFormat> parse_corpus_format(std::string_view s);

struct CorpusLoadOptions {
  int run_count = 3;
  /// Culture assigned to EN rows of a legacy single-`language`-column file that lack a culture column.
  std::optional<Culture> default_culture;
};

EvaluationCorpus parse_corpus(std::string_view text, CorpusFormat format, const CorpusLoadOptions& options,
                              const std::string& source = "<memory>");

EvaluationCorpus load_corpus(const std::string& path, CorpusFormat format, const CorpusLoadOptions& options = {});

std::string serialize_corpus(const EvaluationCorpus& corpus, CorpusFormat format);

// ---------------------------------------------------------------------------
// Validation

enum class DefectKind { EmptyCorpus, IncompleteGroup, UnpairedQuestion, EmptyExplanation };

std::string_view to_string(DefectKind k);

/// Empty explanations are reported but kept and scored; every other kind blocks a strict run.
constexpr bool is_fatal(DefectKind k) { return k != DefectKind::EmptyExplanation; }

struct Defect {
  DefectKind kind = DefectKind::EmptyCorpus;
  std::string model;
  std::optional<Culture> culture;
  int question_id = 0;
  std::optional<QuestionLanguage> language;
  int run_id = 0;
  std::string detail;

  bool operator==(const Defect&) const = default;
};

struct ValidationReport {
  std::size_t record_count = 0;
  std::size_t group_count = 0;
  std::size_t complete_group_count = 0;
  std::size_t en_count = 0;
  std::size_t tl_count = 0;
  std::vector<Defect> defects;

  /// No fatal defects.
  bool clean() const noexcept { return fatal_count() == 0; }
  std::size_t fatal_count() const noexcept;
  std::size_t count(DefectKind k) const;
  std::string to_text() const;
  std::string to_json() const;

  bool operator==(const ValidationReport&) const = default;
};

ValidationReport validate_corpus(const EvaluationCorpus& corpus);

// ---------------------------------------------------------------------------
// Bilingual pairing

struct BilingualPair {
  const ResponseRecord* en = nullptr;
  const ResponseRecord* tl = nullptr;

  PairKey key() const { return en->pair_key(); }
};

struct PairingResult {
  std::vector<BilingualPair> pairs;  // sorted by PairKey
  std::size_t excluded = 0;          // records lacking a counterpart
};

/// Pairs point into `corpus`; the corpus must outlive them.
PairingResult pair_bilingual(const EvaluationCorpus& corpus);

}  // namespace craft
