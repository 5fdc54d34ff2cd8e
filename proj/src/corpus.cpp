#include "craft/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>
#include <json.hpp>

#include "craft/csv.hpp"
#include "craft/errors.hpp"
#include "craft/io.hpp"
#include "craft/utf8.hpp"

namespace craft {

namespace {

std::string upper(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '\t') continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

std::optional<int> parse_int(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

constexpr const char* kColumns[] = {"question_id", "culture",     "question_language", "run_id",
                                    "question_text", "answer_label", "explanation",      "model_name"};

/// Untyped field bag produced by either input format before typing.
struct RawRow {
  std::map<std::string, std::string> fields;  // lower-case field name -> value
  std::size_t line = 0;
};

ResponseRecord type_row(const RawRow& raw, const CorpusLoadOptions& options, const std::string& source) {
  auto get = [&](const std::string& name) -> const std::string* {
    auto it = raw.fields.find(name);
    return it == raw.fields.end() ? nullptr : &it->second;
  };
  auto require = [&](const std::string& name) -> const std::string& {
    const std::string* v = get(name);
    if (!v) throw ParseError(source, raw.line, "missing required field '" + name + "'");
    return *v;
  };

  ResponseRecord r;
  const auto qid = parse_int(require("question_id"));
  if (!qid || *qid < 1) throw ParseError(source, raw.line, "question_id must be an integer >= 1");
  r.question_id = *qid;

  const auto run = parse_int(require("run_id"));
  if (!run) throw ParseError(source, raw.line, "run_id must be an integer");
  if (*run < 1 || *run > options.run_count) {
    throw ParseError(source, raw.line,
                     fmt::format("run_id {} outside 1..{}", *run, options.run_count));
  }
  r.run_id = *run;

  const std::string* culture_field = get("culture");
  if (get("question_language")) {
    const auto lang = parse_question_language(*get("question_language"));
    if (!lang) throw ParseError(source, raw.line, "question_language must be EN or TL");
    r.question_language = *lang;
    if (!culture_field) throw ParseError(source, raw.line, "missing required field 'culture'");
    const auto c = parse_culture(*culture_field);
    if (!c) throw ParseError(source, raw.line, "culture must be one of AR, BN, SP");
    r.culture = *c;
  } else if (const std::string* legacy = get("language")) {
    // Legacy single-column layout: EN, AR, BN or SP.
    const std::string code = upper(*legacy);
    if (code == "EN") {
      r.question_language = QuestionLanguage::EN;
      std::optional<Culture> c;
      if (culture_field && !culture_field->empty()) {
        c = parse_culture(*culture_field);
        if (!c) throw ParseError(source, raw.line, "culture must be one of AR, BN, SP");
      } else {
        c = options.default_culture;
      }
      if (!c) {
        throw ParseError(source, raw.line,
                         "EN row in a legacy 'language' file needs a culture column or a default culture");
      }
      r.culture = *c;
    } else {
      const auto c = parse_culture(code);
      if (!c) throw ParseError(source, raw.line, "language must be one of EN, AR, BN, SP");
      r.question_language = QuestionLanguage::TL;
      r.culture = *c;
    }
  } else {
    throw ParseError(source, raw.line, "missing required field 'question_language'");
  }

  r.question_text = utf8::normalize_whitespace(require("question_text"));
  if (r.question_text.empty()) throw ParseError(source, raw.line, "question_text is empty");
  r.answer_label = utf8::normalize_whitespace(require("answer_label"));
  r.explanation = utf8::normalize_whitespace(require("explanation"));
  r.model_name = utf8::normalize_whitespace(require("model_name"));
  if (r.model_name.empty()) throw ParseError(source, raw.line, "model_name is empty");
  return r;
}

std::vector<RawRow> read_table(std::string_view text, const std::string& source) {
  auto rows = csv::parse(text, source);
  if (rows.empty()) throw ParseError(source, 1, "missing header row");
  const auto& header = rows.front().fields;

  const bool legacy = csv::find_column(header, "question_language") == std::string::npos &&
                      csv::find_column(header, "language") != std::string::npos;
  std::vector<std::string> wanted;
  for (const char* col : kColumns) {
    const std::string name = col;
    if (name == "culture" && legacy) continue;
    if (name == "question_language" && legacy) {
      wanted.push_back("language");
      continue;
    }
    wanted.push_back(name);
  }
  if (legacy) wanted.push_back("culture");

  std::vector<std::pair<std::string, std::size_t>> index;
  for (const auto& name : wanted) {
    const std::size_t col = csv::find_column(header, name);
    if (col == std::string::npos) {
      if (legacy && name == "culture") continue;  // optional in legacy files
      throw ParseError(source, rows.front().line, "missing required column '" + name + "'");
    }
    index.emplace_back(name, col);
  }

  std::vector<RawRow> out;
  out.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.fields.size() != header.size()) {
      throw ParseError(source, row.line,
                       fmt::format("expected {} fields, found {}", header.size(), row.fields.size()));
    }
    RawRow raw;
    raw.line = row.line;
    for (const auto& [name, col] : index) raw.fields[name] = row.fields[col];
    out.push_back(std::move(raw));
  }
  return out;
}

std::vector<RawRow> read_record_lines(std::string_view text, const std::string& source) {
  std::vector<RawRow> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source, line_no, std::string("invalid record: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(source, line_no, "record is not an object");
    RawRow raw;
    raw.line = line_no;
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::string key;
      for (char c : it.key()) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      const auto& v = it.value();
      if (v.is_string()) {
        raw.fields[key] = v.get<std::string>();
      } else if (v.is_number_integer()) {
        raw.fields[key] = std::to_string(v.get<long long>());
      } else if (v.is_null()) {
        raw.fields[key] = "";
      } else {
        throw ParseError(source, line_no, "field '" + it.key() + "' must be a string or integer");
      }
    }
    out.push_back(std::move(raw));
  }
  return out;
}

}  // namespace

std::string_view to_string(Culture c) {
  switch (c) {
    case Culture::AR: return "AR";
    case Culture::BN: return "BN";
    case Culture::SP: return "SP";
  }
  return "?";
}

std::string_view to_string(QuestionLanguage l) { return l == QuestionLanguage::EN ? "EN" : "TL"; }

std::optional<Culture> parse_culture(std::string_view s) {
  const std::string u = upper(s);
  if (u == "AR") return Culture::AR;
  if (u == "BN") return Culture::BN;
  if (u == "SP") return Culture::SP;
  return std::nullopt;
}

std::optional<QuestionLanguage> parse_question_language(std::string_view s) {
  const std::string u = upper(s);
  if (u == "EN") return QuestionLanguage::EN;
  if (u == "TL") return QuestionLanguage::TL;
  return std::nullopt;
}

std::string text_language(Culture culture, QuestionLanguage lang) {
  return lang == QuestionLanguage::EN ? "EN" : std::string(to_string(culture));
}

std::string RecordKey::to_string() const {
  return fmt::format("({}, {}, q{}, {}, run {})", model, craft::to_string(culture), question_id,
                     craft::to_string(language), run_id);
}

std::string GroupKey::to_string() const {
  return fmt::format("({}, {}, q{}, {})", model, craft::to_string(culture), question_id,
                     craft::to_string(language));
}

std::string PairKey::to_string() const {
  return fmt::format("({}, {}, q{}, run {})", model, craft::to_string(culture), question_id, run_id);
}

EvaluationCorpus::EvaluationCorpus(std::vector<ResponseRecord> records, int run_count)
    : records_(std::move(records)), run_count_(run_count) {
  if (run_count_ < 2) throw DomainError("run count must be >= 2");
  std::stable_sort(records_.begin(), records_.end(),
                   [](const ResponseRecord& a, const ResponseRecord& b) { return a.key() < b.key(); });
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.run_id < 1 || r.run_id > run_count_) {
      throw DomainError(fmt::format("run_id {} outside 1..{} for {}", r.run_id, run_count_, r.key().to_string()));
    }
    if (i > 0 && records_[i - 1].key() == r.key()) {
      throw DomainError("duplicate key " + r.key().to_string());
    }
    cultures_.insert(r.culture);
  }
}

std::set<std::string> EvaluationCorpus::models() const {
  std::set<std::string> out;
  for (const auto& r : records_) out.insert(r.model_name);
  return out;
}

const ResponseRecord* EvaluationCorpus::find(const RecordKey& key) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), key,
                             [](const ResponseRecord& r, const RecordKey& k) { return r.key() < k; });
  if (it == records_.end() || it->key() != key) return nullptr;
  return &*it;
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view s) {
  if (s == "csv" || s == "delimited-table") return CorpusFormat::DelimitedTable;
  if (s == "jsonl" || s == "record-lines") return CorpusFormat::RecordLines;
  return std::nullopt;
}

EvaluationCorpus parse_corpus(std::string_view text, CorpusFormat format, const CorpusLoadOptions& options,
                              const std::string& source) {
  if (options.run_count < 2) throw ConfigError("run count must be >= 2");
  const auto raw = format == CorpusFormat::DelimitedTable ? read_table(text, source)
                                                          : read_record_lines(text, source);
  std::vector<ResponseRecord> records;
  records.reserve(raw.size());
  std::map<RecordKey, std::size_t> seen;
  for (const auto& row : raw) {
    auto rec = type_row(row, options, source);
    auto [it, inserted] = seen.emplace(rec.key(), row.line);
    if (!inserted) {
      throw ParseError(source, row.line,
                       fmt::format("duplicate key {} (first seen at line {})", rec.key().to_string(), it->second));
    }
    records.push_back(std::move(rec));
  }
  return EvaluationCorpus(std::move(records), options.run_count);
}

EvaluationCorpus load_corpus(const std::string& path, CorpusFormat format, const CorpusLoadOptions& options) {
  return parse_corpus(io::read_text(path), format, options, path);
}

std::string serialize_corpus(const EvaluationCorpus& corpus, CorpusFormat format) {
  std::string out;
  if (format == CorpusFormat::DelimitedTable) {
    out += csv::format_row({std::begin(kColumns), std::end(kColumns)});
    for (const auto& r : corpus.records()) {
      out += csv::format_row({std::to_string(r.question_id), std::string(to_string(r.culture)),
                              std::string(to_string(r.question_language)), std::to_string(r.run_id),
                              r.question_text, r.answer_label, r.explanation, r.model_name});
    }
    return out;
  }
  for (const auto& r : corpus.records()) {
    nlohmann::ordered_json j;
    j["question_id"] = r.question_id;
    j["culture"] = to_string(r.culture);
    j["question_language"] = to_string(r.question_language);
    j["run_id"] = r.run_id;
    j["question_text"] = r.question_text;
    j["answer_label"] = r.answer_label;
    j["explanation"] = r.explanation;
    j["model_name"] = r.model_name;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(DefectKind k) {
  switch (k) {
    case DefectKind::EmptyCorpus: return "empty_corpus";
    case DefectKind::IncompleteGroup: return "incomplete_group";
    case DefectKind::UnpairedQuestion: return "unpaired_question";
    case DefectKind::EmptyExplanation: return "empty_explanation";
  }
  return "?";
}

std::size_t ValidationReport::count(DefectKind k) const {
  return static_cast<std::size_t>(
      std::count_if(defects.begin(), defects.end(), [k](const Defect& d) { return d.kind == k; }));
}

std::size_t ValidationReport::fatal_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(defects.begin(), defects.end(), [](const Defect& d) { return is_fatal(d.kind); }));
}

ValidationReport validate_corpus(const EvaluationCorpus& corpus) {
  ValidationReport report;
  report.record_count = corpus.size();
  if (corpus.empty()) {
    report.defects.push_back({DefectKind::EmptyCorpus, "", std::nullopt, 0, std::nullopt, 0, "corpus has no records"});
    return report;
  }

  const int runs = corpus.run_count();
  std::map<GroupKey, std::set<int>> group_runs;
  for (const auto& r : corpus.records()) {
    group_runs[r.group_key()].insert(r.run_id);
    (r.question_language == QuestionLanguage::EN ? report.en_count : report.tl_count) += 1;
  }
  report.group_count = group_runs.size();

  for (const auto& [g, present] : group_runs) {
    if (static_cast<int>(present.size()) == runs) {
      ++report.complete_group_count;
      continue;
    }
    std::string missing;
    for (int run = 1; run <= runs; ++run) {
      if (!present.count(run)) missing += (missing.empty() ? "" : ",") + std::to_string(run);
    }
    report.defects.push_back({DefectKind::IncompleteGroup, g.model, g.culture, g.question_id, g.language, 0,
                              fmt::format("group {} missing run(s) {}", g.to_string(), missing)});
  }

  // A question is unpaired when its EN and TL run sets differ within (model, culture).
  std::set<std::tuple<std::string, Culture, int>> questions;
  for (const auto& [g, _] : group_runs) questions.emplace(g.model, g.culture, g.question_id);
  for (const auto& [model, culture, qid] : questions) {
    const auto en = group_runs.find({model, culture, qid, QuestionLanguage::EN});
    const auto tl = group_runs.find({model, culture, qid, QuestionLanguage::TL});
    const std::set<int> empty;
    const auto& en_runs = en == group_runs.end() ? empty : en->second;
    const auto& tl_runs = tl == group_runs.end() ? empty : tl->second;
    if (en_runs == tl_runs) continue;
    std::string detail;
    if (en_runs.empty()) {
      detail = "no EN counterpart";
    } else if (tl_runs.empty()) {
      detail = "no TL counterpart";
    } else {
      detail = "EN and TL run sets differ";
    }
    report.defects.push_back({DefectKind::UnpairedQuestion, model, culture, qid, std::nullopt, 0,
                              fmt::format("({}, {}, q{}): {}", model, to_string(culture), qid, detail)});
  }

  for (const auto& r : corpus.records()) {
    if (r.explanation.empty()) {
      report.defects.push_back({DefectKind::EmptyExplanation, r.model_name, r.culture, r.question_id,
                                r.question_language, r.run_id, "empty explanation at " + r.key().to_string()});
    }
  }

  std::stable_sort(report.defects.begin(), report.defects.end(), [](const Defect& a, const Defect& b) {
    return std::tie(a.model, a.culture, a.kind) < std::tie(b.model, b.culture, b.kind);
  });
  return report;
}

std::string ValidationReport::to_text() const {
  std::string out = fmt::format("records: {} (EN {}, TL {})\ngroups: {} ({} complete)\ndefects: {}\n",
                                record_count, en_count, tl_count, group_count, complete_group_count,
                                defects.size());
  for (auto kind : {DefectKind::EmptyCorpus, DefectKind::IncompleteGroup, DefectKind::UnpairedQuestion,
                    DefectKind::EmptyExplanation}) {
    if (const auto n = count(kind)) out += fmt::format("  {}: {}\n", to_string(kind), n);
  }
  for (const auto& d : defects) {
    out += fmt::format("  - [{}{}] {}\n", to_string(d.kind), is_fatal(d.kind) ? "" : ", kept", d.detail);
  }
  return out;
}

std::string ValidationReport::to_json() const {
  nlohmann::ordered_json j;
  j["records"] = record_count;
  j["en_records"] = en_count;
  j["tl_records"] = tl_count;
  j["groups"] = group_count;
  j["complete_groups"] = complete_group_count;
  j["blocking_defects"] = fatal_count();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& d : defects) {
    nlohmann::ordered_json e;
    e["kind"] = to_string(d.kind);
    e["blocking"] = is_fatal(d.kind);
    e["model"] = d.model;
    e["culture"] = d.culture ? nlohmann::ordered_json(to_string(*d.culture)) : nlohmann::ordered_json();
    e["question_id"] = d.question_id;
    e["question_language"] =
        d.language ? nlohmann::ordered_json(to_string(*d.language)) : nlohmann::ordered_json();
    e["run_id"] = d.run_id;
    e["detail"] = d.detail;
    arr.push_back(std::move(e));
  }
  j["defects"] = std::move(arr);
  return j.dump(2) + "\n";
}

PairingResult pair_bilingual(const EvaluationCorpus& corpus) {
  PairingResult result;
  std::map<PairKey, BilingualPair> slots;
  for (const auto& r : corpus.records()) {
    auto& slot = slots[r.pair_key()];
    (r.question_language == QuestionLanguage::EN ? slot.en : slot.tl) = &r;
  }
  for (const auto& [key, slot] : slots) {
    if (slot.en && slot.tl) {
      result.pairs.push_back(slot);
    } else {
      ++result.excluded;
    }
  }
  return result;
}

}  // namespace craft
