#include "craft/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <ostream>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "craft/errors.hpp"
#include "craft/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace craft {

std::optional<ProviderKind> parse_provider_kind(std::string_view s) {
  if (s == "file") return ProviderKind::File;
  if (s == "remote") return ProviderKind::Remote;
  if (s == "hashing") return ProviderKind::Hashing;
  return std::nullopt;
}

std::string file_digest(const std::string& path) {
  const std::string bytes = io::read_text(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path.lexically_normal().string();
  return (fs::path(base_dir) / path).lexically_normal().string();
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: field '{}' has the wrong type ({})", where, key, e.what()));
  }
}

std::vector<std::string> metric_list(const json& obj, const char* key, std::vector<std::string> fallback,
                                     const std::string& where) {
  auto list = get_or<std::vector<std::string>>(obj, key, std::move(fallback), where);
  for (const auto& m : list) {
    if (!metric::is_known(m)) throw ConfigError(fmt::format("{}: unknown metric '{}' in {}", where, m, key));
  }
  return list;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const std::string& base_dir, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: not valid JSON ({})", source, e.what()));
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");

  RunConfig c;
  const json empty = json::object();
  const json& corpus = root.contains("corpus") ? root.at("corpus") : empty;
  bool explicit_format = false;
  if (corpus.is_string()) {
    c.corpus_path = resolve(base_dir, corpus.get<std::string>());
  } else {
    c.corpus_path = resolve(base_dir, get_or<std::string>(corpus, "path", "", source));
    const auto format = get_or<std::string>(corpus, "format", "", source);
    if (!format.empty()) {
      auto f = parse_corpus_format(format);
      if (!f) throw ConfigError(fmt::format("{}: unknown corpus format '{}'", source, format));
      c.corpus_format = *f;
      explicit_format = true;
    }
    const auto dc = get_or<std::string>(corpus, "default_culture", "", source);
    if (!dc.empty()) {
      c.default_culture = parse_culture(dc);
      if (!c.default_culture) throw ConfigError(fmt::format("{}: unknown default_culture '{}'", source, dc));
    }
  }
  if (c.corpus_path.empty()) throw ConfigError(source + ": corpus path is required");
  if (!explicit_format && c.corpus_path.ends_with(".jsonl")) c.corpus_format = CorpusFormat::RecordLines;

  c.inventory_path = resolve(base_dir, get_or<std::string>(root, "inventory", "", source));
  c.lexicon_path = resolve(base_dir, get_or<std::string>(root, "lexicon", "", source));
  if (c.inventory_path.empty()) throw ConfigError(source + ": inventory path is required");
  if (c.lexicon_path.empty()) throw ConfigError(source + ": lexicon path is required");

  const json& provider = root.contains("provider") ? root.at("provider") : empty;
  const auto kind = get_or<std::string>(provider, "kind", "file", source);
  const auto pk = parse_provider_kind(kind);
  if (!pk) throw ConfigError(fmt::format("{}: unknown provider kind '{}' (file, remote, hashing)", source, kind));
  c.provider_kind = *pk;
  c.provider_path = resolve(base_dir, get_or<std::string>(provider, "path", "", source));
  c.endpoint = get_or<std::string>(provider, "endpoint", "", source);
  c.model_id = get_or<std::string>(provider, "model_id", c.model_id, source);
  c.hashing_dim = get_or<std::size_t>(provider, "dim", c.hashing_dim, source);

  c.output_dir = resolve(base_dir, get_or<std::string>(root, "output", c.output_dir, source));
  c.cache_path = resolve(base_dir, get_or<std::string>(root, "cache", "", source));
  if (c.cache_path.empty()) c.cache_path = (fs::path(c.output_dir) / "cache" / "embeddings.vec").string();

  c.lambda = get_or<double>(root, "lambda", c.lambda, source);
  c.run_count = get_or<int>(root, "runs", c.run_count, source);
  c.strict = get_or<bool>(root, "strict", c.strict, source);
  c.jobs = get_or<unsigned>(root, "jobs", std::max(1u, std::thread::hardware_concurrency()), source);

  const json& boot = root.contains("bootstrap") ? root.at("bootstrap") : empty;
  c.bootstrap.level = get_or<double>(boot, "level", c.bootstrap.level, source);
  c.bootstrap.resamples = get_or<int>(boot, "resamples", c.bootstrap.resamples, source);
  c.bootstrap.seed = get_or<std::uint64_t>(boot, "seed", c.bootstrap.seed, source);

  const json& stats = root.contains("stats") ? root.at("stats") : empty;
  c.plan.kw_metrics = metric_list(stats, "kw_metrics", c.plan.kw_metrics, source);
  c.plan.wilcoxon_metrics = metric_list(stats, "wilcoxon_metrics", c.plan.wilcoxon_metrics, source);
  const auto kw_lang = get_or<std::string>(stats, "kw_language", "pooled", source);
  if (kw_lang == "pooled") {
    c.plan.kw_language = KwLanguage::Pooled;
  } else if (kw_lang == "EN") {
    c.plan.kw_language = KwLanguage::EN;
  } else if (kw_lang == "TL") {
    c.plan.kw_language = KwLanguage::TL;
  } else {
    throw ConfigError(fmt::format("{}: kw_language must be pooled, EN or TL (got '{}')", source, kw_lang));
  }

  c.check();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  auto base = fs::path(path).parent_path().string();
  RunConfig c = parse(text, base, path);
  c.digest = file_digest(path);
  return c;
}

void RunConfig::check() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError(fmt::format("lambda must lie in [0, 1] (got {})", lambda));
  if (run_count < 2) throw ConfigError(fmt::format("runs must be at least 2 (got {})", run_count));
  if (bootstrap.resamples < 100) {
    throw ConfigError(fmt::format("bootstrap resamples must be at least 100 (got {})", bootstrap.resamples));
  }
  if (!(bootstrap.level > 0.0 && bootstrap.level < 1.0)) {
    throw ConfigError(fmt::format("bootstrap level must lie in (0, 1) (got {})", bootstrap.level));
  }
  if (provider_kind == ProviderKind::File && provider_path.empty()) {
    throw ConfigError("the file provider needs provider.path");
  }
  if (provider_kind == ProviderKind::Hashing && hashing_dim < 2) throw ConfigError("provider.dim must be at least 2");
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(RunConfig config, std::ostream& log) : config_(std::move(config)), log_(log) {}

Pipeline::~Pipeline() = default;

std::string Pipeline::output_path(const std::string& relative) const {
  return (fs::path(config_.output_dir) / relative).string();
}

const EvaluationCorpus& Pipeline::corpus() {
  if (!corpus_) {
    CorpusLoadOptions opts;
    opts.run_count = config_.run_count;
    opts.default_culture = config_.default_culture;
    corpus_ = load_corpus(config_.corpus_path, config_.corpus_format, opts);
  }
  return *corpus_;
}

const PhraseInventory& Pipeline::inventory() {
  if (!inventory_) inventory_ = load_inventory(config_.inventory_path);
  return *inventory_;
}

const MarkerLexicon& Pipeline::lexicon() {
  if (!lexicon_) lexicon_ = load_lexicon(config_.lexicon_path);
  return *lexicon_;
}

Embedder& Pipeline::embedder() {
  if (!embedder_) {
    switch (config_.provider_kind) {
      case ProviderKind::File:
        provider_ = std::make_unique<FileVectorProvider>(
            FileVectorProvider::from_file(config_.model_id, config_.provider_path));
        break;
      case ProviderKind::Remote: {
        std::string endpoint = config_.endpoint;
        if (const char* env = std::getenv(kEndpointEnv); env && *env) endpoint = env;
        if (endpoint.empty()) {
          throw ConfigError(fmt::format("the remote provider needs provider.endpoint or {}", kEndpointEnv));
        }
        provider_ = std::make_unique<RemoteProvider>(endpoint, config_.model_id);
        break;
      }
      case ProviderKind::Hashing:
        provider_ = std::make_unique<HashingProvider>(config_.hashing_dim);
        break;
    }
    cache_ = std::make_unique<EmbeddingCache>(EmbeddingCache::load_or_empty(config_.cache_path));
    embedder_ = std::make_unique<Embedder>(*provider_, *cache_);
  }
  return *embedder_;
}

void Pipeline::save_cache() {
  if (cache_) cache_->save(config_.cache_path);
}

ValidationReport Pipeline::validate() {
  if (!validation_) {
    validation_ = validate_corpus(corpus());
    io::write_text(output_path("validation.json"), validation_->to_json());
    log_ << fmt::format("validate: {} records, {} groups ({} complete), {} defects\n", validation_->record_count,
                        validation_->group_count, validation_->complete_group_count, validation_->defects.size());
    record_stage("validate", {{"records", std::to_string(validation_->record_count)},
                              {"defects", std::to_string(validation_->defects.size())}});
  }
  return *validation_;
}

void Pipeline::require_valid() {
  const auto& report = validate();
  if (report.clean()) return;
  if (config_.strict) {
    throw DataError(fmt::format("validate: corpus has {} blocking defect(s); see {}\n{}", report.fatal_count(),
                                output_path("validation.json"), report.to_text()));
  }
  log_ << fmt::format("warning: continuing past {} corpus defect(s) (strict mode off)\n", report.fatal_count());
}

std::vector<std::string> Pipeline::texts_to_embed() {
  std::set<std::string> texts;
  for (const auto& r : corpus().records()) {
    texts.insert(r.explanation);
    texts.insert(r.question_text);
  }
  for (Culture c : corpus().cultures()) {
    const std::string code(to_string(c));
    for (const auto& p : inventory().phrases) {
      if (auto it = p.surface.find(code); it != p.surface.end()) texts.insert(it->second);
    }
  }
  return {texts.begin(), texts.end()};
}

void Pipeline::embed() {
  require_valid();
  const auto texts = texts_to_embed();
  auto& e = embedder();
  const std::size_t before = e.provider_texts();
  e.embed_batch(texts);
  save_cache();
  log_ << fmt::format("embed: {} distinct texts, {} sent to provider '{}', cache at {}\n", texts.size(),
                      e.provider_texts() - before, e.model_id(), config_.cache_path);
  record_stage("embed", {{"texts", std::to_string(texts.size())},
                         {"provider_texts", std::to_string(e.provider_texts() - before)}});
}

std::map<Culture, CulturalVector> Pipeline::build_culture() {
  if (cultural_vectors_) return *cultural_vectors_;
  require_valid();
  std::map<Culture, CulturalVector> out;
  std::vector<CulturalVector> list;
  for (Culture c : corpus().cultures()) {
    auto cv = build_cultural_vector(inventory(), c, embedder());
    list.push_back(cv);
    out.emplace(c, std::move(cv));
  }
  write_vector_file(output_path("culture/vectors.vec"), to_vector_table(list));
  save_cache();
  std::map<std::string, std::string> details;
  for (const auto& cv : list) details[std::string(to_string(cv.culture))] = std::to_string(cv.phrase_count);
  log_ << fmt::format("build-culture: {} cultural vector(s)\n", list.size());
  record_stage("build-culture", std::move(details));
  cultural_vectors_ = out;
  return out;
}

ScoreSet Pipeline::score() {
  if (scores_) return *scores_;
  const auto vectors = build_culture();
  ScoringConfig sc{config_.lambda, config_.jobs};
  ScoreSet s = score_corpus(corpus(), vectors, embedder(), lexicon(), sc);
  save_cache();
  io::write_text(output_path("scores/instances.csv"), instances_to_csv(s));
  io::write_text(output_path("scores/groups.csv"), groups_to_csv(s));
  io::write_text(output_path("scores/pairs.csv"), pairs_to_csv(s));
  io::write_text(output_path("scores/scores.jsonl"), scores_to_jsonl(s));
  log_ << fmt::format("score: {} instance, {} group, {} pair scores ({} records skipped)\n", s.instances.size(),
                      s.groups.size(), s.pairs.size(), s.skipped_records);
  record_stage("score", {{"instances", std::to_string(s.instances.size())},
                         {"groups", std::to_string(s.groups.size())},
                         {"pairs", std::to_string(s.pairs.size())},
                         {"skipped_records", std::to_string(s.skipped_records)}});
  scores_ = std::move(s);
  return *scores_;
}

StatSuite Pipeline::stats() {
  if (stats_) return *stats_;
  const auto s = score();
  StatSuite suite = run_stat_suite(s, config_.plan);
  io::write_text(output_path("reports/stats.csv"), stats_to_csv(suite));
  for (const auto& note : suite.notes) log_ << "note: " << note << '\n';
  log_ << fmt::format("stats: {} Kruskal-Wallis, {} Wilcoxon tests\n", suite.kruskal_wallis.size(),
                      suite.wilcoxon.size());
  record_stage("stats", {{"kruskal_wallis", std::to_string(suite.kruskal_wallis.size())},
                         {"wilcoxon", std::to_string(suite.wilcoxon.size())}});
  stats_ = std::move(suite);
  return *stats_;
}

ReportBundle Pipeline::report() {
  ReportBundle bundle;
  const auto s = score();
  bundle.stats = stats();
  bundle.aggregates = aggregate(s, config_.bootstrap);
  bundle.radar = radar_data(bundle.aggregates);
  record_stage("report", {{"aggregate_rows", std::to_string(bundle.aggregates.size())}});
  bundle.manifest = Manifest::from_json(io::read_text(output_path("reports/manifest.json")));
  const auto written = export_all(bundle, output_path("reports"));
  log_ << fmt::format("report: {} file(s) under {}\n", written.size(), output_path("reports"));
  return bundle;
}

void Pipeline::all() {
  validate();
  embed();
  build_culture();
  score();
  stats();
  report();
}

void Pipeline::export_vectors(const std::string& path) {
  const auto texts = texts_to_embed();
  auto& e = embedder();
  const auto vectors = e.embed_batch(texts);
  VectorTable table;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    table[embedding_digest(e.model_id(), texts[i])] = vectors[i].components;
  }
  write_vector_file(path, table);
  log_ << fmt::format("export-vectors: {} vectors for model '{}' to {}\n", table.size(), e.model_id(), path);
}

void Pipeline::record_stage(const std::string& stage, std::map<std::string, std::string> details) {
  const std::string path = output_path("reports/manifest.json");
  Manifest m;
  if (fs::exists(path)) {
    try {
      m = Manifest::from_json(io::read_text(path));
    } catch (const Error&) {
      m = Manifest{};
    }
  }
  m.tool_version = kToolVersion;
  m.config_digest = config_.digest;
  m.corpus_digest = file_digest(config_.corpus_path);
  if (fs::exists(config_.inventory_path)) m.inventory_digest = file_digest(config_.inventory_path);
  if (fs::exists(config_.lexicon_path)) m.lexicon_digest = file_digest(config_.lexicon_path);
  if (embedder_) m.provider_model_id = embedder_->model_id();
  m.bootstrap_seed = config_.bootstrap.seed;
  m.bootstrap_resamples = config_.bootstrap.resamples;
  m.bootstrap_level = config_.bootstrap.level;
  m.lambda = config_.lambda;
  m.run_count = config_.run_count;
  m.record({stage, utc_now(), std::move(details)});
  io::write_text(path, m.to_json());
}

}  // namespace craft
