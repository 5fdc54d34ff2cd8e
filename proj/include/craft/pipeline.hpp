#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "craft/corpus.hpp"
#include "craft/culture.hpp"
#include "craft/depth.hpp"
#include "craft/embedding.hpp"
#include "craft/metrics.hpp"
#include "craft/report.hpp"
#include "craft/stats.hpp"

namespace craft {

inline constexpr const char* kToolVersion = "0.3.0";

/// Overrides the remote provider endpoint from the config when set.
inline constexpr const char* kEndpointEnv = "CRAFT_EMBED_ENDPOINT";

enum class ProviderKind { File, Remote, Hashing };

std::optional<ProviderKind> parse_provider_kind(std::string_view s);

/// A run configuration file (JSON). Relative paths resolve against the file's directory.
struct RunConfig {
  std::string corpus_path;
  CorpusFormat corpus_format = CorpusFormat::DelimitedTable;
  std::optional<Culture> default_culture;
  std::string inventory_path;
  std::string lexicon_path;

  ProviderKind provider_kind = ProviderKind::File;
  std::string provider_path;  // vector file for the file provider
  std::string endpoint;       // remote provider base URL
  std::string model_id = "paraphrase-multilingual-MiniLM-L12-v2";
  std::size_t hashing_dim = 256;

  std::string cache_path;  // defaults to <output>/cache/embeddings.vec
  double lambda = kDefaultLambda;
  int run_count = 3;
  BootstrapConfig bootstrap;
  StatPlan plan;
  std::string output_dir = "craft-out";
  bool strict = true;
  unsigned jobs = 1;  // config default: available parallelism

  std::string digest;  // SHA-256 of the config file bytes

  /// Throws ConfigError on any invalid field (lambda outside [0,1], R < 2, resamples < 100, ...).
  static RunConfig parse(std::string_view text, const std::string& base_dir, const std::string& source = "<config>");
  static RunConfig load(const std::string& path);
  void check() const;
};

/// The evaluation stages over one run configuration. Inputs load lazily and are
/// shared between stages, so `all()` reads everything once.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::ostream& log);
  ~Pipeline();

  const RunConfig& config() const { return config_; }

  /// Writes <out>/validation.json. Never throws for defects; strictness is applied by the other stages.
  ValidationReport validate();
  /// Embeds every corpus text and inventory phrase; saves the cache.
  void embed();
  /// Writes <out>/culture/vectors.vec.
  std::map<Culture, CulturalVector> build_culture();
  /// Writes <out>/scores/{instances,groups,pairs}.csv and scores.jsonl.
  ScoreSet score();
  /// Writes <out>/reports/stats.csv.
  StatSuite stats();
  /// Writes the full report tree under <out>/reports.
  ReportBundle report();
  /// validate -> embed -> build-culture -> score -> stats -> report.
  void all();

  /// Vector file (keyed by digest under the provider's model id) for every text the run needs.
  void export_vectors(const std::string& path);

  std::string output_path(const std::string& relative) const;

 private:
  const EvaluationCorpus& corpus();
  const PhraseInventory& inventory();
  const MarkerLexicon& lexicon();
  Embedder& embedder();
  void require_valid();
  std::vector<std::string> texts_to_embed();
  void record_stage(const std::string& stage, std::map<std::string, std::string> details);
  void save_cache();

  RunConfig config_;
  std::ostream& log_;
  std::optional<EvaluationCorpus> corpus_;
  std::optional<PhraseInventory> inventory_;
  std::optional<MarkerLexicon> lexicon_;
  std::optional<ValidationReport> validation_;
  std::unique_ptr<EmbeddingProvider> provider_;
  std::unique_ptr<EmbeddingCache> cache_;
  std::unique_ptr<Embedder> embedder_;
  std::optional<std::map<Culture, CulturalVector>> cultural_vectors_;
  std::optional<ScoreSet> scores_;
  std::optional<StatSuite> stats_;
};

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::string& path);

}  // namespace craft
