#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace craft {

/// A point in the shared semantic space. Unit norm unless `degenerate`, in
/// which case every component is zero.
struct EmbeddingVector {
  std::vector<double> components;
  bool degenerate = false;

  std::size_t dim() const noexcept { return components.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// v / ||v||. Below a norm of 1e-12 the result is the zero vector flagged degenerate.
/// Throws DomainError when dim < 2 or a component is not finite (naming its index).
EmbeddingVector normalize(std::span<const double> raw);

/// Dot product of two normalized vectors, clamped to [-1, 1]; 0 if either is degenerate.
/// Throws DimensionError on a size mismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Cosine between arbitrary (not necessarily unit) vectors: u.v / (|u||v|),
/// clamped to [-1, 1], and 0 when either norm is below 1e-12.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Hex SHA-256 over model_id, a NUL separator, then the exact text bytes.
std::string embedding_digest(std::string_view model_id, std::string_view text);

// ---------------------------------------------------------------------------
// Vector files: one record per line, `<key> <dim> <c_1> ... <c_dim>`.

using VectorTable = std::map<std::string, std::vector<double>>;

VectorTable parse_vector_file(std::string_view text, const std::string& source = "<memory>");
VectorTable read_vector_file(const std::string& path);
std::string format_vector_file(const VectorTable& table);
void write_vector_file(const std::string& path, const VectorTable& table);

// ---------------------------------------------------------------------------

/// Source of raw sentence embeddings. Implementations must be deterministic per (model_id, text).
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual const std::string& model_id() const = 0;

  /// One entry per text, in order. std::nullopt means the provider declined the
  /// input (only legitimate for empty text). Throws ProviderError.
  virtual std::vector<std::optional<std::vector<double>>> embed(std::span<const std::string> texts) = 0;

  virtual std::size_t max_batch() const { return 256; }
};

/// Serves vectors from a vector file keyed by embedding_digest(model_id, text).
class FileVectorProvider : public EmbeddingProvider {
 public:
  FileVectorProvider(std::string model_id, VectorTable table);
  static FileVectorProvider from_file(std::string model_id, const std::string& path);

  const std::string& model_id() const override { return model_id_; }
  std::vector<std::optional<std::vector<double>>> embed(std::span<const std::string> texts) override;
  std::size_t size() const { return table_.size(); }

 private:
  std::string model_id_;
  VectorTable table_;
};

/// Client for the embedding sidecar: POST <endpoint>/v1/embed with
/// {"model", "texts"}; expects {"model", "dim", "vectors", "degenerate"?}.
class RemoteProvider : public EmbeddingProvider {
 public:
  RemoteProvider(std::string endpoint, std::string model_id, double timeout_seconds = 60.0);

  const std::string& model_id() const override { return model_id_; }
  std::vector<std::optional<std::vector<double>>> embed(std::span<const std::string> texts) override;

  /// GET /v1/health; returns the advertised dim. Throws ProviderError when not ready.
  std::size_t health() const;

 private:
  std::string endpoint_;
  std::string model_id_;
  double timeout_seconds_;
};

/// Offline feature-hashing encoder. Each folded word contributes +-1 to a
/// bucket chosen by its SHA-256, so texts sharing words have positive cosine.
/// Used to build synthetic fixtures; it carries no semantics beyond word overlap.
class HashingProvider : public EmbeddingProvider {
 public:
  explicit HashingProvider(std::size_t dim = 256);

  const std::string& model_id() const override { return model_id_; }
  std::vector<std::optional<std::vector<double>>> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dim_;
  std::string model_id_;
};

// ---------------------------------------------------------------------------

/// Content-addressed store of normalized vectors. Thread-safe; each put is atomic.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  EmbeddingCache(EmbeddingCache&& other) noexcept;
  EmbeddingCache& operator=(EmbeddingCache&& other) noexcept;

  std::optional<EmbeddingVector> get(const std::string& digest) const;
  void put(const std::string& digest, EmbeddingVector v);
  std::size_t size() const;

  /// Degenerate entries are stored as zero vectors and come back flagged.
  VectorTable table() const;
  void merge(const VectorTable& table);

  static EmbeddingCache load(const std::string& path);
  /// Loads `path` if it exists, otherwise starts empty.
  static EmbeddingCache load_or_empty(const std::string& path);
  void save(const std::string& path) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingVector> entries_;
};

/// Embeds batches through a cache, holding the run's vector dimension fixed.
class Embedder {
 public:
  Embedder(EmbeddingProvider& provider, EmbeddingCache& cache) : provider_(provider), cache_(cache) {}

  /// One normalized vector per text, in order. Duplicate texts resolve to the same vector.
  /// Throws ProviderError (with the batch range) or DimensionError on dim drift.
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);

  EmbeddingVector embed_one(const std::string& text);

  std::size_t provider_calls() const noexcept { return provider_calls_; }
  std::size_t provider_texts() const noexcept { return provider_texts_; }
  std::optional<std::size_t> dim() const noexcept { return dim_; }
  const std::string& model_id() const { return provider_.model_id(); }

 private:
  void check_dim(std::size_t d, const std::string& what);

  EmbeddingProvider& provider_;
  EmbeddingCache& cache_;
  std::optional<std::size_t> dim_;
  std::size_t provider_calls_ = 0;
  std::size_t provider_texts_ = 0;
};

/// Free-function form of Embedder::embed_batch for one-off use.
std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider, EmbeddingCache& cache,
                                         std::span<const std::string> texts);

}  // namespace craft
