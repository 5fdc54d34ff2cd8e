#include "craft/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <unordered_map>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "craft/errors.hpp"
#include "craft/io.hpp"
#include "craft/utf8.hpp"

namespace craft {

namespace {

constexpr double kDegenerateNorm = 1e-12;

std::array<unsigned char, 32> sha256(std::string_view a, std::string_view b = {}, bool separator = false) {
  std::array<unsigned char, 32> out{};
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned int len = 0;
  const unsigned char nul = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), a.data(), a.size()) != 1 ||
      (separator && EVP_DigestUpdate(ctx.get(), &nul, 1) != 1) ||
      EVP_DigestUpdate(ctx.get(), b.data(), b.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1) {
    throw Error("SHA-256 failed");
  }
  return out;
}

std::string hex(std::span<const unsigned char> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

}  // namespace

EmbeddingVector normalize(std::span<const double> raw) {
  if (raw.size() < 2) throw DomainError(fmt::format("embedding dim must be >= 2, got {}", raw.size()));
  long double sq = 0.0L;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw DomainError(fmt::format("non-finite embedding component at index {}", i));
    sq += static_cast<long double>(raw[i]) * raw[i];
  }
  const double norm = static_cast<double>(std::sqrt(sq));
  EmbeddingVector out;
  out.components.assign(raw.size(), 0.0);
  if (norm < kDegenerateNorm) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) out.components[i] = raw[i] / norm;
  return out;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) throw DimensionError(fmt::format("cosine of dim {} and dim {}", u.dim(), v.dim()));
  if (u.degenerate || v.degenerate) return 0.0;
  if (u.components == v.components) return 1.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) dot += u.components[i] * v.components[i];
  return std::clamp(dot, -1.0, 1.0);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionError(fmt::format("cosine of dim {} and dim {}", u.size(), v.size()));
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  if (nu < kDegenerateNorm || nv < kDegenerateNorm) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

std::string embedding_digest(std::string_view model_id, std::string_view text) {
  const auto d = sha256(model_id, text, true);
  return hex(d);
}

// ---------------------------------------------------------------------------

VectorTable parse_vector_file(std::string_view text, const std::string& source) {
  VectorTable table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    if (tokens.size() < 2) throw ParseError(source, line_no, "expected '<key> <dim> <values...>'");
    std::size_t dim = 0;
    {
      auto [p, ec] = std::from_chars(tokens[1].data(), tokens[1].data() + tokens[1].size(), dim);
      if (ec != std::errc() || p != tokens[1].data() + tokens[1].size()) {
        throw ParseError(source, line_no, "dim is not an integer");
      }
    }
    if (tokens.size() != dim + 2) {
      throw ParseError(source, line_no, fmt::format("declared dim {} but found {} values", dim, tokens.size() - 2));
    }
    std::vector<double> values(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto tok = tokens[k + 2];
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), values[k]);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        throw ParseError(source, line_no, fmt::format("value {} is not a number", k));
      }
    }
    std::string key(tokens[0]);
    if (!table.emplace(key, std::move(values)).second) {
      throw ParseError(source, line_no, "duplicate key " + key);
    }
  }
  return table;
}

VectorTable read_vector_file(const std::string& path) { return parse_vector_file(io::read_text(path), path); }

std::string format_vector_file(const VectorTable& table) {
  std::string out;
  for (const auto& [key, values] : table) {
    out += key;
    out += ' ';
    out += std::to_string(values.size());
    for (double v : values) {
      out += ' ';
      out += io::format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_vector_file(const std::string& path, const VectorTable& table) {
  io::write_text(path, format_vector_file(table));
}

// ---------------------------------------------------------------------------

FileVectorProvider::FileVectorProvider(std::string model_id, VectorTable table)
    : model_id_(std::move(model_id)), table_(std::move(table)) {}

FileVectorProvider FileVectorProvider::from_file(std::string model_id, const std::string& path) {
  return FileVectorProvider(std::move(model_id), read_vector_file(path));
}

std::vector<std::optional<std::vector<double>>> FileVectorProvider::embed(std::span<const std::string> texts) {
  std::vector<std::optional<std::vector<double>>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const std::string digest = embedding_digest(model_id_, text);
    auto it = table_.find(digest);
    if (it != table_.end()) {
      out.emplace_back(it->second);
    } else if (text.empty()) {
      out.emplace_back(std::nullopt);
    } else {
      const std::string excerpt = text.size() > 40 ? text.substr(0, 40) + "..." : text;
      throw ProviderError(fmt::format("vector file has no entry for digest {} (text \"{}\")", digest, excerpt));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RemoteProvider::RemoteProvider(std::string endpoint, std::string model_id, double timeout_seconds)
    : endpoint_(std::move(endpoint)), model_id_(std::move(model_id)), timeout_seconds_(timeout_seconds) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

namespace {

void configure(httplib::Client& cli, double timeout_seconds) {
  const auto secs = static_cast<time_t>(timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
}

}  // namespace

std::vector<std::optional<std::vector<double>>> RemoteProvider::embed(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  httplib::Client cli(endpoint_);
  configure(cli, timeout_seconds_);

  nlohmann::json body;
  body["model"] = model_id_;
  body["texts"] = nlohmann::json::array();
  for (const auto& t : texts) body["texts"].push_back(t);

  auto res = cli.Post("/v1/embed", body.dump(), "application/json");
  if (!res) {
    throw ProviderError(fmt::format("POST {}/v1/embed failed: {}", endpoint_, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw ProviderError(fmt::format("POST {}/v1/embed returned HTTP {}: {}", endpoint_, res->status,
                                    res->body.substr(0, 200)));
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProviderError(std::string("malformed embed response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("vectors") || !j["vectors"].is_array() || !j.contains("dim") ||
      !j["dim"].is_number_integer()) {
    throw ProviderError("malformed embed response: expected 'dim' and 'vectors'");
  }
  if (j.contains("model") && j["model"].is_string() && j["model"].get<std::string>() != model_id_) {
    throw ProviderError(fmt::format("embed response is for model '{}', expected '{}'",
                                    j["model"].get<std::string>(), model_id_));
  }
  const auto dim = j["dim"].get<long long>();
  const auto& vectors = j["vectors"];
  if (vectors.size() != texts.size()) {
    throw ProviderError(fmt::format("embed response has {} vectors for {} texts", vectors.size(), texts.size()));
  }
  std::vector<bool> flagged(texts.size(), false);
  if (j.contains("degenerate") && j["degenerate"].is_array()) {
    for (const auto& idx : j["degenerate"]) {
      if (!idx.is_number_integer() || idx.get<long long>() < 0 ||
          idx.get<std::size_t>() >= texts.size()) {
        throw ProviderError("malformed embed response: bad 'degenerate' index");
      }
      flagged[idx.get<std::size_t>()] = true;
    }
  }

  std::vector<std::optional<std::vector<double>>> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (flagged[i]) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const auto& v = vectors[i];
    if (!v.is_array() || static_cast<long long>(v.size()) != dim) {
      throw ProviderError(fmt::format("malformed embed response: vector {} is not of dim {}", i, dim));
    }
    std::vector<double> values;
    values.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number()) throw ProviderError(fmt::format("malformed embed response: vector {} has a non-number", i));
      values.push_back(x.get<double>());
    }
    out.emplace_back(std::move(values));
  }
  return out;
}

std::size_t RemoteProvider::health() const {
  httplib::Client cli(endpoint_);
  configure(cli, timeout_seconds_);
  auto res = cli.Get("/v1/health");
  if (!res) throw ProviderError(fmt::format("GET {}/v1/health failed: {}", endpoint_, httplib::to_string(res.error())));
  if (res->status != 200) throw ProviderError(fmt::format("embedding service not ready (HTTP {})", res->status));
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("malformed health response: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

HashingProvider::HashingProvider(std::size_t dim) : dim_(dim), model_id_(fmt::format("hashing-v1-{}", dim)) {
  if (dim_ < 2) throw DomainError("hashing provider dim must be >= 2");
}

std::vector<std::optional<std::vector<double>>> HashingProvider::embed(std::span<const std::string> texts) {
  std::vector<std::optional<std::vector<double>>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    if (text.empty()) {
      out.emplace_back(std::nullopt);
      continue;
    }
    std::vector<double> v(dim_, 0.0);
    for (const auto& word : utf8::split_whitespace(utf8::decode(text))) {
      const std::string token = utf8::encode(utf8::fold_token(word));
      if (token.empty()) continue;
      const auto h = sha256(token);
      std::uint64_t bucket = 0;
      for (int k = 0; k < 8; ++k) bucket = (bucket << 8) | h[k];
      v[bucket % dim_] += (h[8] & 1) ? 1.0 : -1.0;
    }
    out.emplace_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------

EmbeddingCache::EmbeddingCache(EmbeddingCache&& other) noexcept {
  std::lock_guard lock(other.mu_);
  entries_ = std::move(other.entries_);
}

EmbeddingCache& EmbeddingCache::operator=(EmbeddingCache&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    entries_ = std::move(other.entries_);
  }
  return *this;
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& digest) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& digest, EmbeddingVector v) {
  std::lock_guard lock(mu_);
  entries_[digest] = std::move(v);
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

VectorTable EmbeddingCache::table() const {
  std::lock_guard lock(mu_);
  VectorTable t;
  for (const auto& [digest, v] : entries_) t.emplace(digest, v.components);
  return t;
}

void EmbeddingCache::merge(const VectorTable& table) {
  std::lock_guard lock(mu_);
  for (const auto& [digest, values] : table) {
    EmbeddingVector v;
    v.components = values;
    v.degenerate = std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; });
    entries_[digest] = std::move(v);
  }
}

EmbeddingCache EmbeddingCache::load(const std::string& path) {
  EmbeddingCache cache;
  cache.merge(read_vector_file(path));
  return cache;
}

EmbeddingCache EmbeddingCache::load_or_empty(const std::string& path) {
  if (!std::filesystem::exists(path)) return EmbeddingCache{};
  return load(path);
}

void EmbeddingCache::save(const std::string& path) const { write_vector_file(path, table()); }

// ---------------------------------------------------------------------------

void Embedder::check_dim(std::size_t d, const std::string& what) {
  if (!dim_) {
    dim_ = d;
  } else if (*dim_ != d) {
    throw DimensionError(fmt::format("embedding dimension drift: run uses dim {}, {} has dim {}", *dim_, what, d));
  }
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) {
  const std::string& model = provider_.model_id();
  std::vector<std::string> digests(texts.size());
  std::unordered_map<std::string, EmbeddingVector> resolved;
  std::vector<std::size_t> pending;  // first index of each digest missing from the cache

  for (std::size_t i = 0; i < texts.size(); ++i) {
    digests[i] = embedding_digest(model, texts[i]);
    if (resolved.count(digests[i])) continue;
    if (auto hit = cache_.get(digests[i])) {
      check_dim(hit->dim(), "cached vector " + digests[i]);
      resolved.emplace(digests[i], std::move(*hit));
    } else {
      resolved.emplace(digests[i], EmbeddingVector{});
      pending.push_back(i);
    }
  }

  std::vector<std::size_t> declined;
  const std::size_t step = std::max<std::size_t>(1, provider_.max_batch());
  for (std::size_t begin = 0; begin < pending.size(); begin += step) {
    const std::size_t end = std::min(pending.size(), begin + step);
    std::vector<std::string> chunk;
    chunk.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) chunk.push_back(texts[pending[k]]);

    std::vector<std::optional<std::vector<double>>> raw;
    try {
      raw = provider_.embed(chunk);
    } catch (const ProviderError& e) {
      throw ProviderError(fmt::format("embedding batch items [{}, {}) of {} pending: {}", begin, end,
                                      pending.size(), e.what()));
    }
    ++provider_calls_;
    provider_texts_ += chunk.size();
    if (raw.size() != chunk.size()) {
      throw ProviderError(fmt::format("embedding batch items [{}, {}): provider returned {} vectors for {} texts",
                                      begin, end, raw.size(), chunk.size()));
    }
    for (std::size_t k = 0; k < raw.size(); ++k) {
      const std::size_t idx = pending[begin + k];
      if (!raw[k]) {
        if (!texts[idx].empty()) {
          throw ProviderError(fmt::format("provider declined non-empty text at batch index {}", idx));
        }
        declined.push_back(idx);
        continue;
      }
      check_dim(raw[k]->size(), fmt::format("provider output for batch index {}", idx));
      EmbeddingVector v = normalize(*raw[k]);
      cache_.put(digests[idx], v);
      resolved[digests[idx]] = std::move(v);
    }
  }

  if (!declined.empty()) {
    if (!dim_) throw ProviderError("cannot size a degenerate vector: no embedding dimension known yet");
    for (std::size_t idx : declined) {
      EmbeddingVector zero{std::vector<double>(*dim_, 0.0), true};
      cache_.put(digests[idx], zero);
      resolved[digests[idx]] = std::move(zero);
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& d : digests) out.push_back(resolved.at(d));
  return out;
}

EmbeddingVector Embedder::embed_one(const std::string& text) {
  return embed_batch(std::span<const std::string>(&text, 1)).front();
}

std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider, EmbeddingCache& cache,
                                         std::span<const std::string> texts) {
  Embedder embedder(provider, cache);
  return embedder.embed_batch(texts);
}

}  // namespace craft
