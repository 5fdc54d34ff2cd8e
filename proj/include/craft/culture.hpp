#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "craft/corpus.hpp"
#include "craft/embedding.hpp"

namespace craft {

/// One culturally salient concept with its native surface forms.
/// Keys of `surface` are "EN", "AR", "BN", "SP". Weight: 1 peripheral, 2 normative, 3 core.
struct CulturalPhrase {
  std::string concept_id;
  int weight = 1;
  std::map<std::string, std::string> surface;

  bool operator==(const CulturalPhrase&) const = default;
};

struct PhraseInventory {
  std::vector<CulturalPhrase> phrases;
  std::vector<Culture> declared_cultures;  // cultures with a surface column

  std::size_t size() const noexcept { return phrases.size(); }
  bool declares(Culture c) const;
};

/// Header: concept_id, weight, surface_en, surface_ar, surface_bn, surface_sp
/// (surface_en optional, at least one culture column required).
/// Throws ParseError for a weight outside {1,2,3}, an empty surface form, or a repeated concept_id.
PhraseInventory parse_inventory(std::string_view text, const std::string& source = "<memory>");
PhraseInventory load_inventory(const std::string& path);

/// Weighted centroid of unit phrase embeddings. Not re-normalized.
struct CulturalVector {
  Culture culture = Culture::AR;
  std::vector<double> vector;
  std::size_t phrase_count = 0;
  std::string model_id;
};

/// c = sum(w_i v_i) / sum(w_i), accumulated in concept_id order so row order never matters.
/// Throws DomainError when the inventory has no phrases for `culture`.
CulturalVector build_cultural_vector(const PhraseInventory& inventory, Culture culture, Embedder& embedder);
CulturalVector build_cultural_vector(const PhraseInventory& inventory, Culture culture,
                                     EmbeddingProvider& provider, EmbeddingCache& cache);

/// Cultural vectors in vector-file form, keyed by culture code.
VectorTable to_vector_table(const std::vector<CulturalVector>& vectors);

}  // namespace craft
