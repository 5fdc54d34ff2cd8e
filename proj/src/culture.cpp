#include "craft/culture.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "craft/csv.hpp"
#include "craft/errors.hpp"
#include "craft/io.hpp"
#include "craft/utf8.hpp"

namespace craft {

bool PhraseInventory::declares(Culture c) const {
  return std::find(declared_cultures.begin(), declared_cultures.end(), c) != declared_cultures.end();
}

PhraseInventory parse_inventory(std::string_view text, const std::string& source) {
  const auto rows = csv::parse(text, source);
  if (rows.empty()) throw ParseError(source, 1, "missing header row");
  const auto& header = rows.front().fields;

  const std::size_t id_col = csv::find_column(header, "concept_id");
  const std::size_t weight_col = csv::find_column(header, "weight");
  if (id_col == std::string::npos) throw ParseError(source, 1, "missing required column 'concept_id'");
  if (weight_col == std::string::npos) throw ParseError(source, 1, "missing required column 'weight'");

  PhraseInventory inv;
  std::vector<std::pair<std::string, std::size_t>> surface_cols;
  if (const auto en = csv::find_column(header, "surface_en"); en != std::string::npos) {
    surface_cols.emplace_back("EN", en);
  }
  for (Culture c : kAllCultures) {
    const std::string code(to_string(c));
    std::string name = "surface_" + code;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (const auto col = csv::find_column(header, name); col != std::string::npos) {
      surface_cols.emplace_back(code, col);
      inv.declared_cultures.push_back(c);
    }
  }
  if (inv.declared_cultures.empty()) {
    throw ParseError(source, 1, "no surface_<culture> columns (expected surface_ar, surface_bn, surface_sp)");
  }

  std::set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.fields.size() != header.size()) {
      throw ParseError(source, row.line, fmt::format("expected {} fields, found {}", header.size(), row.fields.size()));
    }
    CulturalPhrase p;
    p.concept_id = utf8::normalize_whitespace(row.fields[id_col]);
    if (p.concept_id.empty()) throw ParseError(source, row.line, "empty concept_id");
    if (!seen.insert(p.concept_id).second) {
      throw ParseError(source, row.line, "repeated concept_id '" + p.concept_id + "'");
    }
    const std::string w = utf8::normalize_whitespace(row.fields[weight_col]);
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), p.weight);
    if (ec != std::errc() || ptr != w.data() + w.size() || p.weight < 1 || p.weight > 3) {
      throw ParseError(source, row.line,
                       fmt::format("weight '{}' for concept '{}' is not one of 1, 2, 3", w, p.concept_id));
    }
    for (const auto& [code, col] : surface_cols) {
      std::string s = utf8::normalize_whitespace(row.fields[col]);
      if (s.empty() && code != "EN") {
        throw ParseError(source, row.line,
                         fmt::format("concept '{}' has no {} surface form", p.concept_id, code));
      }
      if (!s.empty()) p.surface[code] = std::move(s);
    }
    inv.phrases.push_back(std::move(p));
  }
  return inv;
}

PhraseInventory load_inventory(const std::string& path) { return parse_inventory(io::read_text(path), path); }

CulturalVector build_cultural_vector(const PhraseInventory& inventory, Culture culture, Embedder& embedder) {
  const std::string code(to_string(culture));
  std::vector<const CulturalPhrase*> phrases;
  for (const auto& p : inventory.phrases) {
    if (p.surface.count(code)) phrases.push_back(&p);
  }
  if (phrases.empty()) throw DomainError(fmt::format("phrase inventory has no {} phrases", code));
  std::sort(phrases.begin(), phrases.end(),
            [](const CulturalPhrase* a, const CulturalPhrase* b) { return a->concept_id < b->concept_id; });

  std::vector<std::string> texts;
  texts.reserve(phrases.size());
  for (const auto* p : phrases) texts.push_back(p->surface.at(code));
  const auto vectors = embedder.embed_batch(texts);

  CulturalVector out;
  out.culture = culture;
  out.phrase_count = phrases.size();
  out.model_id = embedder.model_id();
  out.vector.assign(vectors.front().dim(), 0.0);
  double total_weight = 0.0;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const double w = phrases[i]->weight;
    total_weight += w;
    for (std::size_t k = 0; k < out.vector.size(); ++k) out.vector[k] += w * vectors[i].components[k];
  }
  for (double& x : out.vector) x /= total_weight;
  return out;
}

CulturalVector build_cultural_vector(const PhraseInventory& inventory, Culture culture,
                                     EmbeddingProvider& provider, EmbeddingCache& cache) {
  Embedder embedder(provider, cache);
  return build_cultural_vector(inventory, culture, embedder);
}

VectorTable to_vector_table(const std::vector<CulturalVector>& vectors) {
  VectorTable t;
  for (const auto& v : vectors) t.emplace(std::string(to_string(v.culture)), v.vector);
  return t;
}

}  // namespace craft
