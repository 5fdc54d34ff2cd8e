#pragma once

#include <cstdint>
#include <string>

#include "craft/corpus.hpp"
#include "craft/culture.hpp"
#include "craft/depth.hpp"

namespace craft {

enum class SynthLayout {
  /// AR with three models, BN and SP with two; every question in EN and TL.
  Study,
  /// One model under BN. TL explanations are inventory phrases, EN explanations
  /// are unrelated text with no reasoning markers.
  Directional,
};

struct SynthOptions {
  SynthLayout layout = SynthLayout::Study;
  int questions = 50;
  int runs = 3;
  std::uint64_t seed = 7;
};

/// Deterministic synthetic corpus for tests and demos. Explanations mix filler words
/// of the text language with inventory surfaces and lexicon markers; the rates vary by
/// model and culture so the scores are not uniform.
EvaluationCorpus synthesize_corpus(const PhraseInventory& inventory, const MarkerLexicon& lexicon,
                                   const SynthOptions& options = {});

/// Config JSON pointing at files relative to its own directory, with a hashing provider.
std::string synth_config_json(const std::string& corpus_file, const std::string& inventory_file,
                              const std::string& lexicon_file, const std::string& output_dir,
                              int runs = 3);

}  // namespace craft
