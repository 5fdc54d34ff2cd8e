#include "craft/synth.hpp"

#include <array>
#include <random>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "craft/errors.hpp"
#include "craft/utf8.hpp"

namespace craft {

namespace {

using Words = std::array<std::string_view, 20>;

constexpr Words kFillerEN = {"people",  "community", "tradition", "decision", "value",   "daily",    "life",
                             "choice",  "believe",   "often",     "important", "respect", "society",  "practice",
                             "modern",  "younger",   "generation", "balance",  "personal", "freedom"};
constexpr Words kFillerAR = {"الناس",   "المجتمع", "التقاليد", "القرار", "القيم",  "الحياة", "اليومية",
                             "الاختيار", "نؤمن",    "غالبا",    "مهم",    "الاحترام", "الممارسة", "الحديث",
                             "الشباب",  "الجيل",   "التوازن",  "الشخصية", "الحرية", "العائلة"};
constexpr Words kFillerBN = {"মানুষ",    "সমাজ",   "ঐতিহ্য", "সিদ্ধান্ত", "মূল্যবোধ", "জীবন",      "দৈনন্দিন",
                             "পছন্দ",    "বিশ্বাস", "প্রায়ই", "গুরুত্বপূর্ণ", "সম্মান", "অনুশীলন", "আধুনিক",
                             "তরুণ",     "প্রজন্ম", "ভারসাম্য", "ব্যক্তিগত", "স্বাধীনতা", "পরিবার"};
constexpr Words kFillerSP = {"personas",   "comunidad", "tradición", "decisión", "valores", "vida",     "diaria",
                             "elección",   "creemos",   "menudo",    "importante", "respeto", "sociedad", "práctica",
                             "moderna",    "jóvenes",   "generación", "equilibrio", "personal", "libertad"};
constexpr Words kUnrelated = {"train",  "schedule", "harbor", "weather", "cloudy",  "bicycle", "engine",
                              "river",  "bridge",   "market", "window",  "morning", "printer", "cable",
                              "battery", "garden",  "orbit",  "lantern", "pencil",  "ticket"};

const Words& filler(const std::string& lang) {
  if (lang == "AR") return kFillerAR;
  if (lang == "BN") return kFillerBN;
  if (lang == "SP") return kFillerSP;
  return kFillerEN;
}

std::string question_text(Culture culture, QuestionLanguage lang, int q) {
  if (lang == QuestionLanguage::EN) {
    return fmt::format("Survey item {}: pick one option from 1 to 5 and explain your choice.", q);
  }
  switch (culture) {
    case Culture::AR: return fmt::format("البند {} من الاستبيان: اختر خيارا واحدا من 1 إلى 5 واشرح اختيارك.", q);
    case Culture::BN: return fmt::format("জরিপের প্রশ্ন {}: ১ থেকে ৫ এর মধ্যে একটি বিকল্প বেছে নিন এবং আপনার পছন্দ ব্যাখ্যা করুন।", q);
    case Culture::SP: return fmt::format("Pregunta {} de la encuesta: elige una opción del 1 al 5 y explica tu elección.", q);
  }
  return {};
}

/// Per-model behaviour: how often it weaves in cultural phrases and reasoning markers,
/// and how often it changes its answer between runs.
struct Style {
  double phrase_rate;
  double marker_rate;
  double flip_rate;
};

Style style_for(std::size_t model_index, Culture culture, QuestionLanguage lang) {
  static constexpr Style kBase[] = {{0.45, 0.55, 0.15}, {0.30, 0.35, 0.30}, {0.20, 0.45, 0.40}};
  Style s = kBase[model_index % 3];
  if (lang == QuestionLanguage::TL) {
    // native-language prompts shift phrase use up for BN, down for AR
    if (culture == Culture::BN) s.phrase_rate += 0.20;
    if (culture == Culture::AR) s.phrase_rate -= 0.10;
    s.flip_rate += 0.05;
  }
  return s;
}

std::string marker_text(const MarkerLexicon& lexicon, const std::string& lang, std::mt19937_64& rng) {
  const auto& markers = lexicon.markers(lang);
  if (markers.empty()) return {};
  return utf8::encode(markers[rng() % markers.size()]);
}

std::string explanation(const PhraseInventory& inventory, const MarkerLexicon& lexicon, Culture culture,
                        const std::string& lang, const Style& style, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& words = filler(lang);
  const std::string terminal = lang == "BN" ? "।" : ".";
  const std::string culture_code(to_string(culture));
  const int sentences = 2 + static_cast<int>(rng() % 3);
  std::string out;
  for (int s = 0; s < sentences; ++s) {
    std::string sentence;
    auto append = [&](std::string_view w) {
      if (!sentence.empty()) sentence += ' ';
      sentence += w;
    };
    if (unit(rng) < style.marker_rate) append(marker_text(lexicon, lang, rng));
    const int n = 4 + static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) append(words[rng() % words.size()]);
    if (!inventory.phrases.empty() && unit(rng) < style.phrase_rate) {
      const auto& phrase = inventory.phrases[rng() % inventory.phrases.size()];
      auto it = phrase.surface.find(lang);
      if (it == phrase.surface.end()) it = phrase.surface.find(culture_code);
      if (it != phrase.surface.end()) append(it->second);
    }
    if (!out.empty()) out += ' ';
    out += sentence + terminal;
  }
  return out;
}

std::vector<ResponseRecord> study_layout(const PhraseInventory& inventory, const MarkerLexicon& lexicon,
                                         const SynthOptions& o) {
  struct Cell {
    Culture culture;
    std::vector<std::string> models;
  };
  const std::vector<Cell> cells = {{Culture::AR, {"ACEGPT", "GPT", "Gemini"}},
                                   {Culture::BN, {"GPT", "Gemini"}},
                                   {Culture::SP, {"GPT", "Gemini"}}};
  std::mt19937_64 rng(o.seed);
  std::vector<ResponseRecord> out;
  for (const auto& cell : cells) {
    for (std::size_t mi = 0; mi < cell.models.size(); ++mi) {
      for (int q = 1; q <= o.questions; ++q) {
        for (QuestionLanguage lang : {QuestionLanguage::EN, QuestionLanguage::TL}) {
          const Style style = style_for(mi, cell.culture, lang);
          const std::string text_lang = text_language(cell.culture, lang);
          const int base = 1 + static_cast<int>(rng() % 5);
          for (int run = 1; run <= o.runs; ++run) {
            int answer = base;
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < style.flip_rate) {
              answer = 1 + static_cast<int>((base + rng() % 4) % 5);
            }
            ResponseRecord r;
            r.question_id = q;
            r.culture = cell.culture;
            r.question_language = lang;
            r.run_id = run;
            r.question_text = question_text(cell.culture, lang, q);
            r.answer_label = std::to_string(answer);
            r.explanation = explanation(inventory, lexicon, cell.culture, text_lang, style, rng);
            r.model_name = cell.models[mi];
            out.push_back(std::move(r));
          }
        }
      }
    }
  }
  return out;
}

std::vector<ResponseRecord> directional_layout(const PhraseInventory& inventory, const SynthOptions& o) {
  const Culture culture = Culture::BN;
  const std::string code(to_string(culture));
  std::vector<const CulturalPhrase*> phrases;
  for (const auto& p : inventory.phrases) {
    if (p.surface.contains(code)) phrases.push_back(&p);
  }
  if (phrases.empty()) throw DomainError("directional layout needs inventory phrases for BN");
  std::mt19937_64 rng(o.seed);
  std::vector<ResponseRecord> out;
  for (int q = 1; q <= o.questions; ++q) {
    for (QuestionLanguage lang : {QuestionLanguage::EN, QuestionLanguage::TL}) {
      for (int run = 1; run <= o.runs; ++run) {
        ResponseRecord r;
        r.question_id = q;
        r.culture = culture;
        r.question_language = lang;
        r.run_id = run;
        r.question_text = question_text(culture, lang, q);
        r.answer_label = std::to_string(1 + (q + run) % 5);
        r.model_name = "GPT";
        if (lang == QuestionLanguage::TL) {
          r.explanation = phrases[static_cast<std::size_t>(q + run) % phrases.size()]->surface.at(code);
        } else {
          std::string text;
          for (int i = 0; i < 6; ++i) {
            if (!text.empty()) text += ' ';
            text += kUnrelated[rng() % kUnrelated.size()];
          }
          r.explanation = text;
        }
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace

EvaluationCorpus synthesize_corpus(const PhraseInventory& inventory, const MarkerLexicon& lexicon,
                                   const SynthOptions& options) {
  if (options.questions < 1) throw DomainError("synthetic corpus needs at least one question");
  if (options.runs < 2) throw DomainError("synthetic corpus needs at least two runs");
  auto records = options.layout == SynthLayout::Study ? study_layout(inventory, lexicon, options)
                                                      : directional_layout(inventory, options);
  return EvaluationCorpus(std::move(records), options.runs);
}

std::string synth_config_json(const std::string& corpus_file, const std::string& inventory_file,
                              const std::string& lexicon_file, const std::string& output_dir,
                              int runs) {
  nlohmann::ordered_json j;
  j["corpus"] = {{"path", corpus_file}, {"format", "csv"}};
  j["inventory"] = inventory_file;
  j["lexicon"] = lexicon_file;
  j["provider"] = {{"kind", "hashing"}, {"dim", 256}};
  j["output"] = output_dir;
  j["lambda"] = 0.7;
  j["runs"] = runs;
  j["bootstrap"] = {{"level", 0.95}, {"resamples", 1000}, {"seed", 42}};
  j["strict"] = true;
  return j.dump(2) + "\n";
}

}  // namespace craft
