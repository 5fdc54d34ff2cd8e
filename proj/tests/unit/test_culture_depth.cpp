#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "craft/culture.hpp"
#include "craft/depth.hpp"
#include "craft/errors.hpp"
#include "helpers.hpp"

using namespace craft;

namespace {

const char* kInvHeader = "concept_id,weight,surface_en,surface_ar,surface_bn,surface_sp\n";

MarkerLexicon default_lexicon() { return load_lexicon(testing::source_path("data/markers_default.csv")); }

}  // namespace

TEST_CASE("shipped inventory has 33 phrases per culture and the published weights") {
  const auto inv = load_inventory(testing::source_path("data/inventory_default.csv"));
  CHECK(inv.size() == 33);
  for (Culture c : kAllCultures) {
    CHECK(inv.declares(c));
    const std::string code(to_string(c));
    CHECK(std::count_if(inv.phrases.begin(), inv.phrases.end(),
                        [&](const CulturalPhrase& p) { return p.surface.contains(code); }) == 33);
  }
  auto find = [&](const std::string& en) {
    return *std::find_if(inv.phrases.begin(), inv.phrases.end(),
                         [&](const CulturalPhrase& p) { return p.surface.at("EN") == en; });
  };
  CHECK(find("Family unity").weight == 3);
  CHECK(find("Respect for elders").weight == 2);
  CHECK(find("Protection of the weak").weight == 1);
  CHECK(find("Family unity").surface.at("AR") == "وحدة الأسرة");
  CHECK(find("Social harmony").surface.at("SP") == "armonía social");
  CHECK(find("Hospitality to guests").surface.at("BN") == "অতিথিপরায়ণতা");
}

TEST_CASE("inventory rejects bad rows with their line") {
  auto line_of = [](const std::string& body) -> std::size_t {
    try {
      parse_inventory(std::string(kInvHeader) + body, "inv.csv");
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("a,5,x,y,z,w\n") == 2);
  CHECK(line_of("a,0,x,y,z,w\n") == 2);
  CHECK(line_of("a,two,x,y,z,w\n") == 2);
  CHECK(line_of("a,1,x,y,z,w\nb,1,x,,z,w\n") == 3);
  CHECK(line_of("a,1,x,y,z,w\na,2,x,y,z,w\n") == 3);
  CHECK_THROWS_AS(parse_inventory("concept_id,weight,surface_en\na,1,x\n"), ParseError);
}

TEST_CASE("inventory without an English column loads") {
  const auto inv = parse_inventory("concept_id,weight,surface_bn\nk,3,কারণ\n");
  CHECK(inv.size() == 1);
  CHECK(inv.declares(Culture::BN));
  CHECK_FALSE(inv.declares(Culture::AR));
}

TEST_CASE("cultural vector examples") {
  testing::MapProvider p({{"x", {1, 0}}, {"y", {0, 1}}, {"x2", {2, 0}}, {"z", {3, 4}}});
  EmbeddingCache cache;

  SUBCASE("single phrase gives its unit vector") {
    const auto inv = parse_inventory("concept_id,weight,surface_ar\na,2,z\n");
    const auto cv = build_cultural_vector(inv, Culture::AR, p, cache);
    CHECK(cv.vector[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(cv.vector[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(cv.phrase_count == 1);
    CHECK(cv.model_id == "map-model");
  }
  SUBCASE("identical embeddings with weights 1 and 3 give that vector") {
    const auto inv = parse_inventory("concept_id,weight,surface_ar\na,1,x\nb,3,x2\n");
    CHECK(build_cultural_vector(inv, Culture::AR, p, cache).vector == std::vector<double>{1, 0});
  }
  SUBCASE("(1,0) weight 3 and (0,1) weight 1 give (0.75, 0.25)") {
    const auto inv = parse_inventory("concept_id,weight,surface_ar\na,3,x\nb,1,y\n");
    CHECK(build_cultural_vector(inv, Culture::AR, p, cache).vector == std::vector<double>{0.75, 0.25});
  }
  SUBCASE("missing culture is an error") {
    const auto inv = parse_inventory("concept_id,weight,surface_ar\na,3,x\n");
    CHECK_THROWS_AS(build_cultural_vector(inv, Culture::SP, p, cache), DomainError);
  }
}

TEST_CASE("depth feature examples") {
  MarkerLexicon lex;
  lex.add("EN", "because");
  CHECK(extract_features("", "EN", lex) == TextFeatures{0, 0, 0, 0.0});
  const auto f = extract_features("I agree because family matters.", "EN", lex);
  CHECK(f.word_count == 5);
  CHECK(f.marker_count == 1);
  CHECK(f.sentence_count == 1);
  CHECK(f.sentence_word_ratio == doctest::Approx(0.2).epsilon(1e-15));
  const auto one = extract_features("word", "EN", lex);
  CHECK(one.word_count == 1);
  CHECK(one.sentence_count == 1);
  CHECK(one.sentence_word_ratio == 1.0);
}

TEST_CASE("depth matches the independent script on ten texts") {
  struct Row {
    const char* lang;
    const char* text;
    std::size_t L, M, sentences;
    double d;
  };
  // Generated by tests/oracles/depth_oracle.py against data/markers_default.csv.
  const Row rows[] = {
      {"EN", "I agree because family matters.", 5, 1, 1, 0.48854897552345256},
      {"EN", "", 0, 0, 0, 0.0},
      {"EN", "Family is important. Therefore we obey! As a result, peace follows?", 11, 2, 3, 0.7063864586136892},
      {"EN", "because because because because", 4, 4, 1, 0.7473174140334352},
      {"EN",
       "word word word word word word word word word word word word word word word word word word word word "
       "word word word word word word word word word word word word word word word word word word word word "
       "word word word word word word word word word word word word word word word word word word word word.",
       60, 0, 1, 0.4307036550218772},
      {"AR", "أوافق لأن الأسرة مهمة. لذلك نحترم الكبار؟", 7, 2, 2, 0.6667298640798017},
      {"BN", "আমি একমত কারণ পরিবার গুরুত্বপূর্ণ। তাই আমরা সম্মান করি।", 9, 2, 2, 0.6792440495360554},
      {"SP", "Estoy de acuerdo porque la familia importa. Por lo tanto, respetamos a los mayores.", 14, 2, 2,
       0.6942369982184153},
      {"EN", "No terminal punctuation here since it trails", 7, 1, 1, 0.4969528473116367},
      {"EN", "Wait... what?! Really.", 3, 0, 3, 0.3410240675251532},
  };
  const auto lex = default_lexicon();
  for (const auto& r : rows) {
    CAPTURE(r.text);
    const auto f = extract_features(r.text, r.lang, lex);
    CHECK(f.word_count == r.L);
    CHECK(f.marker_count == r.M);
    CHECK(f.sentence_count == r.sentences);
    CHECK(std::fabs(depth_score(f) - r.d) <= 1e-9);
  }
}

TEST_CASE("depth score examples") {
  CHECK(depth_score({50, 3, 0, 0.0}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(depth_score({0, 0, 0, 0.0}) == 0.0);
  CHECK(std::fabs(depth_score({50, 3, 5, 0.1}) - (0.8 + 0.2 * (1.0 - std::exp(-1.0)))) <= 1e-15);
  CHECK(depth_score({50, 3, 5, 0.1}) == doctest::Approx(0.9264).epsilon(1e-4));
  CHECK(depth_score({100, 0, 1, 0.0}) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("depth is bounded, monotone and saturating") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t L = rng() % 200;
    const std::size_t M = rng() % 8;
    const double S = std::uniform_real_distribution<double>(0, 1)(rng);
    const double d = depth_score({L, M, 1, S});
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(depth_score({L + 1, M, 1, S}) >= d);
    CHECK(depth_score({L, M + 1, 1, S}) >= d);
    CHECK(depth_score({L, M, 1, S + 0.01}) >= d);
    if (M >= 3) CHECK(depth_score({L, M + 1, 1, S}) == d);
    if (L > 50) CHECK(depth_score({L + 17, M, 1, S}) == d);
  }
}

TEST_CASE("marker matching is whole-word, case-folded and longest first") {
  MarkerLexicon lex;
  lex.add("en", "as a result");
  lex.add("EN", "result");
  lex.add("EN", "So");
  CHECK(lex.size("EN") == 3);
  CHECK(extract_features("As a result, the result holds.", "EN", lex).marker_count == 2);
  CHECK(extract_features("also resulting", "EN", lex).marker_count == 0);
  CHECK(extract_features("SO so", "en", lex).marker_count == 2);
  CHECK(extract_features("so", "AR", lex).marker_count == 0);
  CHECK_THROWS_AS(lex.add("EN", " , "), DomainError);
  CHECK_THROWS_AS(parse_lexicon("language\nEN\n"), ParseError);
}

TEST_CASE("Bengali and Arabic sentence terminators") {
  MarkerLexicon lex;
  CHECK(extract_features("এক। দুই।", "BN", lex).sentence_count == 2);
  CHECK(extract_features("واحد؟ اثنان۔ ثلاثة", "AR", lex).sentence_count == 3);
}
