#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "craft/culture.hpp"
#include "craft/errors.hpp"
#include "craft/metrics.hpp"
#include "craft/synth.hpp"
#include "helpers.hpp"

using namespace craft;
using QL = QuestionLanguage;

namespace {

EmbeddingVector unit(std::vector<double> v) { return normalize(v); }

CulturalVector cv_of(std::vector<double> v) {
  CulturalVector c;
  c.vector = std::move(v);
  return c;
}

struct Scored {
  EvaluationCorpus corpus;
  ScoreSet scores;
};

Scored score_grid(const std::vector<ResponseRecord>& recs, unsigned jobs = 1) {
  HashingProvider h(64);
  EmbeddingCache cache;
  Embedder e(h, cache);
  const auto inv = load_inventory(testing::source_path("data/inventory_default.csv"));
  const auto lex = load_lexicon(testing::source_path("data/markers_default.csv"));
  EvaluationCorpus corpus(recs, 3);
  std::map<Culture, CulturalVector> cvs;
  for (Culture c : corpus.cultures()) cvs.emplace(c, build_cultural_vector(inv, c, e));
  ScoringConfig sc;
  sc.jobs = jobs;
  auto s = score_corpus(corpus, cvs, e, lex, sc);
  return {std::move(corpus), std::move(s)};
}

}  // namespace

TEST_CASE("cultural fluency examples") {
  CHECK(cultural_fluency(1.0, 1.0) == 1.0);
  CHECK(cultural_fluency(0.0, 0.0) == 0.0);
  CHECK(cultural_fluency(0.2, 0.9, 0.7) == doctest::Approx(0.41).epsilon(1e-15));
  CHECK(cultural_fluency(unit({1, 0}), cv_of({0.75, 0.25}), 0.5) ==
        doctest::Approx(0.7 * 0.75 / std::sqrt(0.625) + 0.15).epsilon(1e-14));
  CHECK_THROWS_AS(cultural_fluency(0.1, 0.1, 1.5), DomainError);
  CHECK_THROWS_AS(cultural_fluency(0.1, 0.1, -0.1), DomainError);
}

TEST_CASE("deviation and adaptation examples") {
  const auto x = unit({1, 0});
  CHECK(deviation(x, x) == 0.0);
  CHECK(deviation(x, unit({0, 1})) == 1.0);
  CHECK(deviation(x, unit({-1, 0})) == 2.0);
  CHECK(linguistic_adaptation(x, x) == 0.0);
  CHECK(linguistic_adaptation(x, unit({0, 1})) == 1.0);
  CHECK(linguistic_adaptation(x, unit({-1, 0})) == 2.0);
  CHECK(deviation(unit({0, 0}), x) == 1.0);
}

TEST_CASE("answer consistency examples and errors") {
  const std::vector<std::string> same = {"2", "2", "2"}, all = {"1", "2", "3"}, two = {"1", "1", "5"};
  CHECK(answer_consistency(same, 3) == 1.0);
  CHECK(answer_consistency(all, 3) == 0.0);
  CHECK(answer_consistency(two, 3) == 0.5);
  CHECK_THROWS_AS(answer_consistency(two, 4), DomainError);
  CHECK_THROWS_AS(answer_consistency(std::vector<std::string>{"1"}, 1), DomainError);
}

TEST_CASE("answer consistency over all 27 triples matches the distinct-count oracle") {
  const std::string alphabet[] = {"a", "b", "c"};
  for (const auto& x : alphabet)
    for (const auto& y : alphabet)
      for (const auto& z : alphabet) {
        const std::vector<std::string> t = {x, y, z};
        const std::size_t distinct = std::set<std::string>(t.begin(), t.end()).size();
        const double expected = distinct == 1 ? 1.0 : distinct == 2 ? 0.5 : 0.0;
        CHECK(answer_consistency(t, 3) == expected);
        std::vector<std::string> p = t;
        std::sort(p.begin(), p.end());
        do {
          CHECK(answer_consistency(p, 3) == expected);
        } while (std::next_permutation(p.begin(), p.end()));
      }
}

TEST_CASE("explanation consistency examples") {
  const auto x = unit({1, 0, 0}), y = unit({0, 1, 0}), z = unit({0, 0, 1});
  CHECK(explanation_consistency(std::vector{x, x, x}) == 1.0);
  CHECK(explanation_consistency(std::vector{unit({1, 0}), unit({0, 1}), unit({1, 0})}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(explanation_consistency(std::vector{x, y, z}) == 0.0);
  CHECK(explanation_consistency(std::vector{x, unit({0, 0, 0}), x}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(explanation_consistency(std::vector{x}), DomainError);
}

TEST_CASE("explanation consistency is invariant under run permutation") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    std::vector<EmbeddingVector> v;
    for (int k = 0; k < 4; ++k) v.push_back(normalize(testing::random_vector(rng, 8)));
    const double base = explanation_consistency(v);
    std::shuffle(v.begin(), v.end(), rng);
    CHECK(std::fabs(explanation_consistency(v) - base) <= 1e-12);
  }
}

TEST_CASE("score_corpus cardinalities") {
  const auto s = score_grid(testing::full_grid({"GPT", "Gemini"}, Culture::BN, 50, 3)).scores;
  CHECK(s.instances.size() == 600);
  CHECK(s.groups.size() == 200);
  CHECK(s.pairs.size() == 300);
  CHECK(s.skipped_records == 0);
  CHECK(s.models(Culture::BN) == std::vector<std::string>{"GPT", "Gemini"});
  CHECK(s.values(metric::kCulturalFluency, "GPT", Culture::BN, QL::TL).size() == 150);
  CHECK(s.values(metric::kAnswerConsistency, "GPT", Culture::BN).size() == 100);
  CHECK(s.values(metric::kLinguisticAdaptation, "GPT", Culture::BN, QL::TL).size() == 150);
}

TEST_CASE("empty corpus scores to empty sets") {
  HashingProvider h(16);
  EmbeddingCache cache;
  Embedder e(h, cache);
  const auto s = score_corpus(EvaluationCorpus({}, 3), {}, e, MarkerLexicon{});
  CHECK(s.instances.empty());
  CHECK(s.groups.empty());
  CHECK(s.pairs.empty());
}

TEST_CASE("incomplete groups are skipped and counted") {
  auto recs = testing::full_grid({"GPT"}, Culture::AR, 4, 3);
  std::erase_if(recs, [](const ResponseRecord& r) {
    return r.question_id == 2 && r.question_language == QL::EN && r.run_id == 1;
  });
  const auto s = score_grid(recs).scores;
  CHECK(s.skipped_incomplete_groups == 1);
  CHECK(s.skipped_records == 2);
  CHECK(s.instances.size() == 24 - 3);
  CHECK(s.groups.size() == 7);
  CHECK(s.pairs.size() == 12 - 3);
}

TEST_CASE("missing cultural vector is an error") {
  HashingProvider h(16);
  EmbeddingCache cache;
  Embedder e(h, cache);
  const EvaluationCorpus c(testing::full_grid({"GPT"}, Culture::AR, 1, 3), 3);
  CHECK_THROWS_AS(score_corpus(c, {}, e, MarkerLexicon{}), DomainError);
}

TEST_CASE("verbatim EN and TL explanations give zero adaptation everywhere") {
  auto recs = testing::full_grid({"GPT"}, Culture::SP, 6, 3);
  const auto s = score_grid(recs).scores;
  for (const auto& p : s.pairs) CHECK(p.linguistic_adaptation == 0.0);
}

TEST_CASE("phrase-based TL explanations beat unrelated EN text on fluency") {
  const auto inv = load_inventory(testing::source_path("data/inventory_default.csv"));
  SynthOptions o;
  o.layout = SynthLayout::Directional;
  const auto corpus = synthesize_corpus(inv, MarkerLexicon{}, o);
  const auto s = score_grid(corpus.records()).scores;
  const auto en = s.values(metric::kCulturalFluency, "GPT", Culture::BN, QL::EN);
  const auto tl = s.values(metric::kCulturalFluency, "GPT", Culture::BN, QL::TL);
  CHECK(mean(tl) > mean(en));
}

TEST_CASE("scoring is deterministic and independent of the job count") {
  const auto inv = load_inventory(testing::source_path("data/inventory_default.csv"));
  const auto lex = load_lexicon(testing::source_path("data/markers_default.csv"));
  SynthOptions o;
  o.questions = 10;
  const auto recs = synthesize_corpus(inv, lex, o).records();
  const auto a = score_grid(recs, 1).scores;
  const auto b = score_grid(recs, 4).scores;
  CHECK(scores_to_jsonl(a) == scores_to_jsonl(b));
  CHECK(instances_to_csv(a) == instances_to_csv(b));
  CHECK(groups_to_csv(a) == groups_to_csv(b));
  CHECK(pairs_to_csv(a) == pairs_to_csv(b));
}

TEST_CASE("metric ranges over random inputs") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u01(0, 1);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t dim = 2 + rng() % 16;
    const auto e = normalize(testing::random_vector(rng, dim));
    const auto q = normalize(testing::random_vector(rng, dim));
    const double cf = cultural_fluency(cosine(e, q), u01(rng));
    CHECK(cf >= -0.7);
    CHECK(cf <= 1.0);
    const double dv = deviation(e, q);
    CHECK(dv >= 0.0);
    CHECK(dv <= 2.0);
    const double ec = explanation_consistency(std::vector{e, q, normalize(testing::random_vector(rng, dim))});
    CHECK(ec >= -1.0);
    CHECK(ec <= 1.0);
  }
}

TEST_CASE("mean and population sd") {
  CHECK(mean(std::vector<double>{0, 1}) == 0.5);
  const std::vector<double> same(7, 0.1);
  CHECK(mean(same) == 0.1);
  CHECK(population_sd(same) == 0.0);
  CHECK(population_sd(std::vector<double>{1, 3}) == 1.0);
  CHECK(std::isnan(mean(std::vector<double>{})));
}

TEST_CASE("bootstrap of identical values is the point") {
  const std::vector<double> same(20, 0.37);
  const auto ci = bootstrap_mean_ci(same, {});
  CHECK(ci.low == 0.37);
  CHECK(ci.high == 0.37);
  const auto none = bootstrap_mean_ci(std::vector<double>{}, {});
  CHECK(std::isnan(none.low));
}

TEST_CASE("bootstrap matches the independent reference implementation") {
  // From tests/oracles/bootstrap_oracle.py.
  const std::vector<double> v = {0.1, 0.4, 0.35, 0.8, 0.2, 0.55, 0.9, 0.05};
  auto a = bootstrap_mean_ci(v, {0.95, 200, 42});
  CHECK(std::fabs(a.low - 0.22468750000000007) <= 1e-12);
  CHECK(std::fabs(a.high - 0.60625) <= 1e-12);
  auto b = bootstrap_mean_ci(v, {0.90, 500, 7});
  CHECK(std::fabs(b.low - 0.23750000000000002) <= 1e-12);
  CHECK(std::fabs(b.high - 0.60625) <= 1e-12);
  auto c = bootstrap_mean_ci(std::vector<double>{1.0, 0.0, 0.5}, {0.95, 100, 1});
  CHECK(c.low == 0.0);
  CHECK(c.high == 1.0);
}

TEST_CASE("bootstrap of the committed 50-value fixture matches its reference file") {
  std::ifstream in(testing::source_path("tests/data/bootstrap_reference.json"));
  const auto ref = nlohmann::json::parse(in);
  const auto values = ref["values"].get<std::vector<double>>();
  REQUIRE(values.size() == 50);
  BootstrapConfig cfg{ref["level"].get<double>(), ref["resamples"].get<int>(), ref["seed"].get<std::uint64_t>()};
  const auto ci = bootstrap_mean_ci(values, cfg);
  CHECK(std::fabs(ci.low - ref["ci_low"].get<double>()) <= 1e-12);
  CHECK(std::fabs(ci.high - ref["ci_high"].get<double>()) <= 1e-12);
  CHECK(std::fabs(mean(values) - ref["mean"].get<double>()) <= 1e-12);
}

TEST_CASE("aggregate rows per culture and model") {
  const auto s = score_grid(testing::full_grid({"GPT", "Gemini"}, Culture::AR, 5, 3)).scores;
  const auto rows = aggregate(s, {0.95, 200, 42});
  // per model: CF x2, Dev x2, AC x3, EC x3, LA x1
  CHECK(rows.size() == 2 * 11);
  const auto* cf = find_row(rows, "GPT", Culture::AR, metric::kCulturalFluency, QL::TL);
  REQUIRE(cf != nullptr);
  CHECK(cf->n == 15);
  CHECK(cf->ci_low <= cf->mean);
  CHECK(cf->mean <= cf->ci_high);
  const auto* ac = find_row(rows, "GPT", Culture::AR, metric::kAnswerConsistency, std::nullopt);
  REQUIRE(ac != nullptr);
  CHECK(ac->n == 10);
  const auto csv = aggregates_to_csv(rows);
  CHECK(csv.rfind("culture,model,metric,question_language,n,mean,sd,ci_low,ci_high\n", 0) == 0);
  CHECK(csv.find(",ALL,") != std::string::npos);
}
