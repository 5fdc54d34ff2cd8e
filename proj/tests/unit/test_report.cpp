#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <regex>

#include <json.hpp>

#include "craft/io.hpp"
#include "craft/report.hpp"
#include "helpers.hpp"

using namespace craft;
using QL = QuestionLanguage;

namespace {

AggregateRow row(const std::string& model, Culture c, std::string_view metric, std::optional<QL> lang, double mean,
                 std::size_t n = 150) {
  AggregateRow r;
  r.model = model;
  r.culture = c;
  r.metric = std::string(metric);
  r.language = lang;
  r.mean = mean;
  r.sd = 0.05;
  r.ci_low = mean - 0.012;
  r.ci_high = mean + 0.012;
  r.n = n;
  return r;
}

/// Two models under AR.
std::vector<AggregateRow> fixture_rows() {
  std::vector<AggregateRow> rows;
  auto model = [&](const std::string& m, double cf_en, double cf_tl, double dev_en, double dev_tl, double ac,
                   double ec, double la) {
    rows.push_back(row(m, Culture::AR, metric::kCulturalFluency, QL::EN, cf_en));
    rows.push_back(row(m, Culture::AR, metric::kCulturalFluency, QL::TL, cf_tl));
    rows.push_back(row(m, Culture::AR, metric::kDeviation, QL::EN, dev_en));
    rows.push_back(row(m, Culture::AR, metric::kDeviation, QL::TL, dev_tl));
    for (auto lang : {std::optional<QL>(QL::EN), std::optional<QL>(QL::TL), std::optional<QL>()}) {
      rows.push_back(row(m, Culture::AR, metric::kAnswerConsistency, lang, ac + (lang ? 0.01 : 0.0), 50));
      rows.push_back(row(m, Culture::AR, metric::kExplanationConsistency, lang, ec - (lang ? 0.01 : 0.0), 50));
    }
    rows.push_back(row(m, Culture::AR, metric::kLinguisticAdaptation, std::nullopt, la));
  };
  model("GPT", 0.330, 0.282, 0.612, 0.580, 0.82, 0.74, 0.41);
  model("Gemini", 0.301, 0.301, 0.640, 0.655, 0.76, 0.70, 0.38);
  return rows;
}

StatSuite fixture_stats() {
  StatSuite s;
  KWResult kw;
  kw.H = 34.86;
  kw.df = 1;
  kw.p = 2.1e-9;
  kw.epsilon_squared = 0.0388;
  s.kruskal_wallis.push_back({Culture::AR, std::string(metric::kCulturalFluency), {"GPT", "Gemini"}, kw});
  kw.H = 2.17;
  kw.p = 0.141;
  kw.epsilon_squared = 0.0024;
  s.kruskal_wallis.push_back({Culture::AR, std::string(metric::kDeviation), {"GPT", "Gemini"}, kw});
  WilcoxonResult w;
  w.W = 3012;
  w.n_effective = 150;
  w.p = 0.0004;
  w.direction = ShiftDirection::Decrease;
  s.wilcoxon.push_back({"GPT", Culture::AR, std::string(metric::kCulturalFluency), w});
  return s;
}

}  // namespace

TEST_CASE("shift cell formatting") {
  CHECK(format_shift_cell(0.330, 0.282) == "0.330 / 0.282 ↓");
  CHECK(format_shift_cell(0.282, 0.330) == "0.282 / 0.330 ↑");
  CHECK(format_shift_cell(0.3, 0.3) == "0.300 / 0.300");
  CHECK(format_shift_cell(NAN, 0.3) == "— / 0.300");
  CHECK(format_p(0.0004) == "p < 0.001");
  CHECK(format_p(0.141) == "p = 0.141");
}

TEST_CASE("arrows follow the sign of the change and verdicts follow polarity") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const double en = u(rng), tl = u(rng);
    const auto arrow = shift_arrow(en, tl);
    CHECK(arrow == (tl > en ? "↑" : tl < en ? "↓" : ""));
    const auto cf = shift_verdict(metric::kCulturalFluency, en, tl);
    const auto dev = shift_verdict(metric::kDeviation, en, tl);
    CHECK(cf == (tl > en ? "improvement" : tl < en ? "decline" : "unchanged"));
    CHECK(dev == (tl < en ? "improvement" : tl > en ? "decline" : "unchanged"));
    CHECK(shift_verdict(metric::kLinguisticAdaptation, en, tl) == "n/a");
  }
}

TEST_CASE("culture table renders the published example cell and bolds the best model") {
  const auto md = render_culture_table(Culture::AR, fixture_rows(), fixture_stats());
  CHECK(md.find("0.330 / 0.282 ↓") != std::string::npos);
  CHECK(md.find("0.301 / 0.301**<br>") != std::string::npos);  // equal means, no arrow
  CHECK(md.find("**0.330 / 0.282 ↓**") == std::string::npos);  // Gemini has the higher TL fluency
  CHECK(md.find("**0.301 / 0.301**") != std::string::npos);
  CHECK(md.find("H=34.860, p < 0.001, ε²=0.039") != std::string::npos);
  CHECK(md.find("H=2.170, p = 0.141") != std::string::npos);
}

TEST_CASE("culture table numbers equal the aggregates after rounding") {
  const auto rows = fixture_rows();
  const auto md = render_culture_table(Culture::AR, rows, fixture_stats());
  for (const auto& r : rows) {
    if (r.language && r.metric != metric::kCulturalFluency && r.metric != metric::kDeviation) continue;
    CHECK(md.find(io::format_fixed(r.mean, 3)) != std::string::npos);
  }
}

TEST_CASE("single-model culture is bold") {
  std::vector<AggregateRow> rows;
  for (const auto& r : fixture_rows())
    if (r.model == "GPT") rows.push_back(r);
  const auto md = render_culture_table(Culture::AR, rows, {});
  CHECK(md.find("**0.330 / 0.282 ↓**") != std::string::npos);
}

TEST_CASE("markdown export matches the golden file") {
  const auto md = render_culture_table(Culture::AR, fixture_rows(), fixture_stats());
  const auto golden = testing::source_path("tests/data/golden/AR.md");
  if (std::getenv("CRAFT_UPDATE_GOLDEN")) io::write_text(golden, md);
  CHECK(md == io::read_text(golden));
}

TEST_CASE("radar normalization") {
  auto rows_with = [](const std::vector<std::pair<std::string, double>>& cf) {
    std::vector<AggregateRow> rows;
    for (const auto& [m, v] : cf) rows.push_back(row(m, Culture::SP, metric::kCulturalFluency, QL::TL, v));
    return rows;
  };
  {
    const auto r = radar_data(rows_with({{"A", 0.2}, {"B", 0.8}}));
    const auto& axis = r.panels.at(0).axes.at(0);
    CHECK(axis.metric == "cultural_fluency");
    CHECK(axis.normalized.at("A") == 0.0);
    CHECK(axis.normalized.at("B") == 1.0);
    CHECK(axis.flag == AxisFlag::Normal);
    CHECK(r.panels[0].axes.size() == 4);
  }
  {
    const auto r = radar_data(rows_with({{"A", 0.4}, {"B", 0.4}, {"C", 0.4}}));
    const auto& axis = r.panels.at(0).axes.at(0);
    CHECK(axis.flag == AxisFlag::Degenerate);
    for (const auto& [m, v] : axis.normalized) CHECK(v == 0.5);
  }
  {
    const auto r = radar_data(rows_with({{"A", 0.3}, {"B", 0.4}, {"C", 0.5}}));
    const auto& axis = r.panels.at(0).axes.at(0);
    CHECK(axis.normalized.at("A") == 0.0);
    CHECK(axis.normalized.at("B") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(axis.normalized.at("C") == 1.0);
  }
  {
    const auto r = radar_data(rows_with({{"A", 0.3}}));
    CHECK(r.panels.at(0).axes.at(0).flag == AxisFlag::SingleModel);
  }
}

TEST_CASE("radar normalization preserves model order") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AggregateRow> rows;
    for (int m = 0; m < 4; ++m) rows.push_back(row("M" + std::to_string(m), Culture::BN, metric::kDeviation, QL::TL, u(rng)));
    const auto axis = radar_data(rows).panels.at(0).axes.at(1);
    for (const auto& [a, va] : axis.raw)
      for (const auto& [b, vb] : axis.raw)
        if (va < vb) CHECK(axis.normalized.at(a) < axis.normalized.at(b));
  }
}

TEST_CASE("radar svg has four axes per panel and one polygon per model") {
  const auto radar = radar_data(fixture_rows());
  const auto svg = radar_to_svg(radar);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  const std::regex axis("data-metric=\"");
  const std::regex poly("<polygon[^>]*data-model=\"");
  CHECK(std::distance(std::sregex_iterator(svg.begin(), svg.end(), axis), std::sregex_iterator()) == 4);
  CHECK(std::distance(std::sregex_iterator(svg.begin(), svg.end(), poly), std::sregex_iterator()) == 2);
  const auto j = nlohmann::json::parse(radar_to_json(radar));
  CHECK(j["panels"].size() == 1);
  CHECK(j["panels"][0]["axes"].size() == 4);
}

TEST_CASE("manifest round-trips and replaces stage entries") {
  Manifest m;
  m.tool_version = "x";
  m.config_digest = "abc";
  m.bootstrap_seed = 42;
  m.record({"score", "t1", {{"n", "1"}}});
  m.record({"stats", "t2", {}});
  m.record({"score", "t3", {{"n", "2"}}});
  REQUIRE(m.stages.size() == 2);
  CHECK(m.stages[0].finished_at == "t3");
  const auto back = Manifest::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
}

TEST_CASE("exporting the same bundle twice is byte-identical") {
  ReportBundle b;
  b.aggregates = fixture_rows();
  b.stats = fixture_stats();
  b.radar = radar_data(b.aggregates);
  b.manifest.tool_version = "t";
  testing::TempDir d1, d2;
  const auto files = export_all(b, d1.path());
  export_all(b, d2.path());
  CHECK(files.size() == 7);
  for (const auto& f : files) {
    const auto name = std::filesystem::path(f).filename().string();
    CHECK(io::read_text(d1.path(name)) == io::read_text(d2.path(name)));
  }
  CHECK(std::filesystem::exists(d1.path("AR.md")));
  CHECK(std::filesystem::exists(d1.path("metrics.csv")));
  CHECK(std::filesystem::exists(d1.path("radar.svg")));
  CHECK(std::filesystem::exists(d1.path("summary.json")));
}
