#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "craft/corpus.hpp"
#include "craft/depth.hpp"
#include "craft/embedding.hpp"
#include "craft/errors.hpp"
#include "craft/metrics.hpp"
#include "craft/pipeline.hpp"
#include "craft/stats.hpp"

namespace py = pybind11;
using namespace craft;

namespace {

EmbeddingVector unit(const std::vector<double>& raw) { return normalize(raw); }

py::dict features_dict(const TextFeatures& f) {
  py::dict d;
  d["word_count"] = f.word_count;
  d["marker_count"] = f.marker_count;
  d["sentence_count"] = f.sentence_count;
  d["sentence_word_ratio"] = f.sentence_word_ratio;
  return d;
}

CorpusFormat format_for(const std::string& path, const std::optional<std::string>& format) {
  if (format) {
    const auto f = parse_corpus_format(*format);
    if (!f) throw ConfigError("unknown corpus format '" + *format + "'");
    return *f;
  }
  return path.ends_with(".jsonl") ? CorpusFormat::RecordLines : CorpusFormat::DelimitedTable;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cultural reasoning evaluation engine";
  m.attr("__version__") = kToolVersion;

  auto base = py::register_exception<Error>(m, "CraftError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ProviderError>(m, "ProviderError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());

  // Embedding primitives
  m.def("embedding_digest", &embedding_digest, py::arg("model_id"), py::arg("text"));
  m.def(
      "normalize",
      [](const std::vector<double>& raw) {
        const auto v = normalize(raw);
        return py::make_tuple(v.components, v.degenerate);
      },
      py::arg("vector"), "Unit vector and whether the input was degenerate (norm below 1e-12).");
  m.def(
      "cosine", [](const std::vector<double>& u, const std::vector<double>& v) { return cosine_similarity(u, v); },
      py::arg("u"), py::arg("v"));

  // Per-item metrics; vectors are normalized on the way in
  m.def(
      "cultural_fluency",
      [](const std::vector<double>& explanation, const std::vector<double>& cultural_vector, double depth,
         double lambda) {
        CulturalVector c;
        c.vector = cultural_vector;
        return cultural_fluency(unit(explanation), c, depth, lambda);
      },
      py::arg("explanation"), py::arg("cultural_vector"), py::arg("depth"), py::arg("lam") = kDefaultLambda);
  m.def(
      "deviation", [](const std::vector<double>& e, const std::vector<double>& q) { return deviation(unit(e), unit(q)); },
      py::arg("explanation"), py::arg("question"));
  m.def(
      "linguistic_adaptation",
      [](const std::vector<double>& en, const std::vector<double>& tl) {
        return linguistic_adaptation(unit(en), unit(tl));
      },
      py::arg("en"), py::arg("tl"));
  m.def(
      "explanation_consistency",
      [](const std::vector<std::vector<double>>& runs) {
        std::vector<EmbeddingVector> v;
        for (const auto& r : runs) v.push_back(unit(r));
        return explanation_consistency(v);
      },
      py::arg("explanations"));
  m.def(
      "answer_consistency",
      [](const std::vector<std::string>& answers, std::optional<int> runs) {
        return answer_consistency(answers, runs.value_or(static_cast<int>(answers.size())));
      },
      py::arg("answers"), py::arg("runs") = py::none());

  // Depth
  py::class_<MarkerLexicon>(m, "MarkerLexicon")
      .def(py::init<>())
      .def_static("load", &load_lexicon, py::arg("path"))
      .def_static("parse", [](const std::string& text) { return parse_lexicon(text); }, py::arg("text"))
      .def("add", [](MarkerLexicon& l, const std::string& lang, const std::string& marker) { l.add(lang, marker); })
      .def("languages", &MarkerLexicon::languages)
      .def("size", &MarkerLexicon::size, py::arg("language"));
  m.def(
      "extract_features",
      [](const std::string& text, const std::string& language, const MarkerLexicon& lexicon) {
        return features_dict(extract_features(text, language, lexicon));
      },
      py::arg("text"), py::arg("language"), py::arg("lexicon"));
  m.def(
      "depth",
      [](const std::string& text, const std::string& language, const MarkerLexicon& lexicon) {
        return depth_score(extract_features(text, language, lexicon));
      },
      py::arg("text"), py::arg("language"), py::arg("lexicon"));

  // Statistics
  m.def(
      "kruskal_wallis",
      [](const std::vector<std::vector<double>>& groups) {
        const auto r = kruskal_wallis(groups);
        py::dict d;
        d["H"] = r.H;
        d["df"] = r.df;
        d["p"] = r.p;
        d["epsilon_squared"] = r.epsilon_squared;
        d["n"] = r.n;
        return d;
      },
      py::arg("groups"));
  m.def(
      "wilcoxon",
      [](const std::vector<double>& before, const std::vector<double>& after) {
        if (before.size() != after.size()) throw DomainError("before and after differ in length");
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t i = 0; i < before.size(); ++i) pairs.emplace_back(before[i], after[i]);
        const auto r = wilcoxon_signed_rank(pairs);
        py::dict d;
        d["W"] = r.W;
        d["W_minus"] = r.W_minus;
        d["n_effective"] = r.n_effective;
        d["p"] = r.p;
        d["z"] = r.z;
        d["exact"] = r.exact;
        d["direction"] = std::string(to_string(r.direction));
        return d;
      },
      py::arg("before"), py::arg("after"), "Signed-rank test on after - before.");
  m.def(
      "bootstrap_ci",
      [](const std::vector<double>& values, double level, int resamples, std::uint64_t seed) {
        const auto ci = bootstrap_mean_ci(values, {level, resamples, seed});
        return py::make_tuple(ci.low, ci.high);
      },
      py::arg("values"), py::arg("level") = 0.95, py::arg("resamples") = 1000, py::arg("seed") = 42);

  // Corpus and pipeline
  m.def(
      "validate_corpus",
      [](const std::string& path, std::optional<std::string> format, int runs) {
        CorpusLoadOptions opts;
        opts.run_count = runs;
        return validate_corpus(load_corpus(path, format_for(path, format), opts)).to_json();
      },
      py::arg("path"), py::arg("format") = py::none(), py::arg("runs") = 3,
      "Validation report as a JSON string.");
  m.def(
      "run_stage",
      [](const std::string& config_path, const std::string& stage, std::optional<bool> strict,
         std::optional<unsigned> jobs, std::optional<std::string> output) {
        auto cfg = RunConfig::load(config_path);
        if (strict) cfg.strict = *strict;
        if (jobs) cfg.jobs = *jobs;
        if (output) {
          const bool default_cache = cfg.cache_path == cfg.output_dir + "/cache/embeddings.vec";
          cfg.output_dir = *output;
          if (default_cache) cfg.cache_path = *output + "/cache/embeddings.vec";
        }
        cfg.check();
        std::ostringstream log;
        {
          py::gil_scoped_release release;
          Pipeline p(cfg, log);
          if (stage == "validate") p.validate();
          else if (stage == "embed") p.embed();
          else if (stage == "build-culture") p.build_culture();
          else if (stage == "score") p.score();
          else if (stage == "stats") p.stats();
          else if (stage == "report") p.report();
          else if (stage == "all") p.all();
          else throw ConfigError("unknown stage '" + stage + "'");
        }
        return log.str();
      },
      py::arg("config"), py::arg("stage") = "all", py::arg("strict") = py::none(), py::arg("jobs") = py::none(),
      py::arg("output") = py::none(), "Runs one pipeline stage and returns its log.");
}
