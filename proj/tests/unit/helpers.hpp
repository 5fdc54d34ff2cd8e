#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "craft/corpus.hpp"
#include "craft/embedding.hpp"
#include "craft/errors.hpp"

namespace testing {

inline std::string source_path(const std::string& relative) { return std::string(CRAFT_SOURCE_DIR) + "/" + relative; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("craft-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string path(const std::string& name = "") const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Serves fixed raw vectors per text and counts what it was asked for.
class MapProvider : public craft::EmbeddingProvider {
 public:
  explicit MapProvider(std::map<std::string, std::vector<double>> vectors, std::string model = "map-model")
      : vectors_(std::move(vectors)), model_(std::move(model)) {}

  const std::string& model_id() const override { return model_; }

  std::vector<std::optional<std::vector<double>>> embed(std::span<const std::string> texts) override {
    ++calls;
    std::vector<std::optional<std::vector<double>>> out;
    for (const auto& t : texts) {
      requested.push_back(t);
      auto it = vectors_.find(t);
      if (it == vectors_.end()) {
        if (t.empty()) {
          out.emplace_back(std::nullopt);
          continue;
        }
        throw craft::ProviderError("no vector for '" + t + "'");
      }
      out.emplace_back(it->second);
    }
    return out;
  }

  std::map<std::string, std::vector<double>> vectors_;
  std::string model_;
  int calls = 0;
  std::vector<std::string> requested;
};

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

inline craft::ResponseRecord record(const std::string& model, craft::Culture c, int q, craft::QuestionLanguage l,
                                    int run, const std::string& answer = "1",
                                    const std::string& explanation = "some text",
                                    const std::string& question = "question") {
  craft::ResponseRecord r;
  r.model_name = model;
  r.culture = c;
  r.question_id = q;
  r.question_language = l;
  r.run_id = run;
  r.answer_label = answer;
  r.explanation = explanation;
  r.question_text = question;
  return r;
}

/// models x questions x {EN, TL} x runs, all under one culture.
inline std::vector<craft::ResponseRecord> full_grid(const std::vector<std::string>& models, craft::Culture c,
                                                    int questions, int runs) {
  std::vector<craft::ResponseRecord> out;
  for (const auto& m : models) {
    for (int q = 1; q <= questions; ++q) {
      for (auto l : {craft::QuestionLanguage::EN, craft::QuestionLanguage::TL}) {
        for (int r = 1; r <= runs; ++r) {
          out.push_back(record(m, c, q, l, r, std::to_string(1 + (q + r) % 3),
                               "answer " + std::to_string(q) + " run " + std::to_string(r)));
        }
      }
    }
  }
  return out;
}

}  // namespace testing
