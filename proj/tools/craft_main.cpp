#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "craft/errors.hpp"
#include "craft/io.hpp"
#include "craft/pipeline.hpp"
#include "craft/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string config;
  std::optional<bool> strict;
  std::optional<unsigned> jobs;
  std::string out;
  std::string provider;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "Run configuration (JSON)")->required();
  cmd->add_flag_callback("--strict", [&f] { f.strict = true; }, "Abort on corpus defects");
  cmd->add_flag_callback("--no-strict", [&f] { f.strict = false; }, "Warn on corpus defects and continue");
  cmd->add_option("-j,--jobs", f.jobs, "Worker threads for scoring")->check(CLI::PositiveNumber);
  cmd->add_option("-o,--out", f.out, "Output directory (overrides the config)");
  cmd->add_option("--provider", f.provider, "Embedding provider kind: file, remote, hashing")
      ->check(CLI::IsMember({"file", "remote", "hashing"}));
}

craft::RunConfig load_config(const CommonFlags& f) {
  auto cfg = craft::RunConfig::load(f.config);
  if (f.strict) cfg.strict = *f.strict;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (!f.out.empty()) {
    const bool default_cache = cfg.cache_path == (fs::path(cfg.output_dir) / "cache" / "embeddings.vec").string();
    cfg.output_dir = f.out;
    if (default_cache) cfg.cache_path = (fs::path(cfg.output_dir) / "cache" / "embeddings.vec").string();
  }
  if (!f.provider.empty()) cfg.provider_kind = *craft::parse_provider_kind(f.provider);
  cfg.check();
  return cfg;
}

int report_error(const std::string& stage, const std::exception& e, int code) {
  std::cerr << fmt::format("craft {}: error: {}\n", stage, e.what());
  return code;
}

template <typename Fn>
int guarded(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const craft::ConfigError& e) {
    return report_error(stage, e, kExitConfig);
  } catch (const craft::IoError& e) {
    return report_error(stage, e, kExitConfig);
  } catch (const craft::Error& e) {
    return report_error(stage, e, kExitData);
  } catch (const std::exception& e) {
    return report_error(stage, e, kExitData);
  }
}

int run_synth(const std::string& out, const std::string& layout, int questions, int runs, std::uint64_t seed,
              const std::string& inventory_path, const std::string& lexicon_path) {
  const auto inventory = craft::load_inventory(inventory_path);
  const auto lexicon = craft::load_lexicon(lexicon_path);
  craft::SynthOptions opts;
  opts.layout = layout == "directional" ? craft::SynthLayout::Directional : craft::SynthLayout::Study;
  opts.questions = questions;
  opts.runs = runs;
  opts.seed = seed;
  const auto corpus = craft::synthesize_corpus(inventory, lexicon, opts);
  craft::io::write_text((fs::path(out) / "corpus.csv").string(),
                        craft::serialize_corpus(corpus, craft::CorpusFormat::DelimitedTable));
  craft::io::write_text((fs::path(out) / "inventory.csv").string(), craft::io::read_text(inventory_path));
  craft::io::write_text((fs::path(out) / "markers.csv").string(), craft::io::read_text(lexicon_path));
  craft::io::write_text((fs::path(out) / "config.json").string(),
                        craft::synth_config_json("corpus.csv", "inventory.csv", "markers.csv", "out", runs));
  std::cout << fmt::format("synth: {} records written to {}\n", corpus.size(), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual cultural reasoning evaluation"};
  app.set_version_flag("--version", std::string(craft::kToolVersion));
  app.require_subcommand(1);

  struct Stage {
    const char* name;
    const char* help;
  };
  const Stage stages[] = {
      {"validate", "Check the corpus and write validation.json"},
      {"embed", "Embed every corpus text and inventory phrase into the cache"},
      {"build-culture", "Build one cultural vector per culture"},
      {"score", "Compute per-record, per-group and per-pair scores"},
      {"stats", "Run Kruskal-Wallis and Wilcoxon tests"},
      {"report", "Aggregate, test and export every report format"},
      {"all", "Run every stage in order"},
  };
  CommonFlags flags;
  std::string selected;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, flags);
    cmd->callback([&selected, name = s.name] { selected = name; });
  }

  auto* exp = app.add_subcommand("export-vectors", "Write a vector file for every text the run needs");
  CommonFlags exp_flags;
  std::string exp_output;
  add_common(exp, exp_flags);
  exp->add_option("--output", exp_output, "Vector file to write")->required();

  auto* synth = app.add_subcommand("synth", "Write a deterministic synthetic corpus with its config");
  std::string synth_out;
  std::string layout = "study";
  int questions = 50;
  int runs = 3;
  std::uint64_t seed = 7;
  std::string inventory_path = std::string(CRAFT_DATA_DIR) + "/inventory_default.csv";
  std::string lexicon_path = std::string(CRAFT_DATA_DIR) + "/markers_default.csv";
  synth->add_option("-o,--out", synth_out, "Directory to write into")->required();
  synth->add_option("--layout", layout, "study or directional")->check(CLI::IsMember({"study", "directional"}));
  synth->add_option("--questions", questions, "Questions per cell")->check(CLI::PositiveNumber);
  synth->add_option("--runs", runs, "Runs per question")->check(CLI::Range(2, 1000));
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--inventory", inventory_path, "Phrase inventory to draw from");
  synth->add_option("--lexicon", lexicon_path, "Marker lexicon to draw from");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (synth->parsed()) {
    return guarded("synth", [&] {
      return run_synth(synth_out, layout, questions, runs, seed, inventory_path, lexicon_path);
    });
  }
  if (exp->parsed()) {
    return guarded("export-vectors", [&] {
      craft::Pipeline p(load_config(exp_flags), std::cout);
      p.export_vectors(exp_output);
      return kExitOk;
    });
  }

  return guarded(selected, [&] {
    craft::Pipeline p(load_config(flags), std::cout);
    if (selected == "validate") {
      const auto report = p.validate();
      std::cout << report.to_text();
      return report.clean() || !p.config().strict ? kExitOk : kExitData;
    }
    if (selected == "embed") p.embed();
    if (selected == "build-culture") p.build_culture();
    if (selected == "score") p.score();
    if (selected == "stats") p.stats();
    if (selected == "report") p.report();
    if (selected == "all") p.all();
    return kExitOk;
  });
}
