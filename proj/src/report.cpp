#include "craft/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "craft/csv.hpp"
#include "craft/errors.hpp"
#include "craft/io.hpp"

namespace craft {

namespace {

constexpr std::string_view kMissing = "—";

std::string fixed3(double v) { return std::isnan(v) ? std::string(kMissing) : io::format_fixed(v, 3); }

nlohmann::ordered_json json_number(double v) {
  return std::isnan(v) ? nlohmann::ordered_json() : nlohmann::ordered_json(v);
}

std::string culture_label(Culture c) {
  switch (c) {
    case Culture::AR: return "Arabic";
    case Culture::BN: return "Bengali";
    case Culture::SP: return "Spanish";
  }
  return "?";
}

}  // namespace

Polarity polarity(std::string_view metric) {
  if (metric == metric::kDeviation) return Polarity::LowerBetter;
  if (metric == metric::kLinguisticAdaptation) return Polarity::Neutral;
  return Polarity::HigherBetter;
}

std::string_view shift_arrow(double en_mean, double tl_mean) {
  if (std::isnan(en_mean) || std::isnan(tl_mean) || en_mean == tl_mean) return "";
  return tl_mean > en_mean ? "↑" : "↓";
}

std::string_view shift_verdict(std::string_view metric, double en_mean, double tl_mean) {
  const auto p = polarity(metric);
  if (p == Polarity::Neutral || std::isnan(en_mean) || std::isnan(tl_mean)) return "n/a";
  if (en_mean == tl_mean) return "unchanged";
  const bool rose = tl_mean > en_mean;
  return rose == (p == Polarity::HigherBetter) ? "improvement" : "decline";
}

std::string format_shift_cell(double en_mean, double tl_mean) {
  std::string out = fixed3(en_mean) + " / " + fixed3(tl_mean);
  const auto arrow = shift_arrow(en_mean, tl_mean);
  if (!arrow.empty()) {
    out += ' ';
    out += arrow;
  }
  return out;
}

std::string format_p(double p) {
  if (std::isnan(p)) return "p = " + std::string(kMissing);
  if (p < 0.001) return "p < 0.001";
  return "p = " + io::format_fixed(p, 3);
}

std::string render_culture_table(Culture culture, const std::vector<AggregateRow>& rows, const StatSuite& stats) {
  using QL = QuestionLanguage;
  std::vector<std::string> models;
  for (const auto& r : rows) {
    if (r.culture == culture && std::find(models.begin(), models.end(), r.model) == models.end()) {
      models.push_back(r.model);
    }
  }
  std::sort(models.begin(), models.end());
  const std::string code(to_string(culture));

  auto value = [&](const std::string& model, std::string_view m, std::optional<QL> lang) {
    const auto* row = find_row(rows, model, culture, m, lang);
    return row ? row->mean : std::numeric_limits<double>::quiet_NaN();
  };

  std::string out = fmt::format("# {} cultural metrics (EN → {})\n\n", culture_label(culture), code);
  out += fmt::format("Shifted metrics show EN mean / {} mean with percentile bootstrap intervals; ", code);
  out += "↑ / ↓ give the raw direction of the change. Pooled metrics show mean±sd. Bold = best model.\n\n";

  out += "| Metric |";
  for (const auto& m : models) out += " " + m + " |";
  out += " Kruskal–Wallis |\n|---|";
  for (std::size_t i = 0; i < models.size(); ++i) out += "---|";
  out += "---|\n";

  for (auto m : metric::kAll) {
    const bool shifted = m == metric::kCulturalFluency || m == metric::kDeviation;
    const auto pol = polarity(m);

    // Best model: TL mean for shifted metrics, pooled mean otherwise.
    std::vector<double> keys;
    for (const auto& model : models) keys.push_back(value(model, m, shifted ? std::optional(QL::TL) : std::nullopt));
    std::optional<double> best;
    if (pol != Polarity::Neutral) {
      for (double k : keys) {
        if (std::isnan(k)) continue;
        if (!best || (pol == Polarity::HigherBetter ? k > *best : k < *best)) best = k;
      }
    }

    out += "| " + std::string(metric::display_name(m)) + " |";
    for (std::size_t i = 0; i < models.size(); ++i) {
      std::string cell;
      std::string detail;
      if (shifted) {
        const auto* en = find_row(rows, models[i], culture, m, QL::EN);
        const auto* tl = find_row(rows, models[i], culture, m, QL::TL);
        const double en_mean = en ? en->mean : std::numeric_limits<double>::quiet_NaN();
        const double tl_mean = tl ? tl->mean : std::numeric_limits<double>::quiet_NaN();
        cell = format_shift_cell(en_mean, tl_mean);
        if (en && tl && en->n > 0 && tl->n > 0) {
          detail = fmt::format("<br>[{}, {}] / [{}, {}]", fixed3(en->ci_low), fixed3(en->ci_high), fixed3(tl->ci_low),
                               fixed3(tl->ci_high));
        }
      } else {
        const auto* row = find_row(rows, models[i], culture, m, std::nullopt);
        if (row && row->n > 0) {
          cell = fixed3(row->mean) + "±" + fixed3(row->sd);
        } else {
          cell = std::string(kMissing);
        }
      }
      if (best && !std::isnan(keys[i]) && keys[i] == *best) cell = "**" + cell + "**";
      out += " " + cell + detail + " |";
    }
    if (const auto* kw = stats.find_kw(culture, m)) {
      out += fmt::format(" H={}, {}, ε²={} |\n", fixed3(kw->result.H), format_p(kw->result.p),
                         fixed3(kw->result.epsilon_squared));
    } else {
      out += " " + std::string(kMissing) + " |\n";
    }
  }

  out += fmt::format("\n## Change from EN to {}\n\n", code);
  out += "Deviation: lower is better. Cultural Fluency and consistency: higher is better. ";
  out += "Linguistic Adaptation: reported without a better/worse label.\n\n| Metric |";
  for (const auto& m : models) out += " " + m + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < models.size(); ++i) out += "---|";
  out += "\n";
  for (auto m : {metric::kCulturalFluency, metric::kDeviation, metric::kAnswerConsistency,
                 metric::kExplanationConsistency}) {
    out += "| " + std::string(metric::display_name(m)) + " |";
    for (const auto& model : models) {
      const double en = value(model, m, QL::EN);
      const double tl = value(model, m, QL::TL);
      std::string cell(shift_verdict(m, en, tl));
      const auto arrow = shift_arrow(en, tl);
      if (!arrow.empty()) cell += " " + std::string(arrow);
      out += " " + cell + " |";
    }
    out += "\n";
  }

  std::vector<const WilcoxonEntry*> tests;
  for (const auto& w : stats.wilcoxon) {
    if (w.culture == culture) tests.push_back(&w);
  }
  if (!tests.empty()) {
    out += fmt::format("\n## Wilcoxon signed-rank (EN → {})\n\n", code);
    out += "| Model | Metric | W | n | p | Direction |\n|---|---|---|---|---|---|\n";
    for (const auto* w : tests) {
      out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", w->model, metric::display_name(w->metric),
                         io::format_fixed(w->result.W, 1), w->result.n_effective, format_p(w->result.p),
                         to_string(w->result.direction));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(AxisFlag f) {
  switch (f) {
    case AxisFlag::Normal: return "normal";
    case AxisFlag::Degenerate: return "degenerate";
    case AxisFlag::SingleModel: return "single_model";
  }
  return "normal";
}

RadarData radar_data(const std::vector<AggregateRow>& aggregates) {
  using QL = QuestionLanguage;
  RadarData data;
  std::map<Culture, std::vector<std::string>> models;
  for (const auto& r : aggregates) {
    auto& list = models[r.culture];
    if (std::find(list.begin(), list.end(), r.model) == list.end()) list.push_back(r.model);
  }
  for (auto& [culture, list] : models) {
    std::sort(list.begin(), list.end());
    RadarPanel panel;
    panel.culture = culture;
    panel.models = list;
    for (auto axis_name : kRadarAxes) {
      RadarAxis axis;
      axis.metric = std::string(axis_name);
      for (const auto& model : list) {
        double v = std::numeric_limits<double>::quiet_NaN();
        if (axis_name == "consistency") {
          const auto* a = find_row(aggregates, model, culture, metric::kAnswerConsistency, std::nullopt);
          const auto* e = find_row(aggregates, model, culture, metric::kExplanationConsistency, std::nullopt);
          if (a && e && a->n > 0 && e->n > 0) v = (a->mean + e->mean) / 2.0;
        } else if (axis_name == metric::kLinguisticAdaptation) {
          const auto* r = find_row(aggregates, model, culture, axis_name, std::nullopt);
          if (r && r->n > 0) v = r->mean;
        } else {
          const auto* r = find_row(aggregates, model, culture, axis_name, QL::TL);
          if (r && r->n > 0) v = r->mean;
        }
        if (!std::isnan(v)) axis.raw[model] = v;
      }
      if (!axis.raw.empty()) {
        axis.min = std::min_element(axis.raw.begin(), axis.raw.end(), [](auto& a, auto& b) {
                     return a.second < b.second;
                   })->second;
        axis.max = std::max_element(axis.raw.begin(), axis.raw.end(), [](auto& a, auto& b) {
                     return a.second < b.second;
                   })->second;
      }
      if (axis.raw.size() < 2) {
        axis.flag = AxisFlag::SingleModel;
        axis.normalized = axis.raw;
      } else if (axis.max == axis.min) {
        axis.flag = AxisFlag::Degenerate;
        for (const auto& [model, _] : axis.raw) axis.normalized[model] = 0.5;
      } else {
        for (const auto& [model, v] : axis.raw) axis.normalized[model] = (v - axis.min) / (axis.max - axis.min);
      }
      panel.axes.push_back(std::move(axis));
    }
    data.panels.push_back(std::move(panel));
  }
  return data;
}

std::string radar_to_json(const RadarData& radar) {
  nlohmann::ordered_json root;
  root["normalization"] = "min-max per (culture, axis) across models: (raw - min) / (max - min)";
  root["panels"] = nlohmann::ordered_json::array();
  for (const auto& p : radar.panels) {
    nlohmann::ordered_json panel;
    panel["culture"] = to_string(p.culture);
    panel["models"] = p.models;
    panel["axes"] = nlohmann::ordered_json::array();
    for (const auto& a : p.axes) {
      nlohmann::ordered_json axis;
      axis["metric"] = a.metric;
      axis["min"] = json_number(a.min);
      axis["max"] = json_number(a.max);
      axis["flag"] = to_string(a.flag);
      nlohmann::ordered_json values = nlohmann::ordered_json::object();
      for (const auto& [model, raw] : a.raw) {
        values[model] = {{"raw", raw}, {"normalized", a.normalized.at(model)}};
      }
      axis["values"] = std::move(values);
      panel["axes"].push_back(std::move(axis));
    }
    root["panels"].push_back(std::move(panel));
  }
  return root.dump(2) + "\n";
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string f2(double v) { return io::format_fixed(v, 2); }

std::string axis_label(std::string_view axis) {
  return axis == "consistency" ? std::string("Consistency") : std::string(metric::display_name(axis));
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

}  // namespace

std::string radar_to_svg(const RadarData& radar) {
  constexpr double kPanelW = 420;
  constexpr double kPanelH = 460;
  constexpr double kRadius = 140;
  const double width = kPanelW * static_cast<double>(std::max<std::size_t>(1, radar.panels.size()));

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      f2(width), f2(kPanelH), f2(width), f2(kPanelH));
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", f2(width), f2(kPanelH));

  for (std::size_t pi = 0; pi < radar.panels.size(); ++pi) {
    const auto& panel = radar.panels[pi];
    const double cx = kPanelW * static_cast<double>(pi) + kPanelW / 2;
    const double cy = 220;
    const std::size_t k = panel.axes.size();
    auto point = [&](std::size_t axis, double r) {
      const double angle = -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(axis) / static_cast<double>(k);
      return std::pair{cx + r * std::cos(angle), cy + r * std::sin(angle)};
    };

    out += fmt::format("<g class=\"panel\" data-culture=\"{}\">\n", to_string(panel.culture));
    out += fmt::format("<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n", f2(cx),
                       xml_escape(culture_label(panel.culture)));
    for (double ring : {0.25, 0.5, 0.75, 1.0}) {
      std::string pts;
      for (std::size_t a = 0; a < k; ++a) {
        const auto [x, y] = point(a, ring * kRadius);
        pts += (a ? " " : "") + f2(x) + "," + f2(y);
      }
      out += fmt::format("<polygon class=\"ring\" points=\"{}\" fill=\"none\" stroke=\"#cccccc\"/>\n", pts);
    }
    for (std::size_t a = 0; a < k; ++a) {
      const auto [x, y] = point(a, kRadius);
      const auto [lx, ly] = point(a, kRadius + 22);
      out += fmt::format("<line class=\"axis\" data-metric=\"{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" "
                         "stroke=\"#888888\"/>\n",
                         panel.axes[a].metric, f2(cx), f2(cy), f2(x), f2(y));
      out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", f2(lx), f2(ly),
                         xml_escape(axis_label(panel.axes[a].metric)));
    }
    for (std::size_t mi = 0; mi < panel.models.size(); ++mi) {
      const auto& model = panel.models[mi];
      const char* color = kPalette[mi % std::size(kPalette)];
      std::string pts;
      for (std::size_t a = 0; a < k; ++a) {
        const auto& norm = panel.axes[a].normalized;
        auto it = norm.find(model);
        const double v = it == norm.end() ? 0.0 : std::clamp(it->second, 0.0, 1.0);
        const auto [x, y] = point(a, v * kRadius);
        pts += (a ? " " : "") + f2(x) + "," + f2(y);
      }
      out += fmt::format(
          "<polygon class=\"series\" data-model=\"{}\" points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" "
          "stroke=\"{}\" stroke-width=\"2\"/>\n",
          xml_escape(model), pts, color, color);
      const double ly = 410 + 16 * static_cast<double>(mi);
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
                         f2(cx - 60), f2(ly - 9), color);
      out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", f2(cx - 45), f2(ly), xml_escape(model));
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

// ---------------------------------------------------------------------------

void Manifest::record(StageEntry entry) {
  auto it = std::find_if(stages.begin(), stages.end(), [&](const StageEntry& s) { return s.stage == entry.stage; });
  if (it != stages.end()) {
    *it = std::move(entry);
  } else {
    stages.push_back(std::move(entry));
  }
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["config_digest"] = config_digest;
  j["corpus_digest"] = corpus_digest;
  j["inventory_digest"] = inventory_digest;
  j["lexicon_digest"] = lexicon_digest;
  j["provider_model_id"] = provider_model_id;
  j["lambda"] = lambda;
  j["run_count"] = run_count;
  j["bootstrap"] = {{"level", bootstrap_level}, {"resamples", bootstrap_resamples}, {"seed", bootstrap_seed}};
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : stages) {
    nlohmann::ordered_json e;
    e["stage"] = s.stage;
    e["finished_at"] = s.finished_at;
    e["details"] = s.details;
    j["stages"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(std::string_view text) {
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.tool_version = j.value("tool_version", "");
    m.config_digest = j.value("config_digest", "");
    m.corpus_digest = j.value("corpus_digest", "");
    m.inventory_digest = j.value("inventory_digest", "");
    m.lexicon_digest = j.value("lexicon_digest", "");
    m.provider_model_id = j.value("provider_model_id", "");
    m.lambda = j.value("lambda", 0.0);
    m.run_count = j.value("run_count", 0);
    if (j.contains("bootstrap")) {
      const auto& b = j["bootstrap"];
      m.bootstrap_level = b.value("level", 0.0);
      m.bootstrap_resamples = b.value("resamples", 0);
      m.bootstrap_seed = b.value("seed", std::uint64_t{0});
    }
    for (const auto& e : j.value("stages", nlohmann::json::array())) {
      StageEntry s;
      s.stage = e.value("stage", "");
      s.finished_at = e.value("finished_at", "");
      if (e.contains("details")) s.details = e["details"].get<std::map<std::string, std::string>>();
      m.stages.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest.json", 0, e.what());
  }
  return m;
}

namespace {

std::string summary_json(const ReportBundle& bundle) {
  nlohmann::ordered_json root;
  root["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& r : bundle.aggregates) {
    nlohmann::ordered_json e;
    e["culture"] = to_string(r.culture);
    e["model"] = r.model;
    e["metric"] = r.metric;
    e["question_language"] = r.language ? std::string(to_string(*r.language)) : "ALL";
    e["n"] = r.n;
    e["mean"] = json_number(r.mean);
    e["sd"] = json_number(r.sd);
    e["ci_low"] = json_number(r.ci_low);
    e["ci_high"] = json_number(r.ci_high);
    root["aggregates"].push_back(std::move(e));
  }
  root["kruskal_wallis"] = nlohmann::ordered_json::array();
  for (const auto& k : bundle.stats.kruskal_wallis) {
    nlohmann::ordered_json e;
    e["culture"] = to_string(k.culture);
    e["metric"] = k.metric;
    e["models"] = k.models;
    e["H"] = k.result.H;
    e["df"] = k.result.df;
    e["p"] = k.result.p;
    e["epsilon_squared"] = k.result.epsilon_squared;
    e["group_sizes"] = k.result.group_sizes;
    root["kruskal_wallis"].push_back(std::move(e));
  }
  root["wilcoxon"] = nlohmann::ordered_json::array();
  for (const auto& w : bundle.stats.wilcoxon) {
    nlohmann::ordered_json e;
    e["culture"] = to_string(w.culture);
    e["model"] = w.model;
    e["metric"] = w.metric;
    e["W"] = w.result.W;
    e["W_minus"] = w.result.W_minus;
    e["n_effective"] = w.result.n_effective;
    e["p"] = w.result.p;
    e["exact"] = w.result.exact;
    e["direction"] = to_string(w.result.direction);
    root["wilcoxon"].push_back(std::move(e));
  }
  root["notes"] = bundle.stats.notes;
  return root.dump(2) + "\n";
}

std::string join(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

}  // namespace

std::vector<std::string> export_bundle(const ReportBundle& bundle, ExportFormat format, const std::string& reports_dir) {
  std::vector<std::string> written;
  auto write = [&](const std::string& name, const std::string& contents) {
    const auto path = join(reports_dir, name);
    io::write_text(path, contents);
    written.push_back(path);
  };
  switch (format) {
    case ExportFormat::StructuredRecords:
      write("radar.json", radar_to_json(bundle.radar));
      write("summary.json", summary_json(bundle));
      break;
    case ExportFormat::DelimitedTables:
      write("metrics.csv", aggregates_to_csv(bundle.aggregates));
      write("stats.csv", stats_to_csv(bundle.stats));
      break;
    case ExportFormat::Markdown: {
      std::vector<Culture> cultures;
      for (const auto& r : bundle.aggregates) {
        if (std::find(cultures.begin(), cultures.end(), r.culture) == cultures.end()) cultures.push_back(r.culture);
      }
      std::sort(cultures.begin(), cultures.end());
      for (Culture c : cultures) {
        write(std::string(to_string(c)) + ".md", render_culture_table(c, bundle.aggregates, bundle.stats));
      }
      break;
    }
    case ExportFormat::RadarSvg:
      write("radar.svg", radar_to_svg(bundle.radar));
      break;
  }
  return written;
}

std::vector<std::string> export_all(const ReportBundle& bundle, const std::string& reports_dir) {
  std::vector<std::string> written;
  for (auto f : {ExportFormat::StructuredRecords, ExportFormat::DelimitedTables, ExportFormat::Markdown,
                 ExportFormat::RadarSvg}) {
    auto paths = export_bundle(bundle, f, reports_dir);
    written.insert(written.end(), paths.begin(), paths.end());
  }
  const auto manifest_path = join(reports_dir, "manifest.json");
  io::write_text(manifest_path, bundle.manifest.to_json());
  written.push_back(manifest_path);
  return written;
}

}  // namespace craft
