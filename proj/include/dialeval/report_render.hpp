// Rendering of a MetricsReport, either as plain-text aligned tables
// grouped in the customary result-table sections, or as machine-readable
// line-delimited records (one record per table cell). Percentages and
// averages are rounded to one decimal at render time only.

#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialeval/metrics.hpp"

namespace dialeval::report {

inline std::string format_fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

struct MetricDef {
  const char* name;
  const char* section;
  bool integer;
};

inline const std::vector<MetricDef>& metric_defs() {
  static const std::vector<MetricDef> defs = {
      {"n_dialogues", "corpus", true},
      {"n_user_utterances", "corpus", true},
      {"avg_words_per_utterance", "corpus", false},
      {"wa", "understanding", false},
      {"con_a", "understanding", false},
      {"su", "understanding", false},
      {"ca_ap", "contextual appropriateness", false},
      {"ca_ia", "contextual appropriateness", false},
      {"ca_am", "contextual appropriateness", false},
      {"utc_pct", "recovery", false},
      {"stc_pct", "recovery", false},
      {"ir_pct", "recovery", false},
      {"ts_pct", "system", false},
      {"avg_turns", "system", false},
      {"avg_dialogue_time_s", "system", false},
      {"tcr_pct", "system", false},
  };
  return defs;
}

// label -> metric -> value (nullopt = NO_DATA).
using CellMap = std::map<std::string,
                         std::map<std::string, std::optional<double>>>;

inline CellMap report_cells(const metrics::MetricsReport& report) {
  CellMap cells;
  for (const auto& r : report.rows) {
    auto& row = cells[r.label];
    row["n_dialogues"] = static_cast<double>(r.n_dialogues);
    row["n_user_utterances"] = static_cast<double>(r.n_user_utterances);
    row["avg_words_per_utterance"] = r.avg_words_per_utterance();
    row["wa"] = r.wa.has_value() ? std::optional<double>(r.wa.accuracy_pct())
                                 : std::nullopt;
    row["con_a"] = r.con_a.has_value()
                       ? std::optional<double>(r.con_a.accuracy_pct())
                       : std::nullopt;
    row["su"] = r.su.pct_or_nodata();
    row["ca_ap"] = r.ca_ap.pct_or_nodata();
    row["ca_ia"] = r.ca_ia.pct_or_nodata();
    row["ca_am"] = r.ca_am.pct_or_nodata();
    row["utc_pct"] = r.utc.pct_or_nodata();
    row["stc_pct"] = r.stc.pct_or_nodata();
    row["ir_pct"] = r.ir.pct_or_nodata();
    row["ts_pct"] = r.ts.pct_or_nodata();
    row["avg_turns"] = r.avg_turns();
    row["avg_dialogue_time_s"] = r.avg_duration_s();
    row["tcr_pct"] = r.tcr.pct_or_nodata();
  }
  return cells;
}

inline std::vector<std::string> row_order(const CellMap& cells) {
  std::vector<std::string> order;
  for (const char* label : {"D1", "D2", "ALL"})
    if (cells.count(label)) order.push_back(label);
  for (const auto& [label, row] : cells)
    if (label != "D1" && label != "D2" && label != "ALL")
      order.push_back(label);
  return order;
}

inline std::string render_cell(const MetricDef& def,
                               const std::optional<double>& value) {
  if (!value) return "NO_DATA";
  if (def.integer) return std::to_string(static_cast<long>(*value));
  return format_fixed1(*value);
}

inline std::string render_text(const CellMap& cells,
                               const std::string& trial_label) {
  std::ostringstream out;
  if (!trial_label.empty()) out << "trial: " << trial_label << "\n\n";
  const auto labels = row_order(cells);

  std::string section;
  std::vector<const MetricDef*> columns;
  auto flush = [&]() {
    if (columns.empty()) return;
    std::vector<std::size_t> widths;
    for (const auto* def : columns) {
      std::size_t w = std::string(def->name).size();
      for (const auto& label : labels) {
        auto it = cells.at(label).find(def->name);
        const std::string cell =
            it == cells.at(label).end() ? "NO_DATA"
                                        : render_cell(*def, it->second);
        w = std::max(w, cell.size());
      }
      widths.push_back(w);
    }
    out << section << '\n';
    out << "  " << std::string(8, ' ');
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << "  ";
      const std::string name = columns[c]->name;
      out << std::string(widths[c] - name.size(), ' ') << name;
    }
    out << '\n';
    for (const auto& label : labels) {
      out << "  " << label << std::string(8 - label.size(), ' ');
      for (std::size_t c = 0; c < columns.size(); ++c) {
        auto it = cells.at(label).find(columns[c]->name);
        const std::string cell =
            it == cells.at(label).end() ? "NO_DATA"
                                        : render_cell(*columns[c], it->second);
        out << "  " << std::string(widths[c] - cell.size(), ' ') << cell;
      }
      out << '\n';
    }
    out << '\n';
    columns.clear();
  };

  for (const auto& def : metric_defs()) {
    if (def.section != section) {
      flush();
      section = def.section;
    }
    columns.push_back(&def);
  }
  flush();
  return out.str();
}

inline std::string render_text(const metrics::MetricsReport& report) {
  return render_text(report_cells(report), report.trial_label);
}

// One line-delimited record per table cell. NO_DATA cells carry a status
// field instead of a value.
inline std::string render_machine(const metrics::MetricsReport& report) {
  std::ostringstream out;
  const CellMap cells = report_cells(report);
  for (const auto& label : row_order(cells)) {
    for (const auto& def : metric_defs()) {
      auto it = cells.at(label).find(def.name);
      const std::optional<double> value =
          it == cells.at(label).end() ? std::nullopt : it->second;
      out << "{\"metric\":\"" << def.name << "\",\"record\":\"metric\"";
      if (value) {
        out << ",\"value\":";
        if (def.integer)
          out << static_cast<long>(*value);
        else
          out << format_fixed1(*value);
      } else {
        out << ",\"status\":\"no_data\"";
      }
      out << ",\"strategy\":\"" << label << "\"";
      if (!report.trial_label.empty())
        out << ",\"trial\":\"" << report.trial_label << "\"";
      out << "}\n";
    }
  }
  return out.str();
}

// Parse machine-format records back into cells (for re-rendering as text).
inline CellMap parse_machine(const std::string& text,
                             std::string* trial_label = nullptr) {
  CellMap cells;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (rec.value("record", "") != "metric")
      throw ParseError("expected a metric record", line_no);
    const std::string strategy = rec.value("strategy", "");
    const std::string metric = rec.value("metric", "");
    if (strategy.empty() || metric.empty())
      throw ParseError("metric record needs strategy and metric", line_no);
    if (rec.contains("value"))
      cells[strategy][metric] = rec["value"].get<double>();
    else
      cells[strategy][metric] = std::nullopt;
    if (trial_label && rec.contains("trial"))
      *trial_label = rec["trial"].get<std::string>();
  }
  return cells;
}

}  // namespace dialeval::report
