#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "driftcheck/backend.hpp"
#include "driftcheck/record.hpp"

namespace driftcheck {

struct CellStat {
  std::size_t total = 0;
  std::size_t passed = 0;
};

struct AtolRow {
  double atol = 0.0;
  std::size_t total = 0;
  std::size_t passed = 0;
};

struct SummaryTables {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t errored = 0;
  std::vector<AtolRow> by_atol;  // ascending atol
  // model -> target backend -> pass stats
  std::map<std::string, std::map<std::string, CellStat>> by_model_backend;
  std::map<std::string, std::size_t> taxonomy_counts;  // every category
  std::map<std::string, double> latency_ms;  // backend -> median of medians
};

namespace detail {

inline constexpr const char* kTaxonomyOrder[] = {
    "NONE", "NUMERIC_DRIFT", "ORDER_TIEBREAK", "UNSUPPORTED_OP",
    "RUNTIME_ERROR"};

inline std::string target_of_pair(const std::string& pair) {
  const auto pos = pair.find("->");
  return pos == std::string::npos ? pair : pair.substr(pos + 2);
}

inline std::string ref_of_pair(const std::string& pair) {
  const auto pos = pair.find("->");
  return pos == std::string::npos ? pair : pair.substr(0, pos);
}

inline std::string format_pct(std::size_t passed, std::size_t total) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f",
                total == 0 ? 0.0 : 100.0 * double(passed) / double(total));
  return buf;
}

// Shortest round-trip float text, shared with the JSONL representation.
inline std::string format_double(double v) {
  return nlohmann::json(v).dump();
}

}  // namespace detail

// Aggregates the report tables: overall counts, per-atol rows, the
// model x target-backend pass matrix, taxonomy distribution, and per-backend
// latency medians. ERROR records count toward totals, never toward passed.
inline SummaryTables summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw EmptyReportError("no records to summarize");
  SummaryTables t;
  for (const char* c : detail::kTaxonomyOrder) t.taxonomy_counts[c] = 0;

  std::map<double, CellStat> atol_cells;
  std::map<std::string, std::vector<double>> latencies;
  for (const auto& r : records) {
    const bool pass = r.status == RunStatus::Pass;
    ++t.total;
    if (pass) ++t.passed;
    if (r.status == RunStatus::Fail) ++t.failed;
    if (r.status == RunStatus::Error) ++t.errored;

    auto& cell = atol_cells[r.atol];
    ++cell.total;
    if (pass) ++cell.passed;

    auto& mb = t.by_model_backend[r.model][detail::target_of_pair(
        r.backend_pair)];
    ++mb.total;
    if (pass) ++mb.passed;

    ++t.taxonomy_counts[failure_category_name(r.taxonomy)];

    if (r.latency_ms_ref.has_value()) {
      latencies[detail::ref_of_pair(r.backend_pair)].push_back(
          *r.latency_ms_ref);
    }
    if (r.latency_ms_tgt.has_value()) {
      latencies[detail::target_of_pair(r.backend_pair)].push_back(
          *r.latency_ms_tgt);
    }
  }
  for (const auto& [atol, cell] : atol_cells) {
    t.by_atol.push_back({atol, cell.total, cell.passed});
  }
  for (auto& [backend, v] : latencies) {
    t.latency_ms[backend] = median_latency_ms(v);
  }
  return t;
}

inline std::string render_markdown(const SummaryTables& t) {
  std::string out;
  out += "# driftcheck report\n\n";
  out += "## Overall\n\n";
  out += "| Metric | Value |\n| --- | --- |\n";
  out += "| Total checks | " + std::to_string(t.total) + " |\n";
  out += "| Passed | " + std::to_string(t.passed) + " |\n";
  out += "| Failed | " + std::to_string(t.failed) + " |\n";
  out += "| Errored | " + std::to_string(t.errored) + " |\n";
  out += "| Pass rate | " + detail::format_pct(t.passed, t.total) + "% |\n";

  out += "\n## Pass rate by atol\n\n";
  out += "| atol | Total | Passed | Pass % |\n| --- | --- | --- | --- |\n";
  for (const auto& row : t.by_atol) {
    out += "| " + detail::format_double(row.atol) + " | " +
           std::to_string(row.total) + " | " + std::to_string(row.passed) +
           " | " + detail::format_pct(row.passed, row.total) + " |\n";
  }

  out += "\n## Pass rate by model and target backend\n\n";
  std::vector<std::string> targets;
  for (const auto& [model, row] : t.by_model_backend) {
    for (const auto& [target, cell] : row) {
      if (std::find(targets.begin(), targets.end(), target) == targets.end()) {
        targets.push_back(target);
      }
    }
  }
  std::sort(targets.begin(), targets.end());
  out += "| Model |";
  for (const auto& tgt : targets) out += " " + tgt + " |";
  out += "\n| --- |";
  for (std::size_t i = 0; i < targets.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& [model, row] : t.by_model_backend) {
    out += "| " + model + " |";
    for (const auto& tgt : targets) {
      auto it = row.find(tgt);
      if (it == row.end()) {
        out += " - |";
      } else {
        out += " " + detail::format_pct(it->second.passed, it->second.total) +
               "% (" + std::to_string(it->second.passed) + "/" +
               std::to_string(it->second.total) + ") |";
      }
    }
    out += "\n";
  }

  out += "\n## Failure taxonomy\n\n";
  out += "| Category | Count |\n| --- | --- |\n";
  for (const char* c : detail::kTaxonomyOrder) {
    out += "| " + std::string(c) + " | " +
           std::to_string(t.taxonomy_counts.at(c)) + " |\n";
  }

  out += "\n## Median latency by backend\n\n";
  out += "| Backend | Median of medians (ms) |\n| --- | --- |\n";
  for (const auto& [backend, ms] : t.latency_ms) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", ms);
    out += "| " + backend + " | " + buf + " |\n";
  }
  return out;
}

// One CSV document per table, keyed by file name.
inline std::map<std::string, std::string> render_csv(const SummaryTables& t) {
  std::map<std::string, std::string> files;

  files["overall.csv"] = "total,passed,failed,errored,pass_pct\n" +
                         std::to_string(t.total) + "," +
                         std::to_string(t.passed) + "," +
                         std::to_string(t.failed) + "," +
                         std::to_string(t.errored) + "," +
                         detail::format_pct(t.passed, t.total) + "\n";

  std::string by_atol = "atol,total,passed,pass_pct\n";
  for (const auto& row : t.by_atol) {
    by_atol += detail::format_double(row.atol) + "," +
               std::to_string(row.total) + "," + std::to_string(row.passed) +
               "," + detail::format_pct(row.passed, row.total) + "\n";
  }
  files["by_atol.csv"] = by_atol;

  std::string by_mb = "model,target_backend,total,passed,pass_pct\n";
  for (const auto& [model, row] : t.by_model_backend) {
    for (const auto& [target, cell] : row) {
      by_mb += model + "," + target + "," + std::to_string(cell.total) + "," +
               std::to_string(cell.passed) + "," +
               detail::format_pct(cell.passed, cell.total) + "\n";
    }
  }
  files["by_model_backend.csv"] = by_mb;

  std::string tax = "category,count\n";
  for (const char* c : detail::kTaxonomyOrder) {
    tax += std::string(c) + "," + std::to_string(t.taxonomy_counts.at(c)) +
           "\n";
  }
  files["taxonomy.csv"] = tax;

  std::string lat = "backend,median_of_medians_ms\n";
  for (const auto& [backend, ms] : t.latency_ms) {
    lat += backend + "," + detail::format_double(ms) + "\n";
  }
  files["latency.csv"] = lat;
  return files;
}

}  // namespace driftcheck
