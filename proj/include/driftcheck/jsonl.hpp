#pragma once

#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "driftcheck/record.hpp"

namespace driftcheck {

inline std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {
inline std::mutex& jsonl_writer_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// Stamps the record's timestamp and appends it as one JSON line. A single
// process-wide mutex serializes writers so lines never interleave.
inline void append_record(RunRecord& record,
                          const std::filesystem::path& path) {
  std::lock_guard<std::mutex> lock(detail::jsonl_writer_mutex());
  record.timestamp = iso8601_utc_now();
  std::error_code ec;
  const auto parent = path.parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent, ec);
    if (ec) {
      throw LogWriteError("cannot create directory " + parent.string() +
                          ": " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw LogWriteError("cannot open for append: " + path.string());
  out << record_to_json(record).dump() << '\n';
  out.flush();
  if (!out) throw LogWriteError("write failed: " + path.string());
}

struct ReadResult {
  std::vector<RunRecord> records;
  std::vector<std::size_t> skipped_lines;  // 1-based line numbers
};

inline ReadResult read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LogReadError("cannot read: " + path.string());
  ReadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      result.skipped_lines.push_back(lineno);
      continue;
    }
    try {
      result.records.push_back(record_from_json(j));
    } catch (const std::exception&) {
      result.skipped_lines.push_back(lineno);
    }
  }
  return result;
}

}  // namespace driftcheck
