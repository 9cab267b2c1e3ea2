#pragma once

#include <sys/utsname.h>

#include <cstdint>
#include <fstream>
#include <string>
#include <thread>

#include "driftcheck/version.hpp"

namespace driftcheck {

// CPU-side provenance recorded with every run so results can be traced to
// the machine and seed that produced them.
struct EnvFingerprint {
  std::string version = kVersion;
  std::string os = "unknown";
  std::string cpu_model = "unknown";
  unsigned logical_cores = 0;
  std::string determinism_flags = "fp-contract=off;seeded-splitmix64";
  std::uint64_t seed = 0;

  bool operator==(const EnvFingerprint&) const = default;
};

namespace detail {

inline std::string detect_os() {
  struct utsname u{};
  if (uname(&u) != 0) return "unknown";
  std::string s = std::string(u.sysname) + " " + u.release;
  return s.empty() ? "unknown" : s;
}

inline std::string detect_cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find(':');
    if (pos == std::string::npos) continue;
    if (line.rfind("model name", 0) == 0) {
      std::string v = line.substr(pos + 1);
      const auto start = v.find_first_not_of(" \t");
      if (start != std::string::npos) return v.substr(start);
    }
  }
  return "unknown";
}

}  // namespace detail

// Never fails: fields that cannot be detected stay "unknown".
inline EnvFingerprint env_fingerprint(std::uint64_t seed) {
  static const std::string os = detail::detect_os();
  static const std::string cpu = detail::detect_cpu_model();
  static const unsigned cores = std::thread::hardware_concurrency();
  EnvFingerprint e;
  e.os = os;
  e.cpu_model = cpu;
  e.logical_cores = cores;
  e.seed = seed;
  return e;
}

}  // namespace driftcheck
