#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "driftcheck/driftcheck.hpp"

namespace {

std::vector<double> parse_atol_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      grid.push_back(v);
    } catch (const std::exception&) {
      throw driftcheck::InvalidConfigError("invalid atol value: " + item);
    }
  }
  return grid;
}

int do_run(const std::string& pattern, const std::string& target,
           const std::string& sweep_atol, double rtol, std::uint64_t seed,
           const std::string& out, std::size_t jobs, bool compile) {
  driftcheck::SweepPlan plan;
  plan.config_pattern = pattern;
  plan.config_paths = driftcheck::expand_glob(pattern);
  plan.atol_grid = parse_atol_grid(sweep_atol);
  plan.rtol = rtol;
  plan.seed = seed;
  plan.out_path = out;
  plan.jobs = jobs;
  if (compile || target == "optimized") {
    plan.target_override = driftcheck::BackendKind::Optimized;
  } else if (target == "reference") {
    plan.target_override = driftcheck::BackendKind::Reference;
  } else if (!target.empty()) {
    std::cerr << "error: --target must be optimized or reference\n";
    return 2;
  }

  try {
    const auto res = driftcheck::run_suite(plan, std::cout);
    return (res.summary.failed == 0 && res.summary.errored == 0) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int do_report(const std::string& in, const std::string& format) {
  try {
    const auto read = driftcheck::read_records(in);
    if (!read.skipped_lines.empty()) {
      std::cerr << "warning: skipped " << read.skipped_lines.size()
                << " malformed line(s)\n";
    }
    const auto tables = driftcheck::summarize(read.records);
    if (format == "md") {
      std::cout << driftcheck::render_markdown(tables);
      return 0;
    }
    if (format == "csv") {
      const auto dir = std::filesystem::path(in).parent_path();
      for (const auto& [name, text] : driftcheck::render_csv(tables)) {
        const auto path = dir / name;
        std::ofstream f(path);
        if (!f) throw driftcheck::LogWriteError("cannot write " + path.string());
        f << text;
        std::cout << "wrote " << path.string() << "\n";
      }
      return 0;
    }
    std::cerr << "error: --format must be md or csv\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential testing harness for cross-backend drift"};
  app.require_subcommand(1);
  app.set_version_flag("--version", driftcheck::kVersion);

  std::string pattern = "configs/*.yaml";
  std::string target;
  std::string sweep_atol = "1e-6,1e-5,1e-4,1e-3";
  double rtol = 1e-5;
  std::uint64_t seed = 5;
  std::string out = "results.jsonl";
  std::size_t jobs = 1;
  bool compile = false;

  auto* run = app.add_subcommand("run", "Run configs across backend pairs");
  run->add_option("-c,--configs", pattern, "Glob for YAML configs")
      ->capture_default_str();
  auto* target_opt = run->add_option(
      "--target", target, "Target backend: optimized or reference");
  run->add_option("--sweep-atol", sweep_atol,
                  "Comma-separated ascending atol grid")
      ->capture_default_str();
  run->add_option("--rtol", rtol, "Relative tolerance")->capture_default_str();
  run->add_option("--seed", seed, "Global RNG seed")->capture_default_str();
  run->add_option("--out", out, "JSONL output path")->capture_default_str();
  run->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  run->add_flag("--compile", compile, "Target the optimized backend")
      ->excludes(target_opt);

  std::string in;
  std::string format = "md";
  auto* report = app.add_subcommand("report", "Summarize a results file");
  report->add_option("--in", in, "JSONL results file")->required();
  report->add_option("--format", format, "md or csv")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return do_run(pattern, target, sweep_atol, rtol, seed, out, jobs, compile);
  }
  return do_report(in, format);
}
