// Command-line front end: simulate, analyze, compare.

#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "convsim/error.hpp"
#include "convsim/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Property-aware multi-speaker session simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  bool resume = false;
  auto* simulate = app.add_subcommand("simulate", "Generate sessions with audio and annotations");
  simulate->add_option("--config", config_path, "Simulation config (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_flag("--resume", resume, "Keep sessions whose outputs already exist and validate");

  std::string analyze_input;
  std::string analyze_out;
  auto* analyze = app.add_subcommand("analyze", "Silence/overlap statistics from RTTM annotations");
  analyze->add_option("input", analyze_input, "Dataset manifest, RTTM file, or directory of RTTMs")
      ->required();
  analyze->add_option("--out", analyze_out, "Per-session stats CSV")->required();

  std::string real_csv;
  std::string sim_csv;
  std::string compare_out;
  std::size_t bins = 20;
  auto* compare = app.add_subcommand("compare", "Compare real and simulated stats CSVs");
  compare->add_option("real", real_csv, "Stats CSV of the reference dataset")->required();
  compare->add_option("simulated", sim_csv, "Stats CSV of the simulated dataset")->required();
  compare->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
  compare->add_option("--out", compare_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) {
      const auto report = convsim::run_simulate(config_path, out_dir, workers, resume);
      std::cout << convsim::format_run_report(report);
      return report.complete() ? kExitOk : kExitPartial;
    }
    if (*analyze) {
      const auto result = convsim::run_analyze(analyze_input, analyze_out);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "sessions: " << result.stats.session_count() << '\n'
                << convsim::format_simulator_params(result.stats);
      return result.warnings.empty() ? kExitOk : kExitPartial;
    }
    if (*compare) {
      const auto result = convsim::run_compare(real_csv, sim_csv, bins, compare_out);
      std::cout << convsim::format_comparison_table(result.rows);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
