#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stockrag/config.hpp"

namespace stockrag::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kIngestError = 2,
  kNoBundles = 3,
  kModelUnreachable = 4,
  kNothingToScore = 5,
};

struct RunOptions {
  /// Replaces config.output_dir.
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  /// Build prompts and estimate token cost without sending anything.
  bool dry_run = false;
};

/// Applies the overrides in `options` to `config`.
ExperimentConfig resolve(ExperimentConfig config, const RunOptions& options);

// Each stage reads its inputs from and writes its artifacts to
// config.output_dir, logs progress to `out` and problems to `err`, and
// returns an ExitCode.
int cmd_ingest(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_build_prompts(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const ExperimentConfig& config, bool dry_run, std::ostream& out, std::ostream& err);
int cmd_evaluate(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
/// ingest -> build-prompts -> predict -> evaluate, stopping at the first
/// nonzero exit. A dry run stops after the predict estimate.
int cmd_run(const ExperimentConfig& config, bool dry_run, std::ostream& out, std::ostream& err);

/// Artifact file names inside the output directory.
namespace artifacts {
inline constexpr const char* kIngestSummary = "ingest_summary.txt";
inline constexpr const char* kArticles = "articles.jsonl";
inline constexpr const char* kDiagnostics = "ingest_diagnostics.jsonl";
inline constexpr const char* kSkipped = "skipped.jsonl";
inline constexpr const char* kPredictions = "predictions.jsonl";
inline constexpr const char* kFailures = "prediction_failures.jsonl";
inline constexpr const char* kReportMarkdown = "report.md";
inline constexpr const char* kReportCsv = "report.csv";
inline constexpr const char* kReportJson = "report.json";
/// "bundles.jsonl" for zero-shot, "bundles_{n}shot.jsonl" otherwise.
std::string bundles(int shots);
}  // namespace artifacts

/// Full command line: argv[0] then a subcommand and flags.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stockrag::cli
