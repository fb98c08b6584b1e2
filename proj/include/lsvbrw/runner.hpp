#pragma once

#include <filesystem>

#include "lsvbrw/config.hpp"

namespace lsv {

enum class ExitStatus : int { Pass = 0, RuntimeError = 1, StatisticalFailure = 2 };

struct RunOutcome {
  ExitStatus status = ExitStatus::Pass;
  std::filesystem::path dir;  // artifact directory
};

/// Output directory of a run: <out>/<kind>-s<seed>, or <out>/report.
std::filesystem::path artifact_dir(const ExperimentConfig& config);

/// Runs the experiment, writes report.json plus CSV/JSONL artifacts and
/// manifest.txt. The manifest is written on every outcome.
RunOutcome run(const ExperimentConfig& config);

}  // namespace lsv
