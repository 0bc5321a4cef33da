// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "blcd/blcd.hpp"
#include "blcd/config.hpp"

namespace blcd {

struct ExperimentArtifacts {
  RunResult result;
  std::string csv_path;
  std::string report_path;
};

/// Materialize dataset and model from a validated config.
struct Problem {
  Dataset train;
  Dataset test;
  std::unique_ptr<Model> model;
};
Problem make_problem(const RunConfig& cfg);

/// CSV header shared by every run: one row per evaluation.
extern const char* kCsvHeader;

/// Execute a full run, write the CSV and the diagnostics report next to it.
/// Byte-identical outputs for identical config and seed.
ExperimentArtifacts run_experiment(const RunConfig& cfg);

}  // namespace blcd
