#pragma once

#include <string>

#include "chshforge/harness.hpp"
#include "chshforge/topology.hpp"

namespace chshforge {

/// Synthetic device files: `ideal` zeroes every error and probability;
/// `eagle-like` draws each element from the documented defaults with
/// +-30% lognormal scatter (seeded, deterministic).
CalibrationData generate_calibration(const std::string& preset, uint64_t seed);

int cmd_gen_calibration(const std::string& out_path, const std::string& preset, uint64_t seed);
int cmd_scurve(const ExperimentConfig& config, CnotStrategy strategy, int length,
               const std::string& out_dir);
int cmd_sweep(const ExperimentConfig& config, const std::string& out_dir);
int cmd_cost_report(const ExperimentConfig& config, const std::string& out_dir);

/// Full argument-parsing entry point (the `chshforge` binary's main).
int run_cli(int argc, const char* const* argv);

}  // namespace chshforge
