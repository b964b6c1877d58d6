#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "chshforge/harness.hpp"

namespace chshforge {

inline constexpr const char* kToolVersion = "chshforge 0.1.0";

/// max|S| vs distance, three series with error bars, |S| axis fixed to
/// [0, 3] with a rule at 2 and the quantum band up to 2*sqrt(2).
std::string distance_plot_svg(const DistanceSweepResult& result);

/// S(phi) overlays of the first repetition for two lengths, one panel each.
std::string scurve_plot_svg(const DistanceSweepResult& result, int length_a, int length_b);

/// One S(phi) panel for a single cell.
std::string single_scurve_svg(const SCurve& curve, const std::string& title);

/// Run manifest: resolved config, tool version, timestamp, seed, and the
/// list of written output files. Re-running `sweep --config <manifest>`
/// reproduces the numerical outputs bit for bit.
nlohmann::json make_manifest(const ExperimentConfig& config,
                             const std::vector<std::string>& outputs);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace chshforge
