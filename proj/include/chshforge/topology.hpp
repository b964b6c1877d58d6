#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace chshforge {

using Edge = std::pair<uint32_t, uint32_t>;  // normalized first < second

/// Qubit connectivity graph. Heavy-hex lattices keep every vertex at
/// degree <= 3.
struct CouplingMap {
    uint32_t num_qubits = 0;
    std::vector<Edge> edges;  // sorted, deduplicated, normalized

    bool has_edge(uint32_t a, uint32_t b) const;
    std::vector<std::vector<uint32_t>> adjacency() const;
    int max_degree() const;
    bool connected() const;
};

/// Parametric heavy-hex lattice: `rows` horizontal qubit rows of `cols`
/// columns joined by bridge qubits every fourth column, alternating
/// offset 0 / 2 between successive row gaps. The first row drops its
/// last column and the last row its first, so (7, 15) reproduces the
/// 127-qubit Eagle layout.
CouplingMap heavy_hex_map(int rows, int cols);

/// The Eagle preset: heavy_hex_map(7, 15), 127 qubits / 144 edges.
CouplingMap eagle_coupling_map();

/// Reads a coupling map from a newline-separated "i j" pair file.
CouplingMap load_coupling_map(const std::string& path);
void save_coupling_map(const CouplingMap& map, const std::string& path);

struct QubitCalibration {
    double p10 = 0.0;  // P(read 1 | prepared 0)
    double p01 = 0.0;  // P(read 0 | prepared 1)
    double t1_s = 300e-6;
    double t2_s = 200e-6;
    double drift_rad_per_s = 0.0;
};

struct Durations {
    double x_s = 60e-9;
    double cx_s = 595e-9;
    double measure_s = 835e-9;
    double feedforward_s = 700e-9;
};

/// Synthetic-generator defaults (Eagle-class magnitudes; tunable).
inline constexpr double kDefaultTwoQubitError = 8e-3;
inline constexpr double kDefaultReadoutFlip = 1.5e-2;

/// Per-qubit readout/decoherence parameters and per-edge two-qubit
/// error rates plus gate durations: the machine model.
struct CalibrationData {
    CouplingMap map;
    std::vector<QubitCalibration> qubits;
    std::map<Edge, double> edge_error;
    Durations durations;

    double readout_mean(uint32_t q) const { return 0.5 * (qubits[q].p10 + qubits[q].p01); }
    /// Throws if ranges/invariants are violated.
    void validate() const;
};

CalibrationData load_calibration(const nlohmann::json& doc);
CalibrationData load_calibration_file(const std::string& path);
nlohmann::json save_calibration(const CalibrationData& cal);

/// Simple path through the coupling map with its aggregate error score.
struct QubitChain {
    std::vector<uint32_t> qubits;
    double cost = 0.0;
};

/// Minimum-cost simple path of `length` vertices, where
///   cost = sum(edge errors) + p_read(first) + p_read(last)
///          + lambda * sum(p_read(interior)).
/// Exhaustive enumeration with branch-and-bound pruning; ties resolved
/// toward the lexicographically smallest qubit sequence.
QubitChain find_chain(const CouplingMap& map, const CalibrationData& cal, int length,
                      double lambda = 1.0);

}  // namespace chshforge
