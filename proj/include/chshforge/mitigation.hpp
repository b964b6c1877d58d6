#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "chshforge/sim.hpp"

namespace chshforge {

/// Per-qubit 2x2 column-stochastic readout confusion matrices:
/// a[i][j] = P(read i | prepared j).
struct ConfusionSet {
    struct Matrix {
        // a[read][prepared]
        std::array<std::array<double, 2>, 2> a{{{1.0, 0.0}, {0.0, 1.0}}};
    };
    std::vector<Matrix> qubits;

    static ConfusionSet identity(uint32_t n);
    static ConfusionSet symmetric(uint32_t n, double flip);
    static ConfusionSet from_flips(const std::vector<std::pair<double, double>>& p10_p01);
    void validate() const;
};

nlohmann::json confusion_to_json(const ConfusionSet& confusion);
ConfusionSet confusion_from_json(const nlohmann::json& doc);

/// Bitstring weights after readout-error inversion; individual weights
/// may be negative. Weights sum to 1; overhead = sum of |weights|.
struct QuasiDistribution {
    std::unordered_map<uint64_t, double> weights;
    uint32_t num_bits = 0;
    double overhead = 1.0;

    double parity_expectation(uint32_t bit_a, uint32_t bit_b) const;
};

/// The two tensored-model calibration circuits over `num_qubits` qubits:
/// all-|0> measured, and all-|1> (one X per qubit) measured.
std::vector<Circuit> calibration_circuits(uint32_t num_qubits);

/// Per-qubit flip frequencies from the two calibration-count sets
/// (counts0 from the all-|0> circuit, counts1 from all-|1>).
ConfusionSet fit_confusion(const Counts& counts0, const Counts& counts1);

struct MitigateOptions {
    /// Extra subspace entries within this Hamming distance of observed
    /// bitstrings (0 = observed only).
    int halo = 0;
    int max_iterations = 1000;
    double tolerance = 1e-8;
    double damping = 1.0;
    /// Drop matrix elements beyond this Hamming distance (<=0: exact).
    /// Applied automatically for wide registers; subspaces of <= 10 bits
    /// are always solved exactly.
    int distance_cutoff = 0;
};

/// Solves A_restricted x = p_raw on the observed-bitstring subspace with
/// matrix elements generated on demand as products of per-qubit
/// confusion entries (the full 2^n matrix never materializes), using a
/// Jacobi-preconditioned damped fixed-point iteration to residual below
/// `tolerance`. The returned weights are normalized to sum to 1.
QuasiDistribution mitigate(const Counts& raw, const ConfusionSet& confusion,
                           const MitigateOptions& options = {});

}  // namespace chshforge
