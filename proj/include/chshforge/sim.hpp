#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>

#include <json.hpp>

#include "chshforge/circuit.hpp"
#include "chshforge/noise.hpp"
#include "chshforge/rng.hpp"
#include "chshforge/schedule.hpp"
#include "chshforge/statevector.hpp"

namespace chshforge {

/// Recorded classical bits of one shot, packed as bit i = classical bit i.
struct ShotRecord {
    uint64_t bits = 0;
    uint32_t num_bits = 0;

    int bit(uint32_t i) const { return (bits >> i) & 1; }
};

/// Histogram of recorded bitstrings.
struct Counts {
    std::unordered_map<uint64_t, uint64_t> histogram;
    uint64_t total = 0;
    uint32_t num_bits = 0;

    void add(uint64_t key, uint64_t count = 1) {
        histogram[key] += count;
        total += count;
    }
    void merge(const Counts& other);
    bool operator==(const Counts& other) const {
        return total == other.total && num_bits == other.num_bits &&
               histogram == other.histogram;
    }
};

/// Renders a packed bitstring with classical bit 0 as the leftmost char.
std::string bitstring(uint64_t key, uint32_t num_bits);
uint64_t parse_bitstring(const std::string& s);

struct RunOptions {
    int workers = 1;
    bool cache = true;
    std::size_t cache_budget_bytes = 256ull << 20;
};

struct RunTelemetry {
    uint64_t propagations = 0;     // full statevector passes
    uint64_t cache_hits = 0;
    uint64_t sequential_shots = 0; // shots that took the per-shot collapse path
    double elapsed_s = 0.0;
};

/// Executes one shot: instructions in schedule order, Born-rule collapse
/// at measurements, parity-conditioned corrections read the recorded
/// (readout-flipped) bits, and the pattern's error events apply at their
/// sampled locations.
ShotRecord run_shot(const ScheduledCircuit& scheduled, const NoiseModel& model, Philox& rng);
ShotRecord run_shot(const ScheduledCircuit& scheduled, const NoiseModel& model,
                    const ErrorPattern& pattern, Philox& rng);

/// Forced-outcome execution for branch enumeration: measurement k takes
/// outcomes[k] instead of sampling. Returns the recorded bits, the Born
/// probability of the forced branch, and the final state (in circuit
/// qubit order).
struct ForcedShot {
    ShotRecord record;
    double branch_prob = 0.0;
    StateVector state;
};
ForcedShot run_shot_forced(const ScheduledCircuit& scheduled, const NoiseModel& model,
                           const ErrorPattern& pattern, std::span<const int> outcomes);

/// Runs n_shots with per-shot Philox streams derived from (seed, shot).
/// Results are bit-identical for a fixed seed regardless of worker
/// count. With caching enabled, shots sharing an error pattern and
/// feedforward branch reuse one propagated trajectory; the sampled
/// distribution is identical in law to the per-shot path.
Counts run_shots(const ScheduledCircuit& scheduled, const NoiseModel& model, uint64_t n_shots,
                 uint64_t seed, const RunOptions& options = {}, RunTelemetry* telemetry = nullptr);

/// Parity expectation (-1)^(a xor b) over recorded counts.
double expectation(const Counts& counts, uint32_t bit_a, uint32_t bit_b);

/// Marginalizes counts onto the given bits (in the given order).
Counts marginalize(const Counts& counts, std::span<const uint32_t> bits);

nlohmann::json counts_to_json(const Counts& counts);
/// Counts plus the register layout of the producing circuit.
nlohmann::json counts_export_json(const Counts& counts, const Circuit& circuit);

}  // namespace chshforge
