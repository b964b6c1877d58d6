#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "chshforge/rng.hpp"
#include "chshforge/schedule.hpp"
#include "chshforge/topology.hpp"

namespace chshforge {

/// Time-ordered execution program derived from a scheduled circuit:
/// instructions and idle windows merged by start time (windows sort
/// before instructions starting at the same instant). Noise sampling
/// and shot execution both walk this order, so error events can be
/// addressed by step index.
struct Step {
    enum class Kind : uint8_t { Instruction, Idle };
    Kind kind;
    uint32_t index;  // into circuit.instructions() or scheduled.windows
};

struct StepProgram {
    const ScheduledCircuit* scheduled = nullptr;
    std::vector<Step> steps;
    std::vector<uint32_t> measure_steps;  // step indices of MEASURE, time order

    static StepProgram build(const ScheduledCircuit& scheduled);
};

/// Samplable stochastic error processes attached to circuit events.
/// Indices are chain-local (circuit qubit i = i-th qubit of the chain).
struct NoiseModel {
    uint32_t num_qubits = 0;
    std::vector<double> two_qubit_p;  // per chain edge (i, i+1)
    std::vector<double> one_qubit_p;  // per qubit
    std::vector<std::pair<double, double>> readout;  // (p10, p01) per qubit
    struct IdleParams {
        double t1_s = 300e-6;
        double t2_s = 200e-6;
        double drift_rad_per_s = 0.0;
    };
    std::vector<IdleParams> idle;

    bool is_zero() const;
    double two_qubit_prob(uint32_t a, uint32_t b) const;
    /// Dephasing time constant 1/T2phi = 1/T2 - 1/(2 T1); infinite when
    /// T2 = 2 T1 (pure amplitude damping limit).
    static double dephasing_rate(const IdleParams& p) {
        return 1.0 / p.t2_s - 0.5 / p.t1_s;
    }
};

/// All-zero noise for a circuit of `num_qubits` qubits.
NoiseModel zero_noise(uint32_t num_qubits);

struct FromCalibrationOptions {
    /// Overrides the derived single-qubit depolarizing probability.
    std::optional<double> single_qubit_error;
};

/// Builds the chain-local noise model: two-qubit depolarizing = the
/// calibrated edge error; single-qubit depolarizing = (t_X / t_CX) times
/// the mean error of the chain edges touching the qubit (override
/// available); readout and idle parameters copied per qubit.
NoiseModel from_calibration(const CalibrationData& cal, const QubitChain& chain,
                            const FromCalibrationOptions& opts = {});

enum class ErrorAction : uint8_t { PauliOne, PauliTwo, DampingJump, StochasticZ, CoherentRz };

struct ErrorEvent {
    uint32_t step = 0;  // applied after this step
    ErrorAction action = ErrorAction::PauliOne;
    uint8_t q0 = 0, q1 = 0;
    uint8_t p0 = 0, p1 = 0;  // pauli codes 1=X 2=Y 3=Z
    double param = 0.0;      // RZ angle / damping gamma

    bool operator==(const ErrorEvent&) const = default;
};

/// One shot's sampled error record. `events` hold the state-affecting
/// errors and define the canonical hash (empty events ~ hash 0, the
/// distinguished clean trajectory). Readout flips are stored as one
/// uniform draw per measurement and applied to recorded bits only, so
/// they do not fragment the trajectory cache.
struct ErrorPattern {
    std::vector<ErrorEvent> events;
    std::vector<double> readout_u;  // per MEASURE, in time order
    uint64_t hash = 0;

    bool clean() const { return events.empty(); }
};

uint64_t pattern_hash(const std::vector<ErrorEvent>& events);

/// Draws one shot's error pattern. Gate sites take a uniformly chosen
/// non-identity Pauli with the site's depolarizing probability; each
/// idle window draws an amplitude-damping jump with 1 - exp(-t/T1) and
/// a stochastic Z with (1 - exp(-t/T2phi))/2, and always carries a
/// deterministic RZ(drift * t) when the qubit drifts.
ErrorPattern sample_pattern(const NoiseModel& model, const StepProgram& program, Philox& rng);
ErrorPattern sample_pattern(const NoiseModel& model, const ScheduledCircuit& scheduled,
                            Philox& rng);

}  // namespace chshforge
