#pragma once

#include <vector>

#include <json.hpp>

#include "chshforge/circuit.hpp"
#include "chshforge/topology.hpp"

namespace chshforge {

/// Gap on one qubit between two of its scheduled instructions.
/// `feedforward` marks gaps that end at a classically conditioned gate:
/// their length is set by classical logic latency, so decoupling pulses
/// cannot be placed there.
struct IdleWindow {
    uint32_t qubit = 0;
    double start = 0.0;
    double duration = 0.0;
    bool feedforward = false;
};

/// Circuit with explicit start times. Instructions are stored in time
/// order; idle windows tile exactly the gaps between each qubit's first
/// and last instruction.
struct ScheduledCircuit {
    Circuit circuit;
    std::vector<double> start;     // per instruction, seconds
    std::vector<double> duration;  // per instruction, seconds
    std::vector<IdleWindow> windows;
    double total_duration = 0.0;
    Durations durations;
};

double instruction_duration(const Instruction& instr, const Durations& d);

/// As-soon-as-possible scheduling: every instruction starts at the
/// latest end time of its qubit and classical-bit dependencies; a
/// conditioned gate additionally waits `feedforward_s` after the last
/// condition measurement ends. BARRIER synchronizes its qubits at zero
/// duration.
ScheduledCircuit schedule_asap(const Circuit& circuit, const Durations& durations);

/// Pads every non-feedforward idle window of at least 4*t_X on an
/// already-initialized qubit with an X-X echo pair centered at 1/4 and
/// 3/4 of the window. Start times of existing instructions are kept.
ScheduledCircuit pad_dd(const ScheduledCircuit& scheduled);

/// Debug timeline: [{instr_index, start_s, duration_s}].
nlohmann::json timeline_json(const ScheduledCircuit& scheduled);

}  // namespace chshforge
