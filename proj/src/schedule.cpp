#include "chshforge/schedule.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace chshforge {

double instruction_duration(const Instruction& instr, const Durations& d) {
    switch (instr.kind) {
        case GateKind::H:
        case GateKind::X:
        case GateKind::Z:
        case GateKind::RY:
        case GateKind::COND_PAULI:
            return d.x_s;  // one single-qubit pulse slot
        case GateKind::CX:
            return d.cx_s;
        case GateKind::SWAP:
            return 3.0 * d.cx_s;
        case GateKind::MEASURE:
            return d.measure_s;
        case GateKind::BARRIER:
            return 0.0;
    }
    return 0.0;
}

namespace {

/// Rebuilds the idle-window list from instructions already carrying
/// explicit start times (instructions must be supplied in time order).
std::vector<IdleWindow> compute_windows(const Circuit& circuit, const std::vector<double>& start,
                                        const std::vector<double>& duration) {
    uint32_t n = circuit.num_qubits();
    std::vector<double> busy_until(n, -1.0);  // -1: not initialized yet
    std::vector<IdleWindow> windows;
    const auto& instrs = circuit.instructions();
    for (std::size_t i = 0; i < instrs.size(); i++) {
        if (instrs[i].kind == GateKind::BARRIER) continue;
        for (uint32_t q : instrs[i].qubits) {
            if (busy_until[q] >= 0.0 && start[i] > busy_until[q] + 1e-15) {
                IdleWindow w;
                w.qubit = q;
                w.start = busy_until[q];
                w.duration = start[i] - busy_until[q];
                w.feedforward = instrs[i].kind == GateKind::COND_PAULI;
                windows.push_back(w);
            }
            busy_until[q] = std::max(busy_until[q], start[i] + duration[i]);
        }
    }
    std::sort(windows.begin(), windows.end(), [](const IdleWindow& a, const IdleWindow& b) {
        return a.start < b.start || (a.start == b.start && a.qubit < b.qubit);
    });
    return windows;
}

ScheduledCircuit assemble(Circuit circuit, std::vector<double> start, const Durations& durations) {
    // Canonicalize: instruction order == time order.
    std::vector<std::size_t> order(start.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return start[a] < start[b] || (start[a] == start[b] && a < b);
    });

    Circuit sorted(circuit.num_qubits(), circuit.registers());
    sorted.metadata() = circuit.metadata();
    ScheduledCircuit out{std::move(sorted), {}, {}, {}, 0.0, durations};
    for (std::size_t idx : order) {
        const Instruction& instr = circuit.instructions()[idx];
        out.circuit.append(instr);
        out.start.push_back(start[idx]);
        double dur = instruction_duration(instr, durations);
        out.duration.push_back(dur);
        out.total_duration = std::max(out.total_duration, start[idx] + dur);
    }
    out.windows = compute_windows(out.circuit, out.start, out.duration);
    return out;
}

}  // namespace

ScheduledCircuit schedule_asap(const Circuit& circuit, const Durations& durations) {
    if (durations.x_s <= 0 || durations.cx_s <= 0 || durations.measure_s <= 0 ||
        durations.feedforward_s <= 0)
        throw std::invalid_argument("durations must be positive");

    uint32_t n = circuit.num_qubits();
    std::vector<double> qubit_ready(n, 0.0);
    std::vector<double> clbit_ready(circuit.num_clbits(), 0.0);
    std::vector<double> start(circuit.instructions().size(), 0.0);

    const auto& instrs = circuit.instructions();
    for (std::size_t i = 0; i < instrs.size(); i++) {
        const Instruction& instr = instrs[i];
        double t = 0.0;
        for (uint32_t q : instr.qubits) t = std::max(t, qubit_ready[q]);
        if (instr.kind == GateKind::COND_PAULI)
            for (uint32_t b : instr.clbits)
                t = std::max(t, clbit_ready[b] + durations.feedforward_s);
        start[i] = t;
        double end = t + instruction_duration(instr, durations);
        for (uint32_t q : instr.qubits) qubit_ready[q] = end;
        if (instr.kind == GateKind::MEASURE) clbit_ready[instr.clbits[0]] = end;
    }
    return assemble(circuit, std::move(start), durations);
}

ScheduledCircuit pad_dd(const ScheduledCircuit& scheduled) {
    double t_x = scheduled.durations.x_s;
    Circuit padded(scheduled.circuit.num_qubits(), scheduled.circuit.registers());
    padded.metadata() = scheduled.circuit.metadata();
    std::vector<double> start;

    struct Pulse {
        double at;
        uint32_t qubit;
    };
    std::vector<Pulse> pulses;
    for (const auto& w : scheduled.windows) {
        if (w.feedforward || w.duration < 4.0 * t_x) continue;
        pulses.push_back({w.start + 0.25 * w.duration - 0.5 * t_x, w.qubit});
        pulses.push_back({w.start + 0.75 * w.duration - 0.5 * t_x, w.qubit});
    }
    std::sort(pulses.begin(), pulses.end(),
              [](const Pulse& a, const Pulse& b) { return a.at < b.at; });

    // Merge original instructions and echo pulses by start time. Pulses
    // sit strictly inside idle gaps, so per-qubit order is preserved.
    std::size_t pi = 0;
    const auto& instrs = scheduled.circuit.instructions();
    for (std::size_t i = 0; i < instrs.size(); i++) {
        while (pi < pulses.size() && pulses[pi].at < scheduled.start[i]) {
            padded.x(pulses[pi].qubit);
            start.push_back(pulses[pi].at);
            pi++;
        }
        padded.append(instrs[i]);
        start.push_back(scheduled.start[i]);
    }
    while (pi < pulses.size()) {
        padded.x(pulses[pi].qubit);
        start.push_back(pulses[pi].at);
        pi++;
    }

    ScheduledCircuit out{std::move(padded), {}, {}, {}, 0.0, scheduled.durations};
    out.start = std::move(start);
    out.duration.reserve(out.start.size());
    for (const auto& instr : out.circuit.instructions())
        out.duration.push_back(instruction_duration(instr, scheduled.durations));
    for (std::size_t i = 0; i < out.start.size(); i++)
        out.total_duration = std::max(out.total_duration, out.start[i] + out.duration[i]);
    out.windows = compute_windows(out.circuit, out.start, out.duration);
    return out;
}

nlohmann::json timeline_json(const ScheduledCircuit& scheduled) {
    nlohmann::json doc = nlohmann::json::array();
    for (std::size_t i = 0; i < scheduled.start.size(); i++)
        doc.push_back({{"instr_index", i},
                       {"start_s", scheduled.start[i]},
                       {"duration_s", scheduled.duration[i]}});
    return doc;
}

}  // namespace chshforge
