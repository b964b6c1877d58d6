#include "chshforge/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace chshforge {

StepProgram StepProgram::build(const ScheduledCircuit& scheduled) {
    StepProgram program;
    program.scheduled = &scheduled;
    struct Entry {
        double time;
        int rank;  // windows first at equal time
        Step step;
    };
    std::vector<Entry> entries;
    entries.reserve(scheduled.start.size() + scheduled.windows.size());
    for (uint32_t i = 0; i < scheduled.windows.size(); i++)
        entries.push_back({scheduled.windows[i].start, 0, {Step::Kind::Idle, i}});
    for (uint32_t i = 0; i < scheduled.start.size(); i++)
        entries.push_back({scheduled.start[i], 1 + static_cast<int>(i),
                           {Step::Kind::Instruction, i}});
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.time < b.time || (a.time == b.time && a.rank < b.rank);
    });
    for (uint32_t s = 0; s < entries.size(); s++) {
        program.steps.push_back(entries[s].step);
        if (entries[s].step.kind == Step::Kind::Instruction &&
            scheduled.circuit.instructions()[entries[s].step.index].kind == GateKind::MEASURE)
            program.measure_steps.push_back(s);
    }
    return program;
}

bool NoiseModel::is_zero() const {
    for (double p : two_qubit_p)
        if (p > 0) return false;
    for (double p : one_qubit_p)
        if (p > 0) return false;
    for (const auto& [p10, p01] : readout)
        if (p10 > 0 || p01 > 0) return false;
    for (const auto& params : idle)
        if (params.drift_rad_per_s != 0.0) return false;
    return true;
}

double NoiseModel::two_qubit_prob(uint32_t a, uint32_t b) const {
    uint32_t lo = std::min(a, b), hi = std::max(a, b);
    if (hi != lo + 1 || hi >= num_qubits)
        throw std::invalid_argument("two-qubit gate outside the mapped chain");
    return two_qubit_p[lo];
}

NoiseModel zero_noise(uint32_t num_qubits) {
    NoiseModel model;
    model.num_qubits = num_qubits;
    model.two_qubit_p.assign(num_qubits > 0 ? num_qubits - 1 : 0, 0.0);
    model.one_qubit_p.assign(num_qubits, 0.0);
    model.readout.assign(num_qubits, {0.0, 0.0});
    NoiseModel::IdleParams ideal;
    ideal.t1_s = 1e9;
    ideal.t2_s = 2e9;
    model.idle.assign(num_qubits, ideal);
    return model;
}

NoiseModel from_calibration(const CalibrationData& cal, const QubitChain& chain,
                            const FromCalibrationOptions& opts) {
    uint32_t n = chain.qubits.size();
    if (n < 2) throw std::invalid_argument("chain needs at least two qubits");
    NoiseModel model;
    model.num_qubits = n;
    model.two_qubit_p.resize(n - 1);
    for (uint32_t i = 0; i + 1 < n; i++) {
        uint32_t a = chain.qubits[i], b = chain.qubits[i + 1];
        auto it = cal.edge_error.find(a < b ? Edge{a, b} : Edge{b, a});
        if (it == cal.edge_error.end())
            throw std::invalid_argument("missing edge calibration for chain edge " +
                                        std::to_string(a) + "-" + std::to_string(b));
        model.two_qubit_p[i] = it->second;
    }
    double ratio = cal.durations.x_s / cal.durations.cx_s;
    model.one_qubit_p.resize(n);
    for (uint32_t i = 0; i < n; i++) {
        if (opts.single_qubit_error) {
            model.one_qubit_p[i] = *opts.single_qubit_error;
        } else {
            double sum = 0.0;
            int count = 0;
            if (i > 0) sum += model.two_qubit_p[i - 1], count++;
            if (i + 1 < n) sum += model.two_qubit_p[i], count++;
            model.one_qubit_p[i] = ratio * (count ? sum / count : 0.0);
        }
    }
    model.readout.resize(n);
    model.idle.resize(n);
    for (uint32_t i = 0; i < n; i++) {
        const QubitCalibration& q = cal.qubits.at(chain.qubits[i]);
        model.readout[i] = {q.p10, q.p01};
        model.idle[i] = {q.t1_s, q.t2_s, q.drift_rad_per_s};
    }
    return model;
}

uint64_t pattern_hash(const std::vector<ErrorEvent>& events) {
    // FNV-1a over the packed event records; 0 is reserved for the clean
    // pattern.
    if (events.empty()) return 0;
    uint64_t h = 1469598103934665603ull;
    auto mix = [&](uint64_t v) {
        for (int i = 0; i < 8; i++) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (const auto& e : events) {
        mix((uint64_t(e.step) << 32) | (uint64_t(e.q0) << 24) | (uint64_t(e.q1) << 16) |
            (uint64_t(e.p0) << 8) | uint64_t(e.p1));
        mix(static_cast<uint64_t>(e.action));
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(e.param));
        std::memcpy(&bits, &e.param, sizeof(bits));
        mix(bits);
    }
    return h == 0 ? 1 : h;
}

ErrorPattern sample_pattern(const NoiseModel& model, const StepProgram& program, Philox& rng) {
    const ScheduledCircuit& sched = *program.scheduled;
    if (sched.circuit.num_qubits() > model.num_qubits)
        throw std::invalid_argument("noise model does not cover circuit width");
    ErrorPattern pattern;
    for (uint32_t s = 0; s < program.steps.size(); s++) {
        const Step& step = program.steps[s];
        if (step.kind == Step::Kind::Instruction) {
            const Instruction& instr = sched.circuit.instructions()[step.index];
            switch (instr.kind) {
                case GateKind::CX:
                case GateKind::SWAP: {
                    // A SWAP still present at sampling time counts as one
                    // two-qubit site; the simulation pipeline decomposes
                    // SWAPs first so each CX samples independently.
                    double p = model.two_qubit_prob(instr.qubits[0], instr.qubits[1]);
                    if (p > 0 && rng.bernoulli(p)) {
                        int k = 1 + static_cast<int>(rng.uniform_int(15));
                        ErrorEvent e;
                        e.step = s;
                        e.action = ErrorAction::PauliTwo;
                        e.q0 = static_cast<uint8_t>(instr.qubits[0]);
                        e.q1 = static_cast<uint8_t>(instr.qubits[1]);
                        e.p0 = static_cast<uint8_t>(k & 3);
                        e.p1 = static_cast<uint8_t>(k >> 2);
                        pattern.events.push_back(e);
                    }
                    break;
                }
                case GateKind::H:
                case GateKind::X:
                case GateKind::Z:
                case GateKind::RY:
                case GateKind::COND_PAULI: {
                    // Conditional-correction sites draw their error
                    // regardless of whether the pulse fires.
                    double p = model.one_qubit_p[instr.qubits[0]];
                    if (p > 0 && rng.bernoulli(p)) {
                        ErrorEvent e;
                        e.step = s;
                        e.action = ErrorAction::PauliOne;
                        e.q0 = static_cast<uint8_t>(instr.qubits[0]);
                        e.p0 = static_cast<uint8_t>(1 + rng.uniform_int(3));
                        pattern.events.push_back(e);
                    }
                    break;
                }
                case GateKind::MEASURE: {
                    auto [p10, p01] = model.readout[instr.qubits[0]];
                    pattern.readout_u.push_back(p10 > 0 || p01 > 0 ? rng.uniform() : 2.0);
                    break;
                }
                case GateKind::BARRIER:
                    break;
            }
        } else {
            const IdleWindow& w = sched.windows[step.index];
            const NoiseModel::IdleParams& params = model.idle[w.qubit];
            if (params.drift_rad_per_s != 0.0) {
                ErrorEvent e;
                e.step = s;
                e.action = ErrorAction::CoherentRz;
                e.q0 = static_cast<uint8_t>(w.qubit);
                e.param = params.drift_rad_per_s * w.duration;
                pattern.events.push_back(e);
            }
            double p_jump = 1.0 - std::exp(-w.duration / params.t1_s);
            if (p_jump > 0 && rng.bernoulli(p_jump)) {
                ErrorEvent e;
                e.step = s;
                e.action = ErrorAction::DampingJump;
                e.q0 = static_cast<uint8_t>(w.qubit);
                e.param = p_jump;
                pattern.events.push_back(e);
            }
            double rate = NoiseModel::dephasing_rate(params);
            double p_z = rate > 0 ? 0.5 * (1.0 - std::exp(-w.duration * rate)) : 0.0;
            if (p_z > 0 && rng.bernoulli(p_z)) {
                ErrorEvent e;
                e.step = s;
                e.action = ErrorAction::StochasticZ;
                e.q0 = static_cast<uint8_t>(w.qubit);
                e.p0 = 3;
                pattern.events.push_back(e);
            }
        }
    }
    pattern.hash = pattern_hash(pattern.events);
    return pattern;
}

ErrorPattern sample_pattern(const NoiseModel& model, const ScheduledCircuit& scheduled,
                            Philox& rng) {
    StepProgram program = StepProgram::build(scheduled);
    return sample_pattern(model, program, rng);
}

}  // namespace chshforge
