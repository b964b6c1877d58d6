#include "chshforge/sim.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <list>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "chshforge/util.hpp"

namespace chshforge {

void Counts::merge(const Counts& other) {
    num_bits = std::max(num_bits, other.num_bits);
    for (const auto& [key, count] : other.histogram) histogram[key] += count;
    total += other.total;
}

std::string bitstring(uint64_t key, uint32_t num_bits) {
    std::string s(num_bits, '0');
    for (uint32_t i = 0; i < num_bits; i++)
        if ((key >> i) & 1) s[i] = '1';
    return s;
}

uint64_t parse_bitstring(const std::string& s) {
    uint64_t key = 0;
    for (std::size_t i = 0; i < s.size(); i++)
        if (s[i] == '1') key |= uint64_t(1) << i;
    return key;
}

namespace {

struct MeasureInfo {
    uint32_t step;   // step index in the program
    uint32_t qubit;  // circuit qubit
    uint32_t clbit;
};

struct CondInfo {
    uint32_t step;
    uint32_t qubit;
    CondPauli pauli;
    std::vector<uint32_t> condition;
};

/// Program compiled once per run: step order, SWAP-equivalent CX triples
/// (executed as a qubit relabeling when no error event lands inside),
/// measurement/condition tables, and deferred-sampling eligibility.
struct CompiledProgram {
    StepProgram program;
    const ScheduledCircuit* scheduled = nullptr;
    uint32_t n = 0;
    uint32_t num_clbits = 0;

    struct Fusion {
        uint32_t second = 0, third = 0;
    };
    std::unordered_map<uint32_t, Fusion> fusions;  // first step of a CX triple
    struct EchoPair {
        uint32_t partner = 0;
        std::vector<uint32_t> window_steps;  // idle steps between the two X
    };
    std::unordered_map<uint32_t, EchoPair> echo_pairs;  // first X of an X-X pair
    std::vector<MeasureInfo> measures;                  // time order
    std::vector<CondInfo> conds;                        // time order

    // Deferred-sampling layout (valid when defer_eligible).
    bool defer_eligible = false;
    std::vector<uint32_t> measured_qubits;  // ascending
    std::vector<int> qubit_measure_index;   // qubit -> index into measures, or -1
    uint64_t early_sel = 0;                 // selector masks over measured-bit keys
    uint64_t late_sel = 0;
    std::vector<int> measure_key_pos;       // measure k -> bit position in the key
};

bool touches(const Instruction& instr, uint32_t qubit) {
    return std::find(instr.qubits.begin(), instr.qubits.end(), qubit) != instr.qubits.end();
}

CompiledProgram compile_program(const ScheduledCircuit& scheduled) {
    CompiledProgram cp;
    cp.program = StepProgram::build(scheduled);
    cp.scheduled = &scheduled;
    cp.n = scheduled.circuit.num_qubits();
    cp.num_clbits = scheduled.circuit.num_clbits();
    if (cp.n > StateVector::kMaxQubits)
        throw std::invalid_argument("circuit width exceeds simulator limit (20 qubits)");
    if (cp.num_clbits > 64) throw std::invalid_argument("more than 64 classical bits");

    const auto& instrs = scheduled.circuit.instructions();
    const auto& steps = cp.program.steps;

    for (uint32_t s = 0; s < steps.size(); s++) {
        if (steps[s].kind != Step::Kind::Instruction) continue;
        const Instruction& instr = instrs[steps[s].index];
        if (instr.kind == GateKind::MEASURE)
            cp.measures.push_back({s, instr.qubits[0], instr.clbits[0]});
        else if (instr.kind == GateKind::COND_PAULI)
            cp.conds.push_back({s, instr.qubits[0], instr.pauli, instr.clbits});
    }

    // Detect CX(a,b) CX(b,a) CX(a,b) runs with no idle window on a or b
    // in between; they act as SWAP and can be run as a relabeling.
    auto next_on_pair = [&](uint32_t from, uint32_t a, uint32_t b) -> int {
        for (uint32_t s = from + 1; s < steps.size(); s++) {
            if (steps[s].kind == Step::Kind::Idle) {
                const IdleWindow& w = scheduled.windows[steps[s].index];
                if (w.qubit == a || w.qubit == b) return -1;
                continue;
            }
            const Instruction& instr = instrs[steps[s].index];
            if (instr.kind == GateKind::BARRIER) continue;
            if (touches(instr, a) || touches(instr, b)) return static_cast<int>(s);
        }
        return -1;
    };
    std::vector<bool> in_triple(steps.size(), false);
    for (uint32_t s = 0; s < steps.size(); s++) {
        if (in_triple[s] || steps[s].kind != Step::Kind::Instruction) continue;
        const Instruction& instr = instrs[steps[s].index];
        if (instr.kind != GateKind::CX) continue;
        uint32_t a = instr.qubits[0], b = instr.qubits[1];
        int s2 = next_on_pair(s, a, b);
        if (s2 < 0 || steps[s2].kind != Step::Kind::Instruction) continue;
        const Instruction& i2 = instrs[steps[s2].index];
        if (i2.kind != GateKind::CX || i2.qubits[0] != b || i2.qubits[1] != a) continue;
        int s3 = next_on_pair(s2, a, b);
        if (s3 < 0 || steps[s3].kind != Step::Kind::Instruction) continue;
        const Instruction& i3 = instrs[steps[s3].index];
        if (i3.kind != GateKind::CX || i3.qubits[0] != a || i3.qubits[1] != b) continue;
        cp.fusions[s] = {static_cast<uint32_t>(s2), static_cast<uint32_t>(s3)};
        in_triple[s] = in_triple[s2] = in_triple[s3] = true;
    }

    // X-X pairs on one qubit with only idle windows in between act as the
    // identity; they can be skipped whenever the pattern puts no error on
    // the first pulse or the enclosed windows (echo pulses dominate padded
    // circuits).
    for (uint32_t s = 0; s < steps.size(); s++) {
        if (steps[s].kind != Step::Kind::Instruction) continue;
        const Instruction& instr = instrs[steps[s].index];
        if (instr.kind != GateKind::X) continue;
        uint32_t q = instr.qubits[0];
        CompiledProgram::EchoPair pair;
        bool valid = false;
        for (uint32_t t = s + 1; t < steps.size(); t++) {
            if (steps[t].kind == Step::Kind::Idle) {
                if (scheduled.windows[steps[t].index].qubit == q)
                    pair.window_steps.push_back(t);
                continue;
            }
            const Instruction& next = instrs[steps[t].index];
            if (next.kind == GateKind::BARRIER || !touches(next, q)) continue;
            if (next.kind == GateKind::X) {
                pair.partner = t;
                valid = true;
            }
            break;
        }
        if (valid) cp.echo_pairs[s] = std::move(pair);
    }

    // Deferred sampling needs: no qubit reused after its measurement, and
    // no conditioned gate whose own measured bit feeds a condition.
    cp.qubit_measure_index.assign(cp.n, -1);
    bool eligible = cp.conds.size() <= 32;
    for (uint32_t k = 0; k < cp.measures.size(); k++) {
        if (cp.qubit_measure_index[cp.measures[k].qubit] >= 0) eligible = false;  // remeasured
        cp.qubit_measure_index[cp.measures[k].qubit] = static_cast<int>(k);
    }
    for (uint32_t k = 0; k < cp.measures.size() && eligible; k++) {
        for (uint32_t s = cp.measures[k].step + 1; s < steps.size(); s++) {
            if (steps[s].kind == Step::Kind::Idle) {
                if (scheduled.windows[steps[s].index].qubit == cp.measures[k].qubit)
                    eligible = false;
                continue;
            }
            const Instruction& instr = instrs[steps[s].index];
            if (instr.kind == GateKind::BARRIER) continue;
            if (touches(instr, cp.measures[k].qubit)) eligible = false;
        }
    }
    std::vector<bool> bit_in_condition(cp.num_clbits, false);
    for (const auto& cond : cp.conds)
        for (uint32_t b : cond.condition) bit_in_condition[b] = true;
    for (const auto& cond : cp.conds) {
        int k = cond.qubit < cp.n ? cp.qubit_measure_index[cond.qubit] : -1;
        if (k >= 0 && bit_in_condition[cp.measures[k].clbit]) eligible = false;
    }
    cp.defer_eligible = eligible;

    if (eligible) {
        for (uint32_t q = 0; q < cp.n; q++)
            if (cp.qubit_measure_index[q] >= 0) cp.measured_qubits.push_back(q);
        cp.measure_key_pos.assign(cp.measures.size(), -1);
        for (uint32_t pos = 0; pos < cp.measured_qubits.size(); pos++) {
            uint32_t q = cp.measured_qubits[pos];
            int k = cp.qubit_measure_index[q];
            cp.measure_key_pos[k] = static_cast<int>(pos);
            if (bit_in_condition[cp.measures[k].clbit])
                cp.early_sel |= uint64_t(1) << pos;
            else
                cp.late_sel |= uint64_t(1) << pos;
        }
        // The conditional late draw enumerates 2^|late| weights.
        if (cp.early_sel != 0 && std::popcount(cp.late_sel) > 12) cp.defer_eligible = false;
    }
    return cp;
}

/// Walks the compiled program applying gates through a logical->physical
/// qubit relabeling so SWAP-equivalent triples cost O(1).
class Executor {
  public:
    Executor(const CompiledProgram& cp, const NoiseModel& model)
        : cp_(cp), model_(model), psi_(cp.n), perm_(cp.n) {}

    void reset(uint64_t basis_state = 0) {
        std::iota(perm_.begin(), perm_.end(), 0u);
        psi_.reset_to_basis_state(basis_state);
        skip_.assign(cp_.program.steps.size(), false);
        clbits_ = 0;
        true_bits_ = 0;
        measure_cursor_ = 0;
        event_cursor_ = 0;
    }

    /// Sequential mode. `rng` draws outcomes unless `forced` is given.
    /// Returns false when a forced branch has zero probability.
    bool run(const ErrorPattern& pattern, Philox* rng, std::span<const int> forced = {},
             bool defer_measurements = false, uint64_t variant = 0) {
        branch_prob_ = 1.0;
        const auto& steps = cp_.program.steps;
        const auto& instrs = cp_.scheduled->circuit.instructions();
        for (uint32_t s = 0; s < steps.size(); s++) {
            if (steps[s].kind == Step::Kind::Idle) {
                apply_events(pattern, s);
                continue;
            }
            if (skip_[s]) {
                apply_events(pattern, s);
                continue;
            }
            const Instruction& instr = instrs[steps[s].index];
            switch (instr.kind) {
                case GateKind::H: psi_.apply_h(perm_[instr.qubits[0]]); break;
                case GateKind::X: {
                    auto echo = cp_.echo_pairs.find(s);
                    if (echo != cp_.echo_pairs.end() && !has_events(pattern, s) &&
                        std::none_of(echo->second.window_steps.begin(),
                                     echo->second.window_steps.end(), [&](uint32_t w) {
                                         return has_events(pattern, w);
                                     })) {
                        skip_[echo->second.partner] = true;  // X followed by X is the identity
                    } else {
                        psi_.apply_x(perm_[instr.qubits[0]]);
                    }
                    break;
                }
                case GateKind::Z: psi_.apply_z(perm_[instr.qubits[0]]); break;
                case GateKind::RY: psi_.apply_ry(perm_[instr.qubits[0]], instr.angle); break;
                case GateKind::SWAP:
                    std::swap(perm_[instr.qubits[0]], perm_[instr.qubits[1]]);
                    break;
                case GateKind::BARRIER: break;
                case GateKind::CX: {
                    auto fusion = cp_.fusions.find(s);
                    if (fusion != cp_.fusions.end() && !has_events(pattern, s) &&
                        !has_events(pattern, fusion->second.second)) {
                        std::swap(perm_[instr.qubits[0]], perm_[instr.qubits[1]]);
                        skip_[fusion->second.second] = true;
                        skip_[fusion->second.third] = true;
                    } else {
                        psi_.apply_cx(perm_[instr.qubits[0]], perm_[instr.qubits[1]]);
                    }
                    break;
                }
                case GateKind::MEASURE: {
                    if (defer_measurements) break;
                    if (!do_measure(instr, pattern, rng, forced)) return false;
                    break;
                }
                case GateKind::COND_PAULI: {
                    if (defer_measurements) {
                        // Deferred-measurement form: Pauli controlled on the
                        // joint parity of the condition-source qubits, plus
                        // the branch's extra readout-flip correction.
                        uint32_t idx = cond_index(s);
                        uint64_t source_mask = 0;
                        for (uint32_t b : instr.clbits)
                            source_mask |= uint64_t(1) << perm_[bit_source_qubit(b)];
                        if (instr.pauli == CondPauli::X)
                            psi_.apply_parity_cx(source_mask, perm_[instr.qubits[0]]);
                        else
                            psi_.apply_parity_cz(source_mask, perm_[instr.qubits[0]]);
                        if ((variant >> idx) & 1) {
                            if (instr.pauli == CondPauli::X)
                                psi_.apply_x(perm_[instr.qubits[0]]);
                            else
                                psi_.apply_z(perm_[instr.qubits[0]]);
                        }
                    } else {
                        int parity = 0;
                        for (uint32_t b : instr.clbits) parity ^= (clbits_ >> b) & 1;
                        if (parity) {
                            if (instr.pauli == CondPauli::X)
                                psi_.apply_x(perm_[instr.qubits[0]]);
                            else
                                psi_.apply_z(perm_[instr.qubits[0]]);
                        }
                    }
                    break;
                }
            }
            apply_events(pattern, s);
        }
        return true;
    }

    ShotRecord record() const { return {clbits_, cp_.num_clbits}; }
    double branch_prob() const { return branch_prob_; }
    const std::vector<uint32_t>& perm() const { return perm_; }

    /// Final state with amplitudes re-indexed to circuit qubit order.
    StateVector logical_state() const {
        StateVector out(cp_.n);
        auto& dst = out.amplitudes();
        const auto& src = psi_.amplitudes();
        for (std::size_t idx = 0; idx < src.size(); idx++) {
            std::size_t logical = 0;
            for (uint32_t q = 0; q < cp_.n; q++)
                if ((idx >> perm_[q]) & 1) logical |= std::size_t(1) << q;
            dst[logical] = src[idx];
        }
        return out;
    }

    /// Probability of each measured-bit configuration (bit j of the key
    /// is the j-th measured qubit in ascending order). Byte-indexed
    /// gather tables keep the 2^n pass cheap.
    std::vector<double> measured_distribution() const {
        const auto& amps = psi_.amplitudes();
        std::vector<double> dist(std::size_t(1) << cp_.measured_qubits.size(), 0.0);
        uint64_t bit_to_key[StateVector::kMaxQubits] = {};
        for (uint32_t j = 0; j < cp_.measured_qubits.size(); j++)
            bit_to_key[perm_[cp_.measured_qubits[j]]] = uint64_t(1) << j;
        std::size_t n_bytes = (cp_.n + 7) / 8;
        std::vector<std::array<uint64_t, 256>> table(n_bytes);
        for (std::size_t b = 0; b < n_bytes; b++)
            for (uint32_t v = 0; v < 256; v++) {
                uint64_t key = 0;
                for (uint32_t bit = 0; bit < 8 && 8 * b + bit < cp_.n; bit++)
                    if ((v >> bit) & 1) key |= bit_to_key[8 * b + bit];
                table[b][v] = key;
            }
        for (std::size_t idx = 0; idx < amps.size(); idx++) {
            double p = std::norm(amps[idx]);
            if (p == 0.0) continue;
            uint64_t key = table[0][idx & 0xff];
            for (std::size_t b = 1; b < n_bytes; b++) key |= table[b][(idx >> (8 * b)) & 0xff];
            dist[key] += p;
        }
        return dist;
    }

  private:
    bool do_measure(const Instruction& instr, const ErrorPattern& pattern, Philox* rng,
                    std::span<const int> forced) {
        uint32_t phys = perm_[instr.qubits[0]];
        auto [p0, p1] = psi_.measure_probs(phys);
        if (std::abs(p0 + p1 - 1.0) > 1e-8)
            throw std::runtime_error("statevector norm drifted beyond 1e-8");
        int outcome;
        if (!forced.empty()) {
            outcome = forced[measure_cursor_];
            double p = outcome ? p1 : p0;
            branch_prob_ *= std::max(p, 0.0);
            if (p <= 1e-300) return false;
        } else {
            outcome = rng->uniform() < p1 ? 1 : 0;
        }
        psi_.project(phys, outcome, outcome ? p1 : p0);
        uint32_t bit = instr.clbits[0];
        if (outcome) true_bits_ |= uint64_t(1) << bit;
        auto [p10, p01] = model_.readout[instr.qubits[0]];
        double u = measure_cursor_ < pattern.readout_u.size() ? pattern.readout_u[measure_cursor_]
                                                              : 2.0;
        int recorded = outcome ^ (u < (outcome ? p01 : p10) ? 1 : 0);
        if (recorded) clbits_ |= uint64_t(1) << bit;
        measure_cursor_++;
        return true;
    }

    void apply_events(const ErrorPattern& pattern, uint32_t step) {
        while (event_cursor_ < pattern.events.size() &&
               pattern.events[event_cursor_].step == step) {
            const ErrorEvent& e = pattern.events[event_cursor_++];
            switch (e.action) {
                case ErrorAction::PauliOne:
                    psi_.apply_pauli(perm_[e.q0], e.p0);
                    break;
                case ErrorAction::PauliTwo:
                    if (e.p0) psi_.apply_pauli(perm_[e.q0], e.p0);
                    if (e.p1) psi_.apply_pauli(perm_[e.q1], e.p1);
                    break;
                case ErrorAction::DampingJump:
                    psi_.damping_jump(perm_[e.q0]);
                    break;
                case ErrorAction::StochasticZ:
                    psi_.apply_z(perm_[e.q0]);
                    break;
                case ErrorAction::CoherentRz:
                    psi_.apply_rz(perm_[e.q0], e.param);
                    break;
            }
        }
    }

    bool has_events(const ErrorPattern& pattern, uint32_t step) const {
        auto it = std::lower_bound(pattern.events.begin(), pattern.events.end(), step,
                                   [](const ErrorEvent& e, uint32_t s) { return e.step < s; });
        return it != pattern.events.end() && it->step == step;
    }

    uint32_t cond_index(uint32_t step) const {
        for (uint32_t i = 0; i < cp_.conds.size(); i++)
            if (cp_.conds[i].step == step) return i;
        throw std::logic_error("conditional step not found");
    }

    uint32_t bit_source_qubit(uint32_t clbit) const {
        for (const auto& m : cp_.measures)
            if (m.clbit == clbit) return m.qubit;
        throw std::logic_error("condition bit has no source measurement");
    }

    const CompiledProgram& cp_;
    const NoiseModel& model_;
    StateVector psi_;
    std::vector<uint32_t> perm_;
    std::vector<bool> skip_;
    uint64_t clbits_ = 0;
    uint64_t true_bits_ = 0;
    uint32_t measure_cursor_ = 0;
    std::size_t event_cursor_ = 0;
    double branch_prob_ = 1.0;
};

/// Deferred trajectory cache: one propagated branch per (pattern hash,
/// resolved feedforward variant), storing the joint distribution of the
/// measured bits, ready for direct sampling.
class TrajectoryCache {
  public:
    struct Entry {
        std::vector<double> dist;  // over measured-bit keys
        std::vector<double> cdf;   // over early keys (or full keys if no conds)
        double branch_prob = 1.0;  // total retained probability mass
        std::size_t bytes = 0;
    };

    explicit TrajectoryCache(std::size_t budget) : budget_(budget) {}

    std::shared_ptr<const Entry> get(uint64_t hash, uint64_t variant) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find({hash, variant});
        if (it == map_.end()) return nullptr;
        lru_.splice(lru_.begin(), lru_, it->second.lru_pos);
        hits_++;
        return it->second.entry;
    }

    void put(uint64_t hash, uint64_t variant, std::shared_ptr<const Entry> entry) {
        std::lock_guard<std::mutex> lock(mutex_);
        Key key{hash, variant};
        if (map_.count(key)) return;  // racing builder finished first; identical value
        lru_.push_front(key);
        map_[key] = {entry, lru_.begin()};
        used_ += entry->bytes;
        while (used_ > budget_ && map_.size() > 1) {
            Key victim = lru_.back();
            lru_.pop_back();
            auto vit = map_.find(victim);
            used_ -= vit->second.entry->bytes;
            map_.erase(vit);
        }
    }

    uint64_t hits() const { return hits_; }

  private:
    struct Key {
        uint64_t hash, variant;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            return k.hash ^ (k.variant * 0x9E3779B97F4A7C15ull);
        }
    };
    struct Slot {
        std::shared_ptr<const Entry> entry;
        std::list<Key>::iterator lru_pos;
    };

    std::mutex mutex_;
    std::unordered_map<Key, Slot, KeyHash> map_;
    std::list<Key> lru_;
    std::size_t budget_;
    std::size_t used_ = 0;
    uint64_t hits_ = 0;
};

std::shared_ptr<const TrajectoryCache::Entry> build_entry(const CompiledProgram& cp,
                                                          const NoiseModel& model,
                                                          const ErrorPattern& pattern,
                                                          uint64_t variant) {
    Executor exec(cp, model);
    exec.reset();
    exec.run(pattern, nullptr, {}, /*defer_measurements=*/true, variant);
    auto entry = std::make_shared<TrajectoryCache::Entry>();
    entry->dist = exec.measured_distribution();
    double total = std::accumulate(entry->dist.begin(), entry->dist.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-8)
        throw std::runtime_error("statevector norm drifted beyond 1e-8");
    entry->branch_prob = total;
    if (cp.early_sel != 0) {
        entry->cdf.assign(std::size_t(1) << std::popcount(cp.early_sel), 0.0);
        std::size_t m = cp.measured_qubits.size();
        std::size_t n_bytes = (m + 7) / 8;
        std::vector<std::array<uint64_t, 256>> table(n_bytes);
        for (std::size_t b = 0; b < n_bytes; b++)
            for (uint32_t v = 0; v < 256; v++)
                table[b][v] = extract_bits(uint64_t(v) << (8 * b), cp.early_sel);
        for (std::size_t key = 0; key < entry->dist.size(); key++) {
            uint64_t early = table[0][key & 0xff];
            for (std::size_t b = 1; b < n_bytes; b++) early |= table[b][(key >> (8 * b)) & 0xff];
            entry->cdf[early] += entry->dist[key];
        }
    } else {
        entry->cdf = entry->dist;
    }
    for (std::size_t i = 1; i < entry->cdf.size(); i++) entry->cdf[i] += entry->cdf[i - 1];
    entry->bytes = (entry->dist.size() + entry->cdf.size()) * sizeof(double) + 64;
    return entry;
}

uint64_t draw_from_cdf(const std::vector<double>& cdf, double u) {
    double target = u * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    if (it == cdf.end()) --it;
    return static_cast<uint64_t>(it - cdf.begin());
}

/// Cache-backed shot: draw the condition-feeding bits from the early
/// marginal, resolve readout flips to pick the feedforward variant, then
/// draw the remaining bits from that branch's conditional distribution.
ShotRecord run_shot_deferred(const CompiledProgram& cp, const NoiseModel& model,
                             TrajectoryCache& cache, const ErrorPattern& pattern, Philox& rng,
                             uint64_t* propagations) {
    auto fetch = [&](uint64_t variant) {
        auto entry = cache.get(pattern.hash, variant);
        if (!entry) {
            entry = build_entry(cp, model, pattern, variant);
            (*propagations)++;
            cache.put(pattern.hash, variant, entry);
        }
        return entry;
    };

    uint64_t recorded_bits = 0;
    auto resolve_bit = [&](uint32_t measure_idx, int outcome) {
        const MeasureInfo& m = cp.measures[measure_idx];
        double u = measure_idx < pattern.readout_u.size() ? pattern.readout_u[measure_idx] : 2.0;
        auto [p10, p01] = model.readout[m.qubit];
        int recorded = outcome ^ (u < (outcome ? p01 : p10) ? 1 : 0);
        if (recorded) recorded_bits |= uint64_t(1) << m.clbit;
    };

    if (cp.measures.empty()) return {0, cp.num_clbits};

    auto base = fetch(0);
    uint64_t variant = 0;
    if (cp.early_sel != 0) {
        uint64_t early = draw_from_cdf(base->cdf, rng.uniform());
        uint64_t early_key = deposit_bits(early, cp.early_sel);
        // Resolve early measurements (flips included), then the variant.
        std::vector<int> flip_of_clbit(cp.num_clbits, 0);
        for (uint32_t k = 0; k < cp.measures.size(); k++) {
            int pos = cp.measure_key_pos[k];
            if (!((cp.early_sel >> pos) & 1)) continue;
            int outcome = (early_key >> pos) & 1;
            resolve_bit(k, outcome);
            int recorded = (recorded_bits >> cp.measures[k].clbit) & 1;
            flip_of_clbit[cp.measures[k].clbit] = recorded ^ outcome;
        }
        for (uint32_t c = 0; c < cp.conds.size(); c++) {
            int flip_parity = 0;
            for (uint32_t b : cp.conds[c].condition) flip_parity ^= flip_of_clbit[b];
            if (flip_parity) variant |= uint64_t(1) << c;
        }
        auto entry = variant == 0 ? base : fetch(variant);
        // Conditional draw of the late bits given the early configuration.
        uint32_t n_late = std::popcount(cp.late_sel);
        double total = 0.0;
        double weights[1 << 12];
        for (uint64_t l = 0; l < (uint64_t(1) << n_late); l++) {
            uint64_t key = early_key | deposit_bits(l, cp.late_sel);
            weights[l] = entry->dist[key];
            total += weights[l];
        }
        if (total <= 0.0) throw std::runtime_error("empty conditional branch in cache sampling");
        double target = rng.uniform() * total;
        uint64_t late = 0;
        double acc = 0.0;
        for (uint64_t l = 0; l < (uint64_t(1) << n_late); l++) {
            acc += weights[l];
            if (target < acc || l + 1 == (uint64_t(1) << n_late)) {
                late = l;
                break;
            }
        }
        uint64_t late_key = deposit_bits(late, cp.late_sel);
        for (uint32_t k = 0; k < cp.measures.size(); k++) {
            int pos = cp.measure_key_pos[k];
            if ((cp.early_sel >> pos) & 1) continue;
            resolve_bit(k, (late_key >> pos) & 1);
        }
    } else {
        uint64_t key = draw_from_cdf(base->cdf, rng.uniform());
        for (uint32_t k = 0; k < cp.measures.size(); k++)
            resolve_bit(k, (key >> cp.measure_key_pos[k]) & 1);
    }
    return {recorded_bits, cp.num_clbits};
}

}  // namespace

ShotRecord run_shot(const ScheduledCircuit& scheduled, const NoiseModel& model,
                    const ErrorPattern& pattern, Philox& rng) {
    CompiledProgram cp = compile_program(scheduled);
    Executor exec(cp, model);
    exec.reset();
    exec.run(pattern, &rng);
    return exec.record();
}

ShotRecord run_shot(const ScheduledCircuit& scheduled, const NoiseModel& model, Philox& rng) {
    CompiledProgram cp = compile_program(scheduled);
    ErrorPattern pattern = sample_pattern(model, cp.program, rng);
    Executor exec(cp, model);
    exec.reset();
    exec.run(pattern, &rng);
    return exec.record();
}

ForcedShot run_shot_forced(const ScheduledCircuit& scheduled, const NoiseModel& model,
                           const ErrorPattern& pattern, std::span<const int> outcomes) {
    CompiledProgram cp = compile_program(scheduled);
    if (outcomes.size() != cp.measures.size())
        throw std::invalid_argument("forced outcome list must cover every measurement");
    Executor exec(cp, model);
    exec.reset();
    bool alive = exec.run(pattern, nullptr, outcomes);
    ForcedShot result{exec.record(), alive ? exec.branch_prob() : 0.0, exec.logical_state()};
    return result;
}

Counts run_shots(const ScheduledCircuit& scheduled, const NoiseModel& model, uint64_t n_shots,
                 uint64_t seed, const RunOptions& options, RunTelemetry* telemetry) {
    if (n_shots < 1) throw std::invalid_argument("n_shots must be >= 1");
    auto t0 = std::chrono::steady_clock::now();
    CompiledProgram cp = compile_program(scheduled);
    bool use_cache = options.cache && cp.defer_eligible;
    TrajectoryCache cache(options.cache_budget_bytes);

    int workers = options.workers > 0 ? options.workers : 1;
    std::vector<Counts> partial(workers);
    std::vector<uint64_t> propagations(workers, 0);
    std::vector<uint64_t> sequential(workers, 0);

    parallel_for(workers, workers, [&](std::size_t w) {
        Counts local;
        local.num_bits = cp.num_clbits;
        std::unique_ptr<Executor> exec;
        uint64_t lo = w * n_shots / workers;
        uint64_t hi = (w + 1) * n_shots / workers;
        for (uint64_t shot = lo; shot < hi; shot++) {
            Philox rng(seed, shot);
            ErrorPattern pattern = sample_pattern(model, cp.program, rng);
            if (use_cache) {
                ShotRecord rec =
                    run_shot_deferred(cp, model, cache, pattern, rng, &propagations[w]);
                local.add(rec.bits);
            } else {
                if (!exec) exec = std::make_unique<Executor>(cp, model);
                exec->reset();
                exec->run(pattern, &rng);
                local.add(exec->record().bits);
                propagations[w]++;
                sequential[w]++;
            }
        }
        partial[w] = std::move(local);
    });

    Counts counts;
    counts.num_bits = cp.num_clbits;
    for (const auto& p : partial) counts.merge(p);
    if (telemetry) {
        telemetry->propagations += std::accumulate(propagations.begin(), propagations.end(), 0ull);
        telemetry->sequential_shots += std::accumulate(sequential.begin(), sequential.end(), 0ull);
        telemetry->cache_hits += cache.hits();
        telemetry->elapsed_s +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return counts;
}

double expectation(const Counts& counts, uint32_t bit_a, uint32_t bit_b) {
    if (counts.total == 0) throw std::invalid_argument("expectation of empty counts");
    double sum = 0.0;
    for (const auto& [key, count] : counts.histogram) {
        int parity = ((key >> bit_a) ^ (key >> bit_b)) & 1;
        sum += parity ? -double(count) : double(count);
    }
    return sum / static_cast<double>(counts.total);
}

Counts marginalize(const Counts& counts, std::span<const uint32_t> bits) {
    Counts out;
    out.num_bits = static_cast<uint32_t>(bits.size());
    out.total = 0;
    for (const auto& [key, count] : counts.histogram) {
        uint64_t reduced = 0;
        for (std::size_t j = 0; j < bits.size(); j++)
            if ((key >> bits[j]) & 1) reduced |= uint64_t(1) << j;
        out.add(reduced, count);
    }
    return out;
}

nlohmann::json counts_to_json(const Counts& counts) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [key, count] : counts.histogram) doc[bitstring(key, counts.num_bits)] = count;
    return doc;
}

nlohmann::json counts_export_json(const Counts& counts, const Circuit& circuit) {
    nlohmann::json doc;
    doc["counts"] = counts_to_json(counts);
    doc["total"] = counts.total;
    nlohmann::json regs = nlohmann::json::array();
    for (const auto& reg : circuit.registers()) regs.push_back({{"name", reg.name}, {"size", reg.size}});
    doc["metadata"] = {{"registers", regs},
                       {"bit_order", "classical bit 0 is the leftmost character"}};
    return doc;
}

}  // namespace chshforge
