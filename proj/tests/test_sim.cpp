#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "chshforge/noise.hpp"
#include "chshforge/schedule.hpp"
#include "chshforge/sim.hpp"
#include "chshforge/statevector.hpp"
#include "chshforge/synth.hpp"

using namespace chshforge;

namespace {

const Durations kDefault{};

ScheduledCircuit scheduled(const Circuit& circuit) {
    return schedule_asap(decompose_swaps(circuit), kDefault);
}

ErrorPattern clean_pattern(const NoiseModel& model, const ScheduledCircuit& sched) {
    Philox rng(0, 0);
    ErrorPattern pattern = sample_pattern(model, sched, rng);
    REQUIRE(pattern.clean());
    return pattern;
}

// Tomographically complete single-qubit preparations from |0>:
// |0>, |1>, |+>, |+i>. Prepared with kernels, not circuit gates.
void prepare_input(StateVector& psi, uint32_t q, int which) {
    switch (which) {
        case 0: break;
        case 1: psi.apply_x(q); break;
        case 2: psi.apply_h(q); break;
        case 3:
            psi.apply_h(q);
            // S gate via RZ(pi/2) up to global phase
            psi.apply_rz(q, M_PI / 2);
            break;
    }
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("bell state counts split 50/50 over 00 and 11") {
    Circuit c(2, {{"a", 1}, {"b", 1}});
    c.h(0);
    c.cx(0, 1);
    c.measure(0, 0);
    c.measure(1, 1);
    Counts counts = run_shots(scheduled(c), zero_noise(2), 10000, 21);
    CHECK(counts.total == 10000);
    REQUIRE(counts.histogram.count(0b00));
    REQUIRE(counts.histogram.count(0b11));
    CHECK(counts.histogram.size() == 2);
    double f00 = double(counts.histogram.at(0b00)) / counts.total;
    CHECK(std::abs(f00 - 0.5) < 0.015);  // 3 sigma at 10k shots
}

TEST_CASE("bell counts pass a chi-square test against (1/2, 0, 0, 1/2)") {
    Circuit c(2, {{"a", 1}, {"b", 1}});
    c.h(0);
    c.cx(0, 1);
    c.measure(0, 0);
    c.measure(1, 1);
    Counts counts = run_shots(scheduled(c), zero_noise(2), 10000, 77);
    double n00 = counts.histogram.count(0) ? counts.histogram.at(0) : 0;
    double n11 = counts.histogram.count(3) ? counts.histogram.at(3) : 0;
    CHECK(n00 + n11 == counts.total);  // forbidden outcomes never occur
    double chi2 = (n00 - 5000) * (n00 - 5000) / 5000 + (n11 - 5000) * (n11 - 5000) / 5000;
    CHECK(chi2 < 6.63);  // 1 dof at the 1% level
}

TEST_CASE("forced readout flip records the wrong bit") {
    Circuit c(1, {{"m", 1}});
    c.x(0);
    c.measure(0, 0);
    NoiseModel model = zero_noise(1);
    model.readout[0] = {0.0, 1.0};  // p01 = 1: |1> always reads 0
    ScheduledCircuit sched = schedule_asap(c, kDefault);
    Philox rng(3, 3);
    ShotRecord record = run_shot(sched, model, rng);
    CHECK(record.bit(0) == 0);
}

TEST_CASE("dynamic CNOT on |10> forces (a,b) = (1,1) on every branch") {
    for (uint32_t n : {4u, 5u}) {
        Circuit c(n, {{"a", 1}, {"b", 1}, {"z", dynamic_z_register_size(n)},
                      {"x", dynamic_x_register_size(n)}});
        c.x(0);
        Circuit cnot = synth_dynamic_cnot(n);
        for (const auto& instr : cnot.instructions()) {
            Instruction shifted = instr;
            for (auto& b : shifted.clbits) b += 2;  // z/x registers sit after a, b
            c.append(shifted);
        }
        c.measure(0, 0);
        c.measure(n - 1, 1);
        ScheduledCircuit sched = scheduled(c);
        NoiseModel model = zero_noise(n);
        ErrorPattern pattern = clean_pattern(model, sched);

        uint32_t k = n - 2;
        std::vector<bool> parity_seen(4, false);
        double total_prob = 0.0;
        // Measurement order: ancillas first (z then x), then a, b.
        for (uint32_t branch = 0; branch < (1u << k); branch++) {
            for (int a = 0; a < 2; a++)
                for (int b = 0; b < 2; b++) {
                    std::vector<int> outcomes;
                    for (uint32_t j = 0; j < k; j++) outcomes.push_back((branch >> j) & 1);
                    outcomes.push_back(a);
                    outcomes.push_back(b);
                    ForcedShot shot = run_shot_forced(sched, model, pattern, outcomes);
                    if (shot.branch_prob <= 1e-12) continue;
                    total_prob += shot.branch_prob;
                    CHECK(shot.record.bit(0) == 1);
                    CHECK(shot.record.bit(1) == 1);
                    int pz = 0, px = 0;
                    for (uint32_t bz : c.register_bits("z")) pz ^= shot.record.bit(bz);
                    for (uint32_t bx : c.register_bits("x")) px ^= shot.record.bit(bx);
                    parity_seen[pz | (px << 1)] = true;
                }
        }
        CHECK(total_prob == doctest::Approx(1.0).epsilon(1e-9));
        for (bool seen : parity_seen) CHECK(seen);
    }
}

// The strongest test in the module: for every tomographic input pair and
// every forced measurement branch, the zero-noise dynamic CNOT leaves
// (control, target) in exactly CNOT|psi_in> after feedforward.
TEST_CASE("channel-equivalence oracle: dynamic CNOT == CNOT over all branches") {
    for (uint32_t n = 3; n <= 15; n++) {
        Circuit cnot = synth_dynamic_cnot(n);
        ScheduledCircuit sched = scheduled(cnot);
        NoiseModel model = zero_noise(n);
        ErrorPattern pattern = clean_pattern(model, sched);
        uint32_t k = n - 2;

        int checked = 0;
        for (int in_c = 0; in_c < 4; in_c++) {
            for (int in_t = 0; in_t < 4; in_t++) {
                // Expected two-qubit state: CNOT applied to the pair.
                StateVector expected(2);
                prepare_input(expected, 0, in_c);
                prepare_input(expected, 1, in_t);
                expected.apply_cx(0, 1);

                // Deferred propagation of the construction without its
                // corrections lets every branch be read off at once.
                Circuit bare(n, cnot.registers());
                for (const auto& instr : cnot.instructions())
                    if (instr.kind != GateKind::COND_PAULI && instr.kind != GateKind::MEASURE)
                        bare.append(instr);
                StateVector psi(n);
                prepare_input(psi, 0, in_c);
                prepare_input(psi, n - 1, in_t);
                for (const auto& instr : bare.instructions()) {
                    switch (instr.kind) {
                        case GateKind::H: psi.apply_h(instr.qubits[0]); break;
                        case GateKind::CX: psi.apply_cx(instr.qubits[0], instr.qubits[1]); break;
                        case GateKind::BARRIER: break;
                        default: FAIL("unexpected gate in dynamic construction");
                    }
                }

                // Ancilla measurement map: which qubit feeds z_j / x_j.
                std::vector<uint32_t> meas_qubit;   // by branch bit
                std::vector<bool> meas_is_x;
                for (const auto& instr : cnot.instructions())
                    if (instr.kind == GateKind::MEASURE && instr.qubits[0] != 0 &&
                        instr.qubits[0] != n - 1) {
                        meas_qubit.push_back(instr.qubits[0]);
                        auto x_bits = cnot.register_bits("x");
                        meas_is_x.push_back(std::find(x_bits.begin(), x_bits.end(),
                                                      instr.clbits[0]) != x_bits.end());
                    }
                REQUIRE(meas_qubit.size() == k);

                for (uint32_t branch = 0; branch < (1u << k); branch++) {
                    // Gather the (control, target) block amplitudes for this
                    // ancilla configuration.
                    uint64_t anc_bits = 0;
                    for (uint32_t j = 0; j < k; j++)
                        if ((branch >> j) & 1) anc_bits |= uint64_t(1) << meas_qubit[j];
                    std::array<std::complex<double>, 4> block;
                    double norm = 0.0;
                    for (int cbit = 0; cbit < 2; cbit++)
                        for (int tbit = 0; tbit < 2; tbit++) {
                            uint64_t idx = anc_bits | (uint64_t(cbit) << 0) |
                                           (uint64_t(tbit) << (n - 1));
                            block[cbit | (tbit << 1)] = psi.amplitudes()[idx];
                            norm += std::norm(psi.amplitudes()[idx]);
                        }
                    REQUIRE(norm > 1e-12);  // every branch occurs at zero noise
                    // Feedforward: Z on control per x-parity, X on target per
                    // z-parity of the branch outcomes.
                    int parity_x = 0, parity_z = 0;
                    for (uint32_t j = 0; j < k; j++)
                        if ((branch >> j) & 1) (meas_is_x[j] ? parity_x : parity_z) ^= 1;
                    StateVector out(2);
                    auto& amp = out.amplitudes();
                    for (int i = 0; i < 4; i++) amp[i] = block[i] / std::sqrt(norm);
                    if (parity_x) out.apply_z(0);
                    if (parity_z) out.apply_x(1);
                    double fidelity = StateVector::fidelity(out, expected);
                    REQUIRE(fidelity >= 1.0 - 1e-10);
                    checked++;
                }
            }
        }
        CHECK(checked == 16 * (1 << k));
    }
}

TEST_CASE("norm is preserved within 1e-10 through long gate sequences") {
    Philox rng(8, 0);
    StateVector psi(6);
    for (int step = 0; step < 300; step++) {
        uint32_t q = rng.uniform_int(6);
        switch (rng.uniform_int(5)) {
            case 0: psi.apply_h(q); break;
            case 1: psi.apply_ry(q, rng.uniform() * 6.28); break;
            case 2: psi.apply_rz(q, rng.uniform() * 6.28); break;
            case 3: psi.apply_cx(q, (q + 1) % 6); break;
            case 4: psi.apply_pauli(q, 1 + rng.uniform_int(3)); break;
        }
        CHECK(std::abs(psi.norm_sq() - 1.0) < 1e-10);
    }
}

TEST_CASE("expectation handles the three textbook count patterns") {
    Counts counts;
    counts.num_bits = 2;
    counts.add(0b00, 500);
    counts.add(0b11, 500);
    CHECK(expectation(counts, 0, 1) == doctest::Approx(1.0));
    Counts anti;
    anti.num_bits = 2;
    anti.add(0b01, 500);
    anti.add(0b10, 500);
    CHECK(expectation(anti, 0, 1) == doctest::Approx(-1.0));
    Counts uniform;
    uniform.num_bits = 2;
    for (uint64_t key = 0; key < 4; key++) uniform.add(key, 250);
    CHECK(expectation(uniform, 0, 1) == doctest::Approx(0.0));
    Counts empty;
    CHECK_THROWS_AS(expectation(empty, 0, 1), std::invalid_argument);
}

TEST_CASE("same seed gives identical counts across 1, 4, 8 workers") {
    Circuit circuit = build_chsh_circuit({6, 0.8, {true, false}, CnotStrategy::Dynamic});
    ScheduledCircuit sched = scheduled(circuit);
    NoiseModel model = zero_noise(6);
    model.two_qubit_p.assign(5, 0.02);
    model.readout.assign(6, {0.015, 0.015});
    RunOptions opts;
    Counts reference;
    for (int workers : {1, 4, 8}) {
        opts.workers = workers;
        Counts counts = run_shots(sched, model, 20000, 1234, opts);
        if (workers == 1)
            reference = counts;
        else
            CHECK(counts == reference);
    }
    // Cache off must also be worker-independent.
    opts.cache = false;
    Counts ref_off;
    for (int workers : {1, 4}) {
        opts.workers = workers;
        Counts counts = run_shots(sched, model, 5000, 1234, opts);
        if (workers == 1)
            ref_off = counts;
        else
            CHECK(counts == ref_off);
    }
}

TEST_CASE("noiseless circuit without mid-circuit measurement propagates once") {
    Circuit circuit = build_chsh_circuit({8, 1.3, {false, false}, CnotStrategy::Unitary});
    ScheduledCircuit sched = scheduled(circuit);
    RunTelemetry telemetry;
    RunOptions opts;
    Counts counts = run_shots(sched, zero_noise(8), 10000, 5, opts, &telemetry);
    CHECK(counts.total == 10000);
    CHECK(telemetry.propagations == 1);
    CHECK(telemetry.sequential_shots == 0);
}

TEST_CASE("cache on and cache off sample the same law") {
    Circuit circuit = build_chsh_circuit({4, 0.9, {false, true}, CnotStrategy::Dynamic});
    ScheduledCircuit sched = scheduled(circuit);
    NoiseModel model = zero_noise(4);
    model.two_qubit_p.assign(3, 0.05);
    model.one_qubit_p.assign(4, 0.005);
    model.readout.assign(4, {0.02, 0.02});

    RunOptions on, off;
    off.cache = false;
    const uint64_t shots = 40000;
    Counts a = run_shots(sched, model, shots, 1001, on);
    Counts b = run_shots(sched, model, shots, 2002, off);

    // Two-sample chi-square over the full 4-bit histogram, 1% level.
    std::vector<uint64_t> keys;
    for (uint64_t key = 0; key < 16; key++) keys.push_back(key);
    double chi2 = 0.0;
    int dof = 0;
    for (uint64_t key : keys) {
        double na = a.histogram.count(key) ? a.histogram.at(key) : 0;
        double nb = b.histogram.count(key) ? b.histogram.at(key) : 0;
        if (na + nb < 10) continue;
        double diff = na - nb;
        chi2 += diff * diff / (na + nb);
        dof++;
    }
    // dof <= 15; chi2 critical at 1% for 15 dof = 30.58
    CHECK(chi2 < 30.58);
}

TEST_CASE("counts serialize with register metadata") {
    Circuit c(2, {{"a", 1}, {"b", 1}});
    c.h(0);
    c.cx(0, 1);
    c.measure(0, 0);
    c.measure(1, 1);
    Counts counts = run_shots(scheduled(c), zero_noise(2), 100, 9);
    nlohmann::json doc = counts_export_json(counts, c);
    CHECK(doc["total"] == 100);
    CHECK(doc["metadata"]["registers"].size() == 2);
    uint64_t sum = 0;
    for (const auto& [key, value] : doc["counts"].items()) {
        CHECK(key.size() == 2);
        sum += value.get<uint64_t>();
    }
    CHECK(sum == 100);
    CHECK(bitstring(0b01, 2) == "10");  // clbit 0 is the leftmost character
    CHECK(parse_bitstring("10") == 0b01);
}

}  // TEST_SUITE
