#include "chshforge/synth.hpp"

#include <algorithm>
#include <stdexcept>

namespace chshforge {

const char* strategy_name(CnotStrategy strategy) {
    switch (strategy) {
        case CnotStrategy::Unitary: return "UNITARY";
        case CnotStrategy::Dynamic: return "DYNAMIC";
        case CnotStrategy::Postprocessed: return "POSTPROCESSED";
    }
    return "?";
}

CnotStrategy strategy_from_name(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(), ::toupper);
    if (up == "UNITARY") return CnotStrategy::Unitary;
    if (up == "DYNAMIC") return CnotStrategy::Dynamic;
    if (up == "POSTPROCESSED" || up == "POST-PROCESSED") return CnotStrategy::Postprocessed;
    throw std::invalid_argument("unknown strategy: " + name);
}

uint32_t dynamic_x_register_size(uint32_t length) {
    if (length < 3) return 0;
    return (length - 2 + 1) / 2;
}

uint32_t dynamic_z_register_size(uint32_t length) {
    if (length < 3) return 0;
    return (length - 2) / 2;
}

namespace {

/// Entangling-layer plan shared by the dynamic and post-processed
/// constructions. Ancillas split into copy-holders (X-measured; they
/// carry the control value down the chain) and fusion qubits
/// (Z-measured; their Bell partner extends the copy chain). With k
/// ancillas at positions 1..k:
///   k odd:  copies at odd positions, Bell pairs (2,3), (4,5), ...
///   k even: copies at even positions, Bell pairs (1,2), (3,4), ...
/// Layer one holds the Bell preparations (plus CX(0,1) when position 1
/// is a bare copy); layer two carries one CX on each remaining chain
/// edge, so every edge is used exactly once and the two-qubit depth is 2.
struct DynamicPlan {
    std::vector<uint32_t> bell_heads;           // H + CX(head, head+1)
    std::vector<std::pair<uint32_t, uint32_t>> layer1;
    std::vector<std::pair<uint32_t, uint32_t>> layer2;
    std::vector<uint32_t> x_measured;  // copy-holders, ascending
    std::vector<uint32_t> z_measured;  // fusion qubits, ascending
};

DynamicPlan plan_dynamic(uint32_t n) {
    DynamicPlan plan;
    uint32_t k = n - 2;
    bool odd = k % 2 == 1;
    uint32_t first_bell = odd ? 2 : 1;
    for (uint32_t q = first_bell; q + 1 <= k; q += 2) {
        plan.bell_heads.push_back(q);
        plan.layer1.push_back({q, q + 1});
    }
    if (odd) plan.layer1.push_back({0, 1});
    uint32_t first_fusion_edge = odd ? 1 : 0;
    for (uint32_t q = first_fusion_edge; q <= k; q += 2) plan.layer2.push_back({q, q + 1});
    for (uint32_t q = 1; q <= k; q++) {
        bool is_copy = odd ? (q % 2 == 1) : (q % 2 == 0);
        (is_copy ? plan.x_measured : plan.z_measured).push_back(q);
    }
    return plan;
}

std::vector<RegisterSpec> chsh_registers(uint32_t length) {
    return {{"a", 1},
            {"b", 1},
            {"z", dynamic_z_register_size(length)},
            {"x", dynamic_x_register_size(length)}};
}

std::vector<RegisterSpec> ancilla_registers(uint32_t length) {
    return {{"z", dynamic_z_register_size(length)}, {"x", dynamic_x_register_size(length)}};
}

void emit_unitary_gates(Circuit& circuit, uint32_t n) {
    for (uint32_t i = 0; i + 2 < n; i++) circuit.swap_gate(i, i + 1);
    circuit.cx(n - 2, n - 1);
    for (uint32_t i = n - 2; i-- > 0;) circuit.swap_gate(i, i + 1);
}

void emit_dynamic_gates(Circuit& circuit, const DynamicPlan& plan) {
    for (uint32_t head : plan.bell_heads) circuit.h(head);
    for (auto [a, b] : plan.layer1) circuit.cx(a, b);
    for (auto [a, b] : plan.layer2) circuit.cx(a, b);
    for (uint32_t q : plan.x_measured) circuit.h(q);  // X-basis readout
}

void emit_ancilla_measures(Circuit& circuit, const DynamicPlan& plan) {
    auto z_bits = circuit.register_bits("z");
    auto x_bits = circuit.register_bits("x");
    for (uint32_t i = 0; i < plan.z_measured.size(); i++)
        circuit.measure(plan.z_measured[i], z_bits[i]);
    for (uint32_t i = 0; i < plan.x_measured.size(); i++)
        circuit.measure(plan.x_measured[i], x_bits[i]);
}

void emit_corrections(Circuit& circuit, uint32_t n) {
    auto z_bits = circuit.register_bits("z");
    auto x_bits = circuit.register_bits("x");
    if (!x_bits.empty()) circuit.cond_pauli(CondPauli::Z, 0, x_bits);
    if (!z_bits.empty()) circuit.cond_pauli(CondPauli::X, n - 1, z_bits);
}

}  // namespace

Circuit synth_unitary_cnot(uint32_t length) {
    if (length < 2) throw std::invalid_argument("chain length must be >= 2");
    Circuit circuit(length, ancilla_registers(2));  // empty z/x registers
    if (length == 2) {
        circuit.cx(0, 1);
        return circuit;
    }
    emit_unitary_gates(circuit, length);
    return circuit;
}

Circuit synth_dynamic_cnot(uint32_t length) {
    if (length < 3) throw std::invalid_argument("dynamic CNOT needs length >= 3");
    Circuit circuit(length, ancilla_registers(length));
    DynamicPlan plan = plan_dynamic(length);
    emit_dynamic_gates(circuit, plan);
    emit_ancilla_measures(circuit, plan);
    emit_corrections(circuit, length);
    return circuit;
}

Circuit synth_postprocessed_cnot(uint32_t length) {
    if (length < 3) throw std::invalid_argument("post-processed CNOT needs length >= 3");
    Circuit circuit(length, ancilla_registers(length));
    DynamicPlan plan = plan_dynamic(length);
    emit_dynamic_gates(circuit, plan);
    circuit.barrier_all();
    emit_ancilla_measures(circuit, plan);
    return circuit;
}

Circuit build_chsh_circuit(const ChshCircuitSpec& spec) {
    uint32_t n = spec.length;
    if (n < 2) throw std::invalid_argument("chain length must be >= 2");
    Circuit circuit(n, chsh_registers(n));
    circuit.metadata()["strategy"] = strategy_name(spec.strategy);

    uint32_t control = 0, target = n - 1;
    circuit.h(control);

    bool dynamic_like = spec.strategy != CnotStrategy::Unitary && n >= 3;
    DynamicPlan plan;
    if (dynamic_like) plan = plan_dynamic(n);

    if (!dynamic_like) {
        if (n == 2)
            circuit.cx(0, 1);
        else
            emit_unitary_gates(circuit, n);
    } else {
        emit_dynamic_gates(circuit, plan);
        if (spec.strategy == CnotStrategy::Dynamic) {
            emit_ancilla_measures(circuit, plan);
            emit_corrections(circuit, n);
        }
    }

    // Readout rotations fire right before the synchronized measurement;
    // without the barrier ASAP would pull the target's basis change to
    // just after the entangling layer and let it idle in the measurement
    // basis, hiding dephasing.
    if (!(dynamic_like && spec.strategy == CnotStrategy::Postprocessed))
        circuit.barrier({control, target});
    circuit.ry(control, spec.phi);
    if (spec.basis.control_x) circuit.h(control);
    if (spec.basis.target_x) circuit.h(target);

    if (dynamic_like && spec.strategy == CnotStrategy::Postprocessed) {
        circuit.barrier_all();
        emit_ancilla_measures(circuit, plan);
    }
    circuit.measure(control, circuit.register_bits("a")[0]);
    circuit.measure(target, circuit.register_bits("b")[0]);
    return circuit;
}

}  // namespace chshforge
