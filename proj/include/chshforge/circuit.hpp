#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace chshforge {

enum class GateKind : uint8_t { H, X, Z, RY, CX, SWAP, MEASURE, COND_PAULI, BARRIER };

/// Pauli applied by a classically conditioned correction.
enum class CondPauli : uint8_t { X, Z };

struct Instruction {
    GateKind kind;
    std::vector<uint32_t> qubits;
    // MEASURE: the single destination bit. COND_PAULI: the condition set,
    // applied when the XOR of the named bits is 1.
    std::vector<uint32_t> clbits;
    double angle = 0.0;
    CondPauli pauli = CondPauli::X;

    bool operator==(const Instruction& other) const = default;
};

struct RegisterSpec {
    std::string name;
    uint32_t size = 0;

    bool operator==(const RegisterSpec& other) const = default;
};

/// Ordered instruction list over qubits and named classical registers.
/// Mid-circuit measurement and parity-conditioned Pauli corrections are
/// first-class instructions. append() is the only mutation path and
/// enforces the structural invariants (index ranges, no duplicate qubits
/// in one instruction, each classical bit written at most once,
/// conditions referencing only already-written bits).
class Circuit {
  public:
    explicit Circuit(uint32_t num_qubits, std::vector<RegisterSpec> registers = {});

    void append(Instruction instr);

    // Convenience wrappers.
    void h(uint32_t q) { append({GateKind::H, {q}, {}}); }
    void x(uint32_t q) { append({GateKind::X, {q}, {}}); }
    void z(uint32_t q) { append({GateKind::Z, {q}, {}}); }
    void ry(uint32_t q, double angle) { append({GateKind::RY, {q}, {}, angle}); }
    void cx(uint32_t control, uint32_t target) { append({GateKind::CX, {control, target}, {}}); }
    void swap_gate(uint32_t a, uint32_t b) { append({GateKind::SWAP, {a, b}, {}}); }
    void measure(uint32_t q, uint32_t clbit) { append({GateKind::MEASURE, {q}, {clbit}}); }
    void cond_pauli(CondPauli p, uint32_t q, std::vector<uint32_t> condition) {
        Instruction instr{GateKind::COND_PAULI, {q}, std::move(condition)};
        instr.pauli = p;
        append(instr);
    }
    void barrier(std::vector<uint32_t> qubits) {
        append({GateKind::BARRIER, std::move(qubits), {}});
    }
    void barrier_all();

    uint32_t num_qubits() const { return num_qubits_; }
    uint32_t num_clbits() const { return num_clbits_; }
    const std::vector<RegisterSpec>& registers() const { return registers_; }
    const std::vector<Instruction>& instructions() const { return instructions_; }
    std::map<std::string, std::string>& metadata() { return metadata_; }
    const std::map<std::string, std::string>& metadata() const { return metadata_; }

    /// First bit index of a named register, or nullopt if absent.
    std::optional<uint32_t> register_offset(const std::string& name) const;
    std::optional<uint32_t> register_size(const std::string& name) const;
    /// Global bit indices of a named register, in register order.
    std::vector<uint32_t> register_bits(const std::string& name) const;

    bool operator==(const Circuit& other) const {
        return num_qubits_ == other.num_qubits_ && registers_ == other.registers_ &&
               instructions_ == other.instructions_;
    }

  private:
    uint32_t num_qubits_;
    uint32_t num_clbits_ = 0;
    std::vector<RegisterSpec> registers_;
    std::vector<Instruction> instructions_;
    std::vector<bool> written_;
    std::map<std::string, std::string> metadata_;
};

/// Replaces every SWAP with the 3-CX expansion CX(a,b) CX(b,a) CX(a,b);
/// all other instructions are kept in order.
Circuit decompose_swaps(const Circuit& circuit);

/// Greedy layering depth counting only two-qubit gates (CX; an
/// undecomposed SWAP counts as one layer). Measurements, single-qubit
/// gates and barriers neither count nor advance layers.
int two_qubit_depth(const Circuit& circuit);

/// Number of two-qubit gate instructions (CX and SWAP).
int two_qubit_gate_count(const Circuit& circuit);

nlohmann::json circuit_to_json(const Circuit& circuit);
Circuit circuit_from_json(const nlohmann::json& doc);

}  // namespace chshforge
