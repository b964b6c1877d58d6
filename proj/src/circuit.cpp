#include "chshforge/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace chshforge {

namespace {

int expected_qubit_arity(GateKind kind) {
    switch (kind) {
        case GateKind::H:
        case GateKind::X:
        case GateKind::Z:
        case GateKind::RY:
        case GateKind::MEASURE:
        case GateKind::COND_PAULI:
            return 1;
        case GateKind::CX:
        case GateKind::SWAP:
            return 2;
        case GateKind::BARRIER:
            return -1;  // any non-empty set
    }
    return -1;
}

const char* kind_name(GateKind kind) {
    switch (kind) {
        case GateKind::H: return "H";
        case GateKind::X: return "X";
        case GateKind::Z: return "Z";
        case GateKind::RY: return "RY";
        case GateKind::CX: return "CX";
        case GateKind::SWAP: return "SWAP";
        case GateKind::MEASURE: return "MEASURE";
        case GateKind::COND_PAULI: return "COND_PAULI";
        case GateKind::BARRIER: return "BARRIER";
    }
    return "?";
}

}  // namespace

Circuit::Circuit(uint32_t num_qubits, std::vector<RegisterSpec> registers)
    : num_qubits_(num_qubits), registers_(std::move(registers)) {
    std::set<std::string> names;
    for (const auto& reg : registers_) {
        if (!names.insert(reg.name).second)
            throw std::invalid_argument("duplicate classical register name: " + reg.name);
        num_clbits_ += reg.size;
    }
    written_.assign(num_clbits_, false);
}

void Circuit::barrier_all() {
    std::vector<uint32_t> all(num_qubits_);
    std::iota(all.begin(), all.end(), 0u);
    barrier(std::move(all));
}

void Circuit::append(Instruction instr) {
    int arity = expected_qubit_arity(instr.kind);
    if (arity >= 0 && instr.qubits.size() != static_cast<size_t>(arity))
        throw std::invalid_argument(std::string("wrong qubit count for ") + kind_name(instr.kind));
    if (instr.kind == GateKind::BARRIER && instr.qubits.empty())
        throw std::invalid_argument("BARRIER needs at least one qubit");
    std::set<uint32_t> seen;
    for (uint32_t q : instr.qubits) {
        if (q >= num_qubits_)
            throw std::out_of_range("qubit index " + std::to_string(q) + " out of range");
        if (!seen.insert(q).second)
            throw std::invalid_argument("duplicate qubit in one instruction");
    }
    if (instr.kind == GateKind::RY && !std::isfinite(instr.angle))
        throw std::invalid_argument("RY angle must be finite");

    switch (instr.kind) {
        case GateKind::MEASURE: {
            if (instr.clbits.size() != 1)
                throw std::invalid_argument("MEASURE writes exactly one classical bit");
            uint32_t bit = instr.clbits[0];
            if (bit >= num_clbits_) throw std::out_of_range("classical bit out of range");
            if (written_[bit])
                throw std::invalid_argument("classical bit " + std::to_string(bit) +
                                            " already written");
            written_[bit] = true;
            break;
        }
        case GateKind::COND_PAULI: {
            if (instr.clbits.empty())
                throw std::invalid_argument("COND_PAULI condition set must be non-empty");
            for (uint32_t bit : instr.clbits) {
                if (bit >= num_clbits_) throw std::out_of_range("condition bit out of range");
                if (!written_[bit])
                    throw std::invalid_argument("condition references unwritten bit " +
                                                std::to_string(bit));
            }
            break;
        }
        default:
            if (!instr.clbits.empty())
                throw std::invalid_argument("classical bits only valid on MEASURE/COND_PAULI");
            break;
    }
    instructions_.push_back(std::move(instr));
}

std::optional<uint32_t> Circuit::register_offset(const std::string& name) const {
    uint32_t offset = 0;
    for (const auto& reg : registers_) {
        if (reg.name == name) return offset;
        offset += reg.size;
    }
    return std::nullopt;
}

std::optional<uint32_t> Circuit::register_size(const std::string& name) const {
    for (const auto& reg : registers_)
        if (reg.name == name) return reg.size;
    return std::nullopt;
}

std::vector<uint32_t> Circuit::register_bits(const std::string& name) const {
    auto offset = register_offset(name);
    auto size = register_size(name);
    if (!offset || !size) return {};
    std::vector<uint32_t> bits(*size);
    std::iota(bits.begin(), bits.end(), *offset);
    return bits;
}

Circuit decompose_swaps(const Circuit& circuit) {
    Circuit out(circuit.num_qubits(), circuit.registers());
    out.metadata() = circuit.metadata();
    for (const auto& instr : circuit.instructions()) {
        if (instr.kind == GateKind::SWAP) {
            uint32_t a = instr.qubits[0], b = instr.qubits[1];
            out.cx(a, b);
            out.cx(b, a);
            out.cx(a, b);
        } else {
            out.append(instr);
        }
    }
    return out;
}

int two_qubit_depth(const Circuit& circuit) {
    std::vector<int> layer(circuit.num_qubits(), 0);
    int depth = 0;
    for (const auto& instr : circuit.instructions()) {
        if (instr.kind != GateKind::CX && instr.kind != GateKind::SWAP) continue;
        int at = std::max(layer[instr.qubits[0]], layer[instr.qubits[1]]) + 1;
        layer[instr.qubits[0]] = at;
        layer[instr.qubits[1]] = at;
        depth = std::max(depth, at);
    }
    return depth;
}

int two_qubit_gate_count(const Circuit& circuit) {
    int count = 0;
    for (const auto& instr : circuit.instructions())
        if (instr.kind == GateKind::CX || instr.kind == GateKind::SWAP) count++;
    return count;
}

nlohmann::json circuit_to_json(const Circuit& circuit) {
    nlohmann::json doc;
    doc["num_qubits"] = circuit.num_qubits();
    doc["registers"] = nlohmann::json::array();
    for (const auto& reg : circuit.registers())
        doc["registers"].push_back({{"name", reg.name}, {"size", reg.size}});
    doc["instructions"] = nlohmann::json::array();
    for (const auto& instr : circuit.instructions()) {
        nlohmann::json item;
        if (instr.kind == GateKind::COND_PAULI) {
            item["kind"] = instr.pauli == CondPauli::X ? "COND_X" : "COND_Z";
            item["qubits"] = instr.qubits;
            item["condition"] = instr.clbits;
        } else {
            item["kind"] = kind_name(instr.kind);
            item["qubits"] = instr.qubits;
            if (!instr.clbits.empty()) item["clbits"] = instr.clbits;
            if (instr.kind == GateKind::RY) item["angle"] = instr.angle;
        }
        doc["instructions"].push_back(std::move(item));
    }
    return doc;
}

Circuit circuit_from_json(const nlohmann::json& doc) {
    std::vector<RegisterSpec> registers;
    for (const auto& reg : doc.at("registers"))
        registers.push_back({reg.at("name").get<std::string>(), reg.at("size").get<uint32_t>()});
    Circuit circuit(doc.at("num_qubits").get<uint32_t>(), std::move(registers));
    for (const auto& item : doc.at("instructions")) {
        std::string kind = item.at("kind").get<std::string>();
        Instruction instr;
        instr.qubits = item.at("qubits").get<std::vector<uint32_t>>();
        if (kind == "COND_X" || kind == "COND_Z") {
            instr.kind = GateKind::COND_PAULI;
            instr.pauli = kind == "COND_X" ? CondPauli::X : CondPauli::Z;
            instr.clbits = item.at("condition").get<std::vector<uint32_t>>();
        } else if (kind == "H") {
            instr.kind = GateKind::H;
        } else if (kind == "X") {
            instr.kind = GateKind::X;
        } else if (kind == "Z") {
            instr.kind = GateKind::Z;
        } else if (kind == "RY") {
            instr.kind = GateKind::RY;
            instr.angle = item.at("angle").get<double>();
        } else if (kind == "CX") {
            instr.kind = GateKind::CX;
        } else if (kind == "SWAP") {
            instr.kind = GateKind::SWAP;
        } else if (kind == "MEASURE") {
            instr.kind = GateKind::MEASURE;
            instr.clbits = item.at("clbits").get<std::vector<uint32_t>>();
        } else if (kind == "BARRIER") {
            instr.kind = GateKind::BARRIER;
        } else {
            throw std::invalid_argument("unknown instruction kind: " + kind);
        }
        circuit.append(std::move(instr));
    }
    return circuit;
}

}  // namespace chshforge
