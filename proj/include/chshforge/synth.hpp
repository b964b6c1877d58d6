#pragma once

#include <string>

#include "chshforge/circuit.hpp"

namespace chshforge {

enum class CnotStrategy { Unitary, Dynamic, Postprocessed };

const char* strategy_name(CnotStrategy strategy);
CnotStrategy strategy_from_name(const std::string& name);

/// Measurement basis per side: Z (computational) or X (Hadamard before
/// readout). First letter = control side, second = target side.
struct ObservableBasis {
    bool control_x = false;
    bool target_x = false;
};

struct ChshCircuitSpec {
    uint32_t length = 2;  // chain length; control = position 0, target = last
    double phi = 0.0;
    ObservableBasis basis;
    CnotStrategy strategy = CnotStrategy::Unitary;
};

/// Long-range CNOT between chain positions 0 and n-1 via a SWAP cascade:
/// (n-2) SWAPs forward, one CX, (n-2) SWAPs restoring positions.
Circuit synth_unitary_cnot(uint32_t length);

/// Constant-depth long-range CNOT: Bell pairs on alternating ancilla
/// pairs, one CX per chain edge, X-basis measurement of the copy-holding
/// ancillas into register x and Z-basis measurement of the fusion
/// ancillas into register z, then Z on the control conditioned on
/// parity(x) and X on the target conditioned on parity(z).
Circuit synth_dynamic_cnot(uint32_t length);

/// Same entangling structure with the corrections removed; ancilla
/// measurements are delayed behind a barrier into one final layer.
/// Shots are filtered on parity(z) = parity(x) = 0 downstream.
Circuit synth_postprocessed_cnot(uint32_t length);

/// Full CHSH circuit: H on control, long-range CNOT per strategy, RY(phi)
/// on control, optional basis-change H gates, measurement of control and
/// target into registers a and b. For the post-processed strategy all
/// measurements share one final layer.
Circuit build_chsh_circuit(const ChshCircuitSpec& spec);

/// Register sizes of the dynamic construction: |x| = ceil((n-2)/2),
/// |z| = floor((n-2)/2).
uint32_t dynamic_x_register_size(uint32_t length);
uint32_t dynamic_z_register_size(uint32_t length);

}  // namespace chshforge
