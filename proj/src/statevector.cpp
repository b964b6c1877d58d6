#include "chshforge/statevector.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace chshforge {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

StateVector::StateVector(uint32_t num_qubits) : n_(num_qubits) {
    if (num_qubits == 0 || num_qubits > kMaxQubits)
        throw std::invalid_argument("statevector supports 1..20 qubits");
    amp_.assign(std::size_t(1) << n_, Amplitude(0.0, 0.0));
    amp_[0] = 1.0;
}

void StateVector::reset_to_basis_state(uint64_t index) {
    if (index >= amp_.size()) throw std::out_of_range("basis state out of range");
    std::fill(amp_.begin(), amp_.end(), Amplitude(0.0, 0.0));
    amp_[index] = 1.0;
}

void StateVector::apply_h(uint32_t q) {
    std::size_t mask = std::size_t(1) << q;
    std::size_t lo_mask = mask - 1;
    std::size_t hi_mask = ~lo_mask;
    std::size_t half = amp_.size() >> 1;
    for (std::size_t i = 0; i < half; i++) {
        std::size_t i0 = ((i & hi_mask) << 1) | (i & lo_mask);
        std::size_t i1 = i0 | mask;
        Amplitude a0 = amp_[i0], a1 = amp_[i1];
        amp_[i0] = kInvSqrt2 * (a0 + a1);
        amp_[i1] = kInvSqrt2 * (a0 - a1);
    }
}

void StateVector::apply_x(uint32_t q) {
    std::size_t mask = std::size_t(1) << q;
    std::size_t lo_mask = mask - 1;
    std::size_t hi_mask = ~lo_mask;
    std::size_t half = amp_.size() >> 1;
    for (std::size_t i = 0; i < half; i++) {
        std::size_t i0 = ((i & hi_mask) << 1) | (i & lo_mask);
        std::swap(amp_[i0], amp_[i0 | mask]);
    }
}

void StateVector::apply_y(uint32_t q) {
    std::size_t mask = std::size_t(1) << q;
    std::size_t lo_mask = mask - 1;
    std::size_t hi_mask = ~lo_mask;
    std::size_t half = amp_.size() >> 1;
    for (std::size_t i = 0; i < half; i++) {
        std::size_t i0 = ((i & hi_mask) << 1) | (i & lo_mask);
        std::size_t i1 = i0 | mask;
        Amplitude a0 = amp_[i0], a1 = amp_[i1];
        amp_[i0] = Amplitude(a1.imag(), -a1.real());   // -i * a1
        amp_[i1] = Amplitude(-a0.imag(), a0.real());   // +i * a0
    }
}

void StateVector::apply_z(uint32_t q) {
    std::size_t mask = std::size_t(1) << q;
    for (std::size_t i = 0; i < amp_.size(); i++)
        if (i & mask) amp_[i] = -amp_[i];
}

void StateVector::apply_ry(uint32_t q, double angle) {
    // RY(phi) = exp(-i phi Y / 2) = [[cos, -sin], [sin, cos]] at phi/2.
    double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
    std::size_t mask = std::size_t(1) << q;
    std::size_t lo_mask = mask - 1;
    std::size_t hi_mask = ~lo_mask;
    std::size_t half = amp_.size() >> 1;
    for (std::size_t i = 0; i < half; i++) {
        std::size_t i0 = ((i & hi_mask) << 1) | (i & lo_mask);
        std::size_t i1 = i0 | mask;
        Amplitude a0 = amp_[i0], a1 = amp_[i1];
        amp_[i0] = c * a0 - s * a1;
        amp_[i1] = s * a0 + c * a1;
    }
}

void StateVector::apply_rz(uint32_t q, double angle) {
    Amplitude phase0 = std::polar(1.0, -0.5 * angle);
    Amplitude phase1 = std::polar(1.0, 0.5 * angle);
    std::size_t mask = std::size_t(1) << q;
    for (std::size_t i = 0; i < amp_.size(); i++) amp_[i] *= (i & mask) ? phase1 : phase0;
}

void StateVector::apply_cx(uint32_t control, uint32_t target) {
    std::size_t cmask = std::size_t(1) << control;
    std::size_t tmask = std::size_t(1) << target;
    std::size_t quarter = amp_.size() >> 2;
    uint32_t lo = std::min(control, target), hi = std::max(control, target);
    std::size_t lo_mask = (std::size_t(1) << lo) - 1;
    std::size_t mid_mask = ((std::size_t(1) << (hi - 1)) - 1) & ~lo_mask;
    std::size_t hi_mask = ~(lo_mask | mid_mask);
    for (std::size_t i = 0; i < quarter; i++) {
        std::size_t base = ((i & hi_mask) << 2) | ((i & mid_mask) << 1) | (i & lo_mask);
        std::swap(amp_[base | cmask], amp_[base | cmask | tmask]);
    }
}

void StateVector::apply_cz(uint32_t a, uint32_t b) {
    std::size_t both = (std::size_t(1) << a) | (std::size_t(1) << b);
    for (std::size_t i = 0; i < amp_.size(); i++)
        if ((i & both) == both) amp_[i] = -amp_[i];
}

void StateVector::apply_swap(uint32_t a, uint32_t b) {
    std::size_t amask = std::size_t(1) << a;
    std::size_t bmask = std::size_t(1) << b;
    for (std::size_t i = 0; i < amp_.size(); i++)
        if ((i & amask) && !(i & bmask)) std::swap(amp_[i], amp_[i ^ amask ^ bmask]);
}

void StateVector::apply_pauli(uint32_t q, int code) {
    switch (code) {
        case 1: apply_x(q); break;
        case 2: apply_y(q); break;
        case 3: apply_z(q); break;
        default: throw std::invalid_argument("pauli code must be 1..3");
    }
}

double StateVector::prob_one(uint32_t q) const {
    std::size_t mask = std::size_t(1) << q;
    double p = 0.0;
    for (std::size_t i = 0; i < amp_.size(); i++)
        if (i & mask) p += std::norm(amp_[i]);
    return p;
}

double StateVector::norm_sq() const {
    double total = 0.0;
    for (const auto& a : amp_) total += std::norm(a);
    return total;
}

std::pair<double, double> StateVector::measure_probs(uint32_t q) const {
    std::size_t mask = std::size_t(1) << q;
    double p0 = 0.0, p1 = 0.0;
    for (std::size_t i = 0; i < amp_.size(); i++) {
        double w = std::norm(amp_[i]);
        if (i & mask)
            p1 += w;
        else
            p0 += w;
    }
    return {p0, p1};
}

void StateVector::apply_parity_cz(uint64_t source_mask, uint32_t target) {
    std::size_t tmask = std::size_t(1) << target;
    for (std::size_t i = 0; i < amp_.size(); i++)
        if ((i & tmask) && (std::popcount(i & source_mask) & 1)) amp_[i] = -amp_[i];
}

void StateVector::apply_parity_cx(uint64_t source_mask, uint32_t target) {
    std::size_t tmask = std::size_t(1) << target;
    for (std::size_t i = 0; i < amp_.size(); i++)
        if (!(i & tmask) && (std::popcount(i & source_mask) & 1))
            std::swap(amp_[i], amp_[i | tmask]);
}

void StateVector::renormalize(double norm_sq_value) {
    if (norm_sq_value <= 0.0) throw std::runtime_error("cannot renormalize null state");
    double scale = 1.0 / std::sqrt(norm_sq_value);
    for (auto& a : amp_) a *= scale;
}

void StateVector::project(uint32_t q, int outcome, double prob) {
    std::size_t mask = std::size_t(1) << q;
    bool keep_one = outcome != 0;
    for (std::size_t i = 0; i < amp_.size(); i++)
        if (static_cast<bool>(i & mask) != keep_one) amp_[i] = 0.0;
    renormalize(prob);
}

void StateVector::damping_jump(uint32_t q) {
    double p1 = prob_one(q);
    if (p1 < 1e-15) return;  // jump operator would annihilate the state
    std::size_t mask = std::size_t(1) << q;
    std::size_t lo_mask = mask - 1;
    std::size_t hi_mask = ~lo_mask;
    std::size_t half = amp_.size() >> 1;
    for (std::size_t i = 0; i < half; i++) {
        std::size_t i0 = ((i & hi_mask) << 1) | (i & lo_mask);
        std::size_t i1 = i0 | mask;
        amp_[i0] = amp_[i1];
        amp_[i1] = 0.0;
    }
    renormalize(p1);
}

void StateVector::damping_nojump(uint32_t q, double gamma) {
    double scale = std::sqrt(1.0 - gamma);
    std::size_t mask = std::size_t(1) << q;
    double norm = 0.0;
    for (std::size_t i = 0; i < amp_.size(); i++) {
        if (i & mask) amp_[i] *= scale;
        norm += std::norm(amp_[i]);
    }
    renormalize(norm);
}

std::vector<double> StateVector::probabilities() const {
    std::vector<double> probs(amp_.size());
    for (std::size_t i = 0; i < amp_.size(); i++) probs[i] = std::norm(amp_[i]);
    return probs;
}

double StateVector::fidelity(const StateVector& a, const StateVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("statevector size mismatch");
    Amplitude overlap(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); i++) overlap += std::conj(a.amp_[i]) * b.amp_[i];
    return std::abs(overlap);
}

}  // namespace chshforge
