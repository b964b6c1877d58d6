#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace chshforge {

/// Dense 2^n statevector with in-place gate kernels, n <= 20.
/// Qubit q addresses bit q of the basis-state index.
class StateVector {
  public:
    using Amplitude = std::complex<double>;
    static constexpr uint32_t kMaxQubits = 20;

    explicit StateVector(uint32_t num_qubits);

    uint32_t num_qubits() const { return n_; }
    std::size_t size() const { return amp_.size(); }
    const std::vector<Amplitude>& amplitudes() const { return amp_; }
    std::vector<Amplitude>& amplitudes() { return amp_; }

    void reset_to_basis_state(uint64_t index);

    void apply_h(uint32_t q);
    void apply_x(uint32_t q);
    void apply_y(uint32_t q);
    void apply_z(uint32_t q);
    void apply_ry(uint32_t q, double angle);
    void apply_rz(uint32_t q, double angle);
    void apply_cx(uint32_t control, uint32_t target);
    void apply_cz(uint32_t a, uint32_t b);
    void apply_swap(uint32_t a, uint32_t b);
    /// code: 1 = X, 2 = Y, 3 = Z.
    void apply_pauli(uint32_t q, int code);

    double prob_one(uint32_t q) const;
    double norm_sq() const;
    /// One-pass (P(0), P(1)) of qubit q; the sum is the state norm.
    std::pair<double, double> measure_probs(uint32_t q) const;

    /// Z on `target` controlled on the parity of the qubits in
    /// `source_mask` (bit positions), one pass.
    void apply_parity_cz(uint64_t source_mask, uint32_t target);
    /// X on `target` controlled on the parity of `source_mask`.
    void apply_parity_cx(uint64_t source_mask, uint32_t target);

    /// Projects qubit q onto `outcome` and renormalizes; `prob` is the
    /// Born probability of that outcome (pass it to avoid a second pass).
    void project(uint32_t q, int outcome, double prob);

    /// Amplitude-damping jump |0><1| followed by renormalization (the
    /// sqrt(gamma) prefactor cancels). A state with no |1> component is
    /// left unchanged.
    void damping_jump(uint32_t q);
    /// No-jump Kraus K0 = diag(1, sqrt(1-gamma)) followed by renormalization.
    void damping_nojump(uint32_t q, double gamma);

    /// Probability of each computational basis state.
    std::vector<double> probabilities() const;

    /// |<a|b>| (both unit norm), insensitive to global phase.
    static double fidelity(const StateVector& a, const StateVector& b);

  private:
    void renormalize(double norm_sq_value);

    uint32_t n_;
    std::vector<Amplitude> amp_;
};

}  // namespace chshforge
