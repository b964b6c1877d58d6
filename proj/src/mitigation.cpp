#include "chshforge/mitigation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace chshforge {

ConfusionSet ConfusionSet::identity(uint32_t n) {
    ConfusionSet set;
    set.qubits.resize(n);
    return set;
}

ConfusionSet ConfusionSet::symmetric(uint32_t n, double flip) {
    ConfusionSet set;
    set.qubits.resize(n);
    for (auto& m : set.qubits) m.a = {{{1.0 - flip, flip}, {flip, 1.0 - flip}}};
    set.validate();
    return set;
}

ConfusionSet ConfusionSet::from_flips(const std::vector<std::pair<double, double>>& p10_p01) {
    ConfusionSet set;
    set.qubits.resize(p10_p01.size());
    for (std::size_t q = 0; q < p10_p01.size(); q++) {
        auto [p10, p01] = p10_p01[q];
        set.qubits[q].a = {{{1.0 - p10, p01}, {p10, 1.0 - p01}}};
    }
    set.validate();
    return set;
}

void ConfusionSet::validate() const {
    for (const auto& m : qubits) {
        for (int j = 0; j < 2; j++) {
            double sum = m.a[0][j] + m.a[1][j];
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("confusion columns must sum to 1");
        }
        if (m.a[0][0] < 0.5 || m.a[1][1] < 0.5)
            throw std::invalid_argument("confusion diagonal must be >= 0.5");
    }
}

nlohmann::json confusion_to_json(const ConfusionSet& confusion) {
    nlohmann::json doc = nlohmann::json::object();
    for (std::size_t q = 0; q < confusion.qubits.size(); q++) {
        const auto& a = confusion.qubits[q].a;
        doc[std::to_string(q)] = {{a[0][0], a[0][1]}, {a[1][0], a[1][1]}};
    }
    return doc;
}

ConfusionSet confusion_from_json(const nlohmann::json& doc) {
    ConfusionSet set;
    set.qubits.resize(doc.size());
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        std::size_t q = std::stoul(it.key());
        if (q >= set.qubits.size()) set.qubits.resize(q + 1);
        const auto& rows = it.value();
        set.qubits[q].a = {{{rows[0][0].get<double>(), rows[0][1].get<double>()},
                            {rows[1][0].get<double>(), rows[1][1].get<double>()}}};
    }
    set.validate();
    return set;
}

double QuasiDistribution::parity_expectation(uint32_t bit_a, uint32_t bit_b) const {
    double sum = 0.0;
    for (const auto& [key, w] : weights) {
        int parity = ((key >> bit_a) ^ (key >> bit_b)) & 1;
        sum += parity ? -w : w;
    }
    return sum;
}

std::vector<Circuit> calibration_circuits(uint32_t num_qubits) {
    if (num_qubits == 0) throw std::invalid_argument("calibration needs at least one qubit");
    std::vector<RegisterSpec> regs{{"c", num_qubits}};
    Circuit zeros(num_qubits, regs);
    for (uint32_t q = 0; q < num_qubits; q++) zeros.measure(q, q);
    Circuit ones(num_qubits, regs);
    for (uint32_t q = 0; q < num_qubits; q++) ones.x(q);
    for (uint32_t q = 0; q < num_qubits; q++) ones.measure(q, q);
    return {zeros, ones};
}

ConfusionSet fit_confusion(const Counts& counts0, const Counts& counts1) {
    if (counts0.total == 0 || counts1.total == 0)
        throw std::invalid_argument("calibration counts must not be empty");
    if (counts0.num_bits != counts1.num_bits)
        throw std::invalid_argument("calibration count widths differ");
    uint32_t n = counts0.num_bits;
    ConfusionSet set;
    set.qubits.resize(n);
    for (uint32_t q = 0; q < n; q++) {
        uint64_t ones_seen = 0;
        for (const auto& [key, c] : counts0.histogram)
            if ((key >> q) & 1) ones_seen += c;
        double p10 = static_cast<double>(ones_seen) / counts0.total;
        uint64_t zeros_seen = 0;
        for (const auto& [key, c] : counts1.histogram)
            if (!((key >> q) & 1)) zeros_seen += c;
        double p01 = static_cast<double>(zeros_seen) / counts1.total;
        set.qubits[q].a = {{{1.0 - p10, p01}, {p10, 1.0 - p01}}};
    }
    set.validate();
    return set;
}

namespace {

int hamming(uint64_t a, uint64_t b) { return std::popcount(a ^ b); }

}  // namespace

QuasiDistribution mitigate(const Counts& raw, const ConfusionSet& confusion,
                           const MitigateOptions& options) {
    if (raw.total == 0) throw std::invalid_argument("cannot mitigate empty counts");
    uint32_t n = raw.num_bits;
    if (confusion.qubits.size() < n)
        throw std::invalid_argument("confusion set does not cover all measured qubits");

    // Subspace: observed bitstrings plus an optional Hamming halo.
    std::vector<uint64_t> states;
    std::unordered_map<uint64_t, int> index;
    auto add_state = [&](uint64_t s) {
        if (index.emplace(s, static_cast<int>(states.size())).second) states.push_back(s);
    };
    for (const auto& [key, count] : raw.histogram) add_state(key);
    for (int h = 0; h < options.halo; h++) {
        std::vector<uint64_t> snapshot = states;
        for (uint64_t s : snapshot)
            for (uint32_t q = 0; q < n; q++) add_state(s ^ (uint64_t(1) << q));
    }
    std::size_t m = states.size();

    std::vector<double> b(m, 0.0);
    for (const auto& [key, count] : raw.histogram)
        b[index[key]] = static_cast<double>(count) / raw.total;

    // Matrix elements A(s,t) = prod_q a_q[s_q][t_q], expressed relative
    // to the diagonal so a row element costs O(hamming distance).
    std::vector<double> diag(m);
    for (std::size_t i = 0; i < m; i++) {
        double d = 1.0;
        for (uint32_t q = 0; q < n; q++) {
            int bit = (states[i] >> q) & 1;
            d *= confusion.qubits[q].a[bit][bit];
        }
        diag[i] = d;
    }
    auto element = [&](std::size_t row, std::size_t col) {
        double v = diag[row];
        uint64_t differ = states[row] ^ states[col];
        while (differ) {
            uint32_t q = static_cast<uint32_t>(std::countr_zero(differ));
            differ &= differ - 1;
            int sq = (states[row] >> q) & 1;
            int tq = (states[col] >> q) & 1;
            v *= confusion.qubits[q].a[sq][tq] / confusion.qubits[q].a[sq][sq];
        }
        return v;
    };

    // Exact solve for narrow registers; distance-truncated sparse rows
    // otherwise (far elements are products of many flip probabilities).
    int cutoff = options.distance_cutoff;
    if (cutoff <= 0) cutoff = n <= 10 ? static_cast<int>(n) : 4;
    if (n <= 10) cutoff = static_cast<int>(n);

    std::vector<std::vector<std::pair<int, double>>> rows(m);
    for (std::size_t i = 0; i < m; i++) {
        for (std::size_t j = 0; j < m; j++) {
            if (i == j) continue;
            if (hamming(states[i], states[j]) > cutoff) continue;
            rows[i].push_back({static_cast<int>(j), element(i, j)});
        }
    }

    auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
        for (std::size_t i = 0; i < m; i++) {
            double acc = diag[i] * x[i];
            for (const auto& [j, a] : rows[i]) acc += a * x[j];
            out[i] = acc;
        }
    };

    // Damped Jacobi-preconditioned fixed point: x += damping * D^-1 (b - A x).
    std::vector<double> x = b, ax(m), residual(m);
    double res_norm = 0.0;
    int iter = 0;
    for (; iter < options.max_iterations; iter++) {
        apply(x, ax);
        res_norm = 0.0;
        for (std::size_t i = 0; i < m; i++) {
            residual[i] = b[i] - ax[i];
            res_norm += residual[i] * residual[i];
        }
        res_norm = std::sqrt(res_norm);
        if (res_norm < options.tolerance) break;
        for (std::size_t i = 0; i < m; i++) x[i] += options.damping * residual[i] / diag[i];
    }
    if (res_norm >= options.tolerance)
        throw std::runtime_error("mitigation solver did not converge (ill-conditioned confusion)");

    double sum = 0.0;
    for (double v : x) sum += v;
    if (std::abs(sum) < 1e-12) throw std::runtime_error("mitigated weights sum to zero");
    QuasiDistribution quasi;
    quasi.num_bits = n;
    double overhead = 0.0;
    for (std::size_t i = 0; i < m; i++) {
        double w = x[i] / sum;
        if (w != 0.0) quasi.weights[states[i]] = w;
        overhead += std::abs(w);
    }
    quasi.overhead = overhead;
    return quasi;
}

}  // namespace chshforge
