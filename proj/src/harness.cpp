#include "chshforge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "chshforge/schedule.hpp"
#include "chshforge/util.hpp"

namespace chshforge {

namespace {

// Basis order ZZ, ZX, XZ, XX (control side first).
constexpr ObservableBasis kBases[4] = {
    {false, false}, {false, true}, {true, false}, {true, true}};

uint64_t strategy_tag(CnotStrategy s) { return static_cast<uint64_t>(s) + 1; }

}  // namespace

void ExperimentConfig::validate() const {
    if (grid.count < 2) throw std::invalid_argument("phase grid needs at least 2 points");
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    for (int length : lengths)
        if (length < 2) throw std::invalid_argument("lengths must be >= 2");
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json doc;
    doc["lengths"] = config.lengths;
    std::vector<std::string> strategies;
    for (auto s : config.strategies) strategies.push_back(strategy_name(s));
    doc["strategies"] = strategies;
    doc["grid"] = {{"count", config.grid.count},
                   {"start", config.grid.start},
                   {"end", config.grid.end}};
    doc["shots"] = config.shots;
    doc["repetitions"] = config.repetitions;
    doc["mitigation"] = config.mitigation;
    doc["filter_before_mitigation"] = config.filter_before_mitigation;
    doc["dd"] = config.dd;
    doc["drift"] = config.drift;
    doc["cache"] = config.cache;
    doc["threads"] = config.threads;
    doc["seed"] = config.seed;
    doc["chain_lambda"] = config.chain_lambda;
    doc["calibration"] = config.calibration_path;
    return doc;
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
    ExperimentConfig config;
    if (doc.contains("lengths")) config.lengths = doc.at("lengths").get<std::vector<int>>();
    if (doc.contains("strategies")) {
        config.strategies.clear();
        for (const auto& name : doc.at("strategies"))
            config.strategies.push_back(strategy_from_name(name.get<std::string>()));
    }
    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        if (g.contains("count")) config.grid.count = g.at("count").get<int>();
        if (g.contains("start")) config.grid.start = g.at("start").get<double>();
        if (g.contains("end")) config.grid.end = g.at("end").get<double>();
    }
    if (doc.contains("shots")) config.shots = doc.at("shots").get<int>();
    if (doc.contains("repetitions")) config.repetitions = doc.at("repetitions").get<int>();
    if (doc.contains("mitigation")) config.mitigation = doc.at("mitigation").get<bool>();
    if (doc.contains("filter_before_mitigation"))
        config.filter_before_mitigation = doc.at("filter_before_mitigation").get<bool>();
    if (doc.contains("dd")) config.dd = doc.at("dd").get<bool>();
    if (doc.contains("drift")) config.drift = doc.at("drift").get<bool>();
    if (doc.contains("cache")) config.cache = doc.at("cache").get<bool>();
    if (doc.contains("threads")) config.threads = doc.at("threads").get<int>();
    if (doc.contains("seed")) config.seed = doc.at("seed").get<uint64_t>();
    if (doc.contains("chain_lambda")) config.chain_lambda = doc.at("chain_lambda").get<double>();
    if (doc.contains("calibration")) config.calibration_path = doc.at("calibration").get<std::string>();
    config.validate();
    return config;
}

double compute_s(double e_zz, double e_zx, double e_xz, double e_xx) {
    return e_zz - e_zx + e_xz + e_xx;
}

namespace {

struct FilterBits {
    std::vector<uint32_t> z, x;
    uint32_t a = 0, b = 0;
};

FilterBits filter_bits(const Circuit& circuit) {
    FilterBits bits;
    auto a = circuit.register_bits("a");
    auto b = circuit.register_bits("b");
    if (a.empty() || b.empty())
        throw std::invalid_argument("post-selection requires a and b registers");
    bits.a = a[0];
    bits.b = b[0];
    bits.z = circuit.register_bits("z");
    bits.x = circuit.register_bits("x");
    return bits;
}

int parity_of(uint64_t key, const std::vector<uint32_t>& bits) {
    int parity = 0;
    for (uint32_t b : bits) parity ^= (key >> b) & 1;
    return parity;
}

}  // namespace

std::pair<Counts, double> postselect_filter(const Counts& counts, const Circuit& circuit) {
    FilterBits bits = filter_bits(circuit);
    Counts kept;
    kept.num_bits = 2;  // (a, b)
    for (const auto& [key, count] : counts.histogram) {
        if (parity_of(key, bits.z) || parity_of(key, bits.x)) continue;
        uint64_t reduced = (((key >> bits.a) & 1)) | (((key >> bits.b) & 1) << 1);
        kept.add(reduced, count);
    }
    double retention =
        counts.total == 0 ? 0.0 : static_cast<double>(kept.total) / counts.total;
    return {kept, retention};
}

std::pair<QuasiDistribution, double> postselect_filter(const QuasiDistribution& quasi,
                                                       const Circuit& circuit) {
    FilterBits bits = filter_bits(circuit);
    QuasiDistribution kept;
    kept.num_bits = 2;
    double kept_mass = 0.0;
    double overhead = 0.0;
    for (const auto& [key, w] : quasi.weights) {
        if (parity_of(key, bits.z) || parity_of(key, bits.x)) continue;
        uint64_t reduced = (((key >> bits.a) & 1)) | (((key >> bits.b) & 1) << 1);
        kept.weights[reduced] += w;
        kept_mass += w;
    }
    if (kept_mass != 0.0)
        for (auto& [key, w] : kept.weights) {
            w /= kept_mass;
            overhead += std::abs(w);
        }
    kept.overhead = overhead;
    return {kept, kept_mass};
}

void SCurve::finalize() {
    max_abs_s = 0.0;
    argmax_phi = points.empty() ? 0.0 : points.front().phi;
    double retention_sum = 0.0;
    for (const auto& p : points) {
        if (std::abs(p.s) > max_abs_s) {
            max_abs_s = std::abs(p.s);
            argmax_phi = p.phi;
        }
        retention_sum += p.retention;
    }
    mean_retention = points.empty() ? 1.0 : retention_sum / points.size();
}

Experiment::Experiment(ExperimentConfig config, CalibrationData calibration)
    : config_(std::move(config)), calibration_(std::move(calibration)) {
    config_.validate();
    if (!config_.drift)
        for (auto& q : calibration_.qubits) q.drift_rad_per_s = 0.0;
}

QubitChain Experiment::chain(int length) const {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = chain_cache_.find(length);
        if (it != chain_cache_.end()) return it->second;
    }
    QubitChain found = find_chain(calibration_.map, calibration_, length, config_.chain_lambda);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    return chain_cache_.emplace(length, std::move(found)).first->second;
}

const ConfusionSet& Experiment::chain_confusion(const NoiseModel& model, uint32_t width) const {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = confusion_cache_.find(width);
        if (it != confusion_cache_.end()) return it->second;
    }
    // Characterize readout the way an experiment would: simulate the two
    // calibration circuits under the same noise model.
    auto circuits = calibration_circuits(width);
    RunOptions run_opts;
    run_opts.cache = config_.cache;
    std::vector<Counts> counts;
    for (std::size_t i = 0; i < circuits.size(); i++) {
        ScheduledCircuit sched = schedule_asap(circuits[i], calibration_.durations);
        counts.push_back(run_shots(sched, model, std::max(config_.shots, 10000),
                                   derive_seed(config_.seed, 0xca11, width, i), run_opts));
    }
    ConfusionSet fitted = fit_confusion(counts[0], counts[1]);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    return confusion_cache_.emplace(width, std::move(fitted)).first->second;
}

Experiment::PointResult Experiment::run_point(CnotStrategy strategy, const QubitChain& chain,
                                              int phase_index, int basis_index, int rep) const {
    ChshCircuitSpec spec;
    spec.length = static_cast<uint32_t>(chain.qubits.size());
    spec.phi = config_.grid.phi(phase_index);
    spec.basis = kBases[basis_index];
    spec.strategy = strategy;
    Circuit circuit = build_chsh_circuit(spec);
    Circuit flat = decompose_swaps(circuit);
    ScheduledCircuit sched = schedule_asap(flat, calibration_.durations);
    if (config_.dd) sched = pad_dd(sched);

    NoiseModel model = from_calibration(calibration_, chain);
    RunOptions run_opts;
    run_opts.cache = config_.cache;
    uint64_t seed = derive_seed(config_.seed, strategy_tag(strategy) * 1000 + chain.qubits.size(),
                                rep, static_cast<uint64_t>(phase_index),
                                static_cast<uint64_t>(basis_index));
    Counts counts = run_shots(sched, model, config_.shots, seed, run_opts);

    uint32_t bit_a = circuit.register_bits("a")[0];
    uint32_t bit_b = circuit.register_bits("b")[0];
    PointResult result;
    if (config_.mitigation) {
        const ConfusionSet& confusion = chain_confusion(model, circuit.num_qubits());
        // Chain-position confusion -> measured-clbit confusion.
        std::vector<std::pair<double, double>> flips(circuit.num_clbits(), {0.0, 0.0});
        for (const auto& instr : circuit.instructions())
            if (instr.kind == GateKind::MEASURE) {
                const auto& a = confusion.qubits[instr.qubits[0]].a;
                flips[instr.clbits[0]] = {a[1][0], a[0][1]};
            }
        if (strategy == CnotStrategy::Postprocessed && !config_.filter_before_mitigation) {
            QuasiDistribution quasi = mitigate(counts, ConfusionSet::from_flips(flips));
            auto [kept, retention] = postselect_filter(quasi, circuit);
            result.e = kept.parity_expectation(0, 1);
            result.retention = retention;
            return result;
        }
        double retention = 1.0;
        Counts reduced;
        if (strategy == CnotStrategy::Postprocessed) {
            std::tie(reduced, retention) = postselect_filter(counts, circuit);
        } else {
            std::vector<uint32_t> ab{bit_a, bit_b};
            reduced = marginalize(counts, ab);
        }
        result.retention = retention;
        if (reduced.total == 0) {
            result.e = 0.0;
            return result;
        }
        ConfusionSet pair_confusion =
            ConfusionSet::from_flips({flips[bit_a], flips[bit_b]});
        QuasiDistribution quasi = mitigate(reduced, pair_confusion);
        result.e = quasi.parity_expectation(0, 1);
        return result;
    }
    if (strategy == CnotStrategy::Postprocessed) {
        auto [kept, retention] = postselect_filter(counts, circuit);
        result.retention = retention;
        result.e = kept.total == 0 ? 0.0 : expectation(kept, 0, 1);
        return result;
    }
    result.e = expectation(counts, bit_a, bit_b);
    return result;
}

SCurve Experiment::run_scurve(CnotStrategy strategy, int length, int rep) const {
    return run_scurve_on_chain(strategy, chain(length), rep);
}

SCurve Experiment::run_scurve_on_chain(CnotStrategy strategy, const QubitChain& chain,
                                       int rep) const {
    SCurve curve;
    curve.points.resize(config_.grid.count);
    std::vector<std::pair<int, int>> jobs;  // (phase index, basis index)
    for (int i = 0; i < config_.grid.count; i++)
        for (int basis = 0; basis < 4; basis++) jobs.push_back({i, basis});
    std::vector<PointResult> results(jobs.size());
    parallel_for(jobs.size(), config_.threads, [&](std::size_t j) {
        auto [i, basis] = jobs[j];
        results[j] = run_point(strategy, chain, i, basis, rep);
    });
    for (std::size_t j = 0; j < jobs.size(); j++) {
        auto [i, basis] = jobs[j];
        SCurvePoint& point = curve.points[i];
        point.phi = config_.grid.phi(i);
        double e = results[j].e;
        switch (basis) {
            case 0: point.e_zz = e; break;
            case 1: point.e_zx = e; break;
            case 2: point.e_xz = e; break;
            case 3: point.e_xx = e; break;
        }
        if (basis == 0) point.retention = results[j].retention;
    }
    for (auto& point : curve.points)
        point.s = compute_s(point.e_zz, point.e_zx, point.e_xz, point.e_xx);
    curve.finalize();
    return curve;
}

DistanceSweepResult Experiment::sweep_distance() const {
    DistanceSweepResult result;
    result.config = config_;
    for (int length : config_.lengths) result.chains[length] = chain(length);

    struct Job {
        CnotStrategy strategy;
        int length;
        int rep;
        int phase_index;
        int basis;
    };
    std::vector<Job> jobs;
    for (CnotStrategy strategy : config_.strategies)
        for (int length : config_.lengths)
            for (int rep = 0; rep < config_.repetitions; rep++)
                for (int i = 0; i < config_.grid.count; i++)
                    for (int basis = 0; basis < 4; basis++)
                        jobs.push_back({strategy, length, rep, i, basis});
    std::vector<PointResult> points(jobs.size());
    parallel_for(jobs.size(), config_.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        points[j] = run_point(job.strategy, result.chains.at(job.length), job.phase_index,
                              job.basis, job.rep);
    });

    // Assemble curves in deterministic job order.
    std::map<std::pair<CnotStrategy, int>, std::vector<SCurve>> curves;
    for (CnotStrategy strategy : config_.strategies)
        for (int length : config_.lengths) {
            auto& list = curves[{strategy, length}];
            list.resize(config_.repetitions);
            for (auto& curve : list) curve.points.resize(config_.grid.count);
        }
    for (std::size_t j = 0; j < jobs.size(); j++) {
        const Job& job = jobs[j];
        SCurvePoint& point = curves[{job.strategy, job.length}][job.rep].points[job.phase_index];
        point.phi = config_.grid.phi(job.phase_index);
        switch (job.basis) {
            case 0: point.e_zz = points[j].e; break;
            case 1: point.e_zx = points[j].e; break;
            case 2: point.e_xz = points[j].e; break;
            case 3: point.e_xx = points[j].e; break;
        }
        if (job.basis == 0) point.retention = points[j].retention;
    }
    for (auto& [key, list] : curves) {
        CellStats& cell = result.cells[key];
        for (auto& curve : list) {
            for (auto& point : curve.points)
                point.s = compute_s(point.e_zz, point.e_zx, point.e_xz, point.e_xx);
            curve.finalize();
            cell.per_rep_max.push_back(curve.max_abs_s);
            cell.scurves.push_back(std::move(curve));
        }
    }
    for (auto& [key, cell] : result.cells) {
        double mean = std::accumulate(cell.per_rep_max.begin(), cell.per_rep_max.end(), 0.0) /
                      cell.per_rep_max.size();
        double var = 0.0;
        for (double v : cell.per_rep_max) var += (v - mean) * (v - mean);
        cell.max_s_mean = mean;
        cell.max_s_std = cell.per_rep_max.size() > 1
                             ? std::sqrt(var / (cell.per_rep_max.size() - 1))
                             : 0.0;
        double retention = 0.0;
        for (const auto& curve : cell.scurves) retention += curve.mean_retention;
        cell.retention_mean = retention / cell.scurves.size();
    }
    return result;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman_rho needs two vectors of equal size >= 2");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> rank(v.size());
        for (std::size_t i = 0; i < order.size();) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) j++;
            double mean_rank = 0.5 * (i + j);
            for (std::size_t k = i; k <= j; k++) rank[order[k]] = mean_rank;
            i = j + 1;
        }
        return rank;
    };
    auto rx = ranks(x), ry = ranks(y);
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); i++) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

int crossover_length(const DistanceSweepResult& result) {
    std::vector<int> lengths = result.config.lengths;
    std::sort(lengths.begin(), lengths.end());
    for (int length : lengths)
        if (!result.cells.count({CnotStrategy::Dynamic, length}) ||
            !result.cells.count({CnotStrategy::Unitary, length}))
            return -1;
    for (int candidate : lengths) {
        bool holds = true;
        bool any_beyond = false;
        for (int length : lengths) {
            if (length <= candidate) continue;
            any_beyond = true;
            if (result.cell(CnotStrategy::Dynamic, length).max_s_mean <
                result.cell(CnotStrategy::Unitary, length).max_s_mean)
                holds = false;
        }
        if (holds && any_beyond) return candidate;
    }
    return -1;
}

CalibrationData scale_noise(const CalibrationData& cal, double scale) {
    CalibrationData out = cal;
    auto clamp_p = [](double p) { return std::min(p, 0.499); };
    for (auto& q : out.qubits) {
        q.p10 = clamp_p(q.p10 * scale);
        q.p01 = clamp_p(q.p01 * scale);
        q.t1_s /= scale;
        q.t2_s /= scale;
        q.drift_rad_per_s *= scale;
    }
    for (auto& [edge, error] : out.edge_error) error = clamp_p(error * scale);
    return out;
}

AnchorFit fit_noise_scale(const ExperimentConfig& config, const CalibrationData& cal,
                          const std::map<int, double>& anchors) {
    auto objective = [&](double scale, std::map<int, double>* out) {
        Experiment experiment(config, scale_noise(cal, scale));
        double sum = 0.0;
        for (const auto& [length, target] : anchors) {
            double total = 0.0;
            int reps = std::min(config.repetitions, 3);
            for (int rep = 0; rep < reps; rep++)
                total += experiment.run_scurve(CnotStrategy::Unitary, length, rep).max_abs_s;
            double value = total / std::min(config.repetitions, 3);
            if (out) (*out)[length] = value;
            sum += (value - target) * (value - target);
        }
        return sum;
    };
    // Golden-section on log-scale.
    double lo = std::log(0.25), hi = std::log(4.0);
    const double phi_ratio = 0.6180339887498949;
    double a = hi - phi_ratio * (hi - lo), b = lo + phi_ratio * (hi - lo);
    double fa = objective(std::exp(a), nullptr), fb = objective(std::exp(b), nullptr);
    for (int iter = 0; iter < 12; iter++) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi_ratio * (hi - lo);
            fa = objective(std::exp(a), nullptr);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi_ratio * (hi - lo);
            fb = objective(std::exp(b), nullptr);
        }
    }
    AnchorFit fit;
    fit.scale = std::exp(0.5 * (lo + hi));
    objective(fit.scale, &fit.simulated);
    return fit;
}

nlohmann::json sweep_to_json(const DistanceSweepResult& result) {
    nlohmann::json doc;
    doc["config"] = config_to_json(result.config);
    doc["config"].erase("threads");  // execution detail; results are worker-independent
    nlohmann::json chains = nlohmann::json::object();
    for (const auto& [length, chain] : result.chains)
        chains[std::to_string(length)] = chain.qubits;
    doc["chains"] = chains;
    nlohmann::json per_strategy = nlohmann::json::object();
    for (CnotStrategy strategy : result.config.strategies) {
        nlohmann::json per_length = nlohmann::json::object();
        for (int length : result.config.lengths) {
            const CellStats& cell = result.cell(strategy, length);
            nlohmann::json scurves = nlohmann::json::array();
            for (const auto& curve : cell.scurves) {
                nlohmann::json points = nlohmann::json::array();
                for (const auto& p : curve.points)
                    points.push_back({{"phi", p.phi},
                                      {"e_zz", p.e_zz},
                                      {"e_zx", p.e_zx},
                                      {"e_xz", p.e_xz},
                                      {"e_xx", p.e_xx},
                                      {"s", p.s},
                                      {"retention", p.retention}});
                scurves.push_back({{"points", points},
                                   {"max_abs_s", curve.max_abs_s},
                                   {"argmax_phi", curve.argmax_phi}});
            }
            per_length[std::to_string(length)] = {{"max_s_mean", cell.max_s_mean},
                                                  {"max_s_std", cell.max_s_std},
                                                  {"retention_mean", cell.retention_mean},
                                                  {"per_rep_max", cell.per_rep_max},
                                                  {"scurves", scurves}};
        }
        per_strategy[strategy_name(strategy)] = {{"per_length", per_length}};
    }
    doc["per_strategy"] = per_strategy;
    return doc;
}

std::string sweep_to_csv(const DistanceSweepResult& result) {
    std::ostringstream out;
    out << "strategy,length,rep,max_s,retention\n";
    for (CnotStrategy strategy : result.config.strategies) {
        for (int length : result.config.lengths) {
            const CellStats& cell = result.cell(strategy, length);
            for (std::size_t rep = 0; rep < cell.per_rep_max.size(); rep++) {
                out << strategy_name(strategy) << "," << length << "," << rep << ","
                    << cell.per_rep_max[rep] << "," << cell.scurves[rep].mean_retention << "\n";
            }
        }
    }
    return out.str();
}

}  // namespace chshforge
