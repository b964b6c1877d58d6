#include "chshforge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "chshforge/circuit.hpp"
#include "chshforge/report.hpp"
#include "chshforge/rng.hpp"
#include "chshforge/schedule.hpp"
#include "chshforge/synth.hpp"

namespace chshforge {

namespace {

double lognormal_scatter(Philox& rng, double base, double sigma = 0.3) {
    // Box-Muller; one normal per element keeps the draw order stable.
    double u1 = std::max(rng.uniform(), 1e-12);
    double u2 = rng.uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return base * std::exp(sigma * z);
}

double clamp_prob(double p) { return std::min(p, 0.499); }

}  // namespace

CalibrationData generate_calibration(const std::string& preset, uint64_t seed) {
    CalibrationData cal;
    cal.map = eagle_coupling_map();
    cal.qubits.resize(cal.map.num_qubits);
    if (preset == "ideal") {
        for (auto& q : cal.qubits) {
            q.p10 = 0.0;
            q.p01 = 0.0;
            q.t1_s = 1e9;
            q.t2_s = 2e9;
            q.drift_rad_per_s = 0.0;
        }
        for (const auto& edge : cal.map.edges) cal.edge_error[edge] = 0.0;
    } else if (preset == "eagle-like") {
        Philox rng(seed, 0x0ca1);
        for (auto& q : cal.qubits) {
            q.p10 = clamp_prob(lognormal_scatter(rng, kDefaultReadoutFlip));
            q.p01 = clamp_prob(lognormal_scatter(rng, kDefaultReadoutFlip));
            q.t1_s = lognormal_scatter(rng, 300e-6);
            q.t2_s = std::min(lognormal_scatter(rng, 200e-6), 2.0 * q.t1_s);
            q.drift_rad_per_s = 0.0;
        }
        for (const auto& edge : cal.map.edges)
            cal.edge_error[edge] = clamp_prob(lognormal_scatter(rng, kDefaultTwoQubitError));
    } else {
        throw std::invalid_argument("unknown preset: " + preset + " (ideal | eagle-like)");
    }
    cal.validate();
    return cal;
}

int cmd_gen_calibration(const std::string& out_path, const std::string& preset, uint64_t seed) {
    CalibrationData cal = generate_calibration(preset, seed);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write calibration file: " << out_path << "\n";
        return 1;
    }
    out << save_calibration(cal).dump(2) << "\n";
    std::cout << "wrote " << out_path << " (" << preset << ", seed " << seed << ")\n";
    return 0;
}

namespace {

CalibrationData load_config_calibration(const ExperimentConfig& config) {
    if (config.calibration_path.empty())
        throw std::runtime_error("no calibration file configured (--config or gen-calibration)");
    return load_calibration_file(config.calibration_path);
}

}  // namespace

int cmd_scurve(const ExperimentConfig& config, CnotStrategy strategy, int length,
               const std::string& out_dir) {
    Experiment experiment(config, load_config_calibration(config));
    SCurve curve = experiment.run_scurve(strategy, length, 0);
    std::filesystem::create_directories(out_dir);
    std::string stem = out_dir + "/scurve_" + strategy_name(strategy) + "_" +
                       std::to_string(length);

    nlohmann::json doc;
    doc["config"] = config_to_json(config);
    doc["strategy"] = strategy_name(strategy);
    doc["length"] = length;
    doc["max_abs_s"] = curve.max_abs_s;
    doc["argmax_phi"] = curve.argmax_phi;
    doc["mean_retention"] = curve.mean_retention;
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : curve.points)
        points.push_back({{"phi", p.phi},
                          {"e_zz", p.e_zz},
                          {"e_zx", p.e_zx},
                          {"e_xz", p.e_xz},
                          {"e_xx", p.e_xx},
                          {"s", p.s},
                          {"retention", p.retention}});
    doc["points"] = points;
    write_text_file(stem + ".json", doc.dump(2) + "\n");

    std::ostringstream csv;
    csv << "phi,e_zz,e_zx,e_xz,e_xx,s,retention\n";
    for (const auto& p : curve.points)
        csv << p.phi << "," << p.e_zz << "," << p.e_zx << "," << p.e_xz << "," << p.e_xx << ","
            << p.s << "," << p.retention << "\n";
    write_text_file(stem + ".csv", csv.str());
    write_text_file(stem + ".svg",
                    single_scurve_svg(curve, std::string(strategy_name(strategy)) + " n=" +
                                                 std::to_string(length)));
    std::cout << strategy_name(strategy) << " n=" << length << ": max|S| = " << curve.max_abs_s
              << " at phi = " << curve.argmax_phi << "\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& config, const std::string& out_dir) {
    Experiment experiment(config, load_config_calibration(config));
    DistanceSweepResult result = experiment.sweep_distance();
    std::filesystem::create_directories(out_dir);

    std::vector<std::string> outputs = {out_dir + "/results.json", out_dir + "/results.csv",
                                        out_dir + "/max_s_vs_distance.svg",
                                        out_dir + "/scurves.svg", out_dir + "/manifest.json"};
    write_text_file(outputs[0], sweep_to_json(result).dump(2) + "\n");
    write_text_file(outputs[1], sweep_to_csv(result));
    write_text_file(outputs[2], distance_plot_svg(result));

    std::vector<int> lengths = config.lengths;
    std::sort(lengths.begin(), lengths.end());
    int panel_a = lengths.front(), panel_b = lengths.back();
    if (std::find(lengths.begin(), lengths.end(), 3) != lengths.end()) panel_a = 3;
    if (std::find(lengths.begin(), lengths.end(), 12) != lengths.end()) panel_b = 12;
    write_text_file(outputs[3], scurve_plot_svg(result, panel_a, panel_b));
    write_text_file(outputs[4], make_manifest(config, outputs).dump(2) + "\n");

    std::cout << "strategy        length  max|S| mean  std     retention\n";
    for (CnotStrategy strategy : config.strategies)
        for (int length : lengths) {
            const CellStats& cell = result.cell(strategy, length);
            std::printf("%-15s %-7d %-12.4f %-7.4f %.4f\n", strategy_name(strategy), length,
                        cell.max_s_mean, cell.max_s_std, cell.retention_mean);
        }
    int crossover = crossover_length(result);
    if (crossover > 0)
        std::cout << "dynamic >= unitary beyond length " << crossover << "\n";
    std::cout << "wrote " << out_dir << "/results.{json,csv} and plots\n";
    return 0;
}

int cmd_cost_report(const ExperimentConfig& config, const std::string& out_dir) {
    CalibrationData cal = load_config_calibration(config);
    std::ostringstream csv;
    csv << "strategy,length,two_qubit_gates,two_qubit_depth,duration_s\n";
    std::printf("%-15s %-7s %-9s %-7s %s\n", "strategy", "length", "2q gates", "depth",
                "duration (us)");

    std::map<std::pair<std::string, int>, double> durations;
    for (CnotStrategy strategy : config.strategies) {
        for (int length : config.lengths) {
            ChshCircuitSpec spec;
            spec.length = static_cast<uint32_t>(length);
            spec.phi = M_PI / 4;
            spec.strategy = strategy;
            Circuit circuit = build_chsh_circuit(spec);
            int depth = two_qubit_depth(circuit);  // SWAP counts one layer
            Circuit flat = decompose_swaps(circuit);
            int gates = two_qubit_gate_count(flat);
            ScheduledCircuit sched = schedule_asap(flat, cal.durations);
            durations[{strategy_name(strategy), length}] = sched.total_duration;
            std::printf("%-15s %-7d %-9d %-7d %.3f\n", strategy_name(strategy), length, gates,
                        depth, sched.total_duration * 1e6);
            csv << strategy_name(strategy) << "," << length << "," << gates << "," << depth << ","
                << sched.total_duration << "\n";
        }
    }
    bool have_both = true;
    for (CnotStrategy s : {CnotStrategy::Unitary, CnotStrategy::Dynamic})
        if (std::find(config.strategies.begin(), config.strategies.end(), s) ==
            config.strategies.end())
            have_both = false;
    if (have_both) {
        int threshold = -1;
        std::vector<int> lengths = config.lengths;
        std::sort(lengths.begin(), lengths.end());
        for (int length : lengths) {
            if (durations[{"DYNAMIC", length}] < durations[{"UNITARY", length}]) {
                threshold = length;
                break;
            }
        }
        if (threshold > 0)
            std::cout << "dynamic scheduled duration beats unitary from length " << threshold
                      << " (feedforward " << cal.durations.feedforward_s * 1e9 << " ns)\n";
        else
            std::cout << "dynamic scheduled duration never beats unitary at these lengths\n";
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir + "/cost_report.csv", csv.str());
        std::cout << "wrote " << out_dir << "/cost_report.csv\n";
    }
    return 0;
}

namespace {

std::vector<int> parse_lengths(const std::string& text) {
    // "2..15" or "2,3,5"
    std::vector<int> lengths;
    auto range_pos = text.find("..");
    if (range_pos != std::string::npos) {
        int lo = std::stoi(text.substr(0, range_pos));
        int hi = std::stoi(text.substr(range_pos + 2));
        for (int i = lo; i <= hi; i++) lengths.push_back(i);
        return lengths;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) lengths.push_back(std::stoi(item));
    return lengths;
}

std::vector<CnotStrategy> parse_strategies(const std::string& text) {
    std::vector<CnotStrategy> strategies;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) strategies.push_back(strategy_from_name(item));
    return strategies;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"CHSH long-range CNOT benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", lengths_text, strategies_text, calibration_path;
    uint64_t seed = 0;
    int shots = 0, reps = 0, threads = 0, length = 3;
    std::string mitigation, dd, drift;
    std::string preset = "eagle-like", gen_out = "calibration.json", strategy_text = "dynamic";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config JSON (or a run manifest)")
            ->envname("CHSHFORGE_CONFIG");
        cmd->add_option("--seed", seed, "base seed")->envname("CHSHFORGE_SEED");
        cmd->add_option("--out-dir", out_dir, "output directory")->envname("CHSHFORGE_OUT_DIR");
        cmd->add_option("--shots", shots, "shots per circuit")->envname("CHSHFORGE_SHOTS");
        cmd->add_option("--reps", reps, "repetitions per cell")->envname("CHSHFORGE_REPS");
        cmd->add_option("--lengths", lengths_text, "chain lengths, e.g. 2..15 or 2,3,5")
            ->envname("CHSHFORGE_LENGTHS");
        cmd->add_option("--strategies", strategies_text,
                        "comma list of unitary,dynamic,postprocessed")
            ->envname("CHSHFORGE_STRATEGIES");
        cmd->add_option("--calibration", calibration_path, "calibration JSON path")
            ->envname("CHSHFORGE_CALIBRATION");
        cmd->add_option("--mitigation", mitigation, "on|off readout mitigation")
            ->envname("CHSHFORGE_MITIGATION");
        cmd->add_option("--dd", dd, "on|off dynamical decoupling")->envname("CHSHFORGE_DD");
        cmd->add_option("--drift", drift, "on|off coherent drift")->envname("CHSHFORGE_DRIFT");
        cmd->add_option("--threads", threads, "worker threads (0 = hardware)")
            ->envname("CHSHFORGE_THREADS");
    };

    CLI::App* gen = app.add_subcommand("gen-calibration", "write a synthetic calibration file");
    gen->add_option("--out", gen_out, "output path");
    gen->add_option("--preset", preset, "ideal | eagle-like");
    gen->add_option("--seed", seed, "scatter seed")->envname("CHSHFORGE_SEED");

    CLI::App* scurve = app.add_subcommand("scurve", "run one S-curve");
    add_common(scurve);
    scurve->add_option("--strategy", strategy_text, "unitary | dynamic | postprocessed");
    scurve->add_option("--length", length, "chain length");

    CLI::App* sweep = app.add_subcommand("sweep", "distance sweep with plots");
    add_common(sweep);

    CLI::App* cost = app.add_subcommand("cost-report", "static gate/depth/duration table");
    add_common(cost);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            uint64_t s = gen->count("--seed") || std::getenv("CHSHFORGE_SEED") ? seed : 42;
            return cmd_gen_calibration(gen_out, preset, s);
        }

        // Precedence: explicit flag > config file > built-in default.
        ExperimentConfig config;
        config.shots = 1000;  // desk-scale defaults; paper scale via flags
        config.repetitions = 5;
        CLI::App* cmd = scurve->parsed() ? scurve : sweep->parsed() ? sweep : cost;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "error: cannot open config file: " << config_path << "\n";
                return 1;
            }
            nlohmann::json doc;
            in >> doc;
            if (doc.contains("config")) doc = doc.at("config");  // accept a manifest
            config = config_from_json(doc);
        }
        auto flag_given = [&](const char* name, const char* env) {
            return cmd->count(name) > 0 || std::getenv(env) != nullptr;
        };
        if (flag_given("--seed", "CHSHFORGE_SEED")) config.seed = seed;
        if (flag_given("--shots", "CHSHFORGE_SHOTS")) config.shots = shots;
        if (flag_given("--reps", "CHSHFORGE_REPS")) config.repetitions = reps;
        if (flag_given("--threads", "CHSHFORGE_THREADS")) config.threads = threads;
        if (flag_given("--lengths", "CHSHFORGE_LENGTHS"))
            config.lengths = parse_lengths(lengths_text);
        if (flag_given("--strategies", "CHSHFORGE_STRATEGIES"))
            config.strategies = parse_strategies(strategies_text);
        if (flag_given("--calibration", "CHSHFORGE_CALIBRATION"))
            config.calibration_path = calibration_path;
        auto on_off = [](const std::string& v) {
            if (v == "on" || v == "true" || v == "1") return true;
            if (v == "off" || v == "false" || v == "0") return false;
            throw std::invalid_argument("expected on/off, got: " + v);
        };
        if (flag_given("--mitigation", "CHSHFORGE_MITIGATION"))
            config.mitigation = on_off(mitigation);
        if (flag_given("--dd", "CHSHFORGE_DD")) config.dd = on_off(dd);
        if (flag_given("--drift", "CHSHFORGE_DRIFT")) config.drift = on_off(drift);
        config.validate();

        if (scurve->parsed())
            return cmd_scurve(config, strategy_from_name(strategy_text), length, out_dir);
        if (sweep->parsed()) return cmd_sweep(config, out_dir);
        return cmd_cost_report(config, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace chshforge
