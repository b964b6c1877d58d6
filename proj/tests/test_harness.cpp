#include <doctest.h>

#include <cmath>

#include "chshforge/cli.hpp"
#include "chshforge/harness.hpp"

using namespace chshforge;

namespace {

constexpr double kTsirelson = 2.8284271247461903;

ExperimentConfig zero_noise_config(std::vector<int> lengths, int shots = 10000) {
    ExperimentConfig config;
    config.lengths = std::move(lengths);
    config.shots = shots;
    config.repetitions = 1;
    config.dd = false;
    config.seed = 4242;
    return config;
}

const CalibrationData& ideal_calibration() {
    static CalibrationData cal = generate_calibration("ideal", 1);
    return cal;
}

// Nearest distance to the (4k+1) pi/4 extremum family.
double extremum_distance(double phi) {
    double best = 1e9;
    for (int k = -2; k <= 4; k++) best = std::min(best, std::abs(phi - (4 * k + 1) * M_PI / 4));
    return best;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("compute_s on textbook values") {
    CHECK(compute_s(1, 0, 0, 1) == doctest::Approx(2.0));
    CHECK(compute_s(std::sqrt(0.5), -std::sqrt(0.5), std::sqrt(0.5), std::sqrt(0.5)) ==
          doctest::Approx(kTsirelson));
    CHECK(compute_s(0, 0, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("postselect_filter keeps zero-parity shots and marginalizes to (a, b)") {
    Circuit circuit(3, {{"a", 1}, {"b", 1}, {"z", 0}, {"x", 1}});
    circuit.h(1);
    circuit.measure(1, 2);
    circuit.measure(0, 0);
    circuit.measure(2, 1);
    Counts counts;
    counts.num_bits = 3;
    // a=1,b=1,x=0: 600 shots; a=0,b=1,x=1: 400 shots.
    counts.add(0b011, 600);
    counts.add(0b110, 400);
    auto [kept, retention] = postselect_filter(counts, circuit);
    CHECK(retention == doctest::Approx(0.6));
    CHECK(kept.total == 600);
    CHECK(kept.histogram.at(0b11) == 600);
}

TEST_CASE("postselect_filter with everything filtered returns empty counts") {
    Circuit circuit(2, {{"a", 1}, {"b", 1}, {"z", 0}, {"x", 1}});
    circuit.h(0);
    circuit.measure(0, 2);
    circuit.measure(1, 0);
    // x register bit is clbit 2; all shots have x = 1.
    Counts counts;
    counts.num_bits = 3;
    counts.add(0b100, 300);
    auto [kept, retention] = postselect_filter(counts, circuit);
    CHECK(retention == 0.0);
    CHECK(kept.total == 0);
}

TEST_CASE("postselect_filter requires the registers") {
    Circuit circuit(2, {{"m", 2}});
    Counts counts;
    counts.num_bits = 2;
    counts.add(0, 1);
    CHECK_THROWS_AS(postselect_filter(counts, circuit), std::invalid_argument);
}

TEST_CASE("zero-noise S-curve reaches the Tsirelson bound at the right phase") {
    Experiment experiment(zero_noise_config({3}), ideal_calibration());
    SCurve curve = experiment.run_scurve(CnotStrategy::Dynamic, 3, 0);
    CHECK(curve.points.size() == 31);
    CHECK(curve.max_abs_s == doctest::Approx(kTsirelson).epsilon(0.03 / kTsirelson));
    double grid_step = (curve.points[1].phi - curve.points[0].phi);
    CHECK(extremum_distance(curve.argmax_phi) <= grid_step + 1e-9);
}

TEST_CASE("zero-noise S(phi) fits 2*sqrt(2)*sin(phi + pi/4)") {
    Experiment experiment(zero_noise_config({4}), ideal_calibration());
    SCurve curve = experiment.run_scurve(CnotStrategy::Unitary, 4, 0);
    // Least squares for S = A sin(phi + delta) via linear fit on
    // (sin phi, cos phi) coefficients.
    double swx = 0, swy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : curve.points) {
        double sx = std::sin(p.phi), cx = std::cos(p.phi);
        sxx += sx * sx;
        syy += cx * cx;
        sxy += sx * cx;
        swx += p.s * sx;
        swy += p.s * cx;
    }
    double det = sxx * syy - sxy * sxy;
    double a = (swx * syy - swy * sxy) / det;   // coefficient of sin
    double b = (swy * sxx - swx * sxy) / det;   // coefficient of cos
    double amplitude = std::hypot(a, b);
    CHECK(amplitude == doctest::Approx(kTsirelson).epsilon(0.05 / kTsirelson));
    double rms = 0.0;
    for (const auto& p : curve.points) {
        double fit = a * std::sin(p.phi) + b * std::cos(p.phi);
        rms += (p.s - fit) * (p.s - fit);
    }
    rms = std::sqrt(rms / curve.points.size());
    CHECK(rms < 0.05);
}

TEST_CASE("zero-noise strategies agree pointwise") {
    Experiment experiment(zero_noise_config({5}), ideal_calibration());
    SCurve dynamic = experiment.run_scurve(CnotStrategy::Dynamic, 5, 0);
    SCurve post = experiment.run_scurve(CnotStrategy::Postprocessed, 5, 0);
    SCurve unitary = experiment.run_scurve(CnotStrategy::Unitary, 5, 0);
    for (int i = 0; i < 31; i++) {
        CHECK(std::abs(dynamic.points[i].s - post.points[i].s) < 0.1);
        CHECK(std::abs(dynamic.points[i].s - unitary.points[i].s) < 0.1);
    }
}

TEST_CASE("retention is flat across phase points") {
    Experiment experiment(zero_noise_config({5}), ideal_calibration());
    SCurve post = experiment.run_scurve(CnotStrategy::Postprocessed, 5, 0);
    for (const auto& p : post.points) CHECK(std::abs(p.retention - 0.25) < 0.02);
    CHECK(post.mean_retention == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("sweep_distance aggregates cells with retention and spread") {
    ExperimentConfig config = zero_noise_config({2, 3}, 2000);
    config.repetitions = 2;
    Experiment experiment(config, ideal_calibration());
    DistanceSweepResult result = experiment.sweep_distance();
    CHECK(result.chains.at(2).qubits.size() == 2);
    for (CnotStrategy strategy : config.strategies)
        for (int length : config.lengths) {
            const CellStats& cell = result.cell(strategy, length);
            CHECK(cell.per_rep_max.size() == 2);
            CHECK(cell.max_s_std >= 0.0);
            CHECK(cell.max_s_mean > 2.5);
        }
    // CSV has one row per (strategy, length, rep) plus header.
    std::string csv = sweep_to_csv(result);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2 * 2);
    nlohmann::json doc = sweep_to_json(result);
    CHECK(doc["per_strategy"]["UNITARY"]["per_length"].size() == 2);
}

TEST_CASE("spearman rho detects monotone sequences") {
    CHECK(spearman_rho({1, 2, 3, 4}, {10, 8, 3, 1}) == doctest::Approx(-1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {1, 5, 7, 9}) == doctest::Approx(1.0));
}

TEST_CASE("config json round trip preserves fields") {
    ExperimentConfig config;
    config.lengths = {2, 5, 9};
    config.strategies = {CnotStrategy::Dynamic};
    config.shots = 123;
    config.repetitions = 7;
    config.mitigation = true;
    config.dd = false;
    config.seed = 999;
    config.calibration_path = "cal.json";
    ExperimentConfig back = config_from_json(config_to_json(config));
    CHECK(back.lengths == config.lengths);
    CHECK(back.strategies == config.strategies);
    CHECK(back.shots == 123);
    CHECK(back.repetitions == 7);
    CHECK(back.mitigation);
    CHECK(!back.dd);
    CHECK(back.seed == 999);
    CHECK(back.calibration_path == "cal.json");
}

TEST_CASE("mitigated zero-noise runs match unmitigated within shot noise") {
    ExperimentConfig config = zero_noise_config({3}, 4000);
    config.mitigation = true;
    Experiment experiment(config, ideal_calibration());
    SCurve curve = experiment.run_scurve(CnotStrategy::Dynamic, 3, 0);
    CHECK(curve.max_abs_s == doctest::Approx(kTsirelson).epsilon(0.06 / kTsirelson));
}

TEST_CASE("scale_noise scales probabilities and decay rates") {
    CalibrationData cal = generate_calibration("eagle-like", 5);
    CalibrationData scaled = scale_noise(cal, 2.0);
    auto edge = cal.edge_error.begin();
    CHECK(scaled.edge_error.at(edge->first) == doctest::Approx(2.0 * edge->second));
    CHECK(scaled.qubits[0].t1_s == doctest::Approx(0.5 * cal.qubits[0].t1_s));
    CHECK(scaled.qubits[0].p10 == doctest::Approx(2.0 * cal.qubits[0].p10));
}

}  // TEST_SUITE
