#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "chshforge/cli.hpp"
#include "chshforge/rng.hpp"
#include "chshforge/topology.hpp"

using namespace chshforge;

namespace {

const std::string kDataDir = CHSHFORGE_DATA_DIR;

CalibrationData uniform_calibration(const CouplingMap& map, double edge_error, double readout) {
    CalibrationData cal;
    cal.map = map;
    cal.qubits.assign(map.num_qubits, QubitCalibration{readout, readout, 300e-6, 200e-6, 0.0});
    for (const auto& edge : map.edges) cal.edge_error[edge] = edge_error;
    return cal;
}

// Exhaustive path enumeration without pruning.
QubitChain brute_force_chain(const CouplingMap& map, const CalibrationData& cal, int length,
                             double lambda = 1.0) {
    auto adj = map.adjacency();
    QubitChain best;
    bool found = false;
    std::vector<uint32_t> path;
    std::vector<bool> used(map.num_qubits, false);
    std::function<void()> walk = [&]() {
        if (path.size() == static_cast<size_t>(length)) {
            double cost = cal.readout_mean(path.front()) + cal.readout_mean(path.back());
            for (std::size_t i = 1; i + 1 < path.size(); i++)
                cost += lambda * cal.readout_mean(path[i]);
            for (std::size_t i = 0; i + 1 < path.size(); i++) {
                auto a = std::min(path[i], path[i + 1]);
                auto b = std::max(path[i], path[i + 1]);
                cost += cal.edge_error.at({a, b});
            }
            if (!found || cost < best.cost - 1e-15 ||
                (cost < best.cost + 1e-15 && path < best.qubits)) {
                best = {path, cost};
                found = true;
            }
            return;
        }
        for (uint32_t next : adj[path.back()]) {
            if (used[next]) continue;
            used[next] = true;
            path.push_back(next);
            walk();
            path.pop_back();
            used[next] = false;
        }
    };
    for (uint32_t start = 0; start < map.num_qubits; start++) {
        path = {start};
        std::fill(used.begin(), used.end(), false);
        used[start] = true;
        walk();
    }
    REQUIRE(found);
    return best;
}

}  // namespace

TEST_SUITE("topology") {

TEST_CASE("eagle preset has 127 vertices and 144 edges") {
    CouplingMap map = eagle_coupling_map();
    CHECK(map.num_qubits == 127);
    CHECK(map.edges.size() == 144);
    CHECK(map.connected());
}

TEST_CASE("eagle preset matches the bundled published edge list") {
    CouplingMap generated = eagle_coupling_map();
    CouplingMap bundled = load_coupling_map(kDataDir + "/eagle127_coupling.txt");
    CHECK(bundled.num_qubits == generated.num_qubits);
    CHECK(bundled.edges == generated.edges);
}

TEST_CASE("heavy-hex outputs have max degree 3") {
    for (auto [rows, cols] : {std::pair{1, 5}, {3, 7}, {5, 11}, {7, 15}}) {
        CouplingMap map = heavy_hex_map(rows, cols);
        CHECK(map.max_degree() <= 3);
        CHECK(map.connected());
    }
    CHECK_THROWS_AS(heavy_hex_map(0, 5), std::invalid_argument);
    CHECK_THROWS_AS(heavy_hex_map(3, -1), std::invalid_argument);
}

TEST_CASE("find_chain tie-break picks the lexicographically smallest edge") {
    CouplingMap map = eagle_coupling_map();
    CalibrationData cal = uniform_calibration(map, 1e-2, 1e-2);
    QubitChain chain = find_chain(map, cal, 2);
    CHECK(chain.qubits == std::vector<uint32_t>{0, 1});
}

TEST_CASE("find_chain picks the lower-error edge on a 3-vertex path") {
    CouplingMap map;
    map.num_qubits = 3;
    map.edges = {{0, 1}, {1, 2}};
    CalibrationData cal = uniform_calibration(map, 0.0, 0.0);
    cal.edge_error[{0, 1}] = 0.01;
    cal.edge_error[{1, 2}] = 0.05;
    QubitChain chain = find_chain(map, cal, 2);
    CHECK(chain.qubits == std::vector<uint32_t>{0, 1});
    CHECK(chain.cost == doctest::Approx(0.01));
}

TEST_CASE("find_chain equals brute force on small maps") {
    CouplingMap map = heavy_hex_map(3, 7);  // 26 qubits
    REQUIRE(map.num_qubits <= 30);
    Philox rng(31, 0);
    CalibrationData cal = uniform_calibration(map, 0.0, 0.0);
    for (auto& [edge, e] : cal.edge_error) e = 0.002 + 0.02 * rng.uniform();
    for (auto& q : cal.qubits) {
        q.p10 = 0.005 + 0.03 * rng.uniform();
        q.p01 = 0.005 + 0.03 * rng.uniform();
    }
    for (int length : {2, 4, 7}) {
        QubitChain fast = find_chain(map, cal, length);
        QubitChain slow = brute_force_chain(map, cal, length);
        CHECK(fast.qubits == slow.qubits);
        CHECK(fast.cost == doctest::Approx(slow.cost));
    }
}

TEST_CASE("find_chain on the eagle preset equals brute force at length 15") {
    CouplingMap map = eagle_coupling_map();
    CalibrationData cal = generate_calibration("eagle-like", 7);
    QubitChain fast = find_chain(map, cal, 15);
    QubitChain slow = brute_force_chain(map, cal, 15);
    CHECK(fast.cost == doctest::Approx(slow.cost).epsilon(1e-12));
    CHECK(fast.qubits == slow.qubits);
}

TEST_CASE("chain cost beats a random-restart hill climber") {
    CouplingMap map = eagle_coupling_map();
    CalibrationData cal = generate_calibration("eagle-like", 11);
    auto adj = map.adjacency();
    Philox rng(5, 5);
    auto chain_cost = [&](const std::vector<uint32_t>& path) {
        double cost = cal.readout_mean(path.front()) + cal.readout_mean(path.back());
        for (std::size_t i = 1; i + 1 < path.size(); i++) cost += cal.readout_mean(path[i]);
        for (std::size_t i = 0; i + 1 < path.size(); i++)
            cost += cal.edge_error.at({std::min(path[i], path[i + 1]),
                                       std::max(path[i], path[i + 1])});
        return cost;
    };
    // Random greedy walks as a stand-in hill climber.
    double best_random = 1e9;
    for (int restart = 0; restart < 200; restart++) {
        std::vector<uint32_t> path{static_cast<uint32_t>(rng.uniform_int(map.num_qubits))};
        std::set<uint32_t> used{path[0]};
        while (path.size() < 10) {
            std::vector<uint32_t> options;
            for (uint32_t next : adj[path.back()])
                if (!used.count(next)) options.push_back(next);
            if (options.empty()) break;
            uint32_t pick = options[rng.uniform_int(options.size())];
            path.push_back(pick);
            used.insert(pick);
        }
        if (path.size() == 10) best_random = std::min(best_random, chain_cost(path));
    }
    QubitChain chain = find_chain(map, cal, 10);
    CHECK(chain.cost <= best_random + 1e-12);
}

TEST_CASE("reversed chain has the same cost") {
    CouplingMap map = heavy_hex_map(3, 7);
    CalibrationData cal = generate_calibration("eagle-like", 3);
    // Restrict calibration to the small map via fresh uniform data.
    CalibrationData small = uniform_calibration(map, 0.0, 0.0);
    Philox rng(9, 1);
    for (auto& [edge, e] : small.edge_error) e = 0.002 + 0.02 * rng.uniform();
    for (auto& q : small.qubits) q.p10 = q.p01 = 0.005 + 0.02 * rng.uniform();
    QubitChain chain = find_chain(map, small, 6);
    std::vector<uint32_t> reversed(chain.qubits.rbegin(), chain.qubits.rend());
    double cost_rev = small.readout_mean(reversed.front()) + small.readout_mean(reversed.back());
    for (std::size_t i = 1; i + 1 < reversed.size(); i++)
        cost_rev += small.readout_mean(reversed[i]);
    for (std::size_t i = 0; i + 1 < reversed.size(); i++)
        cost_rev += small.edge_error.at({std::min(reversed[i], reversed[i + 1]),
                                         std::max(reversed[i], reversed[i + 1])});
    CHECK(chain.cost == doctest::Approx(cost_rev));
    CHECK(chain.qubits <= reversed);  // deterministic tie-break
}

TEST_CASE("calibration json round trip is lossless") {
    CalibrationData cal = generate_calibration("eagle-like", 42);
    CalibrationData back = load_calibration(save_calibration(cal));
    CHECK(back.map.edges == cal.map.edges);
    CHECK(back.edge_error == cal.edge_error);
    for (uint32_t q = 0; q < cal.map.num_qubits; q++) {
        CHECK(back.qubits[q].p10 == cal.qubits[q].p10);
        CHECK(back.qubits[q].t1_s == cal.qubits[q].t1_s);
        CHECK(back.qubits[q].drift_rad_per_s == cal.qubits[q].drift_rad_per_s);
    }
    CHECK(back.durations.feedforward_s == cal.durations.feedforward_s);
}

TEST_CASE("omitted drift loads as zero and defaults fill gaps") {
    nlohmann::json doc;
    doc["num_qubits"] = 2;
    doc["edges"] = {{0, 1}};
    doc["qubits"] = {{{"p10", 0.01}, {"p01", 0.02}}, nlohmann::json::object()};
    CalibrationData cal = load_calibration(doc);
    CHECK(cal.qubits[0].drift_rad_per_s == 0.0);
    CHECK(cal.qubits[0].t1_s == doctest::Approx(300e-6));
    CHECK(cal.qubits[1].p10 == 0.0);
    CHECK(cal.durations.x_s == doctest::Approx(60e-9));
    CHECK(cal.durations.cx_s == doctest::Approx(595e-9));
    CHECK(cal.durations.measure_s == doctest::Approx(835e-9));
    CHECK(cal.edge_error.at({0, 1}) == doctest::Approx(8e-3));
}

TEST_CASE("out-of-range probability is rejected") {
    nlohmann::json doc;
    doc["num_qubits"] = 2;
    doc["edges"] = {{0, 1}};
    doc["qubits"] = {{{"p10", 0.7}}, nlohmann::json::object()};
    CHECK_THROWS_AS(load_calibration(doc), std::invalid_argument);
}

TEST_CASE("find_chain reports when no simple path of the length exists") {
    CouplingMap star;
    star.num_qubits = 4;
    star.edges = {{0, 1}, {0, 2}, {0, 3}};
    CalibrationData cal;
    cal.map = star;
    cal.qubits.assign(4, QubitCalibration{});
    for (const auto& e : star.edges) cal.edge_error[e] = 0.01;
    CHECK_THROWS_AS(find_chain(star, cal, 4), std::runtime_error);
    CHECK(find_chain(star, cal, 3).qubits == std::vector<uint32_t>{1, 0, 2});
}

TEST_CASE("calibrated edge must exist in the map") {
    nlohmann::json doc;
    doc["num_qubits"] = 3;
    doc["edges"] = {{0, 1}};
    doc["edges_error"] = {{{"edge", {1, 2}}, {"error", 0.01}}};
    CHECK_THROWS_AS(load_calibration(doc), std::invalid_argument);
}

}  // TEST_SUITE
