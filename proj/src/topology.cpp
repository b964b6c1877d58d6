#include "chshforge/topology.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace chshforge {

namespace {

Edge normalized(uint32_t a, uint32_t b) {
    if (a == b) throw std::invalid_argument("self-loop edge");
    return a < b ? Edge{a, b} : Edge{b, a};
}

void finalize_edges(std::vector<Edge>& edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

bool CouplingMap::has_edge(uint32_t a, uint32_t b) const {
    if (a == b) return false;
    return std::binary_search(edges.begin(), edges.end(), normalized(a, b));
}

std::vector<std::vector<uint32_t>> CouplingMap::adjacency() const {
    std::vector<std::vector<uint32_t>> adj(num_qubits);
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& list : adj) std::sort(list.begin(), list.end());
    return adj;
}

int CouplingMap::max_degree() const {
    std::vector<int> degree(num_qubits, 0);
    for (const auto& [a, b] : edges) {
        degree[a]++;
        degree[b]++;
    }
    return degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
}

bool CouplingMap::connected() const {
    if (num_qubits == 0) return true;
    auto adj = adjacency();
    std::vector<bool> seen(num_qubits, false);
    std::queue<uint32_t> frontier;
    frontier.push(0);
    seen[0] = true;
    uint32_t visited = 1;
    while (!frontier.empty()) {
        uint32_t v = frontier.front();
        frontier.pop();
        for (uint32_t w : adj[v]) {
            if (!seen[w]) {
                seen[w] = true;
                visited++;
                frontier.push(w);
            }
        }
    }
    return visited == num_qubits;
}

CouplingMap heavy_hex_map(int rows, int cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("heavy_hex_map: nonpositive dimensions");

    // Column span of each qubit row; outermost rows are trimmed by one.
    auto col_range = [&](int r) -> std::pair<int, int> {
        int lo = 0, hi = cols - 1;
        if (rows > 1 && r == 0) hi = cols - 2;
        if (rows > 1 && r == rows - 1) lo = 1;
        return {lo, hi};
    };

    // Number row qubits and bridge qubits in layout order.
    std::map<std::pair<int, int>, uint32_t> row_qubit;  // (row, col) -> id
    std::vector<Edge> edges;
    uint32_t next = 0;
    std::vector<std::vector<std::pair<int, uint32_t>>> bridges(std::max(rows - 1, 0));
    for (int r = 0; r < rows; r++) {
        auto [lo, hi] = col_range(r);
        if (lo > hi) throw std::invalid_argument("heavy_hex_map: cols too small for trimmed rows");
        for (int c = lo; c <= hi; c++) row_qubit[{r, c}] = next++;
        if (r + 1 < rows) {
            int offset = (r % 2 == 0) ? 0 : 2;
            auto [nlo, nhi] = col_range(r + 1);
            for (int c = offset; c < cols; c += 4) {
                if (c < lo || c > hi || c < nlo || c > nhi) continue;
                bridges[r].push_back({c, next++});
            }
        }
    }

    for (int r = 0; r < rows; r++) {
        auto [lo, hi] = col_range(r);
        for (int c = lo; c < hi; c++)
            edges.push_back(normalized(row_qubit[{r, c}], row_qubit[{r, c + 1}]));
        if (r + 1 < rows) {
            for (const auto& [c, id] : bridges[r]) {
                edges.push_back(normalized(row_qubit[{r, c}], id));
                edges.push_back(normalized(id, row_qubit[{r + 1, c}]));
            }
        }
    }

    CouplingMap map;
    map.num_qubits = next;
    map.edges = std::move(edges);
    finalize_edges(map.edges);
    return map;
}

CouplingMap eagle_coupling_map() { return heavy_hex_map(7, 15); }

CouplingMap load_coupling_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open coupling map file: " + path);
    std::vector<Edge> edges;
    uint32_t max_vertex = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        uint32_t a, b;
        if (!(ss >> a >> b)) throw std::runtime_error("bad coupling map line: " + line);
        edges.push_back(normalized(a, b));
        max_vertex = std::max({max_vertex, a, b});
    }
    CouplingMap map;
    map.num_qubits = edges.empty() ? 0 : max_vertex + 1;
    map.edges = std::move(edges);
    finalize_edges(map.edges);
    return map;
}

void save_coupling_map(const CouplingMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write coupling map file: " + path);
    for (const auto& [a, b] : map.edges) out << a << " " << b << "\n";
}

void CalibrationData::validate() const {
    if (qubits.size() != map.num_qubits)
        throw std::invalid_argument("calibration qubit count does not match map");
    for (const auto& q : qubits) {
        if (q.p10 < 0.0 || q.p10 > 0.5 || q.p01 < 0.0 || q.p01 > 0.5)
            throw std::invalid_argument("readout flip probability out of [0, 0.5]");
        if (q.t1_s <= 0.0 || q.t2_s <= 0.0)
            throw std::invalid_argument("T1/T2 must be positive");
        if (q.t2_s > 2.0 * q.t1_s + 1e-15 * q.t1_s)
            throw std::invalid_argument("T2 must not exceed 2*T1");
    }
    for (const auto& [edge, error] : edge_error) {
        if (error < 0.0 || error > 0.5)
            throw std::invalid_argument("two-qubit error out of [0, 0.5]");
        if (!map.has_edge(edge.first, edge.second))
            throw std::invalid_argument("calibrated edge (" + std::to_string(edge.first) + "," +
                                        std::to_string(edge.second) + ") not in coupling map");
    }
    if (durations.x_s <= 0 || durations.cx_s <= 0 || durations.measure_s <= 0 ||
        durations.feedforward_s <= 0)
        throw std::invalid_argument("durations must be positive");
}

CalibrationData load_calibration(const nlohmann::json& doc) {
    CalibrationData cal;
    cal.map.num_qubits = doc.at("num_qubits").get<uint32_t>();
    for (const auto& e : doc.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("edge must be [i, j]");
        cal.map.edges.push_back(normalized(e[0].get<uint32_t>(), e[1].get<uint32_t>()));
    }
    std::sort(cal.map.edges.begin(), cal.map.edges.end());

    cal.qubits.assign(cal.map.num_qubits, QubitCalibration{});
    if (doc.contains("qubits")) {
        const auto& qs = doc.at("qubits");
        if (qs.size() != cal.map.num_qubits)
            throw std::invalid_argument("qubits array size mismatch");
        for (uint32_t i = 0; i < qs.size(); i++) {
            const auto& q = qs[i];
            QubitCalibration& out = cal.qubits[i];
            if (q.contains("p10")) out.p10 = q.at("p10").get<double>();
            if (q.contains("p01")) out.p01 = q.at("p01").get<double>();
            if (q.contains("t1_s")) out.t1_s = q.at("t1_s").get<double>();
            if (q.contains("t2_s")) out.t2_s = q.at("t2_s").get<double>();
            if (q.contains("drift_rad_per_s"))
                out.drift_rad_per_s = q.at("drift_rad_per_s").get<double>();
        }
    }
    for (const auto& edge : cal.map.edges) cal.edge_error[edge] = kDefaultTwoQubitError;
    if (doc.contains("edges_error")) {
        for (const auto& item : doc.at("edges_error")) {
            const auto& e = item.at("edge");
            cal.edge_error[normalized(e[0].get<uint32_t>(), e[1].get<uint32_t>())] =
                item.at("error").get<double>();
        }
    }
    if (doc.contains("durations")) {
        const auto& d = doc.at("durations");
        if (d.contains("x_s")) cal.durations.x_s = d.at("x_s").get<double>();
        if (d.contains("cx_s")) cal.durations.cx_s = d.at("cx_s").get<double>();
        if (d.contains("measure_s")) cal.durations.measure_s = d.at("measure_s").get<double>();
        if (d.contains("feedforward_s"))
            cal.durations.feedforward_s = d.at("feedforward_s").get<double>();
    }
    cal.validate();
    return cal;
}

CalibrationData load_calibration_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calibration file: " + path);
    nlohmann::json doc;
    in >> doc;
    return load_calibration(doc);
}

nlohmann::json save_calibration(const CalibrationData& cal) {
    nlohmann::json doc;
    doc["num_qubits"] = cal.map.num_qubits;
    doc["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : cal.map.edges) doc["edges"].push_back({a, b});
    doc["qubits"] = nlohmann::json::array();
    for (const auto& q : cal.qubits)
        doc["qubits"].push_back({{"p10", q.p10},
                                 {"p01", q.p01},
                                 {"t1_s", q.t1_s},
                                 {"t2_s", q.t2_s},
                                 {"drift_rad_per_s", q.drift_rad_per_s}});
    doc["edges_error"] = nlohmann::json::array();
    for (const auto& [edge, error] : cal.edge_error)
        doc["edges_error"].push_back({{"edge", {edge.first, edge.second}}, {"error", error}});
    doc["durations"] = {{"x_s", cal.durations.x_s},
                        {"cx_s", cal.durations.cx_s},
                        {"measure_s", cal.durations.measure_s},
                        {"feedforward_s", cal.durations.feedforward_s}};
    return doc;
}

QubitChain find_chain(const CouplingMap& map, const CalibrationData& cal, int length,
                      double lambda) {
    if (length < 2 || static_cast<uint32_t>(length) > map.num_qubits)
        throw std::invalid_argument("chain length must be in [2, num_qubits]");
    if (cal.qubits.size() != map.num_qubits)
        throw std::invalid_argument("calibration does not cover coupling map");
    auto adj = map.adjacency();
    auto edge_err = [&](uint32_t a, uint32_t b) {
        auto it = cal.edge_error.find(a < b ? Edge{a, b} : Edge{b, a});
        if (it == cal.edge_error.end())
            throw std::invalid_argument("edge without calibrated error in chain search");
        return it->second;
    };

    std::vector<uint32_t> best_path;
    double best_cost = 0.0;
    std::vector<uint32_t> path;
    std::vector<bool> used(map.num_qubits, false);

    // DFS cost accumulates endpoint + interior readout terms as vertices
    // settle into their role; all terms are nonnegative so the running
    // total is an admissible bound for pruning.
    std::function<void(double)> extend = [&](double running) {
        uint32_t tail = path.back();
        if (path.size() == static_cast<size_t>(length)) {
            double total = running + cal.readout_mean(tail);
            if (best_path.empty() || total < best_cost - 1e-15 ||
                (total < best_cost + 1e-15 && path < best_path)) {
                best_cost = total;
                best_path = path;
            }
            return;
        }
        for (uint32_t next : adj[tail]) {
            if (used[next]) continue;
            // Extending turns `tail` into an interior vertex unless it is the start.
            double stepped = running + edge_err(tail, next) +
                             (path.size() > 1 ? lambda * cal.readout_mean(tail) : 0.0);
            if (!best_path.empty() && stepped >= best_cost + 1e-15) continue;
            used[next] = true;
            path.push_back(next);
            extend(stepped);
            path.pop_back();
            used[next] = false;
        }
    };

    for (uint32_t start = 0; start < map.num_qubits; start++) {
        path = {start};
        std::fill(used.begin(), used.end(), false);
        used[start] = true;
        extend(cal.readout_mean(start));
    }
    if (best_path.empty()) throw std::runtime_error("no simple path of requested length exists");
    return {best_path, best_cost};
}

}  // namespace chshforge
