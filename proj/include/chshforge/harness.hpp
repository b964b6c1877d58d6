#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "chshforge/mitigation.hpp"
#include "chshforge/noise.hpp"
#include "chshforge/sim.hpp"
#include "chshforge/synth.hpp"
#include "chshforge/topology.hpp"

namespace chshforge {

struct PhaseGrid {
    int count = 31;
    double start = -1.5707963267948966;  // -pi/2
    double end = 9.42477796076938;       // 3*pi

    double phi(int i) const { return start + (end - start) * i / (count - 1); }
};

struct ExperimentConfig {
    std::vector<int> lengths = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    std::vector<CnotStrategy> strategies = {CnotStrategy::Unitary, CnotStrategy::Dynamic,
                                            CnotStrategy::Postprocessed};
    PhaseGrid grid;
    int shots = 10000;
    int repetitions = 20;
    bool mitigation = false;
    bool filter_before_mitigation = false;
    bool dd = true;
    bool drift = false;  // when false, calibration drift rates are zeroed
    bool cache = true;
    int threads = 1;
    uint64_t seed = 42;
    double chain_lambda = 1.0;
    std::string calibration_path;

    void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// S = <ZZ> - <ZX> + <XZ> + <XX>.
double compute_s(double e_zz, double e_zx, double e_xz, double e_xx);

/// Keeps shots with parity(z) = parity(x) = 0, marginalized onto (a, b).
/// Returns the filtered counts and the retention fraction.
std::pair<Counts, double> postselect_filter(const Counts& counts, const Circuit& circuit);
std::pair<QuasiDistribution, double> postselect_filter(const QuasiDistribution& quasi,
                                                       const Circuit& circuit);

struct SCurvePoint {
    double phi = 0.0;
    double e_zz = 0.0, e_zx = 0.0, e_xz = 0.0, e_xx = 0.0;
    double s = 0.0;
    double retention = 1.0;
};

struct SCurve {
    std::vector<SCurvePoint> points;
    double max_abs_s = 0.0;
    double argmax_phi = 0.0;
    double mean_retention = 1.0;

    void finalize();
};

struct CellStats {
    double max_s_mean = 0.0;
    double max_s_std = 0.0;
    double retention_mean = 1.0;
    std::vector<double> per_rep_max;
    std::vector<SCurve> scurves;
};

struct DistanceSweepResult {
    ExperimentConfig config;
    std::map<int, QubitChain> chains;  // per length; shared by strategies
    std::map<std::pair<CnotStrategy, int>, CellStats> cells;

    const CellStats& cell(CnotStrategy strategy, int length) const {
        return cells.at({strategy, length});
    }
};

/// Shared context for one experiment: calibration with config toggles
/// applied (drift off => zeroed rates) plus readout confusion fitted
/// from simulated calibration circuits when mitigation is enabled.
class Experiment {
  public:
    Experiment(ExperimentConfig config, CalibrationData calibration);

    const ExperimentConfig& config() const { return config_; }
    const CalibrationData& calibration() const { return calibration_; }
    QubitChain chain(int length) const;

    /// One S-curve: 4 bases x grid.count circuits, `shots` each, with
    /// scheduling (+DD), noise, optional mitigation, and post-selection
    /// for the post-processed strategy. `rep` feeds seed derivation.
    SCurve run_scurve(CnotStrategy strategy, int length, int rep) const;
    SCurve run_scurve_on_chain(CnotStrategy strategy, const QubitChain& chain, int rep) const;

    DistanceSweepResult sweep_distance() const;

  private:
    struct PointResult {
        double e = 0.0;
        double retention = 1.0;
    };
    PointResult run_point(CnotStrategy strategy, const QubitChain& chain, int phase_index,
                          int basis_index, int rep) const;
    const ConfusionSet& chain_confusion(const NoiseModel& model, uint32_t width) const;

    ExperimentConfig config_;
    CalibrationData calibration_;
    mutable std::mutex cache_mutex_;
    mutable std::map<int, QubitChain> chain_cache_;
    mutable std::map<uint32_t, ConfusionSet> confusion_cache_;
};

/// Spearman rank correlation of y against x.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

/// Smallest length L* such that dynamic mean max|S| >= unitary mean
/// max|S| for every configured length > L*; -1 when none exists.
int crossover_length(const DistanceSweepResult& result);

/// Multiplies every stochastic noise magnitude by `scale`: edge errors,
/// readout flips and the decay rates 1/T1, 1/T2 (drift too).
CalibrationData scale_noise(const CalibrationData& cal, double scale);

struct AnchorFit {
    double scale = 1.0;
    std::map<int, double> simulated;  // length -> max|S| at fitted scale
};

/// Fits a single global noise-scale multiplier so the unitary max|S|
/// matches the given (length -> target) anchors in least squares.
AnchorFit fit_noise_scale(const ExperimentConfig& config, const CalibrationData& cal,
                          const std::map<int, double>& anchors);

nlohmann::json sweep_to_json(const DistanceSweepResult& result);
std::string sweep_to_csv(const DistanceSweepResult& result);

}  // namespace chshforge
