// Experiment runner: end-to-end trials, NMSE sweeps, the model-mismatch and
// iteration-count experiments, the CV overfitting census, the CV-function
// probe, and CSV/JSON result emission.
//
// Every trial draws from its own generator seeded by
// derive_seed(derive_seed(master, point), trial), so results do not depend on
// the number of worker threads or on scheduling.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "swce/cv_analysis.hpp"
#include "swce/serialization.hpp"

namespace swce {

enum class EstimatorKind {
    Nfcfgs,      // gridless, wideband atoms
    Fcfgs,       // on-grid, wideband atoms
    Narrowband,  // gridless with narrowband atoms (model mismatch)
    Zero,        // h_hat = 0 reference
};

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

struct ExperimentConfig {
    SystemConfig base;
    // Sweep axes; an empty axis keeps the base value.
    std::vector<double> snr_db{0.0};
    std::vector<std::optional<int>> adc_bits;
    std::vector<int> frames;
    std::vector<int> rf_chains;
    std::vector<int> grid_res;  // applied to both angle and delay
    std::vector<double> aoa;    // every path gets this angle; empty = random
    /// Per-user power step in dB (user k is step*k dB above user 0); empty = equal powers.
    std::optional<double> power_step_db;

    std::string experiment = "nmse";
    std::string output_dir = "results";
    int trials = 50;
    std::vector<EstimatorKind> estimators{EstimatorKind::Nfcfgs, EstimatorKind::Fcfgs};
    std::uint64_t seed = 1;
    int workers = 1;

    // Probe of the asymptotic CV function.
    CvProbeConfig probe;
    std::vector<int> probe_bits{1, 2, 3, 4};
    int concavity_segments = 100;
    std::vector<double> probe_deltas{0.4, 0.2, 0.1};

    void validate() const;
};

void to_json(Json& j, const ExperimentConfig& c);
void from_json(const Json& j, ExperimentConfig& c);

struct SweepPoint {
    double snr_db = 0.0;
    std::optional<int> adc_bits;
    int frames = 0;
    int rf_chains = 0;
    int grid_res = 0;
    std::optional<double> aoa;
    bool operator==(const SweepPoint&) const = default;
};

/// Cartesian product of the sweep axes, SNR outermost, AoA innermost.
std::vector<SweepPoint> sweep_points(const ExperimentConfig& ecfg);
SystemConfig point_config(const ExperimentConfig& ecfg, const SweepPoint& point);

struct TrialOutcome {
    EstimatorKind estimator = EstimatorKind::Nfcfgs;
    double se = 0.0;
    double h_norm2 = 0.0;
    double nmse = 0.0;       // NaN when degenerate
    bool degenerate = false; // ||h|| = 0
    int iterations = 0;
    int paths = 0;
    double param_error = 0.0;  // mean over true paths of the nearest estimate's (theta, tau/T_s) distance
    double wall_time_s = 0.0;
};

/// One channel, training, noise and quantizer realization shared by every
/// listed estimator.
std::vector<TrialOutcome> run_trial(const SystemConfig& cfg, const std::vector<EstimatorKind>& kinds,
                                    std::uint64_t seed, std::optional<double> aoa = {});

struct ResultRow {
    SweepPoint point;
    EstimatorKind estimator = EstimatorKind::Nfcfgs;
    int trials = 0;
    int degenerate = 0;
    double nmse_mean = 0.0;
    double nmse_median = 0.0;
    double nmse_mean_db = 0.0;
    double nmse_median_db = 0.0;
    double mean_iterations = 0.0;
    double mean_paths = 0.0;
    double median_param_error = 0.0;
    std::vector<double> se;
    std::vector<double> nmse;
    std::vector<int> iterations;
    std::vector<double> param_error;
    double wall_time_s = 0.0;
};

/// Runs every (point, trial) job on a pool of ecfg.workers threads and
/// aggregates per (point, estimator) in a fixed order.
std::vector<ResultRow> nmse_sweep(const ExperimentConfig& ecfg);

struct MismatchRow {
    double snr_db = 0.0;
    double theta = 0.0;
    int trials = 0;
    double nmse_wideband = 0.0;
    double nmse_narrowband = 0.0;
    double degradation = 0.0;  // nmse_narrowband / nmse_wideband
    double degradation_db = 0.0;
};

/// Paired wideband/narrowband trials for every sweep point with a fixed AoA.
/// Trials at different AoAs reuse the same seeds (common random numbers).
std::vector<MismatchRow> mismatch_experiment(const ExperimentConfig& ecfg, std::vector<ResultRow>* raw = nullptr);

struct CensusRow {
    double snr_db = 0.0;
    std::optional<int> adc_bits;
    int trials = 0;
    double nfcfgs_iterations = 0.0;
    double fcfgs_iterations = 0.0;
};

std::vector<CensusRow> iteration_census(const ExperimentConfig& ecfg, std::vector<ResultRow>* raw = nullptr);

struct OverfitTrial {
    int best_cv_iteration = 0;  // 0-based
    int min_se_iteration = 0;
    double se_gap_db = 0.0;     // SE at best CV over the minimum SE
    std::vector<double> se;
    std::vector<double> cv;
};

struct OverfitSummary {
    int trials = 0;
    int within_3db = 0;
    double fraction = 0.0;
    std::vector<OverfitTrial> per_trial;
};

/// Forces 2 * sum_k L_k outer iterations and compares the iteration with the
/// largest CV score to the one with the smallest squared error.
OverfitSummary cv_overfit_experiment(const ExperimentConfig& ecfg);

struct ProbeRow {
    int bits = 0;
    PeakReport peak;
    ConcavityReport concavity;
    std::vector<LatticePoint> lattice;
};

struct ProbeSummary {
    std::vector<ProbeRow> rows;
    std::vector<DeltaRow> deltas;
};

ProbeSummary cv_probe_experiment(const ExperimentConfig& ecfg);

// ---------------------------------------------------------------------------
// Emission

using Cell = std::variant<double, std::string>;

struct Table {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    bool operator==(const Table&) const = default;
};

Table to_table(const std::vector<ResultRow>& rows);
Table to_table(const std::vector<MismatchRow>& rows);
Table to_table(const std::vector<CensusRow>& rows);
Table to_table(const OverfitSummary& summary);
Table lattice_table(const ProbeSummary& summary);
Table probe_table(const ProbeSummary& summary);
Table delta_table(const ProbeSummary& summary);

struct Report {
    std::string experiment;
    ExperimentConfig config;
    std::vector<Table> tables;  // the first one becomes results.csv
};

/// Shortest decimal text that reads back to the same double.
std::string format_real(double x);
std::string to_csv(const Table& table);
Json to_json(const Table& table);
Table table_from_json(const Json& j);

/// Writes results.csv (first table), <name>.csv for the others, and
/// results.json holding the config, a build fingerprint and every table.
void emit_results(const Report& report, const std::string& dir);
/// Inverse of the JSON part of emit_results.
std::vector<Table> tables_from_results_json(const Json& j);

/// "nmse", "mismatch", "census", "overfit" or "cvprobe".
Report run_experiment(const ExperimentConfig& ecfg, const std::string& experiment);

/// Build fingerprint (git revision recorded at configure time).
std::string build_fingerprint();

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the
/// exception of the lowest failing index.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace swce
