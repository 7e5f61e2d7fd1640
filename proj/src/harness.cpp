#include "swce/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef SWCE_GIT_REV
#define SWCE_GIT_REV "unknown"
#endif

namespace swce {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_finite(const std::vector<double>& v) {
    double s = 0.0;
    int n = 0;
    for (double x : v)
        if (!std::isnan(x)) {
            s += x;
            ++n;
        }
    return n ? s / n : kNaN;
}

double to_db(double x) { return 10.0 * std::log10(x); }

std::string describe(const SweepPoint& p) {
    std::ostringstream s;
    s << "snr_db=" << p.snr_db << " bits=" << (p.adc_bits ? std::to_string(*p.adc_bits) : "inf")
      << " frames=" << p.frames << " rf=" << p.rf_chains << " grid=" << p.grid_res;
    if (p.aoa) s << " aoa=" << *p.aoa;
    return s.str();
}

// One realization of everything random in a trial.
struct Realization {
    Channel channel;
    std::unique_ptr<SensingOperator> op;
    QuantizedObservation obs;
    GridSpec grid;
};

Realization realize(const SystemConfig& cfg, std::uint64_t seed, std::optional<double> aoa) {
    cfg.validate();
    Rng rng(seed);
    std::vector<PathParams> paths = sample_paths(cfg, rng);
    if (aoa)
        for (PathParams& p : paths) p.theta = *aoa;
    Realization r;
    r.channel = build_channel(paths, cfg);
    r.op = std::make_unique<SensingOperator>(design_training(cfg), build_combiners(cfg, rng), cfg);
    const VectorXcd y = simulate_rx(*r.op, r.channel.h, rng);
    r.obs = quantize(y, make_quantizer(cfg, received_signal_variance(cfg)));
    r.obs.partition = partition_cv(cfg);
    r.grid = make_grid(cfg);
    return r;
}

double parameter_error(const std::vector<PathParams>& truth, const std::vector<PathParams>& est, double ts) {
    if (truth.empty()) return 0.0;
    double total = 0.0;
    for (const PathParams& t : truth) {
        double best = std::numeric_limits<double>::infinity();
        for (const PathParams& e : est)
            if (e.user == t.user) best = std::min(best, std::hypot(e.theta - t.theta, (e.tau - t.tau) / ts));
        total += best;
    }
    return total / static_cast<double>(truth.size());
}

std::uint64_t point_seed(const ExperimentConfig& ecfg, std::size_t point_index) {
    // AoA is the innermost axis; points differing only in AoA share seeds.
    const std::size_t per = std::max<std::size_t>(1, ecfg.aoa.size());
    return derive_seed(ecfg.seed, point_index / per);
}

template <class T>
std::vector<T> axis_or(const std::vector<T>& axis, T fallback) {
    return axis.empty() ? std::vector<T>{fallback} : axis;
}

Cell bits_cell(const std::optional<int>& b) { return b ? Cell(static_cast<double>(*b)) : Cell(std::string("inf")); }

}  // namespace

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Nfcfgs: return "nfcfgs";
        case EstimatorKind::Fcfgs: return "fcfgs";
        case EstimatorKind::Narrowband: return "narrowband";
        case EstimatorKind::Zero: return "zero";
    }
    return "unknown";
}

EstimatorKind estimator_from_string(const std::string& name) {
    if (name == "nfcfgs" || name == "nfcfgs_cv") return EstimatorKind::Nfcfgs;
    if (name == "fcfgs" || name == "fcfgs_cv") return EstimatorKind::Fcfgs;
    if (name == "narrowband" || name == "mismatch-narrowband") return EstimatorKind::Narrowband;
    if (name == "zero") return EstimatorKind::Zero;
    throw Error("unknown estimator '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw Error("trials must be at least 1");
    if (workers < 1) throw Error("workers must be at least 1");
    if (snr_db.empty()) throw Error("the SNR axis must be nonempty");
    if (estimators.empty()) throw Error("at least one estimator is required");
    for (int r : grid_res)
        if (r < 1) throw Error("grid resolution must be at least 1");
    for (const auto& b : adc_bits)
        if (b && *b < 1) throw Error("ADC bits must be at least 1");
    base.validate();
}

void to_json(Json& j, const ExperimentConfig& c) {
    Json bits = Json::array();
    for (const auto& b : c.adc_bits) bits.push_back(b ? Json(*b) : Json(nullptr));
    Json est = Json::array();
    for (EstimatorKind k : c.estimators) est.push_back(to_string(k));
    Json h = Json::array();
    for (Eigen::Index i = 0; i < c.probe.h.size(); ++i) h.push_back(c.probe.h(i));
    j = Json{{"base", c.base},
             {"snr_db", c.snr_db},
             {"adc_bits", bits},
             {"frames", c.frames},
             {"rf_chains", c.rf_chains},
             {"grid_res", c.grid_res},
             {"aoa", c.aoa},
             {"power_step_db", c.power_step_db ? Json(*c.power_step_db) : Json(nullptr)},
             {"experiment", c.experiment},
             {"output_dir", c.output_dir},
             {"trials", c.trials},
             {"estimators", est},
             {"seed", c.seed},
             {"workers", c.workers},
             {"probe",
              {{"h", h},
               {"bits", c.probe.bits ? Json(*c.probe.bits) : Json(nullptr)},
               {"step", c.probe.step},
               {"samples", c.probe.samples},
               {"streams", c.probe.streams},
               {"lattice_points", c.probe.lattice_points},
               {"lattice_spacing", c.probe.lattice_spacing}}},
             {"probe_bits", c.probe_bits},
             {"concavity_segments", c.concavity_segments},
             {"probe_deltas", c.probe_deltas}};
}

void from_json(const Json& j, ExperimentConfig& c) {
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) j.at(key).get_to(out);
    };
    if (j.contains("base")) from_json(j.at("base"), c.base);
    get("snr_db", c.snr_db);
    if (j.contains("adc_bits")) {
        c.adc_bits.clear();
        for (const Json& b : j.at("adc_bits"))
            c.adc_bits.push_back(b.is_null() ? std::nullopt : std::optional<int>(b.get<int>()));
    }
    get("frames", c.frames);
    get("rf_chains", c.rf_chains);
    get("grid_res", c.grid_res);
    get("aoa", c.aoa);
    if (j.contains("power_step_db")) {
        const Json& p = j.at("power_step_db");
        c.power_step_db = p.is_null() ? std::nullopt : std::optional<double>(p.get<double>());
    }
    get("experiment", c.experiment);
    get("output_dir", c.output_dir);
    get("trials", c.trials);
    if (j.contains("estimators")) {
        c.estimators.clear();
        for (const Json& e : j.at("estimators")) c.estimators.push_back(estimator_from_string(e.get<std::string>()));
    }
    get("seed", c.seed);
    get("workers", c.workers);
    if (j.contains("probe")) {
        const Json& p = j.at("probe");
        if (p.contains("h")) {
            const auto h = p.at("h").get<std::vector<double>>();
            c.probe.h = Eigen::Map<const VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
        }
        if (p.contains("bits"))
            c.probe.bits = p.at("bits").is_null() ? std::nullopt : std::optional<int>(p.at("bits").get<int>());
        if (p.contains("step")) p.at("step").get_to(c.probe.step);
        if (p.contains("samples")) p.at("samples").get_to(c.probe.samples);
        if (p.contains("streams")) p.at("streams").get_to(c.probe.streams);
        if (p.contains("lattice_points")) p.at("lattice_points").get_to(c.probe.lattice_points);
        if (p.contains("lattice_spacing")) p.at("lattice_spacing").get_to(c.probe.lattice_spacing);
    }
    get("probe_bits", c.probe_bits);
    get("concavity_segments", c.concavity_segments);
    get("probe_deltas", c.probe_deltas);
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& ecfg) {
    const SystemConfig& b = ecfg.base;
    std::vector<SweepPoint> out;
    const auto bits = axis_or(ecfg.adc_bits, b.adc_bits);
    const auto frames = axis_or(ecfg.frames, b.frames);
    const auto rf = axis_or(ecfg.rf_chains, b.rf_chains);
    const auto grid = axis_or(ecfg.grid_res, b.grid_angle_res);
    std::vector<std::optional<double>> aoa;
    for (double a : ecfg.aoa) aoa.emplace_back(a);
    if (aoa.empty()) aoa.emplace_back();
    for (double s : ecfg.snr_db)
        for (const auto& q : bits)
            for (int f : frames)
                for (int r : rf)
                    for (int g : grid)
                        for (const auto& a : aoa) out.push_back({s, q, f, r, g, a});
    return out;
}

SystemConfig point_config(const ExperimentConfig& ecfg, const SweepPoint& p) {
    SystemConfig cfg = ecfg.base;
    cfg.adc_bits = p.adc_bits;
    cfg.frames = p.frames;
    cfg.rf_chains = p.rf_chains;
    if (!ecfg.grid_res.empty()) {
        cfg.grid_angle_res = p.grid_res;
        cfg.grid_delay_res = p.grid_res;
    }
    if (ecfg.power_step_db)
        cfg.set_stepped_snr_db(p.snr_db, *ecfg.power_step_db);
    else
        cfg.set_equal_snr_db(p.snr_db);
    return cfg;
}

std::vector<TrialOutcome> run_trial(const SystemConfig& cfg, const std::vector<EstimatorKind>& kinds,
                                    std::uint64_t seed, std::optional<double> aoa) {
    const Realization r = realize(cfg, seed, aoa);
    const double h2 = r.channel.h.squaredNorm();
    std::vector<TrialOutcome> out;
    for (EstimatorKind kind : kinds) {
        const auto t0 = std::chrono::steady_clock::now();
        TrialOutcome o;
        o.estimator = kind;
        VectorXcd h_hat = VectorXcd::Zero(r.channel.h.size());
        std::vector<PathParams> est;
        if (kind != EstimatorKind::Zero) {
            EstimatorOptions opt;
            if (kind == EstimatorKind::Narrowband) opt.model = AtomModel::Narrowband;
            const EstimateResult res =
                kind == EstimatorKind::Fcfgs ? fcfgs_cv(*r.op, r.obs, r.grid, opt) : nfcfgs_cv(*r.op, r.obs, r.grid, opt);
            h_hat = reconstruct_h(res.state, cfg, opt.model);
            est = res.state.paths;
            o.iterations = res.iterations;
        }
        o.paths = static_cast<int>(est.size());
        o.se = (h_hat - r.channel.h).squaredNorm();
        o.h_norm2 = h2;
        o.degenerate = !(h2 > 0.0);
        o.nmse = o.degenerate ? kNaN : o.se / h2;
        o.param_error = est.empty() && !r.channel.paths.empty()
                            ? kNaN
                            : parameter_error(r.channel.paths, est, cfg.symbol_period());
        o.wall_time_s = seconds_since(t0);
        out.push_back(o);
    }
    return out;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int threads = std::max(1, std::min(workers, n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<ResultRow> nmse_sweep(const ExperimentConfig& ecfg) {
    ecfg.validate();
    const std::vector<SweepPoint> points = sweep_points(ecfg);
    const int trials = ecfg.trials;
    const int jobs = static_cast<int>(points.size()) * trials;
    std::vector<std::vector<TrialOutcome>> slots(static_cast<std::size_t>(jobs));
    parallel_for(jobs, ecfg.workers, [&](int job) {
        const std::size_t p = static_cast<std::size_t>(job / trials);
        const int t = job % trials;
        const SweepPoint& pt = points[p];
        try {
            slots[static_cast<std::size_t>(job)] =
                run_trial(point_config(ecfg, pt), ecfg.estimators,
                          derive_seed(point_seed(ecfg, p), static_cast<std::uint64_t>(t)), pt.aoa);
        } catch (const std::exception& e) {
            throw Error(describe(pt) + " trial=" + std::to_string(t) + ": " + e.what());
        }
    });

    std::vector<ResultRow> rows;
    for (std::size_t p = 0; p < points.size(); ++p)
        for (std::size_t e = 0; e < ecfg.estimators.size(); ++e) {
            ResultRow row;
            row.point = points[p];
            row.estimator = ecfg.estimators[e];
            row.trials = trials;
            double iters = 0.0;
            double paths = 0.0;
            for (int t = 0; t < trials; ++t) {
                const TrialOutcome& o = slots[p * trials + static_cast<std::size_t>(t)][e];
                row.se.push_back(o.se);
                row.nmse.push_back(o.nmse);
                row.iterations.push_back(o.iterations);
                row.param_error.push_back(o.param_error);
                row.degenerate += o.degenerate;
                iters += o.iterations;
                paths += o.paths;
                row.wall_time_s += o.wall_time_s;
            }
            row.nmse_mean = mean_finite(row.nmse);
            row.nmse_median = median(row.nmse);
            row.nmse_mean_db = to_db(row.nmse_mean);
            row.nmse_median_db = to_db(row.nmse_median);
            row.mean_iterations = iters / trials;
            row.mean_paths = paths / trials;
            row.median_param_error = median(row.param_error);
            rows.push_back(std::move(row));
        }
    return rows;
}

std::vector<MismatchRow> mismatch_experiment(const ExperimentConfig& ecfg, std::vector<ResultRow>* raw) {
    if (ecfg.aoa.empty()) throw Error("the mismatch experiment needs an AoA list");
    ExperimentConfig c = ecfg;
    c.estimators = {EstimatorKind::Nfcfgs, EstimatorKind::Narrowband};
    const std::vector<ResultRow> rows = nmse_sweep(c);
    std::vector<MismatchRow> out;
    for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
        MismatchRow m;
        m.snr_db = rows[i].point.snr_db;
        m.theta = *rows[i].point.aoa;
        m.trials = rows[i].trials;
        m.nmse_wideband = rows[i].nmse_mean;
        m.nmse_narrowband = rows[i + 1].nmse_mean;
        m.degradation = m.nmse_narrowband / m.nmse_wideband;
        m.degradation_db = to_db(m.degradation);
        out.push_back(m);
    }
    if (raw) *raw = rows;
    return out;
}

std::vector<CensusRow> iteration_census(const ExperimentConfig& ecfg, std::vector<ResultRow>* raw) {
    ExperimentConfig c = ecfg;
    c.estimators = {EstimatorKind::Nfcfgs, EstimatorKind::Fcfgs};
    const std::vector<ResultRow> rows = nmse_sweep(c);
    std::vector<CensusRow> out;
    for (std::size_t i = 0; i + 1 < rows.size(); i += 2)
        out.push_back({rows[i].point.snr_db, rows[i].point.adc_bits, rows[i].trials, rows[i].mean_iterations,
                       rows[i + 1].mean_iterations});
    if (raw) *raw = rows;
    return out;
}

OverfitSummary cv_overfit_experiment(const ExperimentConfig& ecfg) {
    ecfg.validate();
    const SweepPoint pt = sweep_points(ecfg).front();
    const SystemConfig cfg = point_config(ecfg, pt);
    OverfitSummary s;
    s.trials = ecfg.trials;
    s.per_trial.resize(static_cast<std::size_t>(ecfg.trials));
    parallel_for(ecfg.trials, ecfg.workers, [&](int t) {
        const Realization r = realize(cfg, derive_seed(point_seed(ecfg, 0), static_cast<std::uint64_t>(t)), pt.aoa);
        EstimatorOptions opt;
        opt.forced_iterations = 2 * cfg.total_paths();
        const EstimateResult res = nfcfgs_cv(*r.op, r.obs, r.grid, opt);
        OverfitTrial& o = s.per_trial[static_cast<std::size_t>(t)];
        for (const IterationRecord& rec : res.trace) {
            o.se.push_back((reconstruct_h(rec.paths, cfg) - r.channel.h).squaredNorm());
            o.cv.push_back(rec.cv_score);
        }
        if (o.se.empty()) return;
        o.best_cv_iteration = static_cast<int>(std::max_element(o.cv.begin(), o.cv.end()) - o.cv.begin());
        o.min_se_iteration = static_cast<int>(std::min_element(o.se.begin(), o.se.end()) - o.se.begin());
        o.se_gap_db = to_db(o.se[static_cast<std::size_t>(o.best_cv_iteration)] /
                            o.se[static_cast<std::size_t>(o.min_se_iteration)]);
    });
    for (const OverfitTrial& o : s.per_trial) s.within_3db += !o.se.empty() && o.se_gap_db <= 3.0;
    s.fraction = static_cast<double>(s.within_3db) / s.trials;
    return s;
}

ProbeSummary cv_probe_experiment(const ExperimentConfig& ecfg) {
    ProbeSummary s;
    s.rows.resize(ecfg.probe_bits.size());
    parallel_for(static_cast<int>(ecfg.probe_bits.size()), ecfg.workers, [&](int i) {
        ProbeRow& row = s.rows[static_cast<std::size_t>(i)];
        row.bits = ecfg.probe_bits[static_cast<std::size_t>(i)];
        CvProbeConfig p = ecfg.probe;
        p.bits = row.bits;
        p.step = 0.0;
        const FcvSampler sampler(p, derive_seed(ecfg.seed, static_cast<std::uint64_t>(row.bits)));
        row.lattice = fcv_lattice(sampler);
        row.peak = lattice_peak(sampler, row.lattice);
        row.concavity = concavity_probe(sampler, ecfg.concavity_segments,
                                        derive_seed(ecfg.seed, 1000 + static_cast<std::uint64_t>(row.bits)));
    });
    if (!ecfg.probe_deltas.empty()) {
        const VectorXd& h = ecfg.probe.h;
        VectorXd off = h;
        off(0) += 0.5;
        s.deltas = delta_scaling_check(h, {h, off}, ecfg.probe_deltas, ecfg.probe, derive_seed(ecfg.seed, 2000));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Tables

Table to_table(const std::vector<ResultRow>& rows) {
    Table t;
    t.name = "results";
    t.columns = {"snr_db",         "adc_bits",     "frames",          "rf_chains",  "grid_res",
                 "aoa",            "estimator",    "trials",          "degenerate", "nmse_mean",
                 "nmse_mean_db",   "nmse_median",  "nmse_median_db",  "mean_iterations",
                 "mean_paths",     "median_param_error", "wall_time_s"};
    for (const ResultRow& r : rows)
        t.rows.push_back({r.point.snr_db, bits_cell(r.point.adc_bits), static_cast<double>(r.point.frames),
                          static_cast<double>(r.point.rf_chains), static_cast<double>(r.point.grid_res),
                          r.point.aoa ? Cell(*r.point.aoa) : Cell(std::string("random")), to_string(r.estimator),
                          static_cast<double>(r.trials), static_cast<double>(r.degenerate), r.nmse_mean,
                          r.nmse_mean_db, r.nmse_median, r.nmse_median_db, r.mean_iterations, r.mean_paths,
                          r.median_param_error, r.wall_time_s});
    return t;
}

Table to_table(const std::vector<MismatchRow>& rows) {
    Table t;
    t.name = "degradation";
    t.columns = {"snr_db", "theta", "trials", "nmse_wideband", "nmse_narrowband", "degradation", "degradation_db"};
    for (const MismatchRow& r : rows)
        t.rows.push_back({r.snr_db, r.theta, static_cast<double>(r.trials), r.nmse_wideband, r.nmse_narrowband,
                          r.degradation, r.degradation_db});
    return t;
}

Table to_table(const std::vector<CensusRow>& rows) {
    Table t;
    t.name = "census";
    t.columns = {"snr_db", "adc_bits", "trials", "nfcfgs_iterations", "fcfgs_iterations"};
    for (const CensusRow& r : rows)
        t.rows.push_back(
            {r.snr_db, bits_cell(r.adc_bits), static_cast<double>(r.trials), r.nfcfgs_iterations, r.fcfgs_iterations});
    return t;
}

Table to_table(const OverfitSummary& s) {
    Table t;
    t.name = "overfit";
    t.columns = {"trial", "iterations", "best_cv_iteration", "min_se_iteration", "se_gap_db"};
    for (std::size_t i = 0; i < s.per_trial.size(); ++i) {
        const OverfitTrial& o = s.per_trial[i];
        t.rows.push_back({static_cast<double>(i), static_cast<double>(o.se.size()),
                          static_cast<double>(o.best_cv_iteration), static_cast<double>(o.min_se_iteration),
                          o.se_gap_db});
    }
    return t;
}

Table lattice_table(const ProbeSummary& s) {
    Table t;
    t.name = "fcv_lattice";
    t.columns = {"bits", "h1", "h2", "f_cv", "stderr"};
    for (const ProbeRow& r : s.rows)
        for (const LatticePoint& p : r.lattice)
            t.rows.push_back({static_cast<double>(r.bits), p.h1, p.h2, p.value, p.std_error});
    return t;
}

Table probe_table(const ProbeSummary& s) {
    Table t;
    t.name = "results";
    t.columns = {"bits", "best_h1", "best_h2", "gap", "gap_stderr", "at_truth", "segments", "violations", "worst_z"};
    for (const ProbeRow& r : s.rows)
        t.rows.push_back({static_cast<double>(r.bits), r.peak.best.h1, r.peak.best.h2, r.peak.gap,
                          r.peak.gap_std_error, r.peak.at_truth ? 1.0 : 0.0,
                          static_cast<double>(r.concavity.segments), static_cast<double>(r.concavity.violations),
                          r.concavity.worst_z});
    return t;
}

Table delta_table(const ProbeSummary& s) {
    Table t;
    t.name = "fcv_delta";
    t.columns = {"delta", "point", "distance2", "residual", "stderr", "ratio"};
    for (const DeltaRow& r : s.deltas)
        t.rows.push_back(
            {r.delta, static_cast<double>(r.point), r.distance2, r.residual, r.std_error, r.ratio});
    return t;
}

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + table.columns[c];
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += std::holds_alternative<double>(row[c]) ? format_real(std::get<double>(row[c]))
                                                          : std::get<std::string>(row[c]);
        }
        out += '\n';
    }
    return out;
}

// Strings stay strings; non-finite reals become {"real": "inf"} so they
// cannot be confused with string cells.
Json to_json(const Table& table) {
    Json rows = Json::array();
    for (const auto& row : table.rows) {
        Json r = Json::array();
        for (const Cell& c : row) {
            if (std::holds_alternative<std::string>(c)) {
                r.push_back(std::get<std::string>(c));
            } else {
                const double x = std::get<double>(c);
                r.push_back(std::isfinite(x) ? Json(x) : Json{{"real", real_to_json(x)}});
            }
        }
        rows.push_back(r);
    }
    return Json{{"name", table.name}, {"columns", table.columns}, {"rows", rows}};
}

Table table_from_json(const Json& j) {
    Table t;
    j.at("name").get_to(t.name);
    j.at("columns").get_to(t.columns);
    for (const Json& r : j.at("rows")) {
        std::vector<Cell> row;
        for (const Json& c : r) {
            if (c.is_string())
                row.emplace_back(c.get<std::string>());
            else if (c.is_object())
                row.emplace_back(real_from_json(c.at("real")));
            else
                row.emplace_back(c.get<double>());
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string build_fingerprint() { return SWCE_GIT_REV; }

void emit_results(const Report& report, const std::string& dir) {
    if (report.tables.empty()) throw Error("nothing to emit");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir + ": " + ec.message());
    auto write = [](const std::string& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot open " + path + " for writing");
        f << text;
        if (!f) throw Error("write failed for " + path);
    };
    const std::filesystem::path base(dir);
    write((base / "results.csv").string(), to_csv(report.tables.front()));
    for (std::size_t i = 1; i < report.tables.size(); ++i)
        write((base / (report.tables[i].name + ".csv")).string(), to_csv(report.tables[i]));
    Json tables = Json::array();
    for (const Table& t : report.tables) tables.push_back(to_json(t));
    Json doc{{"experiment", report.experiment},
             {"config", report.config},
             {"build", {{"git_rev", build_fingerprint()}, {"compiler", __VERSION__}}},
             {"tables", tables}};
    write((base / "results.json").string(), doc.dump(2) + "\n");
}

std::vector<Table> tables_from_results_json(const Json& j) {
    std::vector<Table> out;
    for (const Json& t : j.at("tables")) out.push_back(table_from_json(t));
    return out;
}

Report run_experiment(const ExperimentConfig& ecfg, const std::string& experiment) {
    Report r;
    r.experiment = experiment;
    r.config = ecfg;
    r.config.experiment = experiment;
    if (experiment == "nmse") {
        r.tables.push_back(to_table(nmse_sweep(ecfg)));
    } else if (experiment == "mismatch") {
        std::vector<ResultRow> raw;
        const auto rows = mismatch_experiment(ecfg, &raw);
        r.tables.push_back(to_table(raw));
        r.tables.push_back(to_table(rows));
    } else if (experiment == "census") {
        std::vector<ResultRow> raw;
        const auto rows = iteration_census(ecfg, &raw);
        r.tables.push_back(to_table(raw));
        r.tables.push_back(to_table(rows));
    } else if (experiment == "overfit") {
        r.tables.push_back(to_table(cv_overfit_experiment(ecfg)));
    } else if (experiment == "cvprobe") {
        const ProbeSummary s = cv_probe_experiment(ecfg);
        r.tables.push_back(probe_table(s));
        r.tables.push_back(lattice_table(s));
        if (!s.deltas.empty()) r.tables.push_back(delta_table(s));
    } else {
        throw Error("unknown experiment '" + experiment + "'");
    }
    return r;
}

}  // namespace swce
