#include "swce/serialization.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace swce {

namespace {

Json cplx_json(cplx z) { return Json::array({real_to_json(z.real()), real_to_json(z.imag())}); }
cplx cplx_from(const Json& j) { return {real_from_json(j.at(0)), real_from_json(j.at(1))}; }

Json vec_json(const VectorXcd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(cplx_json(v(i)));
    return out;
}
VectorXcd vec_from(const Json& j) {
    VectorXcd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = cplx_from(j[i]);
    return v;
}

Json real_vec_json(const VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(real_to_json(v(i)));
    return out;
}
VectorXd real_vec_from(const Json& j) {
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = real_from_json(j[i]);
    return v;
}

template <class T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key) || j.at(key).is_null()) {
        out.reset();
    } else {
        out = j.at(key).get<T>();
    }
}

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

template <class T>
void read_if(const Json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

Json real_to_json(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double real_from_json(const Json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw Error("unexpected real value '" + s + "'");
    }
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

Json matrix_to_json(const MatrixXcd& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vec_json(m.row(r).transpose()));
    return out;
}

MatrixXcd matrix_from_json(const Json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    MatrixXcd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) throw Error("ragged matrix");
        m.row(r) = vec_from(j[static_cast<std::size_t>(r)]).transpose();
    }
    return m;
}

// The config field names follow the SystemConfig members.
void to_json(Json& j, const SystemConfig& c) {
    j = Json{{"carrier_hz", c.carrier_hz},
             {"bandwidth_hz", c.bandwidth_hz},
             {"speed_of_light", c.speed_of_light},
             {"antenna_spacing_m", optional_json(c.antenna_spacing_m)},
             {"antennas", c.antennas},
             {"users", c.users},
             {"rf_chains", c.rf_chains},
             {"adc_bits", optional_json(c.adc_bits)},
             {"delay_spread", c.delay_spread},
             {"paths_per_user", c.paths_per_user},
             {"user_power", c.user_power},
             {"frames", c.frames},
             {"frame_length", c.frame_length},
             {"prefix_length", optional_json(c.prefix_length)},
             {"suffix_length", optional_json(c.suffix_length)},
             {"rolloff", c.rolloff},
             {"grid_angle_res", c.grid_angle_res},
             {"grid_delay_res", c.grid_delay_res},
             {"cv_fraction", c.cv_fraction},
             {"rng_seed", c.rng_seed}};
}

// Missing keys keep their defaults, so config files may be partial.
void from_json(const Json& j, SystemConfig& c) {
    read_if(j, "carrier_hz", c.carrier_hz);
    read_if(j, "bandwidth_hz", c.bandwidth_hz);
    read_if(j, "speed_of_light", c.speed_of_light);
    if (j.contains("antenna_spacing_m")) read_optional(j, "antenna_spacing_m", c.antenna_spacing_m);
    read_if(j, "antennas", c.antennas);
    read_if(j, "users", c.users);
    read_if(j, "rf_chains", c.rf_chains);
    if (j.contains("adc_bits")) read_optional(j, "adc_bits", c.adc_bits);
    read_if(j, "delay_spread", c.delay_spread);
    read_if(j, "paths_per_user", c.paths_per_user);
    read_if(j, "user_power", c.user_power);
    read_if(j, "frames", c.frames);
    read_if(j, "frame_length", c.frame_length);
    if (j.contains("prefix_length")) read_optional(j, "prefix_length", c.prefix_length);
    if (j.contains("suffix_length")) read_optional(j, "suffix_length", c.suffix_length);
    read_if(j, "rolloff", c.rolloff);
    read_if(j, "grid_angle_res", c.grid_angle_res);
    read_if(j, "grid_delay_res", c.grid_delay_res);
    read_if(j, "cv_fraction", c.cv_fraction);
    read_if(j, "rng_seed", c.rng_seed);
}

void to_json(Json& j, const TapSupport& s) { j = Json{{"lo", s.lo}, {"up", s.up}}; }
void from_json(const Json& j, TapSupport& s) {
    j.at("lo").get_to(s.lo);
    j.at("up").get_to(s.up);
}

void to_json(Json& j, const PathParams& p) {
    j = Json{{"gain", cplx_json(p.gain)}, {"theta", p.theta}, {"tau", p.tau}, {"user", p.user}};
}
void from_json(const Json& j, PathParams& p) {
    p.gain = cplx_from(j.at("gain"));
    j.at("theta").get_to(p.theta);
    j.at("tau").get_to(p.tau);
    j.at("user").get_to(p.user);
}

void to_json(Json& j, const Channel& c) {
    j = Json{{"support", c.support}, {"paths", c.paths}, {"taps", matrix_to_json(c.taps)}, {"h", vec_json(c.h)}};
}
void from_json(const Json& j, Channel& c) {
    j.at("support").get_to(c.support);
    j.at("paths").get_to(c.paths);
    c.taps = matrix_from_json(j.at("taps"));
    c.h = vec_from(j.at("h"));
}

void to_json(Json& j, const QuantizerSpec& q) { j = Json{{"bits", optional_json(q.bits)}, {"step", q.step}}; }
void from_json(const Json& j, QuantizerSpec& q) {
    read_optional(j, "bits", q.bits);
    j.at("step").get_to(q.step);
}

void to_json(Json& j, const DataPartition& p) {
    j = Json{{"samples", p.samples},
             {"estimation_frames", p.estimation_frames},
             {"cv_frames", p.cv_frames},
             {"estimation", p.estimation},
             {"cv", p.cv}};
}
void from_json(const Json& j, DataPartition& p) {
    j.at("samples").get_to(p.samples);
    j.at("estimation_frames").get_to(p.estimation_frames);
    j.at("cv_frames").get_to(p.cv_frames);
    j.at("estimation").get_to(p.estimation);
    j.at("cv").get_to(p.cv);
}

void to_json(Json& j, const QuantizedObservation& o) {
    j = Json{{"quantizer", o.quantizer},
             {"partition", o.partition},
             {"values", vec_json(o.values)},
             {"lower", real_vec_json(o.lower)},
             {"upper", real_vec_json(o.upper)}};
}
void from_json(const Json& j, QuantizedObservation& o) {
    j.at("quantizer").get_to(o.quantizer);
    j.at("partition").get_to(o.partition);
    o.values = vec_from(j.at("values"));
    o.lower = real_vec_from(j.at("lower"));
    o.upper = real_vec_from(j.at("upper"));
}

void to_json(Json& j, const CombinerSchedule& c) {
    j = Json::array();
    for (const MatrixXcd& w : c.per_frame) j.push_back(matrix_to_json(w));
}
void from_json(const Json& j, CombinerSchedule& c) {
    c.per_frame.clear();
    for (const Json& w : j) c.per_frame.push_back(matrix_from_json(w));
}

void to_json(Json& j, const EstimateState& s) {
    Json hist = Json::array();
    for (double v : s.cv_history) hist.push_back(real_to_json(v));
    j = Json{{"paths", s.paths},
             {"gains", vec_json(s.gains)},
             {"cv_history", hist},
             {"mean", vec_json(s.mean)},
             {"cv_score", real_to_json(s.cv_score)},
             {"log_posterior", real_to_json(s.log_posterior)}};
}
void from_json(const Json& j, EstimateState& s) {
    j.at("paths").get_to(s.paths);
    s.gains = vec_from(j.at("gains"));
    s.cv_history.clear();
    for (const Json& v : j.at("cv_history")) s.cv_history.push_back(real_from_json(v));
    s.mean = j.contains("mean") ? vec_from(j.at("mean")) : VectorXcd();
    s.cv_score = j.contains("cv_score") ? real_from_json(j.at("cv_score")) : -std::numeric_limits<double>::infinity();
    s.log_posterior =
        j.contains("log_posterior") ? real_from_json(j.at("log_posterior")) : -std::numeric_limits<double>::infinity();
}

Json operator_to_json(const SensingOperator& op) {
    return Json{{"rows", op.rows()}, {"cols", op.cols()}, {"matrix", matrix_to_json(op.dense())}};
}

void write_json(const Json& j, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << j.dump(2) << '\n';
    if (!f) throw Error("write failed for " + path);
}

Json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    try {
        return Json::parse(f);
    } catch (const Json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace swce
