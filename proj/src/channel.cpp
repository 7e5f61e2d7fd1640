#include "swce/channel.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace swce {

double SystemConfig::snr() const {
    if (user_power.empty()) return 0.0;
    return std::accumulate(user_power.begin(), user_power.end(), 0.0) /
           static_cast<double>(user_power.size());
}

int SystemConfig::total_paths() const {
    return std::accumulate(paths_per_user.begin(), paths_per_user.end(), 0);
}

int SystemConfig::prefix() const { return prefix_length.value_or(tap_support(*this).up); }

int SystemConfig::suffix() const { return suffix_length.value_or(-tap_support(*this).lo); }

void SystemConfig::set_equal_snr_db(double snr_db) {
    user_power.assign(static_cast<std::size_t>(users), std::pow(10.0, snr_db / 10.0));
}

void SystemConfig::set_stepped_snr_db(double snr_db, double step_db) {
    std::vector<double> rel(static_cast<std::size_t>(users));
    for (int k = 0; k < users; ++k) rel[k] = std::pow(10.0, step_db * k / 10.0);
    const double total = std::accumulate(rel.begin(), rel.end(), 0.0);
    const double rho0 = users * std::pow(10.0, snr_db / 10.0) / total;
    user_power.resize(rel.size());
    for (std::size_t k = 0; k < rel.size(); ++k) user_power[k] = rho0 * rel[k];
}

void SystemConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error("invalid SystemConfig: " + what); };
    if (!(carrier_hz > 0) || !(bandwidth_hz > 0)) fail("carrier and bandwidth must be positive");
    if (antennas < 1 || users < 1 || rf_chains < 1) fail("M, K and R must be positive");
    if (rf_chains > antennas) fail("R must not exceed M");
    if (delay_spread < 1) fail("D must be positive");
    if (adc_bits && *adc_bits < 1) fail("ADC bits must be at least 1");
    if (static_cast<int>(paths_per_user.size()) != users) fail("paths_per_user needs K entries");
    if (static_cast<int>(user_power.size()) != users) fail("user_power needs K entries");
    for (int l : paths_per_user)
        if (l < 0) fail("path counts must be non-negative");
    for (double p : user_power)
        if (!(p > 0)) fail("user powers must be positive");
    if (frames < 1 || frame_length < 1) fail("frame counts must be positive");
    if (!(rolloff > 0 && rolloff <= 1)) fail("roll-off must lie in (0, 1]");
    if (grid_angle_res < 1 || grid_delay_res < 1) fail("grid resolutions must be at least 1");
    const TapSupport s = tap_support(*this);
    if (prefix() < s.up) fail("prefix shorter than D_up causes inter-frame interference");
    if (suffix() < -s.lo) fail("suffix shorter than |D_lo| causes inter-frame interference");
    if (frame_length < s.size() * users) fail("N_f must be at least |D| K for orthogonal training");
}

TapSupport tap_support(const SystemConfig& cfg) {
    const double spread = (cfg.antennas - 1) * cfg.spacing() / (cfg.speed_of_light * cfg.symbol_period());
    // Guard against 1.0000000000002 style rounding before the ceiling.
    const int extra = static_cast<int>(std::ceil(spread - 1e-9));
    return {-extra, cfg.delay_spread - 1 + extra};
}

double propagation_delay(double tau, double theta, int m, const SystemConfig& cfg) {
    return tau + m * cfg.spacing() * std::sin(theta) / cfg.speed_of_light;
}

namespace {

VectorXcd response(double theta, double tau, int d, const SystemConfig& cfg, AtomModel model) {
    const double ts = cfg.symbol_period();
    VectorXcd out(cfg.antennas);
    for (int m = 0; m < cfg.antennas; ++m) {
        const double offset = m * cfg.spacing() * std::sin(theta) / cfg.speed_of_light;
        const double phase = -2.0 * kPi * cfg.carrier_hz * offset;
        const double delay = model == AtomModel::SpatialWideband ? tau + offset : tau;
        out(m) = std::polar(1.0, phase) * rc_pulse(d * ts - delay, ts, cfg.rolloff);
    }
    return out;
}

}  // namespace

VectorXcd steering_vec(double theta, double tau, int d, const SystemConfig& cfg) {
    return response(theta, tau, d, cfg, AtomModel::SpatialWideband);
}

VectorXcd narrowband_steering_vec(double theta, double tau, int d, const SystemConfig& cfg) {
    return response(theta, tau, d, cfg, AtomModel::Narrowband);
}

SteeringBlock steering_block(double theta, double tau, const SystemConfig& cfg,
                             const TapSupport& support, AtomModel model, int order) {
    const int m_count = cfg.antennas;
    const int taps = support.size();
    const double ts = cfg.symbol_period();
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const bool wide = model == AtomModel::SpatialWideband;

    SteeringBlock blk;
    blk.v.resize(m_count, taps);
    if (order >= 1) {
        blk.d_theta.resize(m_count, taps);
        blk.d_u.resize(m_count, taps);
    }
    if (order >= 2) {
        blk.d_theta_theta.resize(m_count, taps);
        blk.d_theta_u.resize(m_count, taps);
        blk.d_u_u.resize(m_count, taps);
    }
    const cplx j1(0.0, 1.0);
    for (int m = 0; m < m_count; ++m) {
        const double kappa = m * cfg.spacing() / cfg.speed_of_light;
        const double w = 2.0 * kPi * cfg.carrier_hz * kappa;
        const cplx e = std::polar(1.0, -w * s);
        // Derivatives of the phase and of the pulse argument t.
        const double ph_t = -w * c;
        const double ph_tt = w * s;
        const double t_t = wide ? -kappa * c : 0.0;
        const double t_tt = wide ? kappa * s : 0.0;
        const double t_u = -ts;
        for (int j = 0; j < taps; ++j) {
            const double t = (support.lo + j) * ts - tau - (wide ? kappa * s : 0.0);
            if (order == 0) {
                blk.v(m, j) = e * rc_pulse(t, ts, cfg.rolloff);
                continue;
            }
            const PulseJet p = rc_pulse_jet(t, ts, cfg.rolloff);
            blk.v(m, j) = e * p.value;
            blk.d_theta(m, j) = e * (j1 * ph_t * p.value + p.d1 * t_t);
            blk.d_u(m, j) = e * (p.d1 * t_u);
            if (order >= 2) {
                blk.d_theta_theta(m, j) =
                    e * (-(ph_t * ph_t) * p.value + 2.0 * j1 * ph_t * p.d1 * t_t + j1 * ph_tt * p.value +
                         p.d2 * t_t * t_t + p.d1 * t_tt);
                blk.d_theta_u(m, j) = e * (j1 * ph_t * p.d1 * t_u + p.d2 * t_t * t_u);
                blk.d_u_u(m, j) = e * (p.d2 * t_u * t_u);
            }
        }
    }
    return blk;
}

VectorXcd path_stack(const PathParams& path, const SystemConfig& cfg, const TapSupport& support,
                     AtomModel model) {
    const SteeringBlock blk = steering_block(path.theta, path.tau, cfg, support, model, 0);
    VectorXcd f = VectorXcd::Zero(static_cast<Eigen::Index>(cfg.antennas) * support.size() * cfg.users);
    for (int j = 0; j < support.size(); ++j)
        f.segment(h_index(0, j, path.user, cfg.antennas, cfg.users), cfg.antennas) = blk.v.col(j);
    return f;
}

std::vector<PathParams> sample_paths(const SystemConfig& cfg, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::uniform_real_distribution<double> angle(-kPi / 2.0, kPi / 2.0);
    const double max_delay = (cfg.delay_spread - 1) * cfg.symbol_period();
    std::uniform_real_distribution<double> delay(0.0, max_delay > 0 ? max_delay : 1.0);
    std::vector<PathParams> paths;
    for (int k = 0; k < cfg.users; ++k) {
        const int count = k < static_cast<int>(cfg.paths_per_user.size()) ? cfg.paths_per_user[k] : 0;
        for (int l = 0; l < count; ++l) {
            PathParams p;
            const double re = gauss(rng);
            const double im = gauss(rng);
            p.gain = cplx(re, im);
            p.theta = angle(rng);
            p.tau = cfg.delay_spread > 1 ? delay(rng) : 0.0;
            p.user = k;
            paths.push_back(p);
        }
    }
    return paths;
}

Channel build_channel(const std::vector<PathParams>& paths, const SystemConfig& cfg, AtomModel model) {
    Channel ch;
    ch.support = tap_support(cfg);
    ch.paths = paths;
    ch.h = VectorXcd::Zero(static_cast<Eigen::Index>(cfg.antennas) * ch.support.size() * cfg.users);
    for (const PathParams& p : paths) ch.h += p.gain * path_stack(p, cfg, ch.support, model);
    ch.taps = Eigen::Map<const MatrixXcd>(ch.h.data(), cfg.antennas,
                                          static_cast<Eigen::Index>(ch.support.size()) * cfg.users);
    return ch;
}

}  // namespace swce
