// Discrete-time spatial-wideband channel: tap support, per-antenna delayed
// pulse samples, narrowband reduction, path priors and channel synthesis.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "swce/numerics.hpp"

namespace swce {

using Rng = std::mt19937_64;

/// splitmix64 finalizer applied to a combination of a base seed and a
/// stream index; used so per-stream seeds do not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Physical and system constants shared by every stage of the pipeline.
/// Users are indexed from 0. Powers are linear (not dB).
struct SystemConfig {
    double carrier_hz = 28e9;
    double bandwidth_hz = 600e6;
    double speed_of_light = 299792458.0;
    std::optional<double> antenna_spacing_m;  // half wavelength when unset

    int antennas = 16;          // M
    int users = 1;              // K
    int rf_chains = 4;          // R
    std::optional<int> adc_bits;  // empty = unquantized
    int delay_spread = 4;       // D, in symbols
    std::vector<int> paths_per_user{2};
    std::vector<double> user_power{1.0};

    int frames = 40;            // N_t
    int frame_length = 40;      // N_f
    std::optional<int> prefix_length;  // N_p, minimal guard when unset
    std::optional<int> suffix_length;  // N_s, minimal guard when unset

    double rolloff = 0.35;
    int grid_angle_res = 2;
    int grid_delay_res = 2;
    double cv_fraction = 0.2;
    std::uint64_t rng_seed = 1;

    double symbol_period() const { return 1.0 / bandwidth_hz; }
    double wavelength() const { return speed_of_light / carrier_hz; }
    double spacing() const { return antenna_spacing_m.value_or(wavelength() / 2.0); }
    /// Mean per-user transmit power.
    double snr() const;
    int total_paths() const;
    int prefix() const;
    int suffix() const;
    int observations() const { return frames * frame_length; }  // N

    /// Sets equal powers so that snr() equals 10^(snr_db/10).
    void set_equal_snr_db(double snr_db);
    /// Sets rho_k / rho_0 = step_db * k (in dB) while keeping snr() fixed.
    void set_stepped_snr_db(double snr_db, double step_db);

    /// Throws Error describing the first violated invariant.
    void validate() const;
};

/// Integer delay indices [lo, up] that carry the pulse mainlobe for every antenna.
struct TapSupport {
    int lo = 0;
    int up = 0;
    int size() const { return up - lo + 1; }
    bool operator==(const TapSupport&) const = default;
};

TapSupport tap_support(const SystemConfig& cfg);

struct PathParams {
    cplx gain;
    double theta = 0.0;  // radians
    double tau = 0.0;    // seconds
    int user = 0;
    bool operator==(const PathParams&) const = default;
};

/// Which dictionary an estimator uses to describe a path.
enum class AtomModel {
    SpatialWideband,  // per-antenna pulse delay
    Narrowband,       // common pulse delay, phase-only array response
};

/// Channel matrix H (M x |D|K, tap-major then user-major columns) and
/// h = vec(H). Ground-truth paths are kept for evaluation only.
struct Channel {
    MatrixXcd taps;
    VectorXcd h;
    TapSupport support;
    std::vector<PathParams> paths;
};

/// tau + m d sin(theta) / c for antenna index m counted from 0.
double propagation_delay(double tau, double theta, int m, const SystemConfig& cfg);

/// Array response at tap d (Eq. 9 column). d may be any integer.
VectorXcd steering_vec(double theta, double tau, int d, const SystemConfig& cfg);

/// Same as steering_vec but every antenna samples the pulse at the
/// reference-antenna delay.
VectorXcd narrowband_steering_vec(double theta, double tau, int d, const SystemConfig& cfg);

/// M x |D| matrix whose column j is the array response at tap lo + j, plus
/// derivatives with respect to theta and the normalised delay u = tau / T_s.
struct SteeringBlock {
    MatrixXcd v;
    MatrixXcd d_theta, d_u;
    MatrixXcd d_theta_theta, d_theta_u, d_u_u;
};

/// order = 0 fills only v, 1 adds first derivatives, 2 adds second.
SteeringBlock steering_block(double theta, double tau, const SystemConfig& cfg,
                             const TapSupport& support, AtomModel model, int order = 0);

/// Column of F(P) for one unit-gain path: the steering block written into the
/// user's columns of H and vectorised.
VectorXcd path_stack(const PathParams& path, const SystemConfig& cfg, const TapSupport& support,
                     AtomModel model = AtomModel::SpatialWideband);

/// Index of H(m, j*K + k) inside h.
inline Eigen::Index h_index(int m, int j, int k, int antennas, int users) {
    return static_cast<Eigen::Index>(j * users + k) * antennas + m;
}

/// Draws i.i.d. paths: gain ~ CN(0,1), theta ~ U[-pi/2, pi/2], tau ~ U[0, (D-1)T_s].
std::vector<PathParams> sample_paths(const SystemConfig& cfg, Rng& rng);

Channel build_channel(const std::vector<PathParams>& paths, const SystemConfig& cfg,
                      AtomModel model = AtomModel::SpatialWideband);

}  // namespace swce
