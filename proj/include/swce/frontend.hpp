// Acquisition front end: Zadoff-Chu training frames, RF combiners, the
// linear sensing operator, AWGN, B-bit quantization and the estimation /
// cross-validation split.

#pragma once

#include <optional>
#include <vector>

#include "swce/channel.hpp"

namespace swce {

/// Per-user training symbols. Every frame carries the same payload; prefix
/// and suffix guards are cyclic copies of it.
struct TrainingSchedule {
    int frames = 0;
    int frame_length = 0;
    int prefix = 0;
    int suffix = 0;
    int users = 0;
    TapSupport support;
    MatrixXcd payload;  // N_f x K, one frame of symbols per user
    MatrixXcd frame_matrix;  // S, N_f x |D|K, column j*K + k = user k at lag lo + j

    int slot_length() const { return prefix + frame_length + suffix; }
    /// Position of the first payload symbol of frame nt within stream().
    int frame_start(int nt) const { return nt * slot_length() + prefix; }
    /// Full transmitted streams over all frames including guards, (N_t * slot) x K.
    MatrixXcd stream() const;
};

/// Assigns user k the (|D| k)-shifted ZC sequence of length N_f scaled to power
/// rho_k. Throws when N_f < |D| K or a guard is shorter than Remark-style
/// requirements (N_p >= D_up, N_s >= |D_lo|).
TrainingSchedule design_training(const SystemConfig& cfg, int root = 1);

struct CombinerSchedule {
    std::vector<MatrixXcd> per_frame;  // M x R with orthonormal columns
};

/// Each frame uses R distinct circular shifts of a length-M ZC sequence
/// scaled by 1/sqrt(M). The shift window starts at a seed-dependent offset and
/// advances by R every frame.
CombinerSchedule build_combiners(const SystemConfig& cfg, Rng& rng);

/// The map from h = vec(H) to the RF-combined samples of all N training
/// instants. Row ((nt * N_f) + nf) * R + r belongs to RF chain r of symbol nf in
/// frame nt. Rows are s_n^T (x) W[nt]^H, applied with the Kronecker structure
/// rather than a dense matrix.
class SensingOperator {
public:
    SensingOperator(TrainingSchedule training, CombinerSchedule combiners, const SystemConfig& cfg);

    Eigen::Index rows() const { return static_cast<Eigen::Index>(rf_chains_) * frames_ * frame_length_; }
    Eigen::Index cols() const { return static_cast<Eigen::Index>(antennas_) * taps_ * users_; }

    VectorXcd apply(const VectorXcd& h) const;
    /// A^H y.
    VectorXcd adjoint(const VectorXcd& y) const;
    /// Column a(theta, tau, k): the response of one unit-gain path.
    VectorXcd atom(double theta, double tau, int user, AtomModel model = AtomModel::SpatialWideband) const;
    /// Same as atom() but from an already computed M x |D| steering block.
    VectorXcd atom_from_block(const MatrixXcd& block, int user) const;
    MatrixXcd dense() const;

    /// Sum of W W^H over the listed frames (M x M).
    MatrixXcd combiner_energy(const std::vector<int>& frames) const;
    /// S_k^T conj(S_k) for user k (|D| x |D|).
    MatrixXcd training_gram(int user) const;

    const TrainingSchedule& training() const { return training_; }
    const CombinerSchedule& combiners() const { return combiners_; }
    const SystemConfig& config() const { return cfg_; }

private:
    TrainingSchedule training_;
    CombinerSchedule combiners_;
    SystemConfig cfg_;
    int antennas_, users_, taps_, rf_chains_, frames_, frame_length_;
};

/// y = A h + v with v ~ CN(0, I). noise = false returns A h.
VectorXcd simulate_rx(const SensingOperator& op, const VectorXcd& h, Rng& rng, bool noise = true);

/// Instant-by-instant W[nt]^H sum_d H[d] s[n - d] over explicit transmit
/// streams (layout of TrainingSchedule::stream()); symbols outside the streams
/// are zero. Used to check guard isolation and the Kronecker form.
VectorXcd received_from_streams(const MatrixXcd& taps, const TapSupport& support, const MatrixXcd& streams,
                                const TrainingSchedule& layout, const CombinerSchedule& combiners);

// ---------------------------------------------------------------------------
// Quantization

/// Minimum-MSE uniform step for a unit-variance Gaussian input, B = 1..4.
double optimal_uniform_step(int bits);

/// Mid-rise uniform quantizer applied to each real dimension. An empty
/// `bits` means no quantization (Gaussian likelihood on the raw samples).
struct QuantizerSpec {
    std::optional<int> bits;
    double step = 0.0;

    bool unquantized() const { return !bits.has_value(); }
    int levels() const { return bits ? (1 << *bits) : 0; }
    /// Interval index of x in [0, levels).
    int index_of(double x) const;
    double point(int index) const;
    double lower(int index) const;  // -inf for index 0
    double upper(int index) const;  // +inf for the last index
};

/// Expected received power per complex sample with unit noise:
/// sum_k rho_k L_k + 1.
double received_signal_variance(const SystemConfig& cfg);

/// Step = optimal_uniform_step(B) * sqrt(signal_variance / 2).
QuantizerSpec make_quantizer(const SystemConfig& cfg, double signal_variance);
QuantizerSpec make_uniform_quantizer(int bits, double step);

/// Frame-aligned split of the RN complex samples.
struct DataPartition {
    Eigen::Index samples = 0;  // RN
    std::vector<int> estimation_frames;
    std::vector<int> cv_frames;
    std::vector<Eigen::Index> estimation;  // complex indices
    std::vector<Eigen::Index> cv;

    /// Real-form indices: set united with the set shifted by RN.
    std::vector<Eigen::Index> estimation_real() const;
    std::vector<Eigen::Index> cv_real() const;
    std::vector<Eigen::Index> all_real() const;
};

/// Last ceil(cv_fraction * N_t) frames go to cross-validation.
DataPartition partition_cv(const SystemConfig& cfg);
/// Every sample used for estimation, no cross-validation data.
DataPartition partition_all(const SystemConfig& cfg);

struct QuantizedObservation {
    VectorXcd values;  // quantized points, or raw samples when unquantized
    VectorXd lower;    // real form, length 2RN
    VectorXd upper;
    QuantizerSpec quantizer;
    DataPartition partition;

    bool unquantized() const { return quantizer.unquantized(); }
    Eigen::Index samples() const { return values.size(); }
};

/// Elementwise quantization of real and imaginary parts. The partition is
/// left empty; callers attach one.
QuantizedObservation quantize(const VectorXcd& y, const QuantizerSpec& spec);

}  // namespace swce
