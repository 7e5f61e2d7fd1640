#include "swce/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int wrap(int i, int n) { return ((i % n) + n) % n; }

}  // namespace

MatrixXcd TrainingSchedule::stream() const {
    const int slot = slot_length();
    MatrixXcd out(static_cast<Eigen::Index>(frames) * slot, users);
    for (int nt = 0; nt < frames; ++nt)
        for (int i = 0; i < slot; ++i)
            out.row(static_cast<Eigen::Index>(nt) * slot + i) = payload.row(wrap(i - prefix, frame_length));
    return out;
}

TrainingSchedule design_training(const SystemConfig& cfg, int root) {
    cfg.validate();
    TrainingSchedule t;
    t.frames = cfg.frames;
    t.frame_length = cfg.frame_length;
    t.prefix = cfg.prefix();
    t.suffix = cfg.suffix();
    t.users = cfg.users;
    t.support = tap_support(cfg);
    const int nf = cfg.frame_length;
    const int taps = t.support.size();
    if (nf < taps * cfg.users) throw Error("design_training: N_f must be at least |D| K");

    t.payload.resize(nf, cfg.users);
    for (int k = 0; k < cfg.users; ++k)
        t.payload.col(k) = std::sqrt(cfg.user_power[k]) * zc_sequence(nf, root, (taps * k) % nf);

    t.frame_matrix.resize(nf, static_cast<Eigen::Index>(taps) * cfg.users);
    for (int j = 0; j < taps; ++j) {
        const int d = t.support.lo + j;
        for (int k = 0; k < cfg.users; ++k)
            for (int n = 0; n < nf; ++n) t.frame_matrix(n, j * cfg.users + k) = t.payload(wrap(n - d, nf), k);
    }
    return t;
}

CombinerSchedule build_combiners(const SystemConfig& cfg, Rng& rng) {
    const int m = cfg.antennas;
    const int r = cfg.rf_chains;
    if (r > m) throw Error("build_combiners: R must not exceed M");
    std::uniform_int_distribution<int> pick(0, m - 1);
    const int offset = pick(rng);
    const VectorXcd base = zc_sequence(m, 1, 0) / std::sqrt(static_cast<double>(m));
    CombinerSchedule out;
    out.per_frame.reserve(static_cast<std::size_t>(cfg.frames));
    for (int nt = 0; nt < cfg.frames; ++nt) {
        MatrixXcd w(m, r);
        const int start = static_cast<int>((offset + static_cast<long long>(nt) * r) % m);
        for (int c = 0; c < r; ++c) {
            const int shift = (start + c) % m;
            for (int i = 0; i < m; ++i) w(i, c) = base((i + shift) % m);
        }
        out.per_frame.push_back(std::move(w));
    }
    return out;
}

SensingOperator::SensingOperator(TrainingSchedule training, CombinerSchedule combiners, const SystemConfig& cfg)
    : training_(std::move(training)),
      combiners_(std::move(combiners)),
      cfg_(cfg),
      antennas_(cfg.antennas),
      users_(cfg.users),
      taps_(training_.support.size()),
      rf_chains_(cfg.rf_chains),
      frames_(cfg.frames),
      frame_length_(cfg.frame_length) {
    if (static_cast<int>(combiners_.per_frame.size()) != frames_)
        throw Error("SensingOperator: combiner schedule has the wrong frame count");
    if (training_.frame_matrix.rows() != frame_length_ || training_.frame_matrix.cols() != taps_ * users_)
        throw Error("SensingOperator: training schedule does not match the configuration");
    for (const MatrixXcd& w : combiners_.per_frame)
        if (w.rows() != antennas_ || w.cols() != rf_chains_)
            throw Error("SensingOperator: combiner has the wrong shape");
}

VectorXcd SensingOperator::apply(const VectorXcd& h) const {
    if (h.size() != cols()) throw Error("SensingOperator::apply: dimension mismatch");
    const Eigen::Map<const MatrixXcd> hm(h.data(), antennas_, static_cast<Eigen::Index>(taps_) * users_);
    const MatrixXcd hs = hm * training_.frame_matrix.transpose();  // M x N_f
    VectorXcd y(rows());
    const Eigen::Index block = static_cast<Eigen::Index>(rf_chains_) * frame_length_;
    for (int nt = 0; nt < frames_; ++nt) {
        Eigen::Map<MatrixXcd> yt(y.data() + nt * block, rf_chains_, frame_length_);
        yt.noalias() = combiners_.per_frame[nt].adjoint() * hs;
    }
    return y;
}

VectorXcd SensingOperator::adjoint(const VectorXcd& y) const {
    if (y.size() != rows()) throw Error("SensingOperator::adjoint: dimension mismatch");
    const Eigen::Index block = static_cast<Eigen::Index>(rf_chains_) * frame_length_;
    MatrixXcd acc = MatrixXcd::Zero(antennas_, frame_length_);
    for (int nt = 0; nt < frames_; ++nt) {
        const Eigen::Map<const MatrixXcd> yt(y.data() + nt * block, rf_chains_, frame_length_);
        acc.noalias() += combiners_.per_frame[nt] * yt;
    }
    const MatrixXcd z = acc * training_.frame_matrix.conjugate();
    return Eigen::Map<const VectorXcd>(z.data(), z.size());
}

VectorXcd SensingOperator::atom_from_block(const MatrixXcd& block, int user) const {
    if (user < 0 || user >= users_) throw Error("SensingOperator::atom: user out of range");
    MatrixXcd sk(frame_length_, taps_);
    for (int j = 0; j < taps_; ++j) sk.col(j) = training_.frame_matrix.col(j * users_ + user);
    const MatrixXcd vs = block * sk.transpose();
    VectorXcd y(rows());
    const Eigen::Index len = static_cast<Eigen::Index>(rf_chains_) * frame_length_;
    for (int nt = 0; nt < frames_; ++nt) {
        Eigen::Map<MatrixXcd> yt(y.data() + nt * len, rf_chains_, frame_length_);
        yt.noalias() = combiners_.per_frame[nt].adjoint() * vs;
    }
    return y;
}

VectorXcd SensingOperator::atom(double theta, double tau, int user, AtomModel model) const {
    return atom_from_block(steering_block(theta, tau, cfg_, training_.support, model, 0).v, user);
}

MatrixXcd SensingOperator::dense() const {
    MatrixXcd a(rows(), cols());
    VectorXcd e = VectorXcd::Zero(cols());
    for (Eigen::Index c = 0; c < cols(); ++c) {
        e(c) = 1.0;
        a.col(c) = apply(e);
        e(c) = 0.0;
    }
    return a;
}

MatrixXcd SensingOperator::combiner_energy(const std::vector<int>& frames) const {
    MatrixXcd p = MatrixXcd::Zero(antennas_, antennas_);
    for (int nt : frames) p.noalias() += combiners_.per_frame.at(static_cast<std::size_t>(nt)) *
                                         combiners_.per_frame.at(static_cast<std::size_t>(nt)).adjoint();
    return p;
}

MatrixXcd SensingOperator::training_gram(int user) const {
    MatrixXcd sk(frame_length_, taps_);
    for (int j = 0; j < taps_; ++j) sk.col(j) = training_.frame_matrix.col(j * users_ + user);
    return sk.transpose() * sk.conjugate();
}

VectorXcd simulate_rx(const SensingOperator& op, const VectorXcd& h, Rng& rng, bool noise) {
    VectorXcd y = op.apply(h);
    if (!noise) return y;
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        y(i) += cplx(re, im);
    }
    return y;
}

VectorXcd received_from_streams(const MatrixXcd& taps, const TapSupport& support, const MatrixXcd& streams,
                                const TrainingSchedule& layout, const CombinerSchedule& combiners) {
    const int users = layout.users;
    const Eigen::Index m = taps.rows();
    const Eigen::Index r = combiners.per_frame.front().cols();
    VectorXcd y(r * layout.frames * layout.frame_length);
    for (int nt = 0; nt < layout.frames; ++nt) {
        const MatrixXcd& w = combiners.per_frame[static_cast<std::size_t>(nt)];
        for (int nf = 0; nf < layout.frame_length; ++nf) {
            const Eigen::Index n = layout.frame_start(nt) + nf;
            VectorXcd x = VectorXcd::Zero(m);
            for (int j = 0; j < support.size(); ++j) {
                const Eigen::Index src = n - (support.lo + j);
                if (src < 0 || src >= streams.rows()) continue;
                x.noalias() += taps.middleCols(static_cast<Eigen::Index>(j) * users, users) * streams.row(src).transpose();
            }
            y.segment((static_cast<Eigen::Index>(nt) * layout.frame_length + nf) * r, r) = w.adjoint() * x;
        }
    }
    return y;
}

double optimal_uniform_step(int bits) {
    // Minimisers of E(X - Q(X))^2, X ~ N(0, 1), for the 2^B-level mid-rise quantizer.
    switch (bits) {
        case 1: return 1.595769;
        case 2: return 0.995687;
        case 3: return 0.586019;
        case 4: return 0.335201;
        default: throw Error("optimal_uniform_step: only 1 to 4 bits are tabulated");
    }
}

int QuantizerSpec::index_of(double x) const {
    const int half = levels() / 2;
    const double k = std::floor(x / step);
    if (k < -half) return 0;
    if (k >= half) return levels() - 1;
    return static_cast<int>(k) + half;
}

double QuantizerSpec::point(int index) const { return (index - levels() / 2 + 0.5) * step; }

double QuantizerSpec::lower(int index) const {
    return index == 0 ? -kInf : (index - levels() / 2) * step;
}

double QuantizerSpec::upper(int index) const {
    return index == levels() - 1 ? kInf : (index - levels() / 2 + 1) * step;
}

double received_signal_variance(const SystemConfig& cfg) {
    double s = 1.0;
    for (int k = 0; k < cfg.users; ++k) s += cfg.user_power[k] * cfg.paths_per_user[k];
    return s;
}

QuantizerSpec make_uniform_quantizer(int bits, double step) {
    if (bits < 1) throw Error("quantizer needs at least one bit");
    if (bits > 30) throw Error("quantizer bit width too large");
    if (!(step > 0)) throw Error("quantizer step must be positive");
    QuantizerSpec q;
    q.bits = bits;
    q.step = step;
    return q;
}

QuantizerSpec make_quantizer(const SystemConfig& cfg, double signal_variance) {
    if (!cfg.adc_bits) return {};
    if (*cfg.adc_bits < 1) throw Error("make_quantizer: ADC bits must be at least 1");
    if (!(signal_variance > 0)) throw Error("make_quantizer: signal variance must be positive");
    return make_uniform_quantizer(*cfg.adc_bits, optimal_uniform_step(*cfg.adc_bits) * std::sqrt(signal_variance / 2.0));
}

namespace {

std::vector<Eigen::Index> doubled(const std::vector<Eigen::Index>& idx, Eigen::Index n) {
    std::vector<Eigen::Index> out(idx);
    out.reserve(2 * idx.size());
    for (Eigen::Index i : idx) out.push_back(i + n);
    return out;
}

DataPartition split(const SystemConfig& cfg, int cv_frames) {
    DataPartition p;
    const Eigen::Index per_frame = static_cast<Eigen::Index>(cfg.rf_chains) * cfg.frame_length;
    p.samples = per_frame * cfg.frames;
    for (int nt = 0; nt < cfg.frames; ++nt) {
        const bool cv = nt >= cfg.frames - cv_frames;
        (cv ? p.cv_frames : p.estimation_frames).push_back(nt);
        auto& dst = cv ? p.cv : p.estimation;
        for (Eigen::Index i = 0; i < per_frame; ++i) dst.push_back(nt * per_frame + i);
    }
    return p;
}

}  // namespace

std::vector<Eigen::Index> DataPartition::estimation_real() const { return doubled(estimation, samples); }
std::vector<Eigen::Index> DataPartition::cv_real() const { return doubled(cv, samples); }

std::vector<Eigen::Index> DataPartition::all_real() const {
    std::vector<Eigen::Index> out(static_cast<std::size_t>(2 * samples));
    for (Eigen::Index i = 0; i < 2 * samples; ++i) out[static_cast<std::size_t>(i)] = i;
    return out;
}

DataPartition partition_cv(const SystemConfig& cfg) {
    if (!(cfg.cv_fraction > 0.0 && cfg.cv_fraction < 1.0))
        throw Error("partition_cv: cv_fraction must lie strictly between 0 and 1");
    const double raw = cfg.cv_fraction * cfg.frames;
    const double nearest = std::round(raw);
    const int count = static_cast<int>(std::abs(raw - nearest) < 1e-9 ? nearest : std::ceil(raw));
    if (count < 1 || count >= cfg.frames)
        throw Error("partition_cv: split leaves no frames on one side");
    return split(cfg, count);
}

DataPartition partition_all(const SystemConfig& cfg) { return split(cfg, 0); }

QuantizedObservation quantize(const VectorXcd& y, const QuantizerSpec& spec) {
    QuantizedObservation obs;
    obs.quantizer = spec;
    const Eigen::Index n = y.size();
    obs.lower.resize(2 * n);
    obs.upper.resize(2 * n);
    if (spec.unquantized()) {
        obs.values = y;
        obs.lower = real_form(y);
        obs.upper = obs.lower;
        return obs;
    }
    obs.values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int ir = spec.index_of(y(i).real());
        const int ii = spec.index_of(y(i).imag());
        obs.values(i) = cplx(spec.point(ir), spec.point(ii));
        obs.lower(i) = spec.lower(ir);
        obs.upper(i) = spec.upper(ir);
        obs.lower(i + n) = spec.lower(ii);
        obs.upper(i + n) = spec.upper(ii);
    }
    return obs;
}

}  // namespace swce
