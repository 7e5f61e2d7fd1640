#include "swce/cv_analysis.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "swce/estimator.hpp"

namespace swce {

namespace {

// Bins whose probability under the true mean falls below this carry no
// weight in the inner sum.
constexpr double kNegligible = 1e-20;
// Half-width, in noise standard deviations, of the window of bins kept by the
// infinite-level quantizer; the mass outside is below 1e-16.
constexpr double kWindow = 8.5;

// Mean and standard error of c - b (g - expected_g), b fitted by least squares.
FcvEstimate control_variate(const VectorXd& c, const VectorXd& g, double expected_g) {
    const double n = static_cast<double>(c.size());
    const double cm = c.mean();
    const double gm = g.mean();
    const VectorXd cc = c.array() - cm;
    const VectorXd gc = g.array() - gm;
    const double var_g = gc.squaredNorm();
    const double b = var_g > 0.0 ? cc.dot(gc) / var_g : 0.0;
    const VectorXd adj = cc - b * gc;
    FcvEstimate out;
    out.mean = cm - b * (gm - expected_g);
    out.std_error = n > 1 ? std::sqrt(adj.squaredNorm() / (n - 1) / n) : 0.0;
    return out;
}

}  // namespace

FcvSampler::FcvSampler(const CvProbeConfig& probe, std::uint64_t seed) : probe_(probe) {
    if (probe.samples < 2) throw Error("cv probe needs at least two samples");
    if (probe.streams < 1) throw Error("cv probe needs at least one stream");
    if (probe.bits && (*probe.bits < 1 || *probe.bits > 16)) throw Error("cv probe bits out of range");
    const Eigen::Index dim = probe.h.size();
    if (dim < 1) throw Error("cv probe needs a nonempty channel");

    step_ = probe.step;
    if (step_ <= 0.0) {
        if (!probe.bits) throw Error("infinite-level quantizer needs an explicit step");
        step_ = optimal_uniform_step(*probe.bits) * std::sqrt(probe.h.squaredNorm() + 0.5);
    }

    rows_.resize(probe.samples, dim);
    std::normal_distribution<double> normal;
    for (int s = 0; s < probe.streams; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        for (Eigen::Index i = s; i < probe.samples; i += probe.streams)
            for (Eigen::Index j = 0; j < dim; ++j) rows_(i, j) = normal(rng);
    }
    mu_ = rows_ * probe.h;

    if (probe.bits) {
        const QuantizerSpec q = make_uniform_quantizer(*probe.bits, step_);
        probs_.resize(probe.samples, q.levels());
        for (Eigen::Index i = 0; i < probe.samples; ++i)
            for (int b = 0; b < q.levels(); ++b) {
                const double p = std::exp(log_cdf_diff(q.lower(b), q.upper(b), mu_(i), kNoiseStd));
                probs_(i, b) = p < kNegligible ? 0.0 : p;
            }
    }
}

double FcvSampler::inner_sum(Eigen::Index i, double mu_hat) const {
    double sum = 0.0;
    if (probe_.bits) {
        const QuantizerSpec q = make_uniform_quantizer(*probe_.bits, step_);
        for (int b = 0; b < q.levels(); ++b) {
            const double p = probs_(i, b);
            if (p != 0.0) sum += p * log_cdf_diff(q.lower(b), q.upper(b), mu_hat, kNoiseStd);
        }
        return sum;
    }
    const double mu = mu_(i);
    const long lo = static_cast<long>(std::floor((mu - kWindow * kNoiseStd) / step_));
    const long hi = static_cast<long>(std::floor((mu + kWindow * kNoiseStd) / step_));
    for (long k = lo; k <= hi; ++k) {
        const double a = static_cast<double>(k) * step_;
        const double b = static_cast<double>(k + 1) * step_;
        const double p = std::exp(log_cdf_diff(a, b, mu, kNoiseStd));
        if (p >= kNegligible) sum += p * log_cdf_diff(a, b, mu_hat, kNoiseStd);
    }
    return sum;
}

VectorXd FcvSampler::terms(const VectorXd& h_hat) const {
    if (h_hat.size() != probe_.h.size()) throw Error("h_hat dimension mismatch");
    const VectorXd mu_hat = rows_ * h_hat;
    VectorXd out(rows_.rows());
    for (Eigen::Index i = 0; i < rows_.rows(); ++i) out(i) = inner_sum(i, mu_hat(i));
    return out;
}

FcvEstimate FcvSampler::evaluate(const VectorXd& h_hat) const { return contrast({h_hat}, {1.0}); }

FcvEstimate FcvSampler::contrast(const std::vector<VectorXd>& points, const std::vector<double>& weights,
                                 bool negate) const {
    if (points.size() != weights.size() || points.empty()) throw Error("contrast needs matching points and weights");
    const Eigen::Index n = rows_.rows();
    VectorXd c = VectorXd::Zero(n);
    VectorXd g = VectorXd::Zero(n);
    double expected = 0.0;
    for (std::size_t j = 0; j < points.size(); ++j) {
        const double w = negate ? -weights[j] : weights[j];
        c += w * terms(points[j]);
        const VectorXd e = points[j] - probe_.h;
        g -= w * (rows_ * e).cwiseAbs2();
        expected -= w * e.squaredNorm();
    }
    return control_variate(c, g, expected);
}

FcvEstimate empirical_fcv(const VectorXd& h_hat, const CvProbeConfig& probe, std::uint64_t seed) {
    return FcvSampler(probe, seed).evaluate(h_hat);
}

std::vector<LatticePoint> fcv_lattice(const FcvSampler& sampler) {
    const CvProbeConfig& p = sampler.probe();
    if (p.h.size() < 2) throw Error("lattice needs a channel of dimension >= 2");
    const int n = p.lattice_points;
    const double half = 0.5 * (n - 1) * p.lattice_spacing;
    std::vector<LatticePoint> out;
    out.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            VectorXd x = p.h;
            x(0) += -half + i * p.lattice_spacing;
            x(1) += -half + j * p.lattice_spacing;
            const FcvEstimate f = sampler.evaluate(x);
            out.push_back({x(0), x(1), f.mean, f.std_error});
        }
    return out;
}

PeakReport lattice_peak(const FcvSampler& sampler) { return lattice_peak(sampler, fcv_lattice(sampler)); }

PeakReport lattice_peak(const FcvSampler& sampler, const std::vector<LatticePoint>& lattice) {
    if (lattice.empty()) throw Error("empty lattice");
    PeakReport r;
    r.best = lattice.front();
    for (const LatticePoint& lp : lattice)
        if (lp.value > r.best.value) r.best = lp;
    VectorXd best = sampler.probe().h;
    best(0) = r.best.h1;
    best(1) = r.best.h2;
    const FcvEstimate gap = sampler.contrast({best, sampler.probe().h}, {1.0, -1.0});
    r.gap = gap.mean;
    r.gap_std_error = gap.std_error;
    r.at_truth = r.gap <= 3.0 * r.gap_std_error;
    return r;
}

FcvEstimate midpoint_gap(const FcvSampler& sampler, const VectorXd& a, const VectorXd& b, bool negate) {
    const VectorXd mid = 0.5 * (a + b);
    return sampler.contrast({mid, a, b}, {1.0, -0.5, -0.5}, negate);
}

ConcavityReport concavity_probe(const FcvSampler& sampler, int segments, std::uint64_t seed, bool negate) {
    const CvProbeConfig& p = sampler.probe();
    const double half = 0.5 * (p.lattice_points - 1) * p.lattice_spacing;
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-half, half);
    ConcavityReport r;
    for (int s = 0; s < segments; ++s) {
        VectorXd a = p.h;
        VectorXd b = p.h;
        for (Eigen::Index j = 0; j < p.h.size(); ++j) {
            a(j) += u(rng);
            b(j) += u(rng);
        }
        const FcvEstimate gap = midpoint_gap(sampler, a, b, negate);
        ++r.segments;
        if (gap.mean < -3.0 * gap.std_error) ++r.violations;
        if (gap.std_error > 0.0) r.worst_z = std::min(r.worst_z, gap.mean / gap.std_error);
    }
    return r;
}

std::vector<DeltaRow> delta_scaling_check(const VectorXd& h, const std::vector<VectorXd>& h_hats,
                                          const std::vector<double>& deltas, const CvProbeConfig& probe,
                                          std::uint64_t seed) {
    const double offset = 0.5 * std::log(kPi * std::exp(1.0));
    std::vector<DeltaRow> out;
    for (double delta : deltas) {
        if (!(delta > 0.0)) throw Error("quantizer width must be positive");
        CvProbeConfig pc = probe;
        pc.h = h;
        pc.bits.reset();
        pc.step = delta;
        const FcvSampler sampler(pc, seed);
        for (std::size_t j = 0; j < h_hats.size(); ++j) {
            const FcvEstimate f = sampler.evaluate(h_hats[j]);
            DeltaRow row;
            row.delta = delta;
            row.point = static_cast<int>(j);
            row.distance2 = (h_hats[j] - h).squaredNorm();
            row.residual = f.mean + row.distance2 + offset - std::log(delta);
            row.std_error = f.std_error;
            row.ratio = row.residual / delta;
            out.push_back(row);
        }
    }
    return out;
}

void write_lattice_csv(const std::vector<LatticePoint>& lattice, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << "h1,h2,f_cv,stderr\n" << std::setprecision(17);
    for (const LatticePoint& p : lattice) f << p.h1 << ',' << p.h2 << ',' << p.value << ',' << p.std_error << '\n';
    if (!f) throw Error("write failed for " + path);
}

}  // namespace swce
