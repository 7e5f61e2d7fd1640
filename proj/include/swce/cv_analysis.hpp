// Numerical checks of the asymptotic cross-validation function
//   f_CV(h_hat) = E_a { sum_q Pr[q | a^T h] log Pr[q | a^T h_hat] }
// for i.i.d. real sensing rows with unit-variance entries: its concavity,
// its maximiser, and the log(Delta) scaling for fine uniform quantizers.
//
// The sum over quantizer outputs is evaluated exactly for every drawn row;
// only the row is Monte-Carlo sampled. -(a^T (h_hat - h))^2, whose mean is
// known in closed form, serves as a control variate.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swce/frontend.hpp"

namespace swce {

struct CvProbeConfig {
    VectorXd h = VectorXd::Constant(2, 5.0);  // real-form true channel
    /// Bits of the mid-rise quantizer; empty selects the infinite-level
    /// uniform quantizer with width `step`.
    std::optional<int> bits = 1;
    /// Quantizer width; 0 picks the Gaussian-optimal step for `bits` at the
    /// per-row received variance ||h||^2 + 1/2.
    double step = 0.0;
    int samples = 100000;
    int streams = 16;  // independent RNG streams the samples are split over
    int lattice_points = 21;
    double lattice_spacing = 0.5;
};

struct FcvEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Draws the sensing rows once and evaluates f_CV, or linear combinations of
/// f_CV at several points, on the same rows (common random numbers).
class FcvSampler {
public:
    FcvSampler(const CvProbeConfig& probe, std::uint64_t seed);

    const CvProbeConfig& probe() const { return probe_; }
    double step() const { return step_; }
    bool infinite_levels() const { return !probe_.bits.has_value(); }

    /// Per-row exact inner sums s_i(h_hat).
    VectorXd terms(const VectorXd& h_hat) const;
    FcvEstimate evaluate(const VectorXd& h_hat) const;
    /// Estimate of sum_j w_j f_CV(points_j). `negate` flips the sign of every
    /// per-row term, which turns a concave function convex (detector self-test).
    FcvEstimate contrast(const std::vector<VectorXd>& points, const std::vector<double>& weights,
                         bool negate = false) const;

private:
    double inner_sum(Eigen::Index row, double mu_hat) const;

    CvProbeConfig probe_;
    double step_ = 0.0;
    MatrixXd rows_;     // samples x dim
    VectorXd mu_;       // rows_ * h
    MatrixXd probs_;    // samples x levels, finite-level mode only
};

FcvEstimate empirical_fcv(const VectorXd& h_hat, const CvProbeConfig& probe, std::uint64_t seed);

struct LatticePoint {
    double h1 = 0.0;
    double h2 = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

/// Square lattice of f_CV values centred on h (first two coordinates; the
/// rest stay at h).
std::vector<LatticePoint> fcv_lattice(const FcvSampler& sampler);

struct PeakReport {
    LatticePoint best;        // largest estimated f_CV on the lattice
    double gap = 0.0;         // f_CV(best) - f_CV(h), paired estimate
    double gap_std_error = 0.0;
    bool at_truth = false;    // gap <= 3 standard errors
};

PeakReport lattice_peak(const FcvSampler& sampler);
/// Same, reusing an already evaluated lattice.
PeakReport lattice_peak(const FcvSampler& sampler, const std::vector<LatticePoint>& lattice);

struct ConcavityReport {
    int segments = 0;
    int violations = 0;
    double worst_z = 0.0;  // most negative (midpoint gap / standard error)
};

/// Midpoint gap f((a+b)/2) - (f(a)+f(b))/2 with its paired standard error.
FcvEstimate midpoint_gap(const FcvSampler& sampler, const VectorXd& a, const VectorXd& b, bool negate = false);

/// Midpoint concavity along random segments with endpoints uniform in the
/// lattice box. A violation is a gap below -3 standard errors.
ConcavityReport concavity_probe(const FcvSampler& sampler, int segments, std::uint64_t seed, bool negate = false);

struct DeltaRow {
    double delta = 0.0;
    int point = 0;          // index into the h_hat list
    double distance2 = 0.0; // ||h_hat - h||^2
    double residual = 0.0;  // f_CV - (-||h_hat - h||^2 - log(pi e)/2 + log delta)
    double std_error = 0.0;
    double ratio = 0.0;     // residual / delta
};

/// Residuals of the fine-quantization expansion for each width and point,
/// with the infinite-level quantizer. Every width reuses the same rows.
std::vector<DeltaRow> delta_scaling_check(const VectorXd& h, const std::vector<VectorXd>& h_hats,
                                          const std::vector<double>& deltas, const CvProbeConfig& probe,
                                          std::uint64_t seed);

/// CSV with columns h1,h2,f_cv,stderr.
void write_lattice_csv(const std::vector<LatticePoint>& lattice, const std::string& path);

}  // namespace swce
