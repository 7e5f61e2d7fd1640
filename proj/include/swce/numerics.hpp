// Shared numerical kernels: real-form embedding, raised-cosine pulse,
// censored-Gaussian log-likelihood primitives and Zadoff-Chu sequences.

#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace swce {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Base error type for invalid configurations and numerical failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Real forms

/// [Re(x); Im(x)].
VectorXd real_form(const VectorXcd& x);

/// [[Re(X), -Im(X)], [Im(X), Re(X)]]. A single column uses this rule too,
/// producing the 2n x 2 real atom matrix.
MatrixXd real_form(const MatrixXcd& x);

/// Inverse of the vector rule.
VectorXcd complex_form(const VectorXd& xr);

// ---------------------------------------------------------------------------
// Pulse shaping

inline constexpr double kPi = 3.14159265358979323846;

/// sin(pi x) / (pi x) with sinc(0) = 1.
double sinc(double x);

/// Raised-cosine pulse value and its first two time derivatives.
struct PulseJet {
    double value = 0.0;
    double d1 = 0.0;  // dp/dt
    double d2 = 0.0;  // d2p/dt2
};

/// Raised-cosine pulse p(t) with symbol period ts and roll-off beta.
/// The removable singularity at |t| = ts/(2 beta) is evaluated analytically.
double rc_pulse(double t, double ts, double beta);

/// Value and derivatives of rc_pulse. Derivatives are exact away from
/// |t| = ts/(2 beta); inside a 1e-3 ts neighbourhood a fourth-order Taylor
/// expansion of the numerator is used instead of the quotient rule.
PulseJet rc_pulse_jet(double t, double ts, double beta);

// ---------------------------------------------------------------------------
// Standard normal helpers

double normal_pdf(double x);
double log_normal_pdf(double x);

/// log Q(x) = log(1 - Phi(x)), accurate for arbitrarily large x.
double log_normal_sf(double x);

/// log(Phi(b) - Phi(a)) for a < b, either end possibly infinite.
double log_ndtr_diff(double a, double b);

/// log(Phi((hi - mu)/sigma) - Phi((lo - mu)/sigma)).
double log_cdf_diff(double lo, double hi, double mu, double sigma);

/// First and second derivative, with respect to the mean, of
/// log(Phi((hi - mu)/sigma) - Phi((lo - mu)/sigma)), plus the value itself.
struct CensoredJet {
    double log_prob = 0.0;
    double score = 0.0;      // d/dmu
    double curvature = 0.0;  // d2/dmu2, always <= 0
};

CensoredJet censored_jet(double lo, double hi, double mu, double sigma);

// ---------------------------------------------------------------------------
// Zadoff-Chu

/// Unit-modulus Zadoff-Chu sequence of length n with the given root,
/// circularly shifted so that element i equals the unshifted element
/// (i + shift) mod n. Throws if gcd(root, n) != 1 or shift is out of range.
VectorXcd zc_sequence(int n, int root = 1, int shift = 0);

}  // namespace swce
