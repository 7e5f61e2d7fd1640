#include "swce/numerics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace swce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Highest derivative order tracked for the pulse numerator.
constexpr int kJetOrder = 6;
using Jet = std::array<double, kJetOrder + 1>;

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Derivatives of sinc(x) with respect to x, orders 0..kJetOrder.
Jet sinc_jet(double x, int order) {
    Jet out{};
    const double y = kPi * x;
    if (std::abs(x) < 1.0) {
        // Power series in y; |y| < pi so 26 terms reach full precision.
        for (int k = 0; k <= order; ++k) {
            double acc = 0.0;
            double coeff = 1.0;  // (-1)^n / (2n+1)!
            for (int n = 0; n < 26; ++n) {
                if (n > 0) coeff /= -static_cast<double>((2 * n) * (2 * n + 1));
                const int p = 2 * n;
                if (p < k) continue;
                double falling = 1.0;
                for (int i = 0; i < k; ++i) falling *= static_cast<double>(p - i);
                acc += coeff * falling * std::pow(y, p - k);
            }
            out[k] = acc * std::pow(kPi, k);
        }
        return out;
    }
    // Leibniz on sin(y) * y^-1.
    for (int n = 0; n <= order; ++n) {
        double acc = 0.0;
        double fact = 1.0;
        for (int k = 0; k <= n; ++k) {
            if (k > 0) fact *= k;
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            acc += binomial(n, k) * std::sin(y + (n - k) * kPi / 2.0) * sign * fact /
                   std::pow(y, k + 1);
        }
        out[n] = acc * std::pow(kPi, n);
    }
    return out;
}

// Derivatives of sinc(x) * cos(pi beta x) with respect to x.
Jet numerator_jet(double x, double beta, int order) {
    const Jet s = sinc_jet(x, order);
    const double w = kPi * beta;
    Jet c{};
    for (int m = 0; m <= order; ++m) c[m] = std::pow(w, m) * std::cos(w * x + m * kPi / 2.0);
    Jet n{};
    for (int k = 0; k <= order; ++k) {
        double acc = 0.0;
        for (int j = 0; j <= k; ++j) acc += binomial(k, j) * s[j] * c[k - j];
        n[k] = acc;
    }
    return n;
}

}  // namespace

VectorXd real_form(const VectorXcd& x) {
    VectorXd out(2 * x.size());
    out.head(x.size()) = x.real();
    out.tail(x.size()) = x.imag();
    return out;
}

MatrixXd real_form(const MatrixXcd& x) {
    const auto r = x.rows();
    const auto c = x.cols();
    MatrixXd out(2 * r, 2 * c);
    out.topLeftCorner(r, c) = x.real();
    out.topRightCorner(r, c) = -x.imag();
    out.bottomLeftCorner(r, c) = x.imag();
    out.bottomRightCorner(r, c) = x.real();
    return out;
}

VectorXcd complex_form(const VectorXd& xr) {
    const auto n = xr.size() / 2;
    VectorXcd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = cplx(xr(i), xr(i + n));
    return out;
}

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - (kPi * x) * (kPi * x) / 6.0;
    return std::sin(kPi * x) / (kPi * x);
}

double rc_pulse(double t, double ts, double beta) {
    const double x = t / ts;
    const double x0 = 1.0 / (2.0 * beta);
    if (std::abs(std::abs(x) - x0) < 1e-3) return rc_pulse_jet(t, ts, beta).value;
    const double denom = 1.0 - 4.0 * beta * beta * x * x;
    return sinc(x) * std::cos(kPi * beta * x) / denom;
}

PulseJet rc_pulse_jet(double t, double ts, double beta) {
    const double x = t / ts;
    const double x0 = 1.0 / (2.0 * beta);
    const double b2 = beta * beta;
    double p = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;

    if (std::abs(std::abs(x) - x0) < 1e-3) {
        // q(x) = 1 - 4 beta^2 x^2 vanishes at xs together with the numerator;
        // divide the Taylor polynomials by h analytically.
        const double xs = x >= 0 ? x0 : -x0;
        const double h = x - xs;
        const Jet n = numerator_jet(xs, beta, kJetOrder);
        double u = 0.0, u1 = 0.0, u2 = 0.0;
        double fact = 1.0;
        for (int k = 1; k <= kJetOrder; ++k) {
            fact *= k;
            const double coeff = n[k] / fact;  // N(xs + h) = sum coeff h^k
            const int e = k - 1;
            u += coeff * std::pow(h, e);
            if (e >= 1) u1 += coeff * e * std::pow(h, e - 1);
            if (e >= 2) u2 += coeff * e * (e - 1) * std::pow(h, e - 2);
        }
        const double q1 = -8.0 * b2 * xs;
        const double q2 = -8.0 * b2;
        const double v = q1 + 0.5 * q2 * h;
        const double v1 = 0.5 * q2;
        p = u / v;
        p1 = (u1 - p * v1) / v;
        p2 = (u2 - 2.0 * p1 * v1) / v;
        if (h == 0.0) p = kPi / 4.0 * sinc(x0);
    } else {
        const Jet n = numerator_jet(x, beta, 2);
        const double q = 1.0 - 4.0 * b2 * x * x;
        const double q1 = -8.0 * b2 * x;
        const double q2 = -8.0 * b2;
        p = n[0] / q;
        p1 = (n[1] - p * q1) / q;
        p2 = (n[2] - 2.0 * p1 * q1 - p * q2) / q;
    }
    return {p, p1 / ts, p2 / (ts * ts)};
}

double normal_pdf(double x) { return std::exp(log_normal_pdf(x)); }

double log_normal_pdf(double x) {
    if (std::isinf(x)) return -kInf;
    return -0.5 * x * x - kLogSqrt2Pi;
}

double log_normal_sf(double x) {
    if (x == kInf) return -kInf;
    if (x == -kInf) return 0.0;
    if (x < 0.0) return std::log1p(-0.5 * std::erfc(-x / kSqrt2));
    if (x < 37.0) return std::log(0.5 * std::erfc(x / kSqrt2));
    // Mills-ratio asymptotic expansion; Q(x) < 1e-300 here.
    const double r = 1.0 / (x * x);
    const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r))));
    return log_normal_pdf(x) - std::log(x) + std::log(series);
}

double log_ndtr_diff(double a, double b) {
    if (!(a < b)) return -kInf;
    if (a >= 0.0) {
        const double la = log_normal_sf(a);
        const double lb = log_normal_sf(b);
        if (lb == -kInf) return la;
        return la + std::log(-std::expm1(lb - la));
    }
    if (b <= 0.0) {
        const double lb = log_normal_sf(-b);
        const double la = log_normal_sf(-a);
        if (la == -kInf) return lb;
        return lb + std::log(-std::expm1(la - lb));
    }
    const double tails = 0.5 * std::erfc(-a / kSqrt2) + 0.5 * std::erfc(b / kSqrt2);
    return std::log1p(-tails);
}

double log_cdf_diff(double lo, double hi, double mu, double sigma) {
    return log_ndtr_diff((lo - mu) / sigma, (hi - mu) / sigma);
}

CensoredJet censored_jet(double lo, double hi, double mu, double sigma) {
    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    CensoredJet jet;
    jet.log_prob = log_ndtr_diff(a, b);
    const double ra = std::isinf(a) ? 0.0 : std::exp(log_normal_pdf(a) - jet.log_prob);
    const double rb = std::isinf(b) ? 0.0 : std::exp(log_normal_pdf(b) - jet.log_prob);
    const double lam = ra - rb;
    const double ta = std::isinf(a) ? 0.0 : a * ra;
    const double tb = std::isinf(b) ? 0.0 : b * rb;
    jet.score = lam / sigma;
    jet.curvature = std::min(0.0, (ta - tb - lam * lam) / (sigma * sigma));
    return jet;
}

VectorXcd zc_sequence(int n, int root, int shift) {
    if (n < 1) throw Error("zc_sequence: length must be positive");
    if (std::gcd(root, n) != 1) throw Error("zc_sequence: root must be coprime with length");
    if (shift < 0 || shift >= n) throw Error("zc_sequence: shift out of range");
    VectorXcd z(n);
    const long long two_n = 2LL * n;
    const long long u = ((root % two_n) + two_n) % two_n;
    for (int i = 0; i < n; ++i) {
        const long long k = (i + shift) % n;
        const long long quad = (n % 2 == 1) ? (k * (k + 1)) % two_n : (k * k) % two_n;
        const long long e = (u * quad) % two_n;
        const double phase = -kPi * static_cast<double>(e) / n;
        z(i) = cplx(std::cos(phase), std::sin(phase));
    }
    return z;
}

}  // namespace swce
