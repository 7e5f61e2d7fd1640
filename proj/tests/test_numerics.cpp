#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "swce/numerics.hpp"

using namespace swce;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MatrixXcd random_matrix(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXcd x(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) x(i, j) = cplx(g(rng), g(rng));
    return x;
}

}  // namespace

TEST_CASE("real_form layouts") {
    VectorXcd x(1);
    x << cplx(1, 2);
    const VectorXd xr = real_form(x);
    CHECK(xr(0) == 1.0);
    CHECK(xr(1) == 2.0);

    MatrixXcd m(1, 1);
    m << cplx(0, 1);
    const MatrixXd mr = real_form(m);
    CHECK(mr(0, 0) == 0.0);
    CHECK(mr(0, 1) == -1.0);
    CHECK(mr(1, 0) == 1.0);
    CHECK(mr(1, 1) == 0.0);
}

TEST_CASE("real_form is a homomorphism") {
    std::mt19937_64 rng(3);
    const MatrixXcd x = random_matrix(4, 3, rng);
    const MatrixXcd y = random_matrix(3, 5, rng);
    const VectorXcd z = random_matrix(3, 1, rng).col(0);
    CHECK((real_form(x) * real_form(z) - real_form(VectorXcd(x * z))).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((real_form(MatrixXcd(x * y)) - real_form(x) * real_form(y)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((complex_form(real_form(z)) - z).norm() == 0.0);
}

TEST_CASE("raised cosine values") {
    const double ts = 1.0 / 600e6;
    CHECK(rc_pulse(0.0, ts, 0.35) == doctest::Approx(1.0));
    for (int k : {-3, -2, -1, 1, 2, 5}) CHECK(std::abs(rc_pulse(k * ts, ts, 0.35)) < 1e-12);

    const double x0 = 1.0 / 0.7;
    // (pi/4) sinc(1/(2 beta)) evaluated in 50-digit arithmetic.
    const double limit = -0.17061238463181913123;
    CHECK(rc_pulse(x0 * ts, ts, 0.35) == doctest::Approx(limit).epsilon(1e-13));
    CHECK(rc_pulse(-x0 * ts, ts, 0.35) == doctest::Approx(limit).epsilon(1e-13));
    for (double eps : {1e-9, 1e-7, 1e-6}) {
        CHECK(std::abs(rc_pulse((x0 + eps) * ts, ts, 0.35) - limit) <= 0.1 * eps);
        CHECK(std::abs(rc_pulse((x0 - eps) * ts, ts, 0.35) - limit) <= 0.1 * eps);
    }
}

TEST_CASE("raised cosine derivatives against high-precision references") {
    // x, p(x), p'(x), p''(x) in units of T_s, from 50-digit numerical differentiation.
    const double ref[3][4] = {
        {1.4286714285714285714, -0.17060669547470614278, 0.05697740449415692639, 1.7165293795627262096},
        {1.4282714285714285714, -0.17062934907003028881, 0.056290461841141763623, 1.7181836609837961787},
        {0.7, 0.34765951360953316993, -1.34678672143203891, 0.60090741667648076508},
    };
    for (const auto& r : ref) {
        const PulseJet j = rc_pulse_jet(r[0], 1.0, 0.35);
        CHECK(j.value == doctest::Approx(r[1]).epsilon(1e-11));
        CHECK(j.d1 == doctest::Approx(r[2]).epsilon(1e-9));
        CHECK(j.d2 == doctest::Approx(r[3]).epsilon(1e-7));
    }
    const double ts = 2.0;
    const PulseJet a = rc_pulse_jet(1.4, ts, 0.35);
    const PulseJet b = rc_pulse_jet(0.7, 1.0, 0.35);
    CHECK(a.value == doctest::Approx(b.value));
    CHECK(a.d1 == doctest::Approx(b.d1 / ts));
    CHECK(a.d2 == doctest::Approx(b.d2 / (ts * ts)));
}

TEST_CASE("raised cosine derivatives match finite differences across the support") {
    for (double x = -3.9; x < 4.0; x += 0.173) {
        const double h = 1e-5;
        const PulseJet j = rc_pulse_jet(x, 1.0, 0.35);
        const double fd1 = (rc_pulse(x + h, 1.0, 0.35) - rc_pulse(x - h, 1.0, 0.35)) / (2 * h);
        const double fd2 = (rc_pulse_jet(x + h, 1.0, 0.35).d1 - rc_pulse_jet(x - h, 1.0, 0.35).d1) / (2 * h);
        CHECK(j.d1 == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(j.d2 == doctest::Approx(fd2).epsilon(1e-6));
    }
}

TEST_CASE("log_cdf_diff") {
    CHECK(log_cdf_diff(-kInf, kInf, 0.3, 2.0) == 0.0);
    CHECK(log_cdf_diff(-kInf, 1.7, 1.7, 0.5) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
    // 60-digit references.
    CHECK(log_cdf_diff(10, 11, 0, 1) == doctest::Approx(-53.23131022558312486).epsilon(1e-10));
    CHECK(log_cdf_diff(-31, -30, 0, 1) == doctest::Approx(-454.32124395634325204).epsilon(1e-10));
    CHECK(log_cdf_diff(40, kInf, 0, 1) == doctest::Approx(-804.60844201375378817).epsilon(1e-10));
    CHECK(log_cdf_diff(-0.2, 0.3, 0, 1) == doctest::Approx(-1.6236832388683199952).epsilon(1e-13));
    CHECK(std::isfinite(log_cdf_diff(1e3, 1e3 + 1, 0, 1)));
    CHECK(log_cdf_diff(1.0, 1.0, 0, 1) == -kInf);
}

TEST_CASE("log_cdf_diff monotonicity and partition of unity") {
    double prev = -kInf;
    for (double hi = -5; hi < 5; hi += 0.25) {
        const double v = log_cdf_diff(-6, hi, 0.1, 0.7);
        CHECK(v > prev);
        prev = v;
    }
    const double cuts[] = {-kInf, -2.5, -0.4, 0.0, 0.9, 3.3, kInf};
    double total = 0.0;
    for (int i = 0; i + 1 < 7; ++i) total += std::exp(log_cdf_diff(cuts[i], cuts[i + 1], 0.2, 1.3));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("censored_jet derivatives") {
    const double lo = -0.3;
    const double hi = 0.8;
    const double s = std::sqrt(0.5);
    for (double mu : {-4.0, -0.5, 0.1, 2.0, 7.5}) {
        const CensoredJet j = censored_jet(lo, hi, mu, s);
        const double h = 1e-5;
        const double fd1 = (log_cdf_diff(lo, hi, mu + h, s) - log_cdf_diff(lo, hi, mu - h, s)) / (2 * h);
        const double fd2 = (censored_jet(lo, hi, mu + h, s).score - censored_jet(lo, hi, mu - h, s).score) / (2 * h);
        CHECK(j.score == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(j.curvature == doctest::Approx(fd2).epsilon(1e-5));
        CHECK(j.curvature <= 0.0);
    }
    const CensoredJet far = censored_jet(0.0, kInf, -60.0, s);
    CHECK(std::isfinite(far.score));
    CHECK(std::isfinite(far.curvature));
    CHECK(far.score > 0.0);
}

TEST_CASE("zadoff-chu sequences") {
    const VectorXcd z0 = zc_sequence(11, 1, 0);
    CHECK(std::abs(z0(0) - cplx(1, 0)) < 1e-15);
    MatrixXcd shifts(11, 11);
    for (int s = 0; s < 11; ++s) shifts.col(s) = zc_sequence(11, 1, s);
    CHECK((shifts.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
    const MatrixXcd gram = shifts.adjoint() * shifts;
    CHECK((gram - 11.0 * MatrixXcd::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-10);

    for (int n : {8, 16, 40}) {
        MatrixXcd z(n, n);
        for (int s = 0; s < n; ++s) z.col(s) = zc_sequence(n, 3, s);
        CHECK((z.adjoint() * z - n * MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10 * n);
    }
    for (int i = 0; i < 11; ++i) CHECK(std::abs(zc_sequence(11, 1, 4)(i) - z0((i + 4) % 11)) < 1e-15);

    CHECK_THROWS_AS(zc_sequence(12, 2, 0), Error);
    CHECK_THROWS_AS(zc_sequence(11, 1, 11), Error);
}
