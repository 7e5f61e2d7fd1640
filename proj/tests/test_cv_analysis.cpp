#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "swce/cv_analysis.hpp"

using namespace swce;

namespace {

// -E[H(p)] in nats for a one-bit quantizer, p = Phi(mu / sqrt(1/2)),
// mu ~ N(0, s2); trapezoid rule on a fine grid of the scalar mean.
double one_bit_negentropy(double s2) {
    const double s = std::sqrt(s2);
    const int n = 200001;
    const double lim = 12.0 * s;
    const double dx = 2 * lim / (n - 1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double mu = -lim + i * dx;
        const double p = 0.5 * std::erfc(-mu);  // Phi(mu / sqrt(1/2))
        const double q = 0.5 * std::erfc(mu);
        double t = 0.0;
        if (p > 0) t += p * std::log(p);
        if (q > 0) t += q * std::log(q);
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        acc += w * t * std::exp(-mu * mu / (2 * s2)) / (std::sqrt(2 * kPi) * s);
    }
    return acc * dx;
}

}  // namespace

TEST_CASE("f_CV at the truth for one bit") {
    CvProbeConfig p;
    p.bits = 1;
    p.samples = 20000;
    p.h = VectorXd::Zero(2);
    p.step = 1.0;
    const FcvEstimate z = empirical_fcv(p.h, p, 1);
    CHECK(z.mean == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(z.std_error < 1e-12);

    p.h = (VectorXd(2) << 0.6, -0.3).finished();
    const FcvEstimate f = empirical_fcv(p.h, p, 2);
    const double ref = one_bit_negentropy(p.h.squaredNorm());
    CHECK(std::abs(f.mean - ref) <= 4 * f.std_error + 1e-9);
}

TEST_CASE("fine quantizer approaches the Gaussian cross-entropy") {
    CvProbeConfig p;
    p.bits.reset();
    p.step = 0.05;
    p.samples = 4000;
    p.h = (VectorXd(2) << 1.0, -0.5).finished();
    const FcvSampler s(p, 3);
    for (const VectorXd& x : {p.h, VectorXd((VectorXd(2) << 1.3, 0.2).finished())}) {
        const FcvEstimate f = s.evaluate(x);
        const double formula = -(x - p.h).squaredNorm() - 0.5 * std::log(kPi * std::exp(1.0)) + std::log(p.step);
        CHECK(std::abs(f.mean - formula) <= 0.05);
    }
}

TEST_CASE("lattice maximum sits at the true channel") {
    for (int bits = 1; bits <= 4; ++bits) {
        CvProbeConfig p;
        p.bits = bits;
        p.samples = 20000;
        p.lattice_points = 11;
        p.lattice_spacing = 1.0;
        const FcvSampler s(p, 10 + bits);
        const PeakReport r = lattice_peak(s);
        CHECK(r.at_truth);
        CHECK(std::hypot(r.best.h1 - 5.0, r.best.h2 - 5.0) < 1.5);
    }
}

TEST_CASE("midpoint concavity and the detector self-test") {
    for (int bits = 1; bits <= 4; ++bits) {
        CvProbeConfig p;
        p.bits = bits;
        p.samples = 10000;
        const FcvSampler s(p, 20 + bits);
        const ConcavityReport r = concavity_probe(s, 30, 5);
        CHECK(r.segments == 30);
        CHECK(r.violations == 0);
        const ConcavityReport neg = concavity_probe(s, 30, 5, true);
        CHECK(neg.violations > 0);
    }
    CvProbeConfig p;
    p.samples = 1000;
    const FcvSampler s(p, 1);
    const VectorXd a = (VectorXd(2) << 3.0, 7.0).finished();
    const FcvEstimate g = midpoint_gap(s, a, a);
    CHECK(g.mean == 0.0);
    CHECK(g.std_error == 0.0);
}

TEST_CASE("fine-quantization residual shrinks with the width") {
    CvProbeConfig p;
    p.samples = 20000;
    const VectorXd h = (VectorXd(2) << 1.0, 0.5).finished();
    const std::vector<VectorXd> pts{h, (VectorXd(2) << 1.5, 0.0).finished()};
    const std::vector<double> deltas{0.4, 0.2, 0.1};
    const auto rows = delta_scaling_check(h, pts, deltas, p, 9);
    REQUIRE(rows.size() == 6);
    auto at = [&](int d, int pt) { return rows[static_cast<std::size_t>(d * 2 + pt)]; };
    for (int pt = 0; pt < 2; ++pt) {
        for (int d = 0; d + 1 < 3; ++d) {
            const DeltaRow big = at(d, pt);
            const DeltaRow small = at(d + 1, pt);
            CHECK(std::abs(small.residual) <= 0.75 * std::abs(big.residual) + 3 * (big.std_error + small.std_error));
        }
        for (int d = 0; d < 3; ++d) CHECK(std::abs(at(d, pt).ratio) < 1.0);
    }
    // The leading term does not depend on the estimate.
    for (int d = 0; d < 3; ++d)
        CHECK(std::abs(at(d, 0).residual - at(d, 1).residual) <=
              3 * (at(d, 0).std_error + at(d, 1).std_error) + deltas[static_cast<std::size_t>(d)]);
    // At the truth the residual vanishes with the width.
    CHECK(std::abs(at(2, 0).residual) < std::abs(at(0, 0).residual));
}

TEST_CASE("sampler determinism and lattice CSV") {
    CvProbeConfig p;
    p.samples = 500;
    p.lattice_points = 3;
    const FcvSampler a(p, 42);
    const FcvSampler b(p, 42);
    const VectorXd x = (VectorXd(2) << 4.0, 6.0).finished();
    CHECK(a.evaluate(x).mean == b.evaluate(x).mean);
    CHECK(FcvSampler(p, 43).evaluate(x).mean != a.evaluate(x).mean);

    const auto lattice = fcv_lattice(a);
    REQUIRE(lattice.size() == 9);
    CHECK(lattice[4].h1 == 5.0);
    CHECK(lattice[4].h2 == 5.0);
    const std::string path = "fcv_lattice_test.csv";
    write_lattice_csv(lattice, path);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "h1,h2,f_cv,stderr");
    int n = 0;
    while (std::getline(f, line)) ++n;
    CHECK(n == 9);
    std::remove(path.c_str());
    CHECK_THROWS_AS(write_lattice_csv(lattice, "/nonexistent-dir/x.csv"), Error);
}

TEST_CASE("fine-quantization residual follows the second-order expansion") {
    // Midpoint expansion of the bin probabilities gives
    // residual = delta^2 (2 ||h_hat - h||^2 - 1) / 12 + O(delta^4).
    CvProbeConfig p;
    p.samples = 5000;
    const VectorXd h = (VectorXd(2) << 5.0, 5.0).finished();
    const std::vector<VectorXd> pts{h, (VectorXd(2) << 6.0, 6.0).finished()};
    const auto rows = delta_scaling_check(h, pts, {0.2, 0.1}, p, 4);
    for (const DeltaRow& r : rows) {
        const double expected = r.delta * r.delta * (2 * r.distance2 - 1) / 12;
        CHECK(std::abs(r.residual - expected) <= 0.03 * std::abs(expected) + 3 * r.std_error);
    }
}
