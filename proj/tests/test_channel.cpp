#include <doctest.h>

#include <cmath>

#include "swce/channel.hpp"

using namespace swce;

namespace {

SystemConfig base_config(int m, int d) {
    SystemConfig cfg;
    cfg.antennas = m;
    cfg.rf_chains = 1;
    cfg.delay_spread = d;
    return cfg;
}

}  // namespace

TEST_CASE("tap support") {
    CHECK(tap_support(base_config(1, 4)) == TapSupport{0, 3});
    const TapSupport s32 = tap_support(base_config(32, 4));
    CHECK(s32 == TapSupport{-1, 4});
    CHECK(s32.size() == 6);
    CHECK(tap_support(base_config(256, 2)) == TapSupport{-3, 4});
    for (int m : {2, 16, 64, 100, 128, 500}) {
        const SystemConfig cfg = base_config(m, 3);
        const int extra =
            static_cast<int>(std::ceil((m - 1) * cfg.spacing() / (cfg.speed_of_light * cfg.symbol_period())));
        CHECK(tap_support(cfg).size() == 3 + 2 * extra);
    }
}

TEST_CASE("propagation delay") {
    const SystemConfig cfg = base_config(8, 4);
    CHECK(propagation_delay(1e-9, 0.7, 0, cfg) == 1e-9);
    CHECK(propagation_delay(2e-9, 0.0, 5, cfg) == 2e-9);
    CHECK(propagation_delay(0.0, kPi / 2, 1, cfg) == doctest::Approx(17.857142857e-12).epsilon(1e-9));
}

TEST_CASE("steering vector against the per-antenna formula") {
    SystemConfig cfg = base_config(64, 4);
    Rng rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    const double ts = cfg.symbol_period();
    for (int trial = 0; trial < 10; ++trial) {
        const double theta = (u(rng) - 0.5) * kPi;
        const double tau = u(rng) * 3 * ts;
        const int d = -2 + trial % 8;
        const VectorXcd a = steering_vec(theta, tau, d, cfg);
        for (int m = 0; m < cfg.antennas; ++m) {
            const double tm = tau + m * (cfg.wavelength() / 2) * std::sin(theta) / cfg.speed_of_light;
            const double x = (d * ts - tm) / ts;
            const double p = std::abs(x) < 1e-12 ? 1.0
                                                 : std::sin(kPi * x) / (kPi * x) * std::cos(kPi * 0.35 * x) /
                                                       (1 - 0.49 * x * x);
            const cplx phase = std::exp(cplx(0, -2 * kPi * cfg.carrier_hz * m * (cfg.wavelength() / 2) *
                                                    std::sin(theta) / cfg.speed_of_light));
            CHECK(std::abs(a(m) - phase * p) < 1e-12);
        }
    }
    const VectorXcd boresight = steering_vec(0.0, 0.4 * ts, 1, cfg);
    for (int m = 0; m < cfg.antennas; ++m)
        CHECK(std::abs(boresight(m) - rc_pulse(0.6 * ts, ts, 0.35)) < 1e-15);
}

TEST_CASE("phase mirror symmetry") {
    SystemConfig cfg = base_config(32, 3);
    const double ts = cfg.symbol_period();
    const VectorXcd a = steering_vec(0.6, 0.5 * ts, 1, cfg);
    const VectorXcd b = steering_vec(-0.6, 0.5 * ts, 1, cfg);
    for (int m = 0; m < cfg.antennas; ++m) {
        const double pa = std::arg(std::polar(1.0, -2 * kPi * cfg.carrier_hz * m * cfg.spacing() *
                                                       std::sin(0.6) / cfg.speed_of_light));
        const cplx ua = a(m) / rc_pulse(1 * ts - propagation_delay(0.5 * ts, 0.6, m, cfg), ts, 0.35);
        const cplx ub = b(m) / rc_pulse(1 * ts - propagation_delay(0.5 * ts, -0.6, m, cfg), ts, 0.35);
        CHECK(std::abs(ua - std::conj(ub)) < 1e-10);
        CHECK(std::abs(std::arg(ua) - pa) < 1e-9);
    }
}

TEST_CASE("narrowband reduction") {
    SystemConfig cfg = base_config(1, 3);
    const double ts = cfg.symbol_period();
    for (int d = 0; d < 3; ++d)
        CHECK((steering_vec(0.9, 0.7 * ts, d, cfg) - narrowband_steering_vec(0.9, 0.7 * ts, d, cfg)).norm() == 0.0);

    cfg = base_config(64, 3);
    for (int d = 0; d < 3; ++d)
        CHECK((steering_vec(0.0, 0.7 * ts, d, cfg) - narrowband_steering_vec(0.0, 0.7 * ts, d, cfg)).norm() == 0.0);

    // At tau = 0, d = 1 the wideband pulse slides off its zero crossing as m grows.
    const VectorXcd wide = steering_vec(kPi / 3, 0.0, 1, cfg);
    const VectorXcd narrow = narrowband_steering_vec(kPi / 3, 0.0, 1, cfg);
    CHECK(std::abs(wide(0) - narrow(0)) < 1e-15);
    for (int m = 1; m < cfg.antennas; ++m)
        CHECK(std::abs(wide(m) - narrow(m)) > std::abs(wide(m - 1) - narrow(m - 1)));

    // Shrink the aperture relative to T_s: the two models agree.
    SystemConfig slow = base_config(16, 3);
    slow.bandwidth_hz = 1e6;
    const double tslow = slow.symbol_period();
    // Any nonzero aperture still rounds up to one guard tap on each side.
    CHECK(tap_support(slow) == TapSupport{-1, 3});
    for (int d = 0; d < 3; ++d) {
        const VectorXcd w = steering_vec(1.1, 0.3 * tslow, d, slow);
        const VectorXcd n = narrowband_steering_vec(1.1, 0.3 * tslow, d, slow);
        CHECK((w - n).norm() <= 1e-2 * n.norm());
    }
}

TEST_CASE("steering block derivatives") {
    SystemConfig cfg = base_config(16, 4);
    const TapSupport s = tap_support(cfg);
    const double ts = cfg.symbol_period();
    for (AtomModel model : {AtomModel::SpatialWideband, AtomModel::Narrowband}) {
        const double th = 0.41;
        const double u = 1.37;
        const SteeringBlock b = steering_block(th, u * ts, cfg, s, model, 2);
        const double h = 1e-6;
        auto v = [&](double t, double uu) { return steering_block(t, uu * ts, cfg, s, model, 1); };
        const SteeringBlock tp = v(th + h, u), tm = v(th - h, u), up = v(th, u + h), um = v(th, u - h);
        const double scale = b.v.cwiseAbs().maxCoeff();
        CHECK(((tp.v - tm.v) / (2 * h) - b.d_theta).cwiseAbs().maxCoeff() < 1e-5 * scale * 200);
        CHECK(((up.v - um.v) / (2 * h) - b.d_u).cwiseAbs().maxCoeff() < 1e-6 * scale);
        CHECK(((tp.d_theta - tm.d_theta) / (2 * h) - b.d_theta_theta).cwiseAbs().maxCoeff() <
              1e-5 * b.d_theta_theta.cwiseAbs().maxCoeff());
        CHECK(((up.d_theta - um.d_theta) / (2 * h) - b.d_theta_u).cwiseAbs().maxCoeff() <
              1e-5 * (1 + b.d_theta_u.cwiseAbs().maxCoeff()));
        CHECK(((up.d_u - um.d_u) / (2 * h) - b.d_u_u).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("sample paths") {
    SystemConfig cfg = base_config(4, 4);
    cfg.users = 2;
    cfg.paths_per_user = {0, 0};
    cfg.user_power = {1, 1};
    Rng rng(1);
    CHECK(sample_paths(cfg, rng).empty());

    cfg.paths_per_user = {60000, 40000};
    Rng r1(5), r2(5);
    const auto a = sample_paths(cfg, r1);
    CHECK(a == sample_paths(cfg, r2));
    REQUIRE(a.size() == 100000);
    double power = 0.0;
    for (const PathParams& p : a) {
        power += std::norm(p.gain);
        CHECK(p.theta >= -kPi / 2);
        CHECK(p.theta <= kPi / 2);
        CHECK(p.tau >= 0.0);
        CHECK(p.tau <= 3 * cfg.symbol_period());
    }
    CHECK(power / a.size() > 0.98);
    CHECK(power / a.size() < 1.02);
    CHECK(a.front().user == 0);
    CHECK(a.back().user == 1);
}

TEST_CASE("build_channel structure and linearity") {
    SystemConfig cfg = base_config(8, 3);
    cfg.users = 2;
    cfg.paths_per_user = {2, 1};
    cfg.user_power = {1, 1};
    const TapSupport s = tap_support(cfg);
    CHECK(build_channel({}, cfg).h.norm() == 0.0);

    Rng rng(11);
    const auto paths = sample_paths(cfg, rng);
    const Channel all = build_channel(paths, cfg);
    const Channel a = build_channel({paths[0], paths[2]}, cfg);
    const Channel b = build_channel({paths[1]}, cfg);
    CHECK((all.h - a.h - b.h).norm() < 1e-14);
    CHECK(all.taps.rows() == 8);
    CHECK(all.taps.cols() == s.size() * 2);

    const PathParams& p = paths[2];
    const Channel one = build_channel({p}, cfg);
    for (int j = 0; j < s.size(); ++j) {
        const VectorXcd col = p.gain * steering_vec(p.theta, p.tau, s.lo + j, cfg);
        CHECK((one.taps.col(j * 2 + 1) - col).norm() < 1e-14);
        CHECK(one.taps.col(j * 2).norm() == 0.0);
        for (int m = 0; m < 8; ++m) CHECK(one.h(h_index(m, j, 1, 8, 2)) == one.taps(m, j * 2 + 1));
    }
}

TEST_CASE("truncated taps against the continuous-time convolution") {
    SystemConfig cfg = base_config(32, 4);
    cfg.users = 2;
    cfg.paths_per_user = {3, 2};
    cfg.user_power = {1, 1};
    const double ts = cfg.symbol_period();
    const TapSupport s = tap_support(cfg);
    Rng rng(21);
    std::normal_distribution<double> g(0, std::sqrt(0.5));
    for (int trial = 0; trial < 5; ++trial) {
        const auto paths = sample_paths(cfg, rng);
        const Channel ch = build_channel(paths, cfg);
        const int len = 400;
        MatrixXcd sym(len, 2);
        for (int i = 0; i < len; ++i)
            for (int k = 0; k < 2; ++k) sym(i, k) = cplx(g(rng), g(rng));

        double err = 0.0, ref = 0.0;
        // Evaluate r_m(t) on an 8x oversampled time grid, keeping the symbol instants.
        const int over = 8;
        for (int fine = 150 * over; fine < 250 * over; ++fine) {
            if (fine % over != 0) continue;
            const int n = fine / over;
            const double t = fine * ts / over;
            VectorXcd direct = VectorXcd::Zero(cfg.antennas);
            for (const PathParams& p : paths)
                for (int m = 0; m < cfg.antennas; ++m) {
                    const double tm = propagation_delay(p.tau, p.theta, m, cfg);
                    const cplx ph = std::exp(cplx(0, -2 * kPi * cfg.carrier_hz * (tm - p.tau)));
                    cplx acc = 0.0;
                    for (int i = 0; i < len; ++i) acc += sym(i, p.user) * rc_pulse(t - i * ts - tm, ts, 0.35);
                    direct(m) += p.gain * ph * acc;
                }
            VectorXcd model = VectorXcd::Zero(cfg.antennas);
            for (int j = 0; j < s.size(); ++j)
                model += ch.taps.middleCols(2 * j, 2) * sym.row(n - (s.lo + j)).transpose();
            err += (direct - model).squaredNorm();
            ref += direct.squaredNorm();
        }
        CHECK(err / ref <= 0.02);
    }
}
