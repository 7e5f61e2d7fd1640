#pragma once

#include <memory>
#include <vector>

#include "swce/estimator.hpp"

namespace swce::testing {

struct Scenario {
    SystemConfig cfg;
    Channel channel;
    std::unique_ptr<SensingOperator> op;
    VectorXcd y;
    QuantizedObservation obs;
};

inline Scenario make_scenario(const SystemConfig& cfg, const std::vector<PathParams>& paths, std::uint64_t seed,
                              bool noise = true, bool with_cv = true) {
    Scenario s;
    s.cfg = cfg;
    Rng rng(seed);
    s.channel = build_channel(paths, cfg);
    s.op = std::make_unique<SensingOperator>(design_training(cfg), build_combiners(cfg, rng), cfg);
    s.y = simulate_rx(*s.op, s.channel.h, rng, noise);
    s.obs = quantize(s.y, make_quantizer(cfg, received_signal_variance(cfg)));
    s.obs.partition = with_cv ? partition_cv(cfg) : partition_all(cfg);
    return s;
}

inline SystemConfig desk_config(int antennas, int rf, int users, int delay, int paths, double snr_db) {
    SystemConfig cfg;
    cfg.antennas = antennas;
    cfg.rf_chains = rf;
    cfg.users = users;
    cfg.delay_spread = delay;
    cfg.paths_per_user.assign(static_cast<std::size_t>(users), paths);
    cfg.set_equal_snr_db(snr_db);
    cfg.frames = 20;
    cfg.frame_length = 24;
    return cfg;
}

}  // namespace swce::testing
