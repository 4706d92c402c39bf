#pragma once

// Small builders for engine scenarios used by the unit and acceptance tests.

#include "iqsim/engine.hpp"

#include <cmath>

namespace testscn {

using namespace iqsim;

// Distance at which the log-distance model gives `loss_db`.
inline double distance_for_loss(const LogDistanceModel &m, double loss_db) {
    return m.reference_distance_m * std::pow(10.0, (loss_db - m.reference_loss_db) / (10.0 * m.exponent));
}

// A scenario with one gateway at the origin listening on nothing yet.
inline Scenario base(double stream_rate_hz = 1.5e6, double duration_s = 1.0, std::uint64_t seed = 1) {
    Scenario s;
    s.name = "test";
    s.seed = seed;
    s.duration_s = duration_s;
    s.band.stream_rate_hz = stream_rate_hz;
    s.band.usable_bandwidth_hz = stream_rate_hz;
    s.calibration.full_scale_dbm = -50.0;
    GatewaySpec g;
    g.id = 1;
    s.gateways.push_back(g);
    return s;
}

inline void listen(Scenario &s, const ModemParams &p, double offset_hz, std::size_t gateway = 0) {
    s.gateways[gateway].listeners.push_back({offset_hz, p});
}

// Adds a device whose received power at a gateway at the origin is `rx_dbm`
// (tx 14 dBm, placed on the x axis at the matching distance).
inline DeviceSpec &device(Scenario &s, std::uint32_t id, const ModemParams &p, double offset_hz, double rx_dbm,
                          TrafficSpec traffic, std::size_t payload_len = 16, double angle = 0.0) {
    DeviceSpec d;
    d.id = id;
    d.modem = p;
    d.carrier_offset_hz = offset_hz;
    d.tx_power_dbm = 14.0;
    const double r = distance_for_loss(s.channel_model, d.tx_power_dbm - rx_dbm);
    d.position = {r * std::cos(angle), r * std::sin(angle)};
    d.traffic = std::move(traffic);
    d.payload.kind = PayloadSpec::Kind::random;
    d.payload.length = payload_len;
    s.devices.push_back(d);
    return s.devices.back();
}

inline TrafficSpec periodic(double interval_s, double first_s = 0.0, double jitter_s = 0.0) {
    TrafficSpec t;
    t.kind = TrafficSpec::Kind::periodic;
    t.interval_s = interval_s;
    t.first_s = first_s;
    t.jitter_s = jitter_s;
    return t;
}

inline TrafficSpec at_times(std::vector<double> times) {
    TrafficSpec t;
    t.kind = TrafficSpec::Kind::explicit_times;
    t.times_s = std::move(times);
    return t;
}

// Noise power in `bw` at the default receiver noise figure.
inline double noise_dbm(const Scenario &s, double bw) { return s.noise.power_dbm(bw); }

inline LinkCounters totals(const RunReport &r, std::uint32_t device_id) {
    LinkCounters c;
    for (const auto &l : r.links) {
        if (l.device_id == device_id) {
            c.sent += l.counters.sent;
            c.detected += l.counters.detected;
            c.crc_ok += l.counters.crc_ok;
        }
    }
    return c;
}

} // namespace testscn
