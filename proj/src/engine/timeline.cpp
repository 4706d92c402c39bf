#include "iqsim/engine.hpp"

#include "iqsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace iqsim {

namespace {

std::vector<double> event_times(const TrafficSpec &t, double duration_s, RngStream &rng) {
    std::vector<double> out;
    switch (t.kind) {
    case TrafficSpec::Kind::periodic: {
        // The small slack keeps exact multiples (60 / 10) from losing the last event to rounding.
        const auto n = static_cast<std::int64_t>(std::floor((duration_s - t.first_s) / t.interval_s + 1e-9)) + 1;
        for (std::int64_t k = 0; k < n; ++k) {
            double time = t.first_s + static_cast<double>(k) * t.interval_s;
            if (t.jitter_s > 0.0) time += t.jitter_s * rng.next_uniform();
            if (time <= duration_s) out.push_back(time);
        }
        break;
    }
    case TrafficSpec::Kind::poisson:
        if (t.rate_per_s > 0.0) {
            for (double time = rng.next_exponential(t.rate_per_s); time <= duration_s;
                 time += rng.next_exponential(t.rate_per_s)) {
                out.push_back(time);
            }
        }
        break;
    case TrafficSpec::Kind::explicit_times:
        out = t.times_s;
        std::sort(out.begin(), out.end());
        break;
    }
    return out;
}

std::vector<std::uint8_t> make_payload(const PayloadSpec &p, RngStream &rng) {
    if (p.kind == PayloadSpec::Kind::fixed) return p.bytes;
    std::vector<std::uint8_t> out(p.length);
    for (auto &b : out) b = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
    return out;
}

} // namespace

std::vector<TimelineEvent> expand_timeline(const Scenario &s) {
    const Rng root(s.seed);
    struct Keyed {
        double time;
        std::uint32_t device;
        std::size_t seq;
        std::vector<std::uint8_t> payload;
    };
    std::vector<Keyed> all;
    for (const auto &d : s.devices) {
        auto traffic = root.substream("traffic", d.id);
        auto payload_rng = root.substream("payload", d.id);
        const auto times = event_times(d.traffic, s.duration_s, traffic);
        for (std::size_t k = 0; k < times.size(); ++k) {
            all.push_back({times[k], d.id, k, d.modem ? make_payload(d.payload, payload_rng) : std::vector<std::uint8_t>{}});
        }
    }
    std::sort(all.begin(), all.end(), [](const Keyed &a, const Keyed &b) {
        return std::tie(a.time, a.device, a.seq) < std::tie(b.time, b.device, b.seq);
    });
    std::vector<TimelineEvent> out;
    out.reserve(all.size());
    for (auto &k : all) {
        out.push_back({out.size(), k.device, k.time, std::move(k.payload)});
    }
    return out;
}

std::size_t peak_simultaneous(std::vector<std::pair<double, double>> intervals) {
    std::vector<std::pair<double, int>> edges;
    edges.reserve(2 * intervals.size());
    for (const auto &[a, b] : intervals) {
        if (b > a) {
            edges.emplace_back(a, +1);
            edges.emplace_back(b, -1);
        }
    }
    // Ends sort before starts at the same instant: [a, b) then [b, c) never overlap.
    std::sort(edges.begin(), edges.end());
    std::size_t cur = 0, peak = 0;
    for (const auto &[t, d] : edges) {
        cur = static_cast<std::size_t>(static_cast<std::int64_t>(cur) + d);
        peak = std::max(peak, cur);
    }
    return peak;
}

ScoreResult score_outcomes(const std::vector<TruthPacket> &truth, std::vector<ListenerOutcome> &outcomes) {
    ScoreResult r;
    r.packets.resize(truth.size());

    struct Pair {
        double dt;
        std::size_t t, o;
    };
    // Outcomes per (gateway, listener), sorted by time, for window lookups.
    std::map<std::pair<std::uint32_t, std::size_t>, std::vector<std::size_t>> by_listener;
    for (std::size_t o = 0; o < outcomes.size(); ++o) {
        by_listener[{outcomes[o].outcome.gateway_id, outcomes[o].listener}].push_back(o);
    }
    for (auto &[key, idx] : by_listener) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return outcomes[a].time_s < outcomes[b].time_s; });
    }

    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const auto &tp = truth[t];
        r.links[{tp.device_id, tp.gateway_id}].sent++;
        const auto it = by_listener.find({tp.gateway_id, tp.listener});
        if (it == by_listener.end()) continue;
        const auto &idx = it->second;
        auto k = std::lower_bound(idx.begin(), idx.end(), tp.time_s - tp.tolerance_s,
                                  [&](std::size_t o, double v) { return outcomes[o].time_s < v; });
        for (; k != idx.end() && outcomes[*k].time_s <= tp.time_s + tp.tolerance_s; ++k) {
            const auto &lo = outcomes[*k];
            if (lo.outcome.crc_ok && lo.outcome.payload_decoded != tp.payload) continue;
            pairs.push_back({std::abs(lo.time_s - tp.time_s), t, *k});
        }
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const Pair &a, const Pair &b) { return std::tie(a.dt, a.t, a.o) < std::tie(b.dt, b.t, b.o); });

    std::vector<bool> truth_used(truth.size()), outcome_used(outcomes.size());
    for (const auto &p : pairs) {
        if (truth_used[p.t] || outcome_used[p.o]) continue;
        truth_used[p.t] = outcome_used[p.o] = true;
        auto &lo = outcomes[p.o];
        lo.outcome.device_id = truth[p.t].device_id;
        auto &res = r.packets[p.t];
        res.detected = true;
        res.crc_ok = lo.outcome.crc_ok;
        res.rssi_dbm = lo.outcome.rssi_dbm;
        auto &c = r.links[{truth[p.t].device_id, truth[p.t].gateway_id}];
        c.detected++;
        if (res.crc_ok) c.crc_ok++;
    }
    for (std::size_t o = 0; o < outcomes.size(); ++o) {
        if (outcome_used[o]) continue;
        if (outcomes[o].outcome.crc_ok) {
            r.ghosts++;
        } else {
            r.unmatched_detections++;
        }
    }
    return r;
}

} // namespace iqsim
