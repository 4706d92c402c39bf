#include "iqsim/engine.hpp"

#include "iqsim/errors.hpp"
#include "iqsim/io.hpp"
#include "iqsim/log.hpp"
#include "iqsim/modem/modem.hpp"

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace iqsim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// A device's channel is what a listener is tuned to when the modem settings
// match and the carriers sit within half a channel of each other.
bool listener_hears(const ListenerSpec &l, const DeviceSpec &d) {
    return d.modem && *d.modem == l.modem &&
           std::abs(d.carrier_offset_hz - l.carrier_offset_hz) < occupied_bandwidth_hz(l.modem) / 2;
}

struct ListenerRuntime {
    std::size_t gateway_index;
    std::uint32_t gateway_id;
    std::size_t listener;
    double channel_rate;
    Channelizer channelizer;
    std::unique_ptr<StreamDemodulator> demod;
    std::vector<ListenerOutcome> outcomes;

    void consume(const std::vector<cf64> &samples) {
        collect(demod->push(samples));
    }
    void finish() {
        collect(demod->push(channelizer.finish()));
        collect(demod->finish());
    }
    void collect(std::vector<PacketOutcome> found) {
        for (auto &o : found) {
            o.gateway_id = gateway_id;
            const double t = static_cast<double>(o.start_sample) / channel_rate;
            outcomes.push_back({std::move(o), listener, t});
        }
    }
};

struct Delivery {
    std::uint32_t gateway_id;
    std::unique_ptr<IqFileWriter> file;
    std::unique_ptr<ByteSink> sink;
    std::unique_ptr<StreamServer> server;
    std::vector<cf64> *capture = nullptr;

    void send(const IQBuffer &block) {
        if (file) file->append(block.samples());
        if (server) server->send(block);
        if (capture) capture->insert(capture->end(), block.samples().begin(), block.samples().end());
    }
    void finish() {
        if (file) file->close();
        if (server) server->finish();
    }
    std::uint64_t clipped() const {
        return (file ? file->stats().clipped_components : 0) + (server ? server->stats().clipped_components : 0);
    }
};

// Gateways at one position share a stream.
struct Group {
    std::uint32_t key_gateway;  // first gateway of the group; keys links and noise
    Position position;
    std::vector<std::size_t> gateways;
    std::unique_ptr<BlockMixer> mixer;
    std::vector<ListenerRuntime> listeners;
    std::vector<Delivery> deliveries;
    std::map<std::uint32_t, LinkState> links;     // by device
    std::map<std::uint32_t, std::int64_t> delay;  // by device, stream samples
};

struct EventInfo {
    const DeviceSpec *device;
    std::int64_t start_sample;  // nominal, before propagation delay
    double duration_s;
    double power_offset_db;     // replay: recording mean power and gain
};

} // namespace

RunResult run(const Scenario &s, const RunOptions &opts) {
    s.validate();
    init_logging();
    const auto wall0 = Clock::now();
    const double rate = s.band.stream_rate_hz;
    const Rng root(s.seed);
    const auto events = expand_timeline(s);
    ChannelDiagnostics diag;

    // Replay recordings, loaded once per device.
    std::map<std::uint32_t, IqRecording> recordings;
    std::map<std::uint32_t, double> recording_power_db;
    for (const auto &d : s.devices) {
        if (!d.replay) continue;
        auto rec = read_iq_file(d.replay->path);
        const auto burst = replay_source(rec, d.carrier_offset_hz, 0.0, rate, d.replay->gain_db, d.id);
        recording_power_db[d.id] =
            burst.waveform.empty() ? -std::numeric_limits<double>::infinity()
                                   : 10.0 * std::log10(std::max(mean_power(burst.waveform.samples()), 1e-300));
        recordings.emplace(d.id, std::move(rec));
    }

    std::vector<EventInfo> info;
    info.reserve(events.size());
    for (const auto &e : events) {
        const auto &d = s.device(e.device_id);
        EventInfo ei{&d, seconds_to_sample(e.start_time_s, rate), 0.0, 0.0};
        if (d.modem) {
            ei.duration_s = frame_duration_s(*d.modem, e.payload.size());
        } else {
            ei.duration_s = recordings.at(d.id).samples.duration_s();
            ei.power_offset_db = recording_power_db.at(d.id);
        }
        info.push_back(ei);
    }

    // ---- gateway groups
    std::vector<Group> groups;
    for (std::size_t gi = 0; gi < s.gateways.size(); ++gi) {
        const auto &g = s.gateways[gi];
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group &x) { return x.position == g.position; });
        if (it == groups.end()) {
            groups.push_back(Group{g.id, g.position, {}, nullptr, {}, {}, {}, {}});
            it = std::prev(groups.end());
        }
        it->gateways.push_back(gi);
    }

    RunResult result;
    std::int64_t max_delay = 0;
    for (auto &grp : groups) {
        MixerConfig mc{rate, s.noise, s.calibration, s.resampler};
        grp.mixer = std::make_unique<BlockMixer>(mc, root.substream("noise", grp.key_gateway));
        for (const auto &d : s.devices) {
            LinkState link;
            link.distance_m = distance_m(d.position, grp.position);
            link.shadowing_draw_db = draw_shadowing_db(s.channel_model, root, link_id(d.id, grp.key_gateway));
            grp.links[d.id] = link;
            grp.delay[d.id] = propagation_delay_samples(link.distance_m, rate);
            max_delay = std::max(max_delay, grp.delay[d.id]);
        }
        for (std::size_t gi : grp.gateways) {
            const auto &g = s.gateways[gi];
            for (std::size_t k = 0; k < g.listeners.size(); ++k) {
                const auto &l = g.listeners[k];
                const double ch_rate = native_rate_hz(l.modem);
                grp.listeners.push_back(ListenerRuntime{gi, g.id, k, ch_rate,
                                                        Channelizer(rate, l.carrier_offset_hz, ch_rate, s.resampler),
                                                        make_demodulator(l.modem, 0, s.calibration),
                                                        {}});
            }
            Delivery dl{g.id, nullptr, nullptr, nullptr, nullptr};
            if (g.delivery.kind == DeliverySpec::Kind::file) {
                auto path = std::filesystem::path(g.delivery.target);
                if (path.is_relative()) path = opts.out_dir / path;
                dl.file = std::make_unique<IqFileWriter>(path, rate, s.band.center_frequency_hz, 0);
            } else if (g.delivery.kind == DeliverySpec::Kind::socket) {
                dl.sink = open_sink(g.delivery.target);
                spdlog::info("gateway {} streams to {}; waiting for a consumer", g.id, g.delivery.target);
                dl.server = std::make_unique<StreamServer>(*dl.sink, rate, false);
            }
            if (opts.capture_streams) dl.capture = &result.streams[g.id];
            grp.deliveries.push_back(std::move(dl));
        }
    }

    // Stream length: the scenario duration, stretched to the end of the last burst.
    std::int64_t total = seconds_to_sample(s.duration_s, rate);
    for (const auto &ei : info) {
        const auto len = static_cast<std::int64_t>(std::ceil(ei.duration_s * rate));
        total = std::max(total, ei.start_sample + len + max_delay + 1);
    }

    // ---- per-event preparation (pure; run on the pool)
    auto prepare = [&](std::size_t idx) {
        const auto &e = events[idx];
        const auto &d = *info[idx].device;
        IQBuffer tx = d.modem ? modulate(Frame::make(e.payload), *d.modem)
                              : replay_source(recordings.at(d.id), d.carrier_offset_hz, 0.0, rate, d.replay->gain_db,
                                              d.id)
                                    .waveform;
        if (!d.impairments.is_identity() && !tx.empty()) {
            auto pn = root.substream("phase_noise", e.index);
            tx = apply_impairments(tx, d.impairments, pn);
        }
        std::vector<PlacedBurst> out;
        out.reserve(groups.size());
        for (const auto &grp : groups) {
            PlacedBurst b;
            b.carrier_offset_hz = d.carrier_offset_hz;
            b.source_device_id = d.id;
            b.start_sample = info[idx].start_sample + grp.delay.at(d.id);
            b.waveform = tx.empty() ? tx
                                    : apply_propagation(tx, d.tx_power_dbm, s.channel_model, grp.links.at(d.id),
                                                        s.calibration, &diag);
            out.push_back(std::move(b));
        }
        return out;
    };

    const unsigned workers = std::max(1u, opts.workers);
    tbb::task_arena arena(static_cast<int>(workers));
    auto pfor = [](std::size_t n, const auto &fn) {
        tbb::parallel_for(std::size_t(0), n, [&](std::size_t i) { fn(i); });
    };

    RunReport &rep = result.report;
    const auto block = static_cast<std::int64_t>(s.block_samples);
    const auto loop0 = Clock::now();
    double slept = 0.0;
    std::size_t next_event = 0;

    arena.execute([&] {
        for (std::int64_t from = 0; from < total; from += block) {
            const std::int64_t to = std::min(total, from + block);

            std::size_t upto = next_event;
            while (upto < events.size() && info[upto].start_sample < to) ++upto;
            std::vector<std::vector<PlacedBurst>> ready(upto - next_event);
            pfor(ready.size(), [&](std::size_t i) { ready[i] = prepare(next_event + i); });
            for (auto &per_group : ready) {
                for (std::size_t g = 0; g < groups.size(); ++g) {
                    if (!per_group[g].waveform.empty()) groups[g].mixer->add(std::move(per_group[g]));
                }
            }
            next_event = upto;

            pfor(groups.size(), [&](std::size_t g) {
                auto &grp = groups[g];
                std::vector<cf64> samples(static_cast<std::size_t>(to - from));
                grp.mixer->render(from, samples, pfor, workers);
                const IQBuffer buf(std::move(samples), rate, from);
                pfor(grp.listeners.size(), [&](std::size_t k) {
                    auto &l = grp.listeners[k];
                    l.consume(l.channelizer.push(buf));
                });
                for (auto &dl : grp.deliveries) dl.send(buf);
            });
            rep.blocks++;

            if (opts.mode == RunMode::realtime) {
                const auto deadline = loop0 + std::chrono::duration_cast<Clock::duration>(
                                                  std::chrono::duration<double>(static_cast<double>(to) / rate));
                const auto now = Clock::now();
                if (now > deadline + std::chrono::duration<double>(static_cast<double>(block) / rate)) {
                    rep.underruns++;
                    if (rep.underruns <= 5) {
                        spdlog::warn("realtime underrun: block ending at sample {} is {:.1f} ms late", to,
                                     std::chrono::duration<double, std::milli>(now - deadline).count());
                    }
                } else if (now < deadline) {
                    std::this_thread::sleep_until(deadline);
                    slept += std::chrono::duration<double>(Clock::now() - now).count();
                }
            }
        }
        for (auto &grp : groups) {
            pfor(grp.listeners.size(), [&](std::size_t k) { grp.listeners[k].finish(); });
            for (auto &dl : grp.deliveries) dl.finish();
        }
    });
    const double loop_seconds = seconds_since(loop0);

    // ---- scoring
    std::vector<TruthPacket> truth;
    for (const auto &e : events) {
        const auto &d = *info[e.index].device;
        for (const auto &grp : groups) {
            for (std::size_t gi : grp.gateways) {
                const auto &g = s.gateways[gi];
                for (std::size_t k = 0; k < g.listeners.size(); ++k) {
                    if (!listener_hears(g.listeners[k], d)) continue;
                    const double t = static_cast<double>(info[e.index].start_sample + grp.delay.at(d.id)) / rate;
                    truth.push_back({e.index, d.id, g.id, k, t, symbol_duration_s(*d.modem), e.payload});
                }
            }
        }
    }
    for (auto &grp : groups) {
        for (auto &l : grp.listeners) {
            result.outcomes.insert(result.outcomes.end(), std::make_move_iterator(l.outcomes.begin()),
                                   std::make_move_iterator(l.outcomes.end()));
        }
    }
    const auto score = score_outcomes(truth, result.outcomes);

    // ---- packet-level view for the baseline and the interference class
    std::map<std::uint32_t, std::vector<AbstractTransmission>> abstract;  // by gateway
    for (const auto &grp : groups) {
        std::vector<AbstractTransmission> txs;
        txs.reserve(events.size());
        for (const auto &e : events) {
            const auto &d = *info[e.index].device;
            const double p = received_power_dbm(d.tx_power_dbm, s.channel_model, grp.links.at(d.id)) +
                             info[e.index].power_offset_db;
            const double t = static_cast<double>(info[e.index].start_sample + grp.delay.at(d.id)) / rate;
            if (d.modem) {
                txs.push_back(AbstractTransmission::of(d.id, p, t, *d.modem, e.payload.size(), d.carrier_offset_hz));
            } else {
                AbstractTransmission a;
                a.device_id = d.id;
                a.rx_power_dbm = p;
                a.start_time_s = t;
                a.duration_s = info[e.index].duration_s;
                a.channel_offset_hz = d.carrier_offset_hz;
                a.bandwidth_hz = recordings.at(d.id).samples.sample_rate_hz();
                txs.push_back(a);
            }
        }
        for (std::size_t gi : grp.gateways) abstract[s.gateways[gi].id] = txs;
    }
    double max_duration = 0.0;
    for (const auto &ei : info) max_duration = std::max(max_duration, ei.duration_s);
    // Per-device delays can reorder arrivals slightly relative to the timeline.
    const double slack = static_cast<double>(max_delay + 1) / rate;

    std::vector<PacketVerdict> wv, bv;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto &tp = truth[i];
        const auto &txs = abstract.at(tp.gateway_id);
        const auto &target = txs[tp.event_index];
        // Events are time-sorted, so overlapping ones sit within one maximum
        // duration on either side.
        std::vector<AbstractTransmission> others;
        for (std::size_t j = tp.event_index; j-- > 0;) {
            if (txs[j].start_time_s < target.start_time_s - max_duration - slack) break;
            others.push_back(txs[j]);
        }
        for (std::size_t j = tp.event_index + 1; j < txs.size() && txs[j].start_time_s < target.end_time_s() + slack; ++j) {
            others.push_back(txs[j]);
        }
        PacketRecord pr;
        pr.event_index = tp.event_index;
        pr.device_id = tp.device_id;
        pr.gateway_id = tp.gateway_id;
        pr.listener = tp.listener;
        const auto &d = *info[tp.event_index].device;
        pr.modem = describe(*d.modem);
        pr.carrier_offset_hz = d.carrier_offset_hz;
        pr.start_time_s = events[tp.event_index].start_time_s;
        pr.payload_len = tp.payload.size();
        pr.rx_power_dbm = target.rx_power_dbm;
        pr.interference = classify(target, others);
        pr.waveform = score.packets[i];
        const std::uint64_t key = (static_cast<std::uint64_t>(tp.event_index) << 24) ^
                                  (static_cast<std::uint64_t>(tp.gateway_id) << 8) ^ tp.listener;
        if (s.baseline.enabled) {
            pr.baseline_sinr_db = sinr_db(target, others, s.noise);
            pr.baseline_delivered = *pr.baseline_sinr_db >= s.baseline.rule.threshold_db(target);
            wv.push_back({key, pr.interference, pr.waveform.crc_ok});
            bv.push_back({key, pr.interference, *pr.baseline_delivered});
        }
        rep.packets.push_back(std::move(pr));
    }
    if (s.baseline.enabled) rep.comparison = compare_runs(wv, bv);

    for (const auto &[key, c] : score.links) rep.links.push_back({key.first, key.second, c});

    std::vector<std::pair<double, double>> intervals;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const double t = static_cast<double>(info[i].start_sample) / rate;
        intervals.emplace_back(t, t + info[i].duration_s);
    }

    rep.scenario_name = s.name;
    rep.seed = s.seed;
    rep.mode = opts.mode;
    rep.workers = workers;
    rep.config_json = scenario_to_json(s);
    rep.provisioned_devices = s.devices.size();
    rep.events = events.size();
    rep.peak_simultaneous_bursts = peak_simultaneous(std::move(intervals));
    rep.stream_samples = total;
    rep.emulated_seconds = static_cast<double>(total) / rate;
    rep.busy_seconds = loop_seconds - slept;
    rep.real_time_factor = rep.busy_seconds > 0 ? rep.emulated_seconds / rep.busy_seconds : 0.0;
    rep.ghosts = score.ghosts;
    rep.unmatched_detections = score.unmatched_detections;
    for (const auto &grp : groups) {
        rep.rejected_bursts += grp.mixer->rejected();
        for (const auto &dl : grp.deliveries) rep.clipped_components += dl.clipped();
    }
    rep.clamped_distances = diag.clamped_distances.load();
    rep.wall_seconds = seconds_since(wall0);
    spdlog::info("run '{}': {} events, {:.3f} s emulated in {:.3f} s busy (RTF {:.2f}), {} underruns", s.name,
                 rep.events, rep.emulated_seconds, rep.busy_seconds, rep.real_time_factor, rep.underruns);
    return result;
}

} // namespace iqsim
