#include "iqsim/baseline.hpp"

#include "iqsim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace iqsim {

namespace {

double band_overlap_hz(const AbstractTransmission &a, const AbstractTransmission &b) noexcept {
    const double lo = std::max(a.channel_offset_hz - a.bandwidth_hz / 2, b.channel_offset_hz - b.bandwidth_hz / 2);
    const double hi = std::min(a.channel_offset_hz + a.bandwidth_hz / 2, b.channel_offset_hz + b.bandwidth_hz / 2);
    return std::max(0.0, hi - lo);
}

// Back-to-back frames computed as start + duration can overlap by an ulp;
// anything under a nanosecond counts as touching, not overlapping.
constexpr double kTouch_s = 1e-9;

bool time_overlap(const AbstractTransmission &a, const AbstractTransmission &b) noexcept {
    return a.start_time_s + kTouch_s < b.end_time_s() && b.start_time_s + kTouch_s < a.end_time_s();
}

bool css_sf_differs(const AbstractTransmission &a, const AbstractTransmission &b) noexcept {
    if (!a.params || !b.params) return false;
    const auto *ca = std::get_if<CssParams>(&*a.params);
    const auto *cb = std::get_if<CssParams>(&*b.params);
    return ca && cb && ca->spreading_factor != cb->spreading_factor;
}

bool same_class(const AbstractTransmission &a, const AbstractTransmission &b) noexcept {
    return a.params && b.params && a.params->index() == b.params->index();
}

} // namespace

AbstractTransmission AbstractTransmission::of(std::uint32_t device_id, double rx_power_dbm, double start_time_s,
                                              const ModemParams &params, std::size_t payload_len,
                                              double channel_offset_hz) {
    AbstractTransmission t;
    t.device_id = device_id;
    t.rx_power_dbm = rx_power_dbm;
    t.start_time_s = start_time_s;
    t.duration_s = frame_duration_s(params, payload_len);
    t.channel_offset_hz = channel_offset_hz;
    t.params = params;
    t.bandwidth_hz = occupied_bandwidth_hz(params);
    return t;
}

void SinrRule::validate() const {
    const std::pair<const char *, double> fields[] = {{"baseline.thresholds_db.css", css_threshold_db},
                                                      {"baseline.thresholds_db.fsk", fsk_threshold_db},
                                                      {"baseline.thresholds_db.dbpsk", dbpsk_threshold_db},
                                                      {"baseline.thresholds_db.other", other_threshold_db}};
    for (const auto &[path, v] : fields) {
        if (!std::isfinite(v)) throw validation_error(path, "threshold must be finite");
    }
}

double SinrRule::threshold_db(const AbstractTransmission &target) const {
    if (!target.params) return other_threshold_db;
    switch (modem_class(*target.params)) {
    case ModemClass::css:
        return css_threshold_db;
    case ModemClass::fsk:
        return fsk_threshold_db;
    case ModemClass::dbpsk:
        return dbpsk_threshold_db;
    }
    return other_threshold_db;
}

bool co_channel(const AbstractTransmission &a, const AbstractTransmission &b) noexcept {
    return std::abs(a.channel_offset_hz - b.channel_offset_hz) < (a.bandwidth_hz + b.bandwidth_hz) / 2;
}

double spectral_weight(const AbstractTransmission &target, const AbstractTransmission &interferer) noexcept {
    if (!co_channel(target, interferer) || css_sf_differs(target, interferer) || !(target.bandwidth_hz > 0)) {
        return 0.0;
    }
    return std::min(1.0, band_overlap_hz(target, interferer) / target.bandwidth_hz);
}

double sinr_db(const AbstractTransmission &target, const std::vector<AbstractTransmission> &others,
               const NoiseSpec &noise) {
    const double p_target = db_to_linear(target.rx_power_dbm);
    const double p_noise = noise.enabled ? db_to_linear(noise.power_dbm(target.bandwidth_hz)) : 0.0;

    struct Active {
        double from, to, power;
    };
    std::vector<Active> active;
    std::vector<double> edges{target.start_time_s, target.end_time_s()};
    for (const auto &o : others) {
        const double w = spectral_weight(target, o);
        if (w <= 0.0 || !time_overlap(target, o)) continue;
        const double from = std::max(o.start_time_s, target.start_time_s);
        const double to = std::min(o.end_time_s(), target.end_time_s());
        active.push_back({from, to, w * db_to_linear(o.rx_power_dbm)});
        edges.push_back(from);
        edges.push_back(to);
    }
    std::sort(edges.begin(), edges.end());

    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double a = edges[k], b = edges[k + 1];
        if (!(b - a > kTouch_s)) continue;
        double sum = 0.0;
        for (const auto &x : active) {
            if (x.from < b && x.to > a) sum += x.power;
        }
        worst = std::max(worst, sum);
    }
    return 10.0 * std::log10(p_target / (worst + p_noise));
}

bool decide_packet(const AbstractTransmission &target, const std::vector<AbstractTransmission> &others,
                   const SinrRule &rule, const NoiseSpec &noise) {
    return sinr_db(target, others, noise) >= rule.threshold_db(target);
}

std::string_view interference_class_name(InterferenceClass c) noexcept {
    switch (c) {
    case InterferenceClass::clean:
        return "clean";
    case InterferenceClass::adjacent_channel:
        return "adjacent_channel";
    case InterferenceClass::inter_sf:
        return "inter_sf";
    case InterferenceClass::co_channel:
        return "co_channel";
    case InterferenceClass::cross_technology:
        return "cross_technology";
    }
    return "unknown";
}

InterferenceClass classify(const AbstractTransmission &target, const std::vector<AbstractTransmission> &others) {
    auto cls = InterferenceClass::clean;
    for (const auto &o : others) {
        if (!time_overlap(target, o)) continue;
        InterferenceClass c = InterferenceClass::clean;
        if (co_channel(target, o)) {
            if (!same_class(target, o)) {
                c = InterferenceClass::cross_technology;
            } else {
                c = css_sf_differs(target, o) ? InterferenceClass::inter_sf : InterferenceClass::co_channel;
            }
        } else if (std::abs(target.channel_offset_hz - o.channel_offset_hz) < target.bandwidth_hz + o.bandwidth_hz) {
            c = InterferenceClass::adjacent_channel;
        }
        cls = std::max(cls, c);
    }
    return cls;
}

Confusion &Confusion::operator+=(const Confusion &o) noexcept {
    both_deliver += o.both_deliver;
    both_lose += o.both_lose;
    baseline_only += o.baseline_only;
    waveform_only += o.waveform_only;
    return *this;
}

Comparison compare_runs(const std::vector<PacketVerdict> &waveform, const std::vector<PacketVerdict> &baseline) {
    if (waveform.size() != baseline.size()) {
        throw validation_error("timeline", "waveform run has " + std::to_string(waveform.size()) +
                                               " packets, baseline has " + std::to_string(baseline.size()));
    }
    Comparison out;
    for (std::size_t i = 0; i < waveform.size(); ++i) {
        const auto &w = waveform[i];
        const auto &b = baseline[i];
        if (w.key != b.key) {
            throw validation_error("timeline", "packet " + std::to_string(i) + " differs between runs");
        }
        Confusion c;
        if (w.delivered && b.delivered) {
            c.both_deliver = 1;
        } else if (!w.delivered && !b.delivered) {
            c.both_lose = 1;
        } else if (b.delivered) {
            c.baseline_only = 1;
        } else {
            c.waveform_only = 1;
        }
        out.overall += c;
        out.by_class[std::string(interference_class_name(w.cls))] += c;
    }
    return out;
}

} // namespace iqsim
