#include "iqsim/engine.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace iqsim {

using json = nlohmann::ordered_json;

namespace {

json confusion_json(const Confusion &c) {
    return {{"both_deliver", c.both_deliver},
            {"both_lose", c.both_lose},
            {"baseline_only", c.baseline_only},
            {"waveform_only", c.waveform_only},
            {"disagreement_rate", c.disagreement_rate()}};
}

std::string opt_num(const std::optional<double> &v, const char *format = "{:.3f}") {
    return v ? fmt::format(fmt::runtime(format), *v) : std::string();
}

} // namespace

std::string report_to_json(const RunReport &r, int indent) {
    json j;
    j["scenario"] = r.scenario_name;
    j["seed"] = r.seed;
    j["mode"] = r.mode == RunMode::batch ? "batch" : "realtime";
    j["workers"] = r.workers;
    j["provisioned_devices"] = r.provisioned_devices;
    j["events"] = r.events;
    j["peak_simultaneous_bursts"] = r.peak_simultaneous_bursts;
    j["stream_samples"] = r.stream_samples;
    j["blocks"] = r.blocks;
    j["timing"] = {{"emulated_seconds", r.emulated_seconds},
                   {"wall_seconds", r.wall_seconds},
                   {"busy_seconds", r.busy_seconds},
                   {"real_time_factor", r.real_time_factor},
                   {"underruns", r.underruns}};
    j["diagnostics"] = {{"ghosts", r.ghosts},
                        {"unmatched_detections", r.unmatched_detections},
                        {"rejected_bursts", r.rejected_bursts},
                        {"clamped_distances", r.clamped_distances},
                        {"clipped_components", r.clipped_components}};
    json links = json::array();
    for (const auto &l : r.links) {
        links.push_back({{"device_id", l.device_id},
                         {"gateway_id", l.gateway_id},
                         {"sent", l.counters.sent},
                         {"detected", l.counters.detected},
                         {"crc_ok", l.counters.crc_ok},
                         {"per", l.counters.per()}});
    }
    j["links"] = links;
    if (r.comparison) {
        json by_class = json::object();
        for (const auto &[name, c] : r.comparison->by_class) by_class[name] = confusion_json(c);
        j["baseline_comparison"] = {{"overall", confusion_json(r.comparison->overall)}, {"by_class", by_class}};
    } else {
        j["baseline_comparison"] = nullptr;
    }
    j["config"] = json::parse(r.config_json);
    return j.dump(indent);
}

std::string packets_csv(const RunReport &r) {
    std::string out =
        "csv_version,event_index,device_id,gateway_id,listener,modem,carrier_offset_hz,start_time_s,payload_len,"
        "rx_power_dbm,interference_class,detected,crc_ok,rssi_dbm,waveform_delivered,baseline_sinr_db,"
        "baseline_delivered\n";
    for (const auto &p : r.packets) {
        out += fmt::format("{},{},{},{},{},{},{:.1f},{:.9f},{},{:.3f},{},{},{},{},{},{},{}\n", kCsvVersion,
                           p.event_index, p.device_id, p.gateway_id, p.listener, p.modem, p.carrier_offset_hz,
                           p.start_time_s, p.payload_len, p.rx_power_dbm, interference_class_name(p.interference),
                           int(p.waveform.detected), int(p.waveform.crc_ok), opt_num(p.waveform.rssi_dbm),
                           int(p.waveform.crc_ok), opt_num(p.baseline_sinr_db),
                           p.baseline_delivered ? std::to_string(int(*p.baseline_delivered)) : std::string());
    }
    return out;
}

std::string links_csv(const RunReport &r) {
    std::string out = "csv_version,device_id,gateway_id,sent,detected,crc_ok,per\n";
    for (const auto &l : r.links) {
        out += fmt::format("{},{},{},{},{},{},{:.6f}\n", kCsvVersion, l.device_id, l.gateway_id, l.counters.sent,
                           l.counters.detected, l.counters.crc_ok, l.counters.per());
    }
    return out;
}

} // namespace iqsim
