#include "iqsim/engine.hpp"

#include "iqsim/modem/params.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <thread>

namespace iqsim {

Scenario benchmark_scenario(std::size_t devices, double duration_s, const ResamplerSpec &resampler,
                            std::size_t block_samples) {
    Scenario s;
    s.name = fmt::format("bench_{}", devices);
    s.description = "saturating CSS SF7 load";
    s.seed = 1;
    s.duration_s = duration_s;
    s.calibration.full_scale_dbm = -50.0;
    s.resampler = resampler;
    s.block_samples = block_samples;
    s.baseline.enabled = false;

    const CssParams css;
    const double frame = frame_duration_s(css, 16);
    const double spacing = 187500.0;
    const double lowest = -spacing * (kBenchChannels - 1) / 2.0;
    const double tx = 14.0;
    const double rx = -100.0;
    const auto &m = s.channel_model;
    const double r = m.reference_distance_m * std::pow(10.0, (tx - rx - m.reference_loss_db) / (10.0 * m.exponent));

    for (std::size_t i = 0; i < devices; ++i) {
        DeviceSpec d;
        d.id = static_cast<std::uint32_t>(i + 1);
        d.modem = css;
        d.carrier_offset_hz = lowest + spacing * static_cast<double>(i % kBenchChannels);
        d.tx_power_dbm = tx;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(devices);
        d.position = {r * std::cos(angle), r * std::sin(angle)};
        d.traffic.kind = TrafficSpec::Kind::periodic;
        d.traffic.interval_s = frame;
        // Devices sharing a channel are staggered so they do not start in lockstep.
        d.traffic.first_s = frame * static_cast<double>((i / kBenchChannels) % 13) / 13.0;
        d.payload.kind = PayloadSpec::Kind::random;
        d.payload.length = 16;
        s.devices.push_back(d);
    }
    GatewaySpec g;
    g.id = 1;
    for (int c = 0; c < kBenchChannels; ++c) g.listeners.push_back({lowest + spacing * c, css});
    s.gateways.push_back(g);
    return s;
}

std::string cpu_model() {
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                auto v = line.substr(colon + 1);
                v.erase(0, v.find_first_not_of(' '));
                return v;
            }
        }
    }
    return "unknown";
}

std::string bench_csv(const std::vector<BenchRow> &rows) {
    std::string out = "csv_version,cpu_model,logical_cpus,workers,device_count,taps_per_phase,block_samples,"
                      "repetition,emulated_seconds,wall_seconds,busy_seconds,real_time_factor,underruns\n";
    const std::string cpu = cpu_model();
    std::string quoted = "\"";
    for (char c : cpu) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    const unsigned cpus = std::thread::hardware_concurrency();
    for (const auto &r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.4f},{}\n", kCsvVersion, quoted, cpus,
                           r.report.workers, r.device_count, r.taps_per_phase, r.block_samples, r.repetition,
                           r.report.emulated_seconds, r.report.wall_seconds, r.report.busy_seconds,
                           r.report.real_time_factor, r.report.underruns);
    }
    return out;
}

} // namespace iqsim
