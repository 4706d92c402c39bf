// iqsim: command-line front end for scenarios, benchmarks and IQ files.

#include "iqsim/engine.hpp"
#include "iqsim/errors.hpp"
#include "iqsim/io.hpp"
#include "iqsim/log.hpp"
#include "iqsim/mixer.hpp"
#include "iqsim/modem/modem.hpp"
#include "iqsim/rng.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#ifndef IQSIM_SCENARIO_DIR
#define IQSIM_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace iqsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    bool validate_only = false;
};

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

std::string to_hex(const std::vector<std::uint8_t> &bytes) {
    std::string out;
    for (auto b : bytes) out += fmt::format("{:02x}", b);
    return out;
}

std::vector<std::uint8_t> from_hex(const std::string &hex) {
    if (hex.size() % 2 != 0) throw validation_error("payload", "hex payload needs an even number of digits");
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        std::size_t used = 0;
        const int v = std::stoi(hex.substr(i, 2), &used, 16);
        if (used != 2) throw validation_error("payload", "bad hex digit near position " + std::to_string(i));
        out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

// Modem chosen by flags, shared by record and replay.
struct ModemFlags {
    std::string type = "css";
    int sf = 7;
    double bandwidth = 125000.0;

    void add(CLI::App *cmd) {
        cmd->add_option("--modem", type, "css, fsk or dbpsk")->check(CLI::IsMember({"css", "fsk", "dbpsk"}));
        cmd->add_option("--sf", sf, "CSS spreading factor (7-12)");
        cmd->add_option("--bandwidth", bandwidth, "CSS chirp bandwidth in Hz");
    }
    ModemParams params() const {
        ModemParams p;
        if (type == "fsk") {
            p = FskParams{};
        } else if (type == "dbpsk") {
            p = DbpskParams{};
        } else {
            CssParams c;
            c.spreading_factor = sf;
            c.chirp_bandwidth_hz = bandwidth;
            p = c;
        }
        validate(p);
        return p;
    }
};

Scenario load_with_overrides(const std::string &path, const Globals &g) {
    Scenario s = load_scenario(path);
    if (g.seed) s.seed = *g.seed;
    return s;
}

// ---------------------------------------------------------------- run

int cmd_run(const std::string &path, const std::string &mode, const Globals &g) {
    const Scenario s = load_with_overrides(path, g);
    if (g.validate_only) {
        fmt::print("{}: valid ({} devices, {} gateways, {:.3f} s)\n", s.name, s.devices.size(), s.gateways.size(),
                   s.duration_s);
        return kExitOk;
    }
    RunOptions opt;
    opt.mode = mode == "realtime" ? RunMode::realtime : RunMode::batch;
    opt.workers = g.workers;
    opt.out_dir = g.out;
    fs::create_directories(g.out);
    const auto result = run(s, opt);
    const auto &r = result.report;
    write_text(fs::path(g.out) / "report.json", report_to_json(r));
    write_text(fs::path(g.out) / "packets.csv", packets_csv(r));
    write_text(fs::path(g.out) / "links.csv", links_csv(r));

    fmt::print("{} (seed {}): {} events over {:.3f} s, RTF {:.2f}, underruns {}\n", r.scenario_name, r.seed, r.events,
               r.emulated_seconds, r.real_time_factor, r.underruns);
    fmt::print("{:>8} {:>8} {:>6} {:>8} {:>6} {:>7}\n", "device", "gateway", "sent", "detected", "crc_ok", "per");
    for (const auto &l : r.links) {
        fmt::print("{:>8} {:>8} {:>6} {:>8} {:>6} {:>7.3f}\n", l.device_id, l.gateway_id, l.counters.sent,
                   l.counters.detected, l.counters.crc_ok, l.counters.per());
    }
    if (r.comparison) {
        const auto &c = r.comparison->overall;
        fmt::print("baseline: both deliver {}, both lose {}, baseline only {}, waveform only {} (disagreement {:.3f})\n",
                   c.both_deliver, c.both_lose, c.baseline_only, c.waveform_only, c.disagreement_rate());
    }
    fmt::print("ghosts {}, unmatched detections {}; reports in {}\n", r.ghosts, r.unmatched_detections, g.out);
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchFlags {
    std::vector<std::size_t> counts{1, 10, 50, 100};
    std::vector<int> taps{32, 16};
    int repetitions = 3;
    double duration = 5.0;
    std::size_t block = 65536;
    std::string mode = "realtime";
};

int cmd_bench(const BenchFlags &b, const Globals &g) {
    if (b.counts.empty() || !std::is_sorted(b.counts.begin(), b.counts.end()) ||
        std::adjacent_find(b.counts.begin(), b.counts.end()) != b.counts.end() || b.counts.front() == 0) {
        throw validation_error("counts", "device counts must be positive and strictly ascending");
    }
    if (b.repetitions < 3) throw validation_error("repetitions", "at least 3 repetitions are required");
    if (!(b.duration > 0.0)) throw validation_error("duration", "duration must be positive");
    if (g.validate_only) {
        fmt::print("bench: valid\n");
        return kExitOk;
    }
    fs::create_directories(g.out);
    std::vector<BenchRow> rows;
    fmt::print("cpu: {} ({} logical), workers {}\n", cpu_model(), std::thread::hardware_concurrency(), g.workers);
    for (const int taps : b.taps) {
        ResamplerSpec rs;
        rs.taps_per_phase = taps;
        for (const auto n : b.counts) {
            std::vector<double> rtf;
            for (int rep = 0; rep < b.repetitions; ++rep) {
                RunOptions opt;
                opt.mode = b.mode == "batch" ? RunMode::batch : RunMode::realtime;
                opt.workers = g.workers;
                auto s = benchmark_scenario(n, b.duration, rs, b.block);
                if (g.seed) s.seed = *g.seed;
                BenchRow row{n, taps, b.block, rep, run(s, opt).report};
                rtf.push_back(row.report.real_time_factor);
                rows.push_back(std::move(row));
            }
            std::sort(rtf.begin(), rtf.end());
            fmt::print("taps {:>3}  devices {:>4}  median RTF {:7.3f}  (min {:.3f}, max {:.3f})\n", taps, n,
                       rtf[rtf.size() / 2], rtf.front(), rtf.back());
        }
    }
    write_text(fs::path(g.out) / "bench.csv", bench_csv(rows));
    fmt::print("wrote {}\n", (fs::path(g.out) / "bench.csv").string());
    return kExitOk;
}

// ---------------------------------------------------------------- scenarios

int cmd_scenarios(const std::string &dir, const Globals &g) {
    std::vector<fs::path> files;
    for (const auto &e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    int rc = kExitOk;
    for (const auto &f : files) {
        try {
            const auto s = load_scenario(f);
            fmt::print("{:<22} {}\n", s.name, s.description);
            if (g.validate_only) fmt::print("{:<22} valid: {}\n", "", f.string());
        } catch (const validation_error &e) {
            fmt::print("{:<22} INVALID at {}: {}\n", f.stem().string(), e.path(), e.what());
            rc = kExitInvalid;
        }
    }
    return rc;
}

// ---------------------------------------------------------------- io-stream commands

struct RecordFlags {
    ModemFlags modem;
    std::string payload_hex;
    std::size_t length = 16;
    double rate = 0.0;
    double offset = 0.0;
    double center = 868.1e6;
    std::string scenario;
    std::uint32_t gateway = 0;
    std::string output;
};

int cmd_record(const RecordFlags &f, const Globals &g) {
    if (!f.scenario.empty()) {
        // Record one gateway's composite stream by running the scenario with file delivery.
        Scenario s = load_with_overrides(f.scenario, g);
        bool found = false;
        for (auto &gw : s.gateways) {
            if (gw.id == f.gateway) {
                gw.delivery = {DeliverySpec::Kind::file, fs::absolute(f.output).string()};
                found = true;
            }
        }
        if (!found) throw validation_error("gateway", "scenario has no gateway " + std::to_string(f.gateway));
        if (g.validate_only) return kExitOk;
        RunOptions opt;
        opt.workers = g.workers;
        const auto r = run(s, opt).report;
        fmt::print("recorded gateway {}: {} samples at {} Hz to {}\n", f.gateway, r.stream_samples,
                   s.band.stream_rate_hz, f.output);
        return kExitOk;
    }
    const ModemParams p = f.modem.params();
    std::vector<std::uint8_t> payload;
    if (!f.payload_hex.empty()) {
        payload = from_hex(f.payload_hex);
    } else {
        auto rng = Rng(g.seed.value_or(1)).substream("payload", 0);
        payload.resize(f.length);
        for (auto &b : payload) b = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
    }
    const Frame frame = Frame::make(payload);
    IQBuffer wave = modulate(frame, p);
    if (f.rate > 0.0 && f.rate != wave.sample_rate_hz()) {
        MixerConfig cfg;
        cfg.stream_rate_hz = f.rate;
        cfg.noise.enabled = false;
        const PlacedBurst b{wave, f.offset, 0, 0};
        if (!burst_contained(b, f.rate)) throw validation_error("offset", "signal does not fit in the output band");
        const auto end = static_cast<std::int64_t>(std::ceil(wave.duration_s() * f.rate));
        wave = mix({b}, cfg, 0, end, Rng(0).substream("noise", 0));
    }
    if (g.validate_only) return kExitOk;
    write_iq_file(wave, f.output, f.center);
    fmt::print("wrote {} samples at {} Hz ({} payload {}) to {}\n", wave.size(), wave.sample_rate_hz(), describe(p),
               to_hex(payload), f.output);
    return kExitOk;
}

int cmd_replay(const std::string &file, const ModemFlags &m, double offset, double full_scale) {
    const ModemParams p = m.params();
    const auto rec = read_iq_file(file);
    IQBuffer ch = rec.samples;
    if (ch.sample_rate_hz() != native_rate_hz(p) || offset != 0.0) {
        ch = channelize(rec.samples, offset, native_rate_hz(p));
    }
    PowerCalibration cal{full_scale};
    const auto outcomes = demodulate(ch, p, cal);
    fmt::print("start_time_s,detected,crc_ok,rssi_dbm,payload_hex\n");
    for (const auto &o : outcomes) {
        fmt::print("{:.6f},{},{},{:.2f},{}\n", static_cast<double>(o.start_sample) / ch.sample_rate_hz(),
                   int(o.detected), int(o.crc_ok), o.rssi_dbm, to_hex(o.payload_decoded));
    }
    return kExitOk;
}

int cmd_serve(const std::string &file, const std::string &endpoint, std::size_t block, bool realtime) {
    const auto rec = read_iq_file(file);
    const auto samples = rec.samples.samples();
    auto sink = open_sink(endpoint);
    StreamServer server(*sink, rec.samples.sample_rate_hz(), realtime);
    for (std::size_t at = 0; at < samples.size(); at += block) {
        const auto n = std::min(block, samples.size() - at);
        server.send(IQBuffer(std::vector<cf64>(samples.begin() + static_cast<std::ptrdiff_t>(at),
                                               samples.begin() + static_cast<std::ptrdiff_t>(at + n)),
                             rec.samples.sample_rate_hz(), rec.samples.start_sample() + static_cast<std::int64_t>(at)));
    }
    server.finish();
    fmt::print("served {} frames ({} samples) to {}\n", server.frames_sent(), samples.size(), endpoint);
    return kExitOk;
}

int cmd_consume(const std::string &endpoint, double rate, const std::string &output) {
    auto src = open_source(endpoint);
    StreamConsumer consumer(*src, rate);
    std::optional<IqFileWriter> writer;
    std::uint64_t total = 0;
    while (auto b = consumer.next()) {
        if (!output.empty()) {
            if (!writer) writer.emplace(output, rate, 0.0, b->start_sample());
            writer->append(b->samples());
        }
        total += b->size();
    }
    if (writer) writer->close();
    fmt::print("received {} frames, {} samples\n", consumer.frames_read(), total);
    return kExitOk;
}

int cmd_inspect(const std::string &file, double full_scale) {
    const auto rec = read_iq_file(file);
    const auto &m = rec.meta;
    double peak = 0.0;
    for (const auto &v : rec.samples.samples()) peak = std::max(peak, std::abs(v));
    const PowerCalibration cal{full_scale};
    fmt::print("file:              {}\n", file);
    fmt::print("format:            {}\n", m.format);
    fmt::print("schema_version:    {}\n", m.schema_version);
    fmt::print("sample_rate_hz:    {}\n", m.sample_rate_hz);
    fmt::print("center_frequency:  {}\n", m.center_frequency_hz);
    fmt::print("start_sample:      {}\n", m.start_sample);
    fmt::print("samples:           {}\n", rec.samples.size());
    fmt::print("bytes:             {}\n", 4 * rec.samples.size());
    fmt::print("duration_s:        {:.6f}\n", rec.samples.duration_s());
    if (!rec.samples.empty()) {
        fmt::print("mean_power_dbfs:   {:.2f}\n", buffer_power_dbm(rec.samples));
        fmt::print("mean_power_dbm:    {:.2f} (full scale {} dBm)\n", buffer_power_dbm(rec.samples, cal), full_scale);
        fmt::print("peak_magnitude:    {:.5f}\n", peak);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    init_logging();
    CLI::App app{"iqsim: waveform-level IoT network emulator"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Override the scenario seed");
    app.add_option("--out", g.out, "Output directory (reports, benchmark CSV)");
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--validate-only", g.validate_only, "Check inputs and exit without writing sample data");

    std::string scenario_path, mode = "batch";
    auto *run_cmd = app.add_subcommand("run", "Run a scenario and write report.json, packets.csv, links.csv");
    run_cmd->add_option("scenario,--scenario", scenario_path, "Scenario JSON file")->required();
    run_cmd->add_option("--mode", mode, "batch or realtime")->check(CLI::IsMember({"batch", "realtime"}));

    BenchFlags bench;
    auto *bench_cmd = app.add_subcommand("bench", "Real-time factor versus device count (writes bench.csv)");
    bench_cmd->add_option("--counts", bench.counts, "Device counts, ascending")->delimiter(',');
    bench_cmd->add_option("--taps", bench.taps, "Resampler taps per phase to sweep")->delimiter(',');
    bench_cmd->add_option("--repetitions", bench.repetitions, "Runs per point (>= 3)");
    bench_cmd->add_option("--duration", bench.duration, "Emulated seconds per run");
    bench_cmd->add_option("--block", bench.block, "Block size in samples");
    bench_cmd->add_option("--mode", bench.mode, "realtime (default) or batch")
        ->check(CLI::IsMember({"batch", "realtime"}));

    std::string scenario_dir = IQSIM_SCENARIO_DIR;
    auto *list_cmd = app.add_subcommand("scenarios", "List the bundled scenarios");
    list_cmd->add_option("--dir", scenario_dir, "Scenario directory");

    RecordFlags rec;
    auto *record_cmd = app.add_subcommand("record", "Write a modulated frame, or a gateway stream, as cs16");
    record_cmd->add_option("output", rec.output, "Output .cs16 path")->required();
    rec.modem.add(record_cmd);
    record_cmd->add_option("--payload", rec.payload_hex, "Payload as hex");
    record_cmd->add_option("--length", rec.length, "Random payload length when --payload is absent");
    record_cmd->add_option("--rate", rec.rate, "Output sample rate (default: modem native rate)");
    record_cmd->add_option("--offset", rec.offset, "Carrier offset within the output band, Hz");
    record_cmd->add_option("--center", rec.center, "Center frequency written to the sidecar");
    record_cmd->add_option("--scenario", rec.scenario, "Record a gateway stream from this scenario instead");
    record_cmd->add_option("--gateway", rec.gateway, "Gateway id for --scenario");

    std::string file;
    ModemFlags replay_modem;
    double replay_offset = 0.0, full_scale = 0.0;
    auto *replay_cmd = app.add_subcommand("replay", "Demodulate a cs16 recording and print the outcomes");
    replay_cmd->add_option("file", file, "Recording")->required()->check(CLI::ExistingFile);
    replay_modem.add(replay_cmd);
    replay_cmd->add_option("--offset", replay_offset, "Channel offset within the recording, Hz");
    replay_cmd->add_option("--full-scale", full_scale, "dBm of a full-scale sample (RSSI calibration)");

    std::string endpoint;
    std::size_t block = 65536;
    bool realtime = false;
    auto *serve_cmd = app.add_subcommand("serve", "Stream a cs16 recording to one consumer");
    serve_cmd->add_option("file", file, "Recording")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--endpoint", endpoint, "tcp://host:port or a path (named pipe)")->required();
    serve_cmd->add_option("--block", block, "Samples per frame")->check(CLI::PositiveNumber);
    serve_cmd->add_flag("--realtime", realtime, "Release frames at their wall-clock deadline");

    double consume_rate = 1.5e6;
    std::string consume_out;
    auto *consume_cmd = app.add_subcommand("consume", "Receive a served stream, optionally saving it");
    consume_cmd->add_option("--endpoint", endpoint, "tcp://host:port or a path")->required();
    consume_cmd->add_option("--rate", consume_rate, "Stream sample rate");
    consume_cmd->add_option("--save", consume_out, "Write the received samples to this .cs16");

    auto *inspect_cmd = app.add_subcommand("inspect", "Print a recording's sidecar, duration and power");
    inspect_cmd->add_option("file", file, "Recording")->required()->check(CLI::ExistingFile);
    inspect_cmd->add_option("--full-scale", full_scale, "dBm of a full-scale sample");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }

    try {
        if (*run_cmd) return cmd_run(scenario_path, mode, g);
        if (*bench_cmd) return cmd_bench(bench, g);
        if (*list_cmd) return cmd_scenarios(scenario_dir, g);
        if (*record_cmd) return cmd_record(rec, g);
        if (g.validate_only) return kExitOk;
        if (*replay_cmd) return cmd_replay(file, replay_modem, replay_offset, full_scale);
        if (*serve_cmd) return cmd_serve(file, endpoint, block, realtime);
        if (*consume_cmd) return cmd_consume(endpoint, consume_rate, consume_out);
        if (*inspect_cmd) return cmd_inspect(file, full_scale);
    } catch (const validation_error &e) {
        std::cerr << "invalid " << e.path() << ": " << e.what() << "\n";
        return kExitInvalid;
    } catch (const domain_error &e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
