#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iqsim/baseline.hpp"
#include "iqsim/channel.hpp"
#include "iqsim/iq_core.hpp"
#include "iqsim/mixer.hpp"
#include "iqsim/modem/demodulator.hpp"
#include "iqsim/modem/params.hpp"

namespace iqsim {

// ---------------------------------------------------------------- scenario

inline constexpr int kScenarioSchemaVersion = 1;

struct Position {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Position &) const = default;
};

double distance_m(const Position &a, const Position &b) noexcept;

struct TrafficSpec {
    enum class Kind { periodic, poisson, explicit_times };
    Kind kind = Kind::periodic;
    double interval_s = 1.0;
    double jitter_s = 0.0;  // periodic: each event delayed by U[0, jitter)
    double first_s = 0.0;
    double rate_per_s = 0.0;
    std::vector<double> times_s;

    // `path` prefixes error locations, e.g. "devices[2].traffic".
    void validate(const std::string &path, double duration_s) const;
    bool operator==(const TrafficSpec &) const = default;
};

struct PayloadSpec {
    enum class Kind { fixed, random };
    Kind kind = Kind::random;
    std::vector<std::uint8_t> bytes;  // fixed
    std::size_t length = 16;          // random

    void validate(const std::string &path) const;
    std::size_t size() const noexcept { return kind == Kind::fixed ? bytes.size() : length; }
    bool operator==(const PayloadSpec &) const = default;
};

// Transmits a cs16 recording instead of a modulated frame at every traffic event.
struct ReplaySpec {
    std::string path;
    double gain_db = 0.0;
    bool operator==(const ReplaySpec &) const = default;
};

struct DeviceSpec {
    std::uint32_t id = 0;
    Position position;
    std::optional<ModemParams> modem;  // exactly one of modem / replay
    std::optional<ReplaySpec> replay;
    double carrier_offset_hz = 0.0;
    double tx_power_dbm = 14.0;
    ImpairmentSpec impairments;
    TrafficSpec traffic;
    PayloadSpec payload;
    bool operator==(const DeviceSpec &) const = default;
};

struct ListenerSpec {
    double carrier_offset_hz = 0.0;
    ModemParams modem;
    bool operator==(const ListenerSpec &) const = default;
};

struct DeliverySpec {
    enum class Kind { in_process, file, socket };
    Kind kind = Kind::in_process;
    std::string target;  // file path (relative to the output directory) or tcp://host:port
    bool operator==(const DeliverySpec &) const = default;
};

struct GatewaySpec {
    std::uint32_t id = 0;
    Position position;
    std::vector<ListenerSpec> listeners;
    DeliverySpec delivery;
    bool operator==(const GatewaySpec &) const = default;
};

struct BaselineSpec {
    bool enabled = true;
    SinrRule rule;
    bool operator==(const BaselineSpec &o) const {
        return enabled == o.enabled && rule.css_threshold_db == o.rule.css_threshold_db &&
               rule.fsk_threshold_db == o.rule.fsk_threshold_db &&
               rule.dbpsk_threshold_db == o.rule.dbpsk_threshold_db &&
               rule.other_threshold_db == o.rule.other_threshold_db;
    }
};

struct Scenario {
    int schema_version = kScenarioSchemaVersion;
    std::string name;
    std::string description;
    std::uint64_t seed = 1;
    double duration_s = 1.0;
    BandSpec band;
    PowerCalibration calibration;
    NoiseSpec noise;
    LogDistanceModel channel_model;
    ResamplerSpec resampler;
    std::size_t block_samples = 65536;
    BaselineSpec baseline;
    std::vector<DeviceSpec> devices;
    std::vector<GatewaySpec> gateways;

    // Throws validation_error with the path of the first offending field.
    void validate() const;
    const DeviceSpec &device(std::uint32_t id) const;
    bool operator==(const Scenario &o) const;
};

// Nested JSON document, `schema_version` 1. Unknown keys are rejected.
Scenario parse_scenario(const std::string &json_text);
Scenario load_scenario(const std::filesystem::path &path);
std::string scenario_to_json(const Scenario &s, int indent = 2);

// ---------------------------------------------------------------- timeline

struct TimelineEvent {
    std::size_t index = 0;  // position in the sorted timeline
    std::uint32_t device_id = 0;
    double start_time_s = 0.0;
    std::vector<std::uint8_t> payload;
    bool operator==(const TimelineEvent &) const = default;
};

// Sorted by (time, device id). Deterministic in the scenario seed.
std::vector<TimelineEvent> expand_timeline(const Scenario &s);

// ---------------------------------------------------------------- scoring

// One packet a listener should have received.
struct TruthPacket {
    std::size_t event_index = 0;
    std::uint32_t device_id = 0;
    std::uint32_t gateway_id = 0;
    std::size_t listener = 0;
    double time_s = 0.0;       // arrival at the gateway
    double tolerance_s = 0.0;  // one symbol
    std::vector<std::uint8_t> payload;
};

// A demodulator outcome tagged with where and when it was heard.
struct ListenerOutcome {
    PacketOutcome outcome;
    std::size_t listener = 0;
    double time_s = 0.0;
};

struct PacketResult {
    bool detected = false;
    bool crc_ok = false;
    std::optional<double> rssi_dbm;
};

struct LinkCounters {
    std::uint64_t sent = 0;
    std::uint64_t detected = 0;
    std::uint64_t crc_ok = 0;
    double per() const noexcept {
        return sent ? 1.0 - static_cast<double>(crc_ok) / static_cast<double>(sent) : 0.0;
    }
    bool operator==(const LinkCounters &) const = default;
};

struct ScoreResult {
    std::vector<PacketResult> packets;  // parallel to the truth list
    std::map<std::pair<std::uint32_t, std::uint32_t>, LinkCounters> links;  // (device, gateway)
    std::uint64_t ghosts = 0;               // crc_ok outcomes matching no truth packet
    std::uint64_t unmatched_detections = 0;  // failed-CRC outcomes matching no truth packet
};

// Greedy unique matching per (gateway, listener): candidate pairs within the
// truth tolerance, requiring payload equality when the outcome passed CRC,
// taken in order of increasing |time delta|. Matched outcomes get device_id.
ScoreResult score_outcomes(const std::vector<TruthPacket> &truth, std::vector<ListenerOutcome> &outcomes);

// ---------------------------------------------------------------- run

enum class RunMode { batch, realtime };

struct RunOptions {
    RunMode mode = RunMode::batch;
    unsigned workers = 1;
    // Where file deliveries are written; relative targets resolve against it.
    std::filesystem::path out_dir = ".";
    // Keep every gateway stream in memory (tests, small scenarios).
    bool capture_streams = false;
};

struct PacketRecord {
    std::size_t event_index = 0;
    std::uint32_t device_id = 0;
    std::uint32_t gateway_id = 0;
    std::size_t listener = 0;
    std::string modem;
    double carrier_offset_hz = 0.0;
    double start_time_s = 0.0;
    std::size_t payload_len = 0;
    double rx_power_dbm = 0.0;
    InterferenceClass interference = InterferenceClass::clean;
    PacketResult waveform;
    std::optional<double> baseline_sinr_db;
    std::optional<bool> baseline_delivered;
};

struct LinkRecord {
    std::uint32_t device_id = 0;
    std::uint32_t gateway_id = 0;
    LinkCounters counters;
};

struct RunReport {
    std::string scenario_name;
    std::uint64_t seed = 0;
    RunMode mode = RunMode::batch;
    unsigned workers = 1;
    std::string config_json;  // fully resolved scenario

    std::size_t provisioned_devices = 0;
    std::size_t events = 0;
    std::size_t peak_simultaneous_bursts = 0;
    std::int64_t stream_samples = 0;
    std::size_t blocks = 0;

    double emulated_seconds = 0.0;
    double wall_seconds = 0.0;
    double busy_seconds = 0.0;  // wall time minus pacing sleeps
    double real_time_factor = 0.0;
    std::uint64_t underruns = 0;

    std::uint64_t ghosts = 0;
    std::uint64_t unmatched_detections = 0;
    std::uint64_t rejected_bursts = 0;
    std::uint64_t clamped_distances = 0;
    std::uint64_t clipped_components = 0;

    std::vector<LinkRecord> links;
    std::vector<PacketRecord> packets;
    std::optional<Comparison> comparison;
};

struct RunResult {
    RunReport report;
    std::vector<ListenerOutcome> outcomes;
    // Gateway streams by gateway id (only with capture_streams; co-located
    // gateways share one stream and each gets a copy).
    std::map<std::uint32_t, std::vector<cf64>> streams;
};

RunResult run(const Scenario &s, const RunOptions &opts = {});

// Largest number of [start, end) intervals covering one instant.
std::size_t peak_simultaneous(std::vector<std::pair<double, double>> intervals);

// ---------------------------------------------------------------- reports

inline constexpr int kCsvVersion = 1;

std::string report_to_json(const RunReport &r, int indent = 2);
// Versioned header row, one row per ground-truth packet. No timing fields,
// so equal runs give byte-identical files.
std::string packets_csv(const RunReport &r);
std::string links_csv(const RunReport &r);

// ---------------------------------------------------------------- benchmark

// The shipped saturating load: `devices` CSS SF7 transmitters send 16-byte
// frames back to back, spread round-robin over 8 channels 187.5 kHz apart in a
// 1.5 MHz band; one gateway listens on all 8. Every device arrives at -100 dBm.
inline constexpr int kBenchChannels = 8;
Scenario benchmark_scenario(std::size_t devices, double duration_s, const ResamplerSpec &resampler = {},
                            std::size_t block_samples = 65536);

struct BenchRow {
    std::size_t device_count = 0;
    int taps_per_phase = 0;
    std::size_t block_samples = 0;
    int repetition = 0;
    RunReport report;
};

// "model name" from /proc/cpuinfo, or "unknown".
std::string cpu_model();
std::string bench_csv(const std::vector<BenchRow> &rows);

} // namespace iqsim
