#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iqsim/iq_core.hpp"
#include "iqsim/modem/params.hpp"

namespace iqsim {

// Packet-level view of one transmission as a gateway perceives it. No
// samples: power comes from the channel formulas, duration from the modem
// timing formulas.
struct AbstractTransmission {
    std::uint32_t device_id = 0;
    double rx_power_dbm = 0.0;
    double start_time_s = 0.0;
    double duration_s = 0.0;
    double channel_offset_hz = 0.0;
    // Absent for replayed recordings, which are treated as foreign signals.
    std::optional<ModemParams> params;
    double bandwidth_hz = 0.0;

    static AbstractTransmission of(std::uint32_t device_id, double rx_power_dbm, double start_time_s,
                                   const ModemParams &params, std::size_t payload_len, double channel_offset_hz);
    double end_time_s() const noexcept { return start_time_s + duration_s; }
};

struct SinrRule {
    double css_threshold_db = 6.0;
    double fsk_threshold_db = 8.0;
    double dbpsk_threshold_db = 8.0;
    // Threshold for a target without modem parameters (never scored in practice).
    double other_threshold_db = 8.0;

    void validate() const;
    double threshold_db(const AbstractTransmission &target) const;
};

// |offset_a - offset_b| < (bw_a + bw_b) / 2
bool co_channel(const AbstractTransmission &a, const AbstractTransmission &b) noexcept;

// Fraction of the interferer's power counted against the target, ignoring
// time: 0 when the bands do not overlap or when both are CSS with different
// spreading factors (assumed orthogonal); otherwise the fraction of the
// target's band covered by the interferer's band.
double spectral_weight(const AbstractTransmission &target, const AbstractTransmission &interferer) noexcept;

// Worst-case SINR over the target's duration: the target window is cut at
// every interferer edge and the piece with the largest weighted interference
// decides. Noise is integrated over the target bandwidth.
double sinr_db(const AbstractTransmission &target, const std::vector<AbstractTransmission> &others,
               const NoiseSpec &noise);

bool decide_packet(const AbstractTransmission &target, const std::vector<AbstractTransmission> &others,
                   const SinrRule &rule, const NoiseSpec &noise);

// Coarse label used to split the confusion matrix.
enum class InterferenceClass { clean, adjacent_channel, inter_sf, co_channel, cross_technology };
std::string_view interference_class_name(InterferenceClass c) noexcept;
InterferenceClass classify(const AbstractTransmission &target, const std::vector<AbstractTransmission> &others);

// One scored packet from either pipeline; `key` identifies it across runs.
struct PacketVerdict {
    std::uint64_t key = 0;
    InterferenceClass cls = InterferenceClass::clean;
    bool delivered = false;
};

struct Confusion {
    std::uint64_t both_deliver = 0;
    std::uint64_t both_lose = 0;
    std::uint64_t baseline_only = 0;
    std::uint64_t waveform_only = 0;

    std::uint64_t total() const noexcept { return both_deliver + both_lose + baseline_only + waveform_only; }
    std::uint64_t disagreements() const noexcept { return baseline_only + waveform_only; }
    double disagreement_rate() const noexcept {
        return total() ? static_cast<double>(disagreements()) / static_cast<double>(total()) : 0.0;
    }
    Confusion &operator+=(const Confusion &o) noexcept;
    bool operator==(const Confusion &) const = default;
};

struct Comparison {
    Confusion overall;
    std::map<std::string, Confusion> by_class;
    bool operator==(const Comparison &) const = default;
};

// Both lists must describe the same packets in the same order (same keys),
// otherwise validation_error("timeline").
Comparison compare_runs(const std::vector<PacketVerdict> &waveform, const std::vector<PacketVerdict> &baseline);

} // namespace iqsim
