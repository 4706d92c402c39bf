#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

namespace iqsim {

// LoRa-style chirp spread spectrum. Sampled at exactly one sample per chip,
// so the native rate equals the chirp bandwidth.
struct CssParams {
    int spreading_factor = 7;
    double chirp_bandwidth_hz = 125000.0;
    int preamble_upchirps = 8;
    // Receiver detection: consecutive windows sharing one argmax bin, each with
    // a peak-to-mean DFT magnitude ratio at or above the threshold.
    int detect_windows = 6;
    double detect_peak_to_mean = 4.0;

    int symbol_count() const noexcept { return 1 << spreading_factor; }
    double native_rate_hz() const noexcept { return chirp_bandwidth_hz; }
    double symbol_duration_s() const noexcept { return symbol_count() / chirp_bandwidth_hz; }
    void validate() const;
    bool operator==(const CssParams &) const = default;
};

// Continuous-phase binary FSK. native_rate_hz must be an integer multiple of bit_rate_bps.
struct FskParams {
    double bit_rate_bps = 50000.0;
    double deviation_hz = 25000.0;
    double native_rate_hz = 400000.0;
    int sync_max_bit_errors = 1;

    int samples_per_bit() const noexcept;
    void validate() const;
    bool operator==(const FskParams &) const = default;
};

// Ultra-narrowband differential BPSK with rectangular pulses.
struct DbpskParams {
    double bit_rate_bps = 100.0;
    double native_rate_hz = 800.0;
    int sync_max_bit_errors = 1;

    int samples_per_bit() const noexcept;
    void validate() const;
    bool operator==(const DbpskParams &) const = default;
};

using ModemParams = std::variant<CssParams, FskParams, DbpskParams>;

enum class ModemClass { css, fsk, dbpsk };

ModemClass modem_class(const ModemParams &p) noexcept;
std::string_view modem_class_name(ModemClass c) noexcept;
void validate(const ModemParams &p);
double native_rate_hz(const ModemParams &p) noexcept;

// Bandwidth a packet-level model would attribute to the signal: chirp bandwidth
// for CSS, Carson's rule (2*deviation + bit rate) for FSK, null-to-null main
// lobe (2*bit rate) for DBPSK.
double occupied_bandwidth_hz(const ModemParams &p) noexcept;

// Length of a modulated frame carrying `payload_len` bytes, at native rate.
std::size_t frame_sample_count(const ModemParams &p, std::size_t payload_len);
double frame_duration_s(const ModemParams &p, std::size_t payload_len);
// Timing tolerance used when matching decoded frames to transmissions.
double symbol_duration_s(const ModemParams &p) noexcept;

// Human-readable one-liner, e.g. "css sf7 bw125000".
std::string describe(const ModemParams &p);

} // namespace iqsim
