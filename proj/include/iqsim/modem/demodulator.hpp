#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "iqsim/iq_core.hpp"
#include "iqsim/modem/params.hpp"

namespace iqsim {

// Result of one demodulation attempt. `start_sample` is on the timeline of the
// stream fed to the demodulator (its native/channel rate) and marks the first
// preamble sample.
struct PacketOutcome {
    std::uint32_t gateway_id = 0;
    std::optional<std::uint32_t> device_id;  // filled by scoring, never by the receiver
    std::vector<std::uint8_t> payload_decoded;
    bool crc_ok = false;
    std::int64_t start_sample = 0;
    double rssi_dbm = 0.0;
    bool detected = false;

    bool operator==(const PacketOutcome &) const = default;
};

// Incremental receiver over a contiguous sample stream.
//
// push() may be called with chunks of any size; outcomes are reported once a
// whole frame has been seen. Internally the receiver re-runs a pure scan over
// a retained window, so results depend only on the samples, never on how
// they were chunked.
class StreamDemodulator {
public:
    StreamDemodulator(double sample_rate_hz, std::int64_t origin, PowerCalibration cal);
    virtual ~StreamDemodulator() = default;

    StreamDemodulator(const StreamDemodulator &) = delete;
    StreamDemodulator &operator=(const StreamDemodulator &) = delete;

    std::vector<PacketOutcome> push(std::span<const cf64> chunk);
    // Ends the stream: frames cut short are decoded as far as possible.
    std::vector<PacketOutcome> finish();

    double sample_rate_hz() const noexcept { return rate_; }
    // Samples currently retained (diagnostic; bounded by the longest frame).
    std::size_t retained() const noexcept { return buf_.size(); }

protected:
    struct ScanResult {
        std::vector<PacketOutcome> outcomes;
        std::int64_t keep_from;  // absolute index of the first sample still needed
        std::int64_t resume_at;  // where the next scan continues
    };

    // buf[0] is absolute sample `base`; scanning starts at `resume_at`.
    virtual ScanResult scan(std::span<const cf64> buf, std::int64_t base, std::int64_t resume_at,
                            bool final) = 0;

    double rssi_over(std::span<const cf64> buf, std::int64_t base, std::int64_t from,
                     std::int64_t to) const;

    PowerCalibration cal_;

private:
    std::vector<PacketOutcome> run(bool final);

    double rate_;
    std::vector<cf64> buf_;
    std::int64_t base_;
    std::int64_t resume_;
};

std::unique_ptr<StreamDemodulator> make_demodulator(const ModemParams &params, std::int64_t origin = 0,
                                                    PowerCalibration cal = {});

// Batch demodulation of a whole buffer (at the modem's native rate).
std::vector<PacketOutcome> demodulate(const IQBuffer &stream, const ModemParams &params,
                                      PowerCalibration cal = {});

} // namespace iqsim
