#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iqsim/modem/demodulator.hpp"

namespace iqsim {

// Shared receiver for the bit-oriented framers (FSK, DBPSK).
//
// Subclasses supply a soft decision for a bit whose symbol starts at any
// sample offset (positive means '1'). The receiver slides a 32-bit pattern
// (last 16 preamble bits + sync word) over every offset, accepts up to
// `max_errors` mismatches, refines timing to the offset with the highest soft
// correlation within one bit, and reads the body at that timing.
class BitReceiver : public StreamDemodulator {
public:
    static constexpr int kPatternBits = 32;

protected:
    BitReceiver(double rate_hz, int samples_per_bit, int lead_symbols, int lookback, int max_errors,
                std::int64_t origin, PowerCalibration cal);

    // out[i] = soft value of the bit starting at buf[first + i]. Guaranteed:
    // first >= lookback and first + count - 1 + sps <= buf.size().
    virtual void soft_bits(std::span<const cf64> buf, std::size_t first, std::size_t count,
                           double *out) const = 0;

private:
    ScanResult scan(std::span<const cf64> buf, std::int64_t base, std::int64_t resume_at, bool final) override;

    int sps_;
    int lead_;
    int lookback_;
    int max_errors_;
    std::uint32_t pattern_;
};

} // namespace iqsim
