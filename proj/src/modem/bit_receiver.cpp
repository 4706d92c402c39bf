#include "iqsim/modem/bit_receiver.hpp"

#include "iqsim/modem/frame.hpp"

#include <algorithm>

namespace iqsim {

BitReceiver::BitReceiver(double rate_hz, int samples_per_bit, int lead_symbols, int lookback, int max_errors,
                         std::int64_t origin, PowerCalibration cal)
    : StreamDemodulator(rate_hz, origin, cal), sps_(samples_per_bit), lead_(lead_symbols), lookback_(lookback),
      max_errors_(max_errors),
      pattern_((static_cast<std::uint32_t>(kBitPreambleByte) << 24) |
               (static_cast<std::uint32_t>(kBitPreambleByte) << 16) | kBitSyncWord) {}

StreamDemodulator::ScanResult BitReceiver::scan(std::span<const cf64> buf, std::int64_t base,
                                                std::int64_t resume_at, bool final) {
    const std::int64_t sps = sps_;
    const std::int64_t end = base + static_cast<std::int64_t>(buf.size());
    const std::int64_t t_begin = std::max(resume_at, base + lookback_);
    const std::int64_t last = end - sps;  // last offset with a complete bit

    std::vector<double> soft;
    if (last >= t_begin) {
        soft.resize(static_cast<std::size_t>(last - t_begin + 1));
        soft_bits(buf, static_cast<std::size_t>(t_begin - base), soft.size(), soft.data());
    }
    auto s_at = [&](std::int64_t t) { return soft[static_cast<std::size_t>(t - t_begin)]; };
    auto have = [&](std::int64_t t) { return t <= last; };

    ScanResult r;
    auto wait = [&](std::int64_t t) {
        // A frame found at or after t may start up to 16 + lead bits earlier.
        r.keep_from = t - (16 + lead_) * sps - lookback_;
        r.resume_at = t;
        return r;
    };

    std::int64_t t = t_begin;
    const std::int64_t pattern_span = kPatternBits * sps;
    while (have(t + pattern_span - sps)) {
        int errors = 0;
        for (int i = 0; i < kPatternBits && errors <= max_errors_; ++i) {
            const bool bit = s_at(t + i * sps) > 0.0;
            const bool want = (pattern_ >> (kPatternBits - 1 - i)) & 1U;
            errors += bit != want;
        }
        if (errors > max_errors_) {
            ++t;
            continue;
        }
        if (!have(t + sps - 1 + pattern_span - sps) && !final) {
            return wait(t);
        }

        std::int64_t tau = t;
        double best = -1e300;
        for (std::int64_t c = t; c < t + sps && have(c + pattern_span - sps); ++c) {
            double score = 0.0;
            for (int i = 0; i < kPatternBits; ++i) {
                const double v = s_at(c + i * sps);
                score += ((pattern_ >> (kPatternBits - 1 - i)) & 1U) ? v : -v;
            }
            // Rectangular-pulse FSK and DBPSK leave a flat top one sample wide; ties go to the earliest offset.
            if (score > best + 1e-9 * std::abs(best)) {
                best = score;
                tau = c;
            }
        }

        const std::int64_t body0 = tau + pattern_span;
        std::vector<std::uint8_t> bits;
        auto read_bits = [&](std::size_t count) {
            while (bits.size() < count && have(body0 + static_cast<std::int64_t>(bits.size()) * sps)) {
                bits.push_back(s_at(body0 + static_cast<std::int64_t>(bits.size()) * sps) > 0.0 ? 1 : 0);
            }
        };
        if (!have(body0 + 7 * sps) && !final) {
            return wait(t);
        }
        read_bits(8);

        PacketOutcome o;
        o.detected = true;
        o.start_sample = tau - (16 + lead_) * sps;
        if (bits.size() == 8) {
            const std::size_t len = bits_to_bytes(bits).front();
            if (len > 0) {
                const std::size_t total = 8 * (len + 3);
                if (!have(body0 + static_cast<std::int64_t>(total - 1) * sps) && !final) {
                    return wait(t);
                }
                read_bits(total);
                const auto body = bits_to_bytes(std::span(bits).first(bits.size() - bits.size() % 8));
                if (body.size() == len + 3) {
                    o.payload_decoded.assign(body.begin() + 1, body.begin() + 1 + static_cast<std::ptrdiff_t>(len));
                    const std::uint16_t rx_crc = static_cast<std::uint16_t>((body[len + 1] << 8) | body[len + 2]);
                    o.crc_ok = rx_crc == crc16(o.payload_decoded);
                } else if (body.size() > 1) {
                    o.payload_decoded.assign(body.begin() + 1,
                                             body.begin() + static_cast<std::ptrdiff_t>(std::min(body.size(), len + 1)));
                }
            }
        }
        const std::int64_t frame_end = body0 + static_cast<std::int64_t>(bits.size()) * sps;
        o.rssi_dbm = rssi_over(buf, base, o.start_sample, frame_end);
        const bool ok = o.crc_ok;
        r.outcomes.push_back(std::move(o));
        t = ok ? frame_end : body0;
    }
    return wait(t);
}

} // namespace iqsim
