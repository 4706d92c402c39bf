#include "iqsim/modem/dbpsk.hpp"

namespace iqsim {

namespace {

cf64 integrate(const cf64 *x, int sps) {
    cf64 acc(0.0, 0.0);
    for (int n = 0; n < sps; ++n) {
        acc += x[n];
    }
    return acc;
}

double differential(cf64 y, cf64 y_prev) {
    // Phase inversion between symbols gives a negative product; report it as positive ('1').
    return -(y.real() * y_prev.real() + y.imag() * y_prev.imag());
}

} // namespace

std::vector<cf64> dbpsk_modulate_bits(std::span<const std::uint8_t> bits, const DbpskParams &p) {
    p.validate();
    const int sps = p.samples_per_bit();
    std::vector<cf64> out;
    out.reserve((bits.size() + 1) * static_cast<std::size_t>(sps));
    double level = 1.0;
    out.insert(out.end(), static_cast<std::size_t>(sps), cf64(level, 0.0));
    for (const std::uint8_t b : bits) {
        if (b) {
            level = -level;
        }
        out.insert(out.end(), static_cast<std::size_t>(sps), cf64(level, 0.0));
    }
    return out;
}

IQBuffer dbpsk_modulate_frame(const Frame &f, const DbpskParams &p) {
    return IQBuffer(dbpsk_modulate_bits(bit_frame(f), p), p.native_rate_hz);
}

std::vector<std::uint8_t> dbpsk_decide_bits(std::span<const cf64> samples, std::size_t offset, std::size_t count,
                                            const DbpskParams &p) {
    p.validate();
    const std::size_t sps = static_cast<std::size_t>(p.samples_per_bit());
    std::vector<std::uint8_t> bits;
    if (offset + sps > samples.size()) {
        return bits;
    }
    cf64 prev = integrate(samples.data() + offset, static_cast<int>(sps));
    for (std::size_t i = 1; i <= count && offset + (i + 1) * sps <= samples.size(); ++i) {
        const cf64 y = integrate(samples.data() + offset + i * sps, static_cast<int>(sps));
        bits.push_back(differential(y, prev) > 0.0 ? 1 : 0);
        prev = y;
    }
    return bits;
}

DbpskDemodulator::DbpskDemodulator(const DbpskParams &p, std::int64_t origin, PowerCalibration cal)
    : BitReceiver(p.native_rate_hz, p.samples_per_bit(), 1, p.samples_per_bit(), p.sync_max_bit_errors, origin,
                  cal),
      sps_(p.samples_per_bit()) {
    p.validate();
}

void DbpskDemodulator::soft_bits(std::span<const cf64> buf, std::size_t first, std::size_t count,
                                 double *out) const {
    const std::size_t sps = static_cast<std::size_t>(sps_);
    // y[k] = integral over the symbol starting at first - sps + k.
    std::vector<cf64> y(count + sps);
    for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] = integrate(buf.data() + first - sps + k, sps_);
    }
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = differential(y[i + sps], y[i]);
    }
}

} // namespace iqsim
