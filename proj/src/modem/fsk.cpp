#include "iqsim/modem/fsk.hpp"

#include <cmath>
#include <numbers>

namespace iqsim {

namespace {

void make_tones(const FskParams &p, std::vector<cf64> &hi, std::vector<cf64> &lo) {
    const int sps = p.samples_per_bit();
    const double w = 2.0 * std::numbers::pi * p.deviation_hz / p.native_rate_hz;
    hi.resize(static_cast<std::size_t>(sps));
    lo.resize(static_cast<std::size_t>(sps));
    for (int n = 0; n < sps; ++n) {
        hi[n] = std::polar(1.0, -w * n);
        lo[n] = std::polar(1.0, w * n);
    }
}

double correlate(const cf64 *x, const std::vector<cf64> &hi, const std::vector<cf64> &lo) {
    double hr = 0.0, hi_ = 0.0, lr = 0.0, li = 0.0;
    for (std::size_t n = 0; n < hi.size(); ++n) {
        const double xr = x[n].real(), xi = x[n].imag();
        hr += xr * hi[n].real() - xi * hi[n].imag();
        hi_ += xr * hi[n].imag() + xi * hi[n].real();
        lr += xr * lo[n].real() - xi * lo[n].imag();
        li += xr * lo[n].imag() + xi * lo[n].real();
    }
    return (hr * hr + hi_ * hi_) - (lr * lr + li * li);
}

} // namespace

std::vector<cf64> fsk_modulate_bits(std::span<const std::uint8_t> bits, const FskParams &p) {
    p.validate();
    const int sps = p.samples_per_bit();
    const double w = 2.0 * std::numbers::pi * p.deviation_hz / p.native_rate_hz;
    std::vector<cf64> out;
    out.reserve(bits.size() * static_cast<std::size_t>(sps));
    // Phase is accumulated in units of w so long frames do not drift.
    std::int64_t steps = 0;
    for (const std::uint8_t b : bits) {
        const int dir = b ? 1 : -1;
        for (int n = 0; n < sps; ++n) {
            out.push_back(std::polar(1.0, w * static_cast<double>(steps)));
            steps += dir;
        }
    }
    return out;
}

IQBuffer fsk_modulate_frame(const Frame &f, const FskParams &p) {
    return IQBuffer(fsk_modulate_bits(bit_frame(f), p), p.native_rate_hz);
}

double fsk_soft_bit(const cf64 *samples, const FskParams &p) {
    std::vector<cf64> hi, lo;
    make_tones(p, hi, lo);
    return correlate(samples, hi, lo);
}

std::vector<std::uint8_t> fsk_decide_bits(std::span<const cf64> samples, std::size_t offset, std::size_t count,
                                          const FskParams &p) {
    p.validate();
    std::vector<cf64> hi, lo;
    make_tones(p, hi, lo);
    const std::size_t sps = static_cast<std::size_t>(p.samples_per_bit());
    std::vector<std::uint8_t> bits;
    bits.reserve(count);
    for (std::size_t i = 0; i < count && offset + (i + 1) * sps <= samples.size(); ++i) {
        bits.push_back(correlate(samples.data() + offset + i * sps, hi, lo) > 0.0 ? 1 : 0);
    }
    return bits;
}

FskDemodulator::FskDemodulator(const FskParams &p, std::int64_t origin, PowerCalibration cal)
    : BitReceiver(p.native_rate_hz, p.samples_per_bit(), 0, 0, p.sync_max_bit_errors, origin, cal), p_(p) {
    p_.validate();
    make_tones(p_, tone_hi_, tone_lo_);
}

void FskDemodulator::soft_bits(std::span<const cf64> buf, std::size_t first, std::size_t count, double *out) const {
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = correlate(buf.data() + first + i, tone_hi_, tone_lo_);
    }
}

} // namespace iqsim
