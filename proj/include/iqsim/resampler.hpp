#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "iqsim/iq_core.hpp"

namespace iqsim {

// Windowed-sinc polyphase design knobs. `taps_per_phase` counts taps at the
// lower of the two rates, so a decimator spans taps_per_phase output samples.
struct ResamplerSpec {
    int taps_per_phase = 32;
    int num_phases = 128;
    double kaiser_beta = 8.6;

    void validate() const;
    bool operator==(const ResamplerSpec &) const = default;
};

// Arbitrary-ratio resampler with a zero-phase (centred) filter.
//
// Output sample m sits at input position t = m * in_rate / out_rate, so a
// burst's first output sample is aligned with its first input sample and no
// group delay needs to be removed afterwards. Every output is a pure function
// of (input, m): rendering [a, b) in pieces gives bit-identical results.
//
// When the reduced ratio has at most kMaxExactPhases distinct fractional
// positions, each one gets its own exact filter; otherwise the bank holds
// `num_phases` filters and coefficients are linearly interpolated between
// neighbouring phases.
class Resampler {
public:
    static constexpr std::int64_t kMaxExactPhases = 4096;

    Resampler(double in_rate_hz, double out_rate_hz, const ResamplerSpec &spec = {});

    double in_rate_hz() const noexcept { return in_rate_; }
    double out_rate_hz() const noexcept { return out_rate_; }
    // Input taps touched per output sample.
    int taps() const noexcept { return taps_; }
    bool exact_phases() const noexcept { return exact_; }

    // round(in_len * out_rate / in_rate)
    std::size_t output_length(std::size_t in_len) const noexcept;

    // Output sample m, with samples outside `input` treated as zero.
    cf64 at(std::span<const cf64> input, std::int64_t m) const noexcept { return at(input, 0, m); }
    // Same, for a window whose first element is input sample `origin`.
    cf64 at(std::span<const cf64> input, std::int64_t origin, std::int64_t m) const noexcept;

    // out[i] = at(input, origin, first + i)
    void render(std::span<const cf64> input, std::int64_t first, std::span<cf64> out,
                std::int64_t origin = 0) const noexcept;

    // out[i] += gain * rotator(first + i) * at(input, first + i), where rotator is
    // supplied as a precomputed unit phasor array the same length as out.
    void render_accumulate(std::span<const cf64> input, std::int64_t first, double gain,
                           std::span<const cf64> rotator, std::span<cf64> out) const noexcept;

    // Lowest and highest input index touched when producing output m.
    std::int64_t first_input_for(std::int64_t m) const noexcept;
    std::int64_t last_input_for(std::int64_t m) const noexcept;

private:
    struct Position {
        std::int64_t base;  // first input index of the tap window
        const double *coeffs;
        const double *coeffs_next;  // non-null only on the interpolated path
        double frac;
    };

    Position locate(std::int64_t m) const noexcept;
    template <typename Sink>
    void for_each_output(std::span<const cf64> input, std::int64_t origin, std::int64_t first,
                         std::size_t count, Sink &&sink) const noexcept;
    cf64 evaluate(std::span<const cf64> input, const Position &pos) const noexcept;

    double in_rate_;
    double out_rate_;
    double ratio_;  // in / out
    int taps_;
    int stride_;  // doubles per phase row (2 * taps_, interleaved for complex input)
    bool identity_ = false;
    bool exact_ = false;
    std::int64_t num_ = 1;  // ratio numerator (exact path)
    std::int64_t den_ = 1;  // ratio denominator == number of phases (exact path)
    int phases_ = 0;
    std::shared_ptr<const std::vector<double>> bank_;
};

// Resamples a whole buffer; output start_sample = round(start * out / in).
IQBuffer resample(const IQBuffer &buf, double out_rate_hz, const ResamplerSpec &spec = {});

} // namespace iqsim
