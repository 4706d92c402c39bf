#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iqsim/iq_core.hpp"
#include "iqsim/modem/bit_receiver.hpp"
#include "iqsim/modem/frame.hpp"
#include "iqsim/modem/params.hpp"

namespace iqsim {

// Continuous-phase 2-FSK: bit 1 -> +deviation, bit 0 -> -deviation.
std::vector<cf64> fsk_modulate_bits(std::span<const std::uint8_t> bits, const FskParams &p);
IQBuffer fsk_modulate_frame(const Frame &f, const FskParams &p);

// Noncoherent soft decision |C1|^2 - |C0|^2 for the bit occupying
// samples[0, samples_per_bit), where C1/C0 correlate against the two tones.
double fsk_soft_bit(const cf64 *samples, const FskParams &p);

// Hard decisions for `count` bits whose first symbol starts at `offset`.
std::vector<std::uint8_t> fsk_decide_bits(std::span<const cf64> samples, std::size_t offset, std::size_t count,
                                          const FskParams &p);

class FskDemodulator final : public BitReceiver {
public:
    FskDemodulator(const FskParams &p, std::int64_t origin = 0, PowerCalibration cal = {});

private:
    void soft_bits(std::span<const cf64> buf, std::size_t first, std::size_t count, double *out) const override;

    FskParams p_;
    std::vector<cf64> tone_hi_;  // conj of the +deviation tone over one bit
    std::vector<cf64> tone_lo_;
};

} // namespace iqsim
