#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iqsim/iq_core.hpp"
#include "iqsim/modem/bit_receiver.hpp"
#include "iqsim/modem/frame.hpp"
#include "iqsim/modem/params.hpp"

namespace iqsim {

// Differential BPSK with rectangular pulses. A leading reference symbol is
// sent first; each following bit 1 inverts the phase, bit 0 keeps it.
std::vector<cf64> dbpsk_modulate_bits(std::span<const std::uint8_t> bits, const DbpskParams &p);
IQBuffer dbpsk_modulate_frame(const Frame &f, const DbpskParams &p);

// Integrate-and-dump then delay-conjugate-multiply. `offset` is the start of
// the reference symbol; returns up to `count` decisions.
std::vector<std::uint8_t> dbpsk_decide_bits(std::span<const cf64> samples, std::size_t offset, std::size_t count,
                                            const DbpskParams &p);

class DbpskDemodulator final : public BitReceiver {
public:
    DbpskDemodulator(const DbpskParams &p, std::int64_t origin = 0, PowerCalibration cal = {});

private:
    void soft_bits(std::span<const cf64> buf, std::size_t first, std::size_t count, double *out) const override;

    int sps_;
};

} // namespace iqsim
