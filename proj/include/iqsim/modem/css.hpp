#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iqsim/fft.hpp"
#include "iqsim/iq_core.hpp"
#include "iqsim/modem/demodulator.hpp"
#include "iqsim/modem/frame.hpp"
#include "iqsim/modem/params.hpp"

namespace iqsim {

inline constexpr int kCssSyncSymbols[2] = {16, 24};

// x_s[n] = exp(j 2 pi n (s/N + n/(2N) - 1/2)), n in [0, N). The phase is
// reduced exactly in integers before the trig call, so large n stay accurate.
IQBuffer css_modulate_symbol(int symbol, const CssParams &p);
void css_write_symbol(int symbol, int sf, std::span<cf64> out);

// Preamble upchirps, sync symbols, 2.25 downchirps, then length/payload/CRC
// symbols (MSB-first, SF bits per symbol, zero-padded).
IQBuffer css_modulate_frame(const Frame &f, const CssParams &p);

// Data symbols carried by a frame (length byte, payload, CRC).
std::vector<int> css_frame_symbols(const Frame &f, int sf);

// Index of the DFT bin with the largest magnitude after dechirping one symbol
// window with the conjugate base upchirp.
int css_dechirp_argmax(std::span<const cf64> window, int sf);

class CssDemodulator final : public StreamDemodulator {
public:
    CssDemodulator(const CssParams &p, std::int64_t origin = 0, PowerCalibration cal = {});

private:
    struct Window {
        int bin = 0;
        double peak = 0.0;
        bool strong = false;
    };

    enum class Status { decoded, failed, need_more };

    struct Attempt {
        Status status = Status::failed;
        PacketOutcome outcome;
        std::int64_t frame_end = 0;
    };

    ScanResult scan(std::span<const cf64> buf, std::int64_t base, std::int64_t resume_at,
                    bool final) override;

    Attempt try_frame(std::span<const cf64> buf, std::int64_t base, std::int64_t run_start, int run_len,
                      int run_bin, bool final);

    // Dechirped spectrum magnitude summary at absolute position `pos`.
    // down = true dechirps with the base upchirp (detects downchirps).
    Window window_at(std::span<const cf64> buf, std::int64_t base, std::int64_t pos, bool down);
    // Mean offset (in bins, may be fractional) of the preamble tone for windows aligned to `boundary`.
    bool residual_bins(std::span<const cf64> buf, std::int64_t base, std::int64_t boundary,
                       std::int64_t earliest, double &residual);
    // Fractional tone offset in bins of the dechirped samples in tone_.
    double tone_bins(std::size_t len);
    // Symbol decision with the preamble offset and fractional timing removed.
    int corrected_symbol(std::span<const cf64> buf, std::int64_t base, std::int64_t pos);

    CssParams p_;
    int n_;
    Fft fft_;
    std::vector<cf64> up_;
    std::vector<cf64> rot_;
    std::vector<cf64> work_;
    std::vector<cf64> spec_;
    std::vector<cf64> tone_;
    std::vector<double> power_;
    double tau_ = 0.0;
};

} // namespace iqsim
