#pragma once

#include <span>

#include "iqsim/iq_core.hpp"

namespace iqsim {

// Forward complex DFT backed by FFTW. Plans are created once per size and
// cached process-wide; execution is reentrant and safe from any thread.
class Fft {
public:
    explicit Fft(std::size_t n);

    std::size_t size() const noexcept { return n_; }

    // X[k] = sum_n x[n] exp(-j 2 pi k n / N). `in` and `out` must both hold size() samples.
    void forward(std::span<const cf64> in, std::span<cf64> out) const;

private:
    std::size_t n_;
    void *plan_;
};

} // namespace iqsim
