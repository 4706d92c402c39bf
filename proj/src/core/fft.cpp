#include "iqsim/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace iqsim {

namespace {

std::mutex &plan_mutex() {
    static std::mutex m;
    return m;
}

// Plans live for the process lifetime.
std::map<std::size_t, fftw_plan> &plan_cache() {
    static std::map<std::size_t, fftw_plan> cache;
    return cache;
}

fftw_plan plan_for(std::size_t n) {
    std::lock_guard lock(plan_mutex());
    auto &cache = plan_cache();
    if (auto it = cache.find(n); it != cache.end()) {
        return it->second;
    }
    std::vector<cf64> scratch_in(n), scratch_out(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex *>(scratch_in.data()),
                                   reinterpret_cast<fftw_complex *>(scratch_out.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) {
        throw domain_error("FFTW could not plan a transform of size " + std::to_string(n));
    }
    cache.emplace(n, p);
    return p;
}

} // namespace

Fft::Fft(std::size_t n) : n_(n), plan_(nullptr) {
    if (n == 0) {
        throw domain_error("FFT size must be positive");
    }
    plan_ = plan_for(n);
}

void Fft::forward(std::span<const cf64> in, std::span<cf64> out) const {
    if (in.size() != n_ || out.size() != n_) {
        throw domain_error("FFT buffer size mismatch");
    }
    // FFTW's new-array execute never writes the input when in != out.
    fftw_execute_dft(static_cast<fftw_plan>(plan_),
                     reinterpret_cast<fftw_complex *>(const_cast<cf64 *>(in.data())),
                     reinterpret_cast<fftw_complex *>(out.data()));
}

} // namespace iqsim
