#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "iqsim/errors.hpp"

namespace iqsim {

using cf64 = std::complex<double>;

// A finite block of complex baseband samples placed on a timeline.
//
// Amplitude 1.0 is digital full scale (see PowerCalibration). `start_sample`
// counts samples at `sample_rate_hz` from the owning timeline's origin.
// Buffers are immutable once built; every constructor rejects NaN/Inf.
class IQBuffer {
public:
    explicit IQBuffer(double sample_rate_hz, std::int64_t start_sample = 0);
    IQBuffer(std::vector<cf64> samples, double sample_rate_hz, std::int64_t start_sample = 0);

    static IQBuffer zeros(std::size_t count, double sample_rate_hz, std::int64_t start_sample = 0);

    std::span<const cf64> samples() const noexcept { return samples_; }
    const cf64 &operator[](std::size_t i) const noexcept { return samples_[i]; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }

    double sample_rate_hz() const noexcept { return sample_rate_hz_; }
    std::int64_t start_sample() const noexcept { return start_sample_; }
    // One past the last sample on the timeline.
    std::int64_t end_sample() const noexcept {
        return start_sample_ + static_cast<std::int64_t>(samples_.size());
    }
    double duration_s() const noexcept {
        return static_cast<double>(samples_.size()) / sample_rate_hz_;
    }

    IQBuffer with_start(std::int64_t start_sample) const;
    IQBuffer scaled(double gain) const;

    // Moves the sample storage out; the buffer is left empty.
    std::vector<cf64> take_samples() && noexcept { return std::move(samples_); }

private:
    std::vector<cf64> samples_;
    double sample_rate_hz_;
    std::int64_t start_sample_;
};

struct BandSpec {
    double center_frequency_hz = 868.1e6;
    double stream_rate_hz = 1.5e6;
    double usable_bandwidth_hz = 1.5e6;

    void validate() const;
    // True when a channel of `width_hz` centred at `offset_hz` lies inside the usable band.
    bool contains(double offset_hz, double width_hz) const noexcept;
};

// Digital full-scale convention: complex amplitude 1.0 corresponds to `full_scale_dbm`.
struct PowerCalibration {
    double full_scale_dbm = 0.0;
};

// Receiver-referred thermal noise floor.
struct NoiseSpec {
    double density_dbm_per_hz = -174.0;
    double receiver_noise_figure_db = 6.0;
    bool enabled = true;

    void validate() const;
    // Noise power in `bandwidth_hz`, in dBm.
    double power_dbm(double bandwidth_hz) const;
};

double dbm_to_amplitude(double p_dbm, const PowerCalibration &cal = {});
double amplitude_to_dbm(double amplitude, const PowerCalibration &cal = {});
// Mean |s|^2 expressed in dBm. Throws domain_error on an empty buffer.
double buffer_power_dbm(const IQBuffer &buf, const PowerCalibration &cal = {});
double mean_power(std::span<const cf64> samples);

double db_to_linear(double db) noexcept;
double linear_to_db(double ratio);

// Burst start times in seconds snap to the nearest sample of the timeline.
std::int64_t seconds_to_sample(double t_s, double rate_hz) noexcept;

} // namespace iqsim
