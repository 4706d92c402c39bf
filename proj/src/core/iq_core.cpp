#include "iqsim/iq_core.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace iqsim {

namespace {

void check_rate(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw domain_error("sample rate must be positive and finite, got " + std::to_string(rate));
    }
}

void check_finite(std::span<const cf64> samples) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i].real()) || !std::isfinite(samples[i].imag())) {
            throw domain_error("non-finite sample at index " + std::to_string(i));
        }
    }
}

} // namespace

IQBuffer::IQBuffer(double sample_rate_hz, std::int64_t start_sample)
    : sample_rate_hz_(sample_rate_hz), start_sample_(start_sample) {
    check_rate(sample_rate_hz);
}

IQBuffer::IQBuffer(std::vector<cf64> samples, double sample_rate_hz, std::int64_t start_sample)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz), start_sample_(start_sample) {
    check_rate(sample_rate_hz);
    check_finite(samples_);
}

IQBuffer IQBuffer::zeros(std::size_t count, double sample_rate_hz, std::int64_t start_sample) {
    return IQBuffer(std::vector<cf64>(count), sample_rate_hz, start_sample);
}

IQBuffer IQBuffer::with_start(std::int64_t start_sample) const {
    IQBuffer out = *this;
    out.start_sample_ = start_sample;
    return out;
}

IQBuffer IQBuffer::scaled(double gain) const {
    std::vector<cf64> out(samples_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = samples_[i] * gain;
    }
    return IQBuffer(std::move(out), sample_rate_hz_, start_sample_);
}

void BandSpec::validate() const {
    if (!(stream_rate_hz > 0.0)) {
        throw validation_error("band.stream_rate_hz", "must be > 0");
    }
    if (!(usable_bandwidth_hz > 0.0)) {
        throw validation_error("band.usable_bandwidth_hz", "must be > 0");
    }
    if (usable_bandwidth_hz > stream_rate_hz) {
        throw validation_error("band.usable_bandwidth_hz", "must not exceed stream_rate_hz");
    }
}

bool BandSpec::contains(double offset_hz, double width_hz) const noexcept {
    return std::abs(offset_hz) + width_hz / 2.0 <= usable_bandwidth_hz / 2.0 + 1e-9;
}

void NoiseSpec::validate() const {
    if (!std::isfinite(density_dbm_per_hz)) {
        throw validation_error("noise.density_dbm_per_hz", "must be finite");
    }
    if (!(receiver_noise_figure_db >= 0.0) || !std::isfinite(receiver_noise_figure_db)) {
        throw validation_error("noise.receiver_noise_figure_db", "must be >= 0");
    }
}

double NoiseSpec::power_dbm(double bandwidth_hz) const {
    return density_dbm_per_hz + receiver_noise_figure_db + 10.0 * std::log10(bandwidth_hz);
}

double dbm_to_amplitude(double p_dbm, const PowerCalibration &cal) {
    return std::pow(10.0, (p_dbm - cal.full_scale_dbm) / 20.0);
}

double amplitude_to_dbm(double amplitude, const PowerCalibration &cal) {
    if (!(amplitude > 0.0)) {
        throw domain_error("amplitude_to_dbm requires a positive amplitude");
    }
    return 20.0 * std::log10(amplitude) + cal.full_scale_dbm;
}

double mean_power(std::span<const cf64> samples) {
    if (samples.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (const auto &s : samples) {
        acc += std::norm(s);
    }
    return acc / static_cast<double>(samples.size());
}

double buffer_power_dbm(const IQBuffer &buf, const PowerCalibration &cal) {
    if (buf.empty()) {
        throw domain_error("buffer_power_dbm of an empty buffer");
    }
    const double p = mean_power(buf.samples());
    if (!(p > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(p) + cal.full_scale_dbm;
}

double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }

double linear_to_db(double ratio) {
    if (!(ratio > 0.0)) {
        throw domain_error("linear_to_db requires a positive ratio");
    }
    return 10.0 * std::log10(ratio);
}

std::int64_t seconds_to_sample(double t_s, double rate_hz) noexcept {
    return std::llround(t_s * rate_hz);
}

} // namespace iqsim
