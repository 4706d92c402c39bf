#include "iqsim/mixer.hpp"

#include "iqsim/log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace iqsim {

namespace {

cf64 phasor_at(double cycles_per_sample, std::int64_t n) {
    const double c = cycles_per_sample * static_cast<double>(n);
    return std::polar(1.0, 2.0 * std::numbers::pi * (c - std::floor(c)));
}

std::int64_t floor_to_anchor(std::int64_t n) {
    std::int64_t q = n / kRotatorAnchor;
    if (n % kRotatorAnchor != 0 && n < 0) {
        --q;
    }
    return q * kRotatorAnchor;
}

} // namespace

double noise_component_variance(const NoiseSpec &noise, double stream_rate_hz, const PowerCalibration &cal) {
    if (!noise.enabled) {
        return 0.0;
    }
    return 0.5 * db_to_linear(noise.power_dbm(stream_rate_hz) - cal.full_scale_dbm);
}

bool burst_contained(const PlacedBurst &b, double stream_rate_hz) noexcept {
    return std::abs(b.carrier_offset_hz) + b.waveform.sample_rate_hz() / 2.0 <= stream_rate_hz / 2.0 + 1e-9;
}

void fill_rotator(double offset_hz, double rate_hz, std::int64_t first, std::span<cf64> out) {
    if (out.empty()) {
        return;
    }
    const double step = offset_hz / rate_hz;
    if (step == 0.0) {
        std::fill(out.begin(), out.end(), cf64(1.0, 0.0));
        return;
    }
    const cf64 w = phasor_at(step, 1);
    const auto count = static_cast<std::int64_t>(out.size());
    std::int64_t anchor = floor_to_anchor(first);
    cf64 p = phasor_at(step, anchor);
    for (std::int64_t n = anchor; n < first; ++n) {
        p *= w;
    }
    for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t n = first + i;
        if (n % kRotatorAnchor == 0) {
            p = phasor_at(step, n);
        }
        out[static_cast<std::size_t>(i)] = p;
        p *= w;
    }
}

IQBuffer frequency_shift(const IQBuffer &buf, double offset_hz) {
    const double rate = buf.sample_rate_hz();
    if (!(std::abs(offset_hz) < rate / 2.0)) {
        throw domain_error("frequency shift " + std::to_string(offset_hz) + " Hz outside +-rate/2");
    }
    if (offset_hz == 0.0) {
        return buf;
    }
    std::vector<cf64> rot(buf.size());
    fill_rotator(offset_hz, rate, buf.start_sample(), rot);
    for (std::size_t n = 0; n < rot.size(); ++n) {
        rot[n] *= buf[n];
    }
    return IQBuffer(std::move(rot), rate, buf.start_sample());
}

// ---------------------------------------------------------------- BlockMixer

BlockMixer::BlockMixer(MixerConfig config, RngStream noise_rng)
    : config_(std::move(config)), noise_rng_(noise_rng),
      noise_sigma_(std::sqrt(noise_component_variance(config_.noise, config_.stream_rate_hz, config_.cal))) {
    config_.resampler.validate();
}

bool BlockMixer::add(PlacedBurst burst) {
    if (!burst_contained(burst, config_.stream_rate_hz)) {
        ++rejected_;
        spdlog::warn("mixer: burst from device {} at offset {} Hz ({} Hz wide) exceeds the {} Hz stream; rejected",
                     burst.source_device_id, burst.carrier_offset_hz, burst.waveform.sample_rate_hz(),
                     config_.stream_rate_hz);
        return false;
    }
    if (burst.waveform.empty()) {
        return true;
    }
    const double rate = burst.waveform.sample_rate_hz();
    std::shared_ptr<const Resampler> rs;
    for (const auto &b : bursts_) {
        if (b.resampler->in_rate_hz() == rate) {
            rs = b.resampler;
            break;
        }
    }
    if (!rs) {
        rs = std::make_shared<const Resampler>(rate, config_.stream_rate_hz, config_.resampler);
    }
    Prepared p{burst.source_device_id,
               burst.start_sample,
               burst.start_sample + static_cast<std::int64_t>(rs->output_length(burst.waveform.size())),
               burst.carrier_offset_hz,
               std::move(rs),
               std::move(burst.waveform).take_samples()};
    const auto pos = std::upper_bound(bursts_.begin(), bursts_.end(), p, [](const Prepared &a, const Prepared &b) {
        return a.device_id != b.device_id ? a.device_id < b.device_id : a.start < b.start;
    });
    bursts_.insert(pos, std::move(p));
    return true;
}

void BlockMixer::release_before(std::int64_t from) {
    std::erase_if(bursts_, [from](const Prepared &b) { return b.end <= from; });
}

std::size_t BlockMixer::overlapping(std::int64_t from, std::int64_t to) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(bursts_.begin(), bursts_.end(), [&](const Prepared &b) { return b.start < to && b.end > from; }));
}

void BlockMixer::render(std::int64_t from, std::span<cf64> out) {
    release_before(from);
    render_range(from, out);
}

void BlockMixer::render_range(std::int64_t from, std::span<cf64> out) const {
    std::fill(out.begin(), out.end(), cf64{});
    const std::int64_t to = from + static_cast<std::int64_t>(out.size());

    // One rotator per distinct carrier over the whole range.
    std::vector<std::pair<double, std::vector<cf64>>> rotators;
    auto rotator_for = [&](double offset) -> const std::vector<cf64> & {
        for (const auto &r : rotators) {
            if (r.first == offset) return r.second;
        }
        std::vector<cf64> rot(out.size());
        fill_rotator(offset, config_.stream_rate_hz, from, rot);
        rotators.emplace_back(offset, std::move(rot));
        return rotators.back().second;
    };

    for (const auto &b : bursts_) {
        const std::int64_t a = std::max(from, b.start);
        const std::int64_t e = std::min(to, b.end);
        if (a >= e) {
            continue;
        }
        const auto off = static_cast<std::size_t>(a - from);
        const auto len = static_cast<std::size_t>(e - a);
        const auto &rot = rotator_for(b.offset_hz);
        b.resampler->render_accumulate(b.samples, a - b.start, 1.0, std::span(rot).subspan(off, len),
                                       out.subspan(off, len));
    }

    if (noise_sigma_ > 0.0) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto idx = static_cast<std::uint64_t>(from + static_cast<std::int64_t>(i));
            out[i] += noise_sigma_ * noise_rng_.complex_gaussian_at(idx);
        }
    }
}

IQBuffer mix(const std::vector<PlacedBurst> &bursts, const MixerConfig &config, std::int64_t start,
             std::int64_t end, const RngStream &noise_rng) {
    if (end < start) {
        throw domain_error("mix window end precedes start");
    }
    BlockMixer mixer(config, noise_rng);
    for (const auto &b : bursts) {
        mixer.add(b);
    }
    std::vector<cf64> out(static_cast<std::size_t>(end - start));
    mixer.render(start, out);
    return IQBuffer(std::move(out), config.stream_rate_hz, start);
}

IQBuffer channelize(const IQBuffer &stream, double channel_offset_hz, double channel_rate_hz,
                    const ResamplerSpec &spec) {
    if (std::abs(channel_offset_hz) + channel_rate_hz / 2.0 > stream.sample_rate_hz() / 2.0 + 1e-9) {
        throw domain_error("channel at " + std::to_string(channel_offset_hz) + " Hz does not fit the stream");
    }
    return resample(frequency_shift(stream, -channel_offset_hz), channel_rate_hz, spec);
}

// ---------------------------------------------------------------- Channelizer

Channelizer::Channelizer(double stream_rate_hz, double channel_offset_hz, double channel_rate_hz,
                         const ResamplerSpec &spec)
    : resampler_(stream_rate_hz, channel_rate_hz, spec), offset_(channel_offset_hz) {
    if (std::abs(channel_offset_hz) + channel_rate_hz / 2.0 > stream_rate_hz / 2.0 + 1e-9) {
        throw domain_error("channel at " + std::to_string(channel_offset_hz) + " Hz does not fit the stream");
    }
}

std::vector<cf64> Channelizer::push(const IQBuffer &block) {
    if (block.start_sample() != received_) {
        throw domain_error("channelizer input is not contiguous: expected sample " + std::to_string(received_) +
                           ", got " + std::to_string(block.start_sample()));
    }
    const std::size_t old = hist_.size();
    hist_.resize(old + block.size());
    const std::span<cf64> fresh = std::span(hist_).subspan(old);
    fill_rotator(-offset_, resampler_.in_rate_hz(), received_, fresh);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        fresh[i] *= block[i];
    }
    received_ += static_cast<std::int64_t>(block.size());

    // Largest m whose taps are all inside [0, received_).
    const double ratio = resampler_.in_rate_hz() / resampler_.out_rate_hz();
    auto limit = static_cast<std::int64_t>(std::floor(static_cast<double>(received_) / ratio));
    while (limit > next_out_ && resampler_.last_input_for(limit - 1) >= received_) {
        --limit;
    }
    while (resampler_.last_input_for(limit) < received_) {
        ++limit;
    }
    return emit(limit);
}

std::vector<cf64> Channelizer::finish() {
    return emit(static_cast<std::int64_t>(resampler_.output_length(static_cast<std::size_t>(received_))));
}

std::vector<cf64> Channelizer::emit(std::int64_t limit) {
    std::vector<cf64> out;
    if (limit > next_out_) {
        out.resize(static_cast<std::size_t>(limit - next_out_));
        resampler_.render(hist_, next_out_, out, hist_base_);
        next_out_ = limit;
    }
    const std::int64_t keep = std::min(received_, std::max<std::int64_t>(hist_base_, resampler_.first_input_for(next_out_)));
    if (keep > hist_base_) {
        hist_.erase(hist_.begin(), hist_.begin() + (keep - hist_base_));
        hist_base_ = keep;
    }
    return out;
}

} // namespace iqsim
