#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "iqsim/iq_core.hpp"
#include "iqsim/resampler.hpp"
#include "iqsim/rng.hpp"

namespace iqsim {

// Variance of each of I and Q for noise over the whole stream bandwidth.
double noise_component_variance(const NoiseSpec &noise, double stream_rate_hz, const PowerCalibration &cal);

// One received burst ready for superposition. `waveform` is at its native
// rate and already scaled to received level; `start_sample` is on the
// stream timeline.
struct PlacedBurst {
    IQBuffer waveform{1.0};
    double carrier_offset_hz = 0.0;
    std::int64_t start_sample = 0;
    std::uint32_t source_device_id = 0;
};

// |offset| + native_rate/2 <= stream_rate/2
bool burst_contained(const PlacedBurst &b, double stream_rate_hz) noexcept;

// out[i] = exp(j 2 pi offset (first + i) / rate). Phasors are evaluated
// exactly at every multiple of kRotatorAnchor and advanced by complex
// multiplication in between, so each value depends only on its absolute index.
inline constexpr std::int64_t kRotatorAnchor = 512;
void fill_rotator(double offset_hz, double rate_hz, std::int64_t first, std::span<cf64> out);

// Shift referenced to the timeline origin: sample n of the buffer is rotated
// by its absolute index start_sample + n.
IQBuffer frequency_shift(const IQBuffer &buf, double offset_hz);

struct MixerConfig {
    double stream_rate_hz = 1.5e6;
    NoiseSpec noise;
    PowerCalibration cal;
    ResamplerSpec resampler;
};

// Superposes bursts block by block on one gateway's timeline.
//
// Every output sample is the sum, in ascending (device id, start sample)
// order, of each overlapping burst resampled to the stream rate and rotated to
// its carrier, plus noise drawn by absolute sample index. The value of a
// sample therefore never depends on block size, slicing or worker count.
class BlockMixer {
public:
    BlockMixer(MixerConfig config, RngStream noise_rng);

    // Queues a burst. Returns false (and counts a rejection) when the burst
    // would not fit inside the stream bandwidth.
    bool add(PlacedBurst burst);

    // Renders stream samples [from, from + out.size()). Bursts ending at or
    // before `from` are released first, so calls should move forward in time.
    void render(std::int64_t from, std::span<cf64> out);

    // Same result, with the block cut into up to `slices` anchor-aligned
    // ranges handed to parallel_for(count, fn(index)).
    template <typename ParallelFor>
    void render(std::int64_t from, std::span<cf64> out, ParallelFor &&parallel_for, std::size_t slices) {
        release_before(from);
        const std::size_t n = out.size();
        slices = std::max<std::size_t>(1, std::min(slices, n / kRotatorAnchor + 1));
        const std::size_t step = (n / slices + kRotatorAnchor - 1) / kRotatorAnchor * kRotatorAnchor;
        const std::size_t count = step == 0 ? 1 : (n + step - 1) / step;
        parallel_for(count, [&](std::size_t k) {
            const std::size_t a = k * step;
            const std::size_t b = std::min(n, a + step);
            if (a < b) {
                render_range(from + static_cast<std::int64_t>(a), out.subspan(a, b - a));
            }
        });
    }

    std::size_t active_bursts() const noexcept { return bursts_.size(); }
    std::uint64_t rejected() const noexcept { return rejected_; }
    // Queued bursts overlapping [from, to) (diagnostic).
    std::size_t overlapping(std::int64_t from, std::int64_t to) const noexcept;

private:
    struct Prepared {
        std::uint32_t device_id;
        std::int64_t start;
        std::int64_t end;  // exclusive, stream samples
        double offset_hz;
        std::shared_ptr<const Resampler> resampler;
        std::vector<cf64> samples;
    };

    void release_before(std::int64_t from);
    void render_range(std::int64_t from, std::span<cf64> out) const;

    MixerConfig config_;
    RngStream noise_rng_;
    double noise_sigma_;
    std::vector<Prepared> bursts_;  // canonical order
    std::uint64_t rejected_ = 0;
};

// Renders the window [start, end) in one call.
IQBuffer mix(const std::vector<PlacedBurst> &bursts, const MixerConfig &config, std::int64_t start,
             std::int64_t end, const RngStream &noise_rng);

// Frequency shift by -offset, then resample to the channel rate. The output
// starts at round(stream.start * channel_rate / stream_rate).
IQBuffer channelize(const IQBuffer &stream, double channel_offset_hz, double channel_rate_hz,
                    const ResamplerSpec &spec = {});

// Streaming channelizer for a contiguous stream that starts at sample 0.
// Channel sample m sits at stream position m * stream_rate / channel_rate and
// is emitted once every stream sample it depends on has arrived.
class Channelizer {
public:
    Channelizer(double stream_rate_hz, double channel_offset_hz, double channel_rate_hz,
                const ResamplerSpec &spec = {});

    double channel_rate_hz() const noexcept { return resampler_.out_rate_hz(); }
    double offset_hz() const noexcept { return offset_; }

    // `block` must continue exactly where the previous one ended.
    std::vector<cf64> push(const IQBuffer &block);
    // Emits the remaining outputs up to round(total_len * channel_rate / stream_rate).
    std::vector<cf64> finish();

    std::int64_t next_output() const noexcept { return next_out_; }

private:
    std::vector<cf64> emit(std::int64_t limit);

    Resampler resampler_;
    double offset_;
    std::vector<cf64> hist_;     // shifted stream samples from hist_base_
    std::int64_t hist_base_ = 0;
    std::int64_t received_ = 0;  // stream samples seen
    std::int64_t next_out_ = 0;
};

} // namespace iqsim
