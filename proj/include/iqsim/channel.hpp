#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>

#include "iqsim/iq_core.hpp"
#include "iqsim/rng.hpp"

namespace iqsim {

// Counts path-loss evaluations below the reference distance. Shared between
// workers, hence atomic.
struct ChannelDiagnostics {
    std::atomic<std::uint64_t> clamped_distances{0};
};

// Large-scale attenuation interface. Only the log-distance law ships; other
// empirical models (Hata, COST-231) would implement this too.
class PathLossModel {
public:
    virtual ~PathLossModel() = default;
    // Median loss at `distance_m`, without shadowing.
    virtual double median_loss_db(double distance_m, ChannelDiagnostics *diag) const = 0;
    virtual double sigma_db() const = 0;
};

struct LogDistanceModel final : PathLossModel {
    double reference_loss_db = 40.0;
    double reference_distance_m = 1.0;
    double exponent = 2.7;
    double shadowing_sigma_db = 0.0;

    LogDistanceModel() = default;
    LogDistanceModel(double pl0_db, double d0_m, double n, double sigma_db = 0.0)
        : reference_loss_db(pl0_db), reference_distance_m(d0_m), exponent(n), shadowing_sigma_db(sigma_db) {}

    void validate() const;
    // PL0 + 10 n log10(d / d0); distances below d0 clamp to PL0 and bump the counter.
    double median_loss_db(double distance_m, ChannelDiagnostics *diag) const override;
    double sigma_db() const override { return shadowing_sigma_db; }
};

struct ImpairmentSpec {
    double cfo_hz = 0.0;
    double phase_noise_linewidth_hz = 0.0;
    std::optional<double> tx_saturation_amplitude;  // absent: no limiter
    double rapp_smoothness = 2.0;

    void validate() const;
    bool is_identity() const noexcept {
        return cfo_hz == 0.0 && phase_noise_linewidth_hz == 0.0 && !tx_saturation_amplitude;
    }
};

struct LinkState {
    double distance_m = 1.0;
    double shadowing_draw_db = 0.0;  // frozen for the run
    double extra_gain_db = 0.0;
};

// Shadowing for one link: sigma * N(0,1) from the ("shadowing", link_id) substream.
double draw_shadowing_db(const PathLossModel &model, const Rng &rng, std::uint64_t link_id);

// Stable id for a device/gateway pair.
std::uint64_t link_id(std::uint32_t device_id, std::uint32_t gateway_id) noexcept;

double path_loss_db(const PathLossModel &model, const LinkState &link, ChannelDiagnostics *diag = nullptr);

// Received power for a transmitter at `tx_power_dbm` over `link`.
double received_power_dbm(double tx_power_dbm, const PathLossModel &model, const LinkState &link,
                          ChannelDiagnostics *diag = nullptr);

// Free-space propagation delay in whole samples at `rate_hz`.
std::int64_t propagation_delay_samples(double distance_m, double rate_hz) noexcept;

// Per-sample linear amplitude multiplier, indexed from the buffer's first sample.
using GainProfile = std::function<double(std::size_t n)>;

// Scales a unit-mean-power waveform to its received level. The optional
// profile multiplies on top of the path loss to model time-varying fading.
IQBuffer apply_propagation(const IQBuffer &tx, double tx_power_dbm, const PathLossModel &model,
                           const LinkState &link, const PowerCalibration &cal = {},
                           ChannelDiagnostics *diag = nullptr, const GainProfile &profile = {});

// x[n] * exp(j 2 pi cfo n / rate), phase zero at the buffer's first sample.
IQBuffer apply_cfo(const IQBuffer &buf, double cfo_hz);

// Wiener phase noise: phi[0] = 0, phi[n] = phi[n-1] + N(0, 2 pi linewidth / rate).
IQBuffer apply_phase_noise(const IQBuffer &buf, double linewidth_hz, RngStream &rng);

// Rapp AM/AM: |y| = |x| / (1 + (|x|/A)^(2p))^(1/(2p)), phase untouched.
IQBuffer apply_tx_nonlinearity(const IQBuffer &buf, const ImpairmentSpec &spec);

// Transmitter chain in physical order: PA limiter, then oscillator offset and
// phase noise. Identity when every impairment is off.
IQBuffer apply_impairments(const IQBuffer &buf, const ImpairmentSpec &spec, RngStream &phase_noise_rng);

} // namespace iqsim
