#include "iqsim/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace iqsim {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

void require_finite(double v, const char *field) {
    if (!std::isfinite(v)) {
        throw validation_error(field, "must be finite");
    }
}

cf64 phasor_cycles(double cycles) {
    const double frac = cycles - std::floor(cycles);
    return std::polar(1.0, 2.0 * std::numbers::pi * frac);
}

} // namespace

void LogDistanceModel::validate() const {
    require_finite(reference_loss_db, "channel_model.reference_loss_db");
    if (!(reference_distance_m > 0.0) || !std::isfinite(reference_distance_m)) {
        throw validation_error("channel_model.reference_distance_m", "must be > 0");
    }
    if (!(exponent > 0.0) || !std::isfinite(exponent)) {
        throw validation_error("channel_model.exponent", "must be > 0");
    }
    if (!(shadowing_sigma_db >= 0.0) || !std::isfinite(shadowing_sigma_db)) {
        throw validation_error("channel_model.shadowing_sigma_db", "must be >= 0");
    }
}

double LogDistanceModel::median_loss_db(double distance_m, ChannelDiagnostics *diag) const {
    if (distance_m < reference_distance_m) {
        if (diag) {
            diag->clamped_distances.fetch_add(1, std::memory_order_relaxed);
        }
        return reference_loss_db;
    }
    return reference_loss_db + 10.0 * exponent * std::log10(distance_m / reference_distance_m);
}

void ImpairmentSpec::validate() const {
    require_finite(cfo_hz, "impairments.cfo_hz");
    if (!(phase_noise_linewidth_hz >= 0.0) || !std::isfinite(phase_noise_linewidth_hz)) {
        throw validation_error("impairments.phase_noise_linewidth_hz", "must be >= 0");
    }
    if (tx_saturation_amplitude && !(*tx_saturation_amplitude > 0.0 && std::isfinite(*tx_saturation_amplitude))) {
        throw validation_error("impairments.tx_saturation_amplitude", "must be > 0");
    }
    if (!(rapp_smoothness > 0.0) || !std::isfinite(rapp_smoothness)) {
        throw validation_error("impairments.rapp_smoothness", "must be > 0");
    }
}

double draw_shadowing_db(const PathLossModel &model, const Rng &rng, std::uint64_t link) {
    const double sigma = model.sigma_db();
    if (sigma == 0.0) {
        return 0.0;
    }
    return sigma * rng.substream("shadowing", link).next_gaussian();
}

std::uint64_t link_id(std::uint32_t device_id, std::uint32_t gateway_id) noexcept {
    return (static_cast<std::uint64_t>(device_id) << 32) | gateway_id;
}

double path_loss_db(const PathLossModel &model, const LinkState &link, ChannelDiagnostics *diag) {
    return model.median_loss_db(link.distance_m, diag) + link.shadowing_draw_db;
}

double received_power_dbm(double tx_power_dbm, const PathLossModel &model, const LinkState &link,
                          ChannelDiagnostics *diag) {
    return tx_power_dbm - path_loss_db(model, link, diag) + link.extra_gain_db;
}

std::int64_t propagation_delay_samples(double distance_m, double rate_hz) noexcept {
    return std::llround(distance_m / kSpeedOfLight * rate_hz);
}

IQBuffer apply_propagation(const IQBuffer &tx, double tx_power_dbm, const PathLossModel &model,
                           const LinkState &link, const PowerCalibration &cal, ChannelDiagnostics *diag,
                           const GainProfile &profile) {
    const double gain = dbm_to_amplitude(received_power_dbm(tx_power_dbm, model, link, diag), cal);
    if (!profile) {
        return tx.scaled(gain);
    }
    std::vector<cf64> out(tx.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = tx[n] * (gain * profile(n));
    }
    return IQBuffer(std::move(out), tx.sample_rate_hz(), tx.start_sample());
}

IQBuffer apply_cfo(const IQBuffer &buf, double cfo_hz) {
    const double rate = buf.sample_rate_hz();
    if (!(std::abs(cfo_hz) < rate / 2.0)) {
        throw domain_error("cfo " + std::to_string(cfo_hz) + " Hz outside +-rate/2");
    }
    if (cfo_hz == 0.0) {
        return buf;
    }
    const double step = cfo_hz / rate;
    std::vector<cf64> out(buf.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = buf[n] * phasor_cycles(step * static_cast<double>(n));
    }
    return IQBuffer(std::move(out), rate, buf.start_sample());
}

IQBuffer apply_phase_noise(const IQBuffer &buf, double linewidth_hz, RngStream &rng) {
    if (!(linewidth_hz >= 0.0)) {
        throw domain_error("phase noise linewidth must be >= 0");
    }
    if (linewidth_hz == 0.0 || buf.empty()) {
        return buf;
    }
    const double sigma = std::sqrt(2.0 * std::numbers::pi * linewidth_hz / buf.sample_rate_hz());
    std::vector<cf64> out(buf.size());
    double phi = 0.0;
    out[0] = buf[0];
    for (std::size_t n = 1; n < out.size(); ++n) {
        phi += sigma * rng.next_gaussian();
        phi = std::remainder(phi, 2.0 * std::numbers::pi);
        out[n] = buf[n] * std::polar(1.0, phi);
    }
    return IQBuffer(std::move(out), buf.sample_rate_hz(), buf.start_sample());
}

IQBuffer apply_tx_nonlinearity(const IQBuffer &buf, const ImpairmentSpec &spec) {
    if (!spec.tx_saturation_amplitude) {
        return buf;
    }
    const double a_sat = *spec.tx_saturation_amplitude;
    const double two_p = 2.0 * spec.rapp_smoothness;
    std::vector<cf64> out(buf.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double r = std::abs(buf[n]);
        const double g = 1.0 / std::pow(1.0 + std::pow(r / a_sat, two_p), 1.0 / two_p);
        out[n] = buf[n] * g;
    }
    return IQBuffer(std::move(out), buf.sample_rate_hz(), buf.start_sample());
}

IQBuffer apply_impairments(const IQBuffer &buf, const ImpairmentSpec &spec, RngStream &phase_noise_rng) {
    if (spec.is_identity()) {
        return buf;
    }
    IQBuffer out = apply_tx_nonlinearity(buf, spec);
    out = apply_cfo(out, spec.cfo_hz);
    return apply_phase_noise(out, spec.phase_noise_linewidth_hz, phase_noise_rng);
}

} // namespace iqsim
