#include "iqsim/modem/params.hpp"

#include "iqsim/errors.hpp"
#include "iqsim/modem/frame.hpp"

#include <cmath>
#include <sstream>

namespace iqsim {

namespace {

int integral_ratio(double num, double den) {
    const double r = num / den;
    const double rounded = std::round(r);
    if (std::abs(r - rounded) > 1e-9 * r) {
        return -1;
    }
    return static_cast<int>(rounded);
}

std::size_t body_bits(std::size_t payload_len) { return 8 * (payload_len + 3); }

} // namespace

void CssParams::validate() const {
    if (spreading_factor < 7 || spreading_factor > 12) {
        throw domain_error("css spreading_factor must be in [7, 12]");
    }
    if (!(chirp_bandwidth_hz > 0.0)) {
        throw domain_error("css chirp_bandwidth_hz must be > 0");
    }
    if (preamble_upchirps < 4) {
        throw domain_error("css preamble_upchirps must be >= 4");
    }
    if (detect_windows < 2 || detect_windows > preamble_upchirps) {
        throw domain_error("css detect_windows must be in [2, preamble_upchirps]");
    }
    if (!(detect_peak_to_mean > 1.0)) {
        throw domain_error("css detect_peak_to_mean must be > 1");
    }
}

int FskParams::samples_per_bit() const noexcept { return integral_ratio(native_rate_hz, bit_rate_bps); }

void FskParams::validate() const {
    if (!(bit_rate_bps > 0.0) || !(deviation_hz > 0.0) || !(native_rate_hz > 0.0)) {
        throw domain_error("fsk rates and deviation must be > 0");
    }
    if (!(deviation_hz < native_rate_hz / 2.0)) {
        throw domain_error("fsk deviation_hz must be below native_rate_hz / 2");
    }
    if (samples_per_bit() < 2) {
        throw domain_error("fsk native_rate_hz must be an integer multiple (>= 2) of bit_rate_bps");
    }
    if (sync_max_bit_errors < 0) {
        throw domain_error("fsk sync_max_bit_errors must be >= 0");
    }
}

int DbpskParams::samples_per_bit() const noexcept { return integral_ratio(native_rate_hz, bit_rate_bps); }

void DbpskParams::validate() const {
    if (!(bit_rate_bps > 0.0) || !(native_rate_hz > 0.0)) {
        throw domain_error("dbpsk rates must be > 0");
    }
    if (native_rate_hz < 2.0 * bit_rate_bps) {
        throw domain_error("dbpsk native_rate_hz must be >= 2 * bit_rate_bps");
    }
    if (samples_per_bit() < 2) {
        throw domain_error("dbpsk native_rate_hz must be an integer multiple of bit_rate_bps");
    }
    if (sync_max_bit_errors < 0) {
        throw domain_error("dbpsk sync_max_bit_errors must be >= 0");
    }
}

ModemClass modem_class(const ModemParams &p) noexcept {
    return static_cast<ModemClass>(p.index());
}

std::string_view modem_class_name(ModemClass c) noexcept {
    switch (c) {
    case ModemClass::css:
        return "css";
    case ModemClass::fsk:
        return "fsk";
    case ModemClass::dbpsk:
        return "dbpsk";
    }
    return "unknown";
}

void validate(const ModemParams &p) {
    std::visit([](const auto &m) { m.validate(); }, p);
}

double native_rate_hz(const ModemParams &p) noexcept {
    if (const auto *c = std::get_if<CssParams>(&p)) {
        return c->native_rate_hz();
    }
    if (const auto *f = std::get_if<FskParams>(&p)) {
        return f->native_rate_hz;
    }
    return std::get<DbpskParams>(p).native_rate_hz;
}

double occupied_bandwidth_hz(const ModemParams &p) noexcept {
    if (const auto *c = std::get_if<CssParams>(&p)) {
        return c->chirp_bandwidth_hz;
    }
    if (const auto *f = std::get_if<FskParams>(&p)) {
        return 2.0 * f->deviation_hz + f->bit_rate_bps;
    }
    return 2.0 * std::get<DbpskParams>(p).bit_rate_bps;
}

std::size_t frame_sample_count(const ModemParams &p, std::size_t payload_len) {
    if (const auto *c = std::get_if<CssParams>(&p)) {
        const std::size_t n = static_cast<std::size_t>(c->symbol_count());
        const std::size_t sf = static_cast<std::size_t>(c->spreading_factor);
        const std::size_t data_symbols = (body_bits(payload_len) + sf - 1) / sf;
        return (static_cast<std::size_t>(c->preamble_upchirps) + 2 + 2 + data_symbols) * n + n / 4;
    }
    const std::size_t header_bits = 8 * (kBitPreambleBytes + 2);
    if (const auto *f = std::get_if<FskParams>(&p)) {
        return (header_bits + body_bits(payload_len)) * static_cast<std::size_t>(f->samples_per_bit());
    }
    const auto &d = std::get<DbpskParams>(p);
    // One leading reference symbol anchors the differential encoding.
    return (1 + header_bits + body_bits(payload_len)) * static_cast<std::size_t>(d.samples_per_bit());
}

double frame_duration_s(const ModemParams &p, std::size_t payload_len) {
    return static_cast<double>(frame_sample_count(p, payload_len)) / native_rate_hz(p);
}

double symbol_duration_s(const ModemParams &p) noexcept {
    if (const auto *c = std::get_if<CssParams>(&p)) {
        return c->symbol_duration_s();
    }
    if (const auto *f = std::get_if<FskParams>(&p)) {
        return 1.0 / f->bit_rate_bps;
    }
    return 1.0 / std::get<DbpskParams>(p).bit_rate_bps;
}

std::string describe(const ModemParams &p) {
    std::ostringstream os;
    if (const auto *c = std::get_if<CssParams>(&p)) {
        os << "css sf" << c->spreading_factor << " bw" << c->chirp_bandwidth_hz;
    } else if (const auto *f = std::get_if<FskParams>(&p)) {
        os << "fsk " << f->bit_rate_bps << "bps dev" << f->deviation_hz;
    } else {
        os << "dbpsk " << std::get<DbpskParams>(p).bit_rate_bps << "bps";
    }
    return os.str();
}

} // namespace iqsim
