#include "iqsim/resampler.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <tuple>

namespace iqsim {

namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-12) {
        return 1.0;
    }
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

double kaiser(double x, double beta) {
    if (std::abs(x) >= 1.0) {
        return 0.0;
    }
    using boost::math::cyl_bessel_i;
    return cyl_bessel_i(0, beta * std::sqrt(1.0 - x * x)) / cyl_bessel_i(0, beta);
}

// Row of `taps` coefficients for fractional position `frac`, duplicated into
// (c0, c0, c1, c1, ...) so it multiplies interleaved re/im doubles directly.
void fill_row(double *row, int taps, double frac, double scale, double beta) {
    const int half = taps / 2;
    double sum = 0.0;
    for (int j = 0; j < taps; ++j) {
        const double tau = frac + half - 1 - j;
        const double c = scale * sinc(scale * tau) * kaiser(tau / half, beta);
        row[2 * j] = c;
        sum += c;
    }
    for (int j = 0; j < taps; ++j) {
        const double c = row[2 * j] / sum;
        row[2 * j] = c;
        row[2 * j + 1] = c;
    }
}

using BankKey = std::tuple<int, std::int64_t, std::int64_t, int, double, double, bool>;

std::shared_ptr<const std::vector<double>> cached_bank(const BankKey &key,
                                                       const std::function<std::vector<double>()> &build) {
    static std::mutex mutex;
    static std::map<BankKey, std::shared_ptr<const std::vector<double>>> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) {
        return it->second;
    }
    auto bank = std::make_shared<const std::vector<double>>(build());
    cache.emplace(key, bank);
    return bank;
}

bool integral_rate(double r) {
    return r < 9.0e15 && std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

// Interleaved complex (re, im) dot product against a duplicated coefficient row.
// Eight independent accumulators keep the loop vectorisable without reassociation.
inline cf64 dot_row(const double *x, const double *c, int n2) noexcept {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (int i = 0; i < n2; i += 8) {
        for (int l = 0; l < 8; ++l) {
            acc[l] += x[i + l] * c[i + l];
        }
    }
    return {(acc[0] + acc[4]) + (acc[2] + acc[6]), (acc[1] + acc[5]) + (acc[3] + acc[7])};
}

inline cf64 dot_row_bounded(std::span<const cf64> input, std::int64_t base, const double *c,
                            int taps) noexcept {
    double re = 0.0, im = 0.0;
    const auto len = static_cast<std::int64_t>(input.size());
    for (int j = 0; j < taps; ++j) {
        const std::int64_t k = base + j;
        if (k < 0 || k >= len) {
            continue;
        }
        re += input[k].real() * c[2 * j];
        im += input[k].imag() * c[2 * j];
    }
    return {re, im};
}

} // namespace

void ResamplerSpec::validate() const {
    if (taps_per_phase < 8) {
        throw domain_error("resampler taps_per_phase must be >= 8");
    }
    if (num_phases < 32) {
        throw domain_error("resampler num_phases must be >= 32");
    }
    if (!(kaiser_beta >= 0.0) || !std::isfinite(kaiser_beta)) {
        throw domain_error("resampler kaiser_beta must be finite and >= 0");
    }
}

Resampler::Resampler(double in_rate_hz, double out_rate_hz, const ResamplerSpec &spec)
    : in_rate_(in_rate_hz), out_rate_(out_rate_hz) {
    if (!(in_rate_hz > 0.0) || !(out_rate_hz > 0.0) || !std::isfinite(in_rate_hz) ||
        !std::isfinite(out_rate_hz)) {
        throw domain_error("resampler rates must be positive");
    }
    spec.validate();
    ratio_ = in_rate_ / out_rate_;
    const double scale = std::min(1.0, out_rate_ / in_rate_);
    int taps = static_cast<int>(std::ceil(spec.taps_per_phase / scale));
    taps = (taps + 3) / 4 * 4;
    taps_ = taps;
    stride_ = 2 * taps;

    if (in_rate_ == out_rate_) {
        identity_ = true;
        exact_ = true;
        return;
    }

    if (integral_rate(in_rate_) && integral_rate(out_rate_)) {
        const auto in_i = static_cast<std::int64_t>(std::llround(in_rate_));
        const auto out_i = static_cast<std::int64_t>(std::llround(out_rate_));
        const std::int64_t g = std::gcd(in_i, out_i);
        num_ = in_i / g;
        den_ = out_i / g;
        exact_ = den_ <= kMaxExactPhases;
    }

    const double beta = spec.kaiser_beta;
    if (exact_) {
        const std::int64_t den = den_;
        const BankKey key{taps, num_, den_, 0, scale, beta, true};
        bank_ = cached_bank(key, [=] {
            std::vector<double> bank(static_cast<std::size_t>(den) * 2 * taps);
            for (std::int64_t p = 0; p < den; ++p) {
                fill_row(bank.data() + p * 2 * taps, taps, static_cast<double>(p) / den, scale, beta);
            }
            return bank;
        });
    } else {
        phases_ = spec.num_phases;
        const int phases = phases_;
        const BankKey key{taps, 0, 0, phases, scale, beta, false};
        bank_ = cached_bank(key, [=] {
            std::vector<double> bank(static_cast<std::size_t>(phases + 1) * 2 * taps);
            for (int p = 0; p <= phases; ++p) {
                fill_row(bank.data() + static_cast<std::size_t>(p) * 2 * taps, taps,
                         static_cast<double>(p) / phases, scale, beta);
            }
            return bank;
        });
    }
}

std::size_t Resampler::output_length(std::size_t in_len) const noexcept {
    return static_cast<std::size_t>(std::llround(static_cast<double>(in_len) / ratio_));
}

Resampler::Position Resampler::locate(std::int64_t m) const noexcept {
    const int half = taps_ / 2;
    if (exact_) {
        const std::int64_t prod = m * num_;
        const std::int64_t whole = floor_div(prod, den_);
        const std::int64_t phase = prod - whole * den_;
        return {whole - half + 1, bank_->data() + phase * stride_, nullptr, 0.0};
    }
    const double t = static_cast<double>(m) * ratio_;
    const double fl = std::floor(t);
    const double pf = (t - fl) * phases_;
    int p = static_cast<int>(pf);
    if (p >= phases_) {
        p = phases_ - 1;
    }
    const double a = pf - p;
    const double *row = bank_->data() + static_cast<std::size_t>(p) * stride_;
    return {static_cast<std::int64_t>(fl) - half + 1, row, row + stride_, a};
}

cf64 Resampler::evaluate(std::span<const cf64> input, const Position &pos) const noexcept {
    const auto len = static_cast<std::int64_t>(input.size());
    const bool inside = pos.base >= 0 && pos.base + taps_ <= len;
    const auto *x = reinterpret_cast<const double *>(input.data());
    auto eval_row = [&](const double *row) {
        return inside ? dot_row(x + 2 * pos.base, row, stride_)
                      : dot_row_bounded(input, pos.base, row, taps_);
    };
    if (pos.coeffs_next == nullptr) {
        return eval_row(pos.coeffs);
    }
    return (1.0 - pos.frac) * eval_row(pos.coeffs) + pos.frac * eval_row(pos.coeffs_next);
}

std::int64_t Resampler::first_input_for(std::int64_t m) const noexcept {
    if (identity_) {
        return m;
    }
    return locate(m).base;
}

std::int64_t Resampler::last_input_for(std::int64_t m) const noexcept {
    if (identity_) {
        return m;
    }
    return locate(m).base + taps_ - 1;
}

cf64 Resampler::at(std::span<const cf64> input, std::int64_t origin, std::int64_t m) const noexcept {
    if (identity_) {
        const std::int64_t k = m - origin;
        return (k >= 0 && k < static_cast<std::int64_t>(input.size())) ? input[k] : cf64{};
    }
    Position pos = locate(m);
    pos.base -= origin;
    return evaluate(input, pos);
}

template <typename Sink>
void Resampler::for_each_output(std::span<const cf64> input, std::int64_t origin, std::int64_t first,
                                std::size_t count, Sink &&sink) const noexcept {
    if (identity_ || !exact_) {
        for (std::size_t i = 0; i < count; ++i) {
            sink(i, at(input, origin, first + static_cast<std::int64_t>(i)));
        }
        return;
    }
    // Exact path: step (whole, phase) incrementally instead of dividing per output.
    const int half = taps_ / 2;
    const std::int64_t prod = first * num_;
    std::int64_t whole = floor_div(prod, den_);
    std::int64_t phase = prod - whole * den_;
    const std::int64_t step_whole = num_ / den_;
    const std::int64_t step_rem = num_ % den_;
    const auto len = static_cast<std::int64_t>(input.size());
    const auto *x = reinterpret_cast<const double *>(input.data());
    const double *bank = bank_->data();
    for (std::size_t i = 0; i < count; ++i) {
        const std::int64_t base = whole - half + 1 - origin;
        const double *row = bank + phase * stride_;
        const cf64 v = (base >= 0 && base + taps_ <= len) ? dot_row(x + 2 * base, row, stride_)
                                                          : dot_row_bounded(input, base, row, taps_);
        sink(i, v);
        whole += step_whole;
        phase += step_rem;
        if (phase >= den_) {
            phase -= den_;
            ++whole;
        }
    }
}

void Resampler::render(std::span<const cf64> input, std::int64_t first, std::span<cf64> out,
                       std::int64_t origin) const noexcept {
    for_each_output(input, origin, first, out.size(), [&](std::size_t i, cf64 v) { out[i] = v; });
}

void Resampler::render_accumulate(std::span<const cf64> input, std::int64_t first, double gain,
                                  std::span<const cf64> rotator, std::span<cf64> out) const noexcept {
    for_each_output(input, 0, first, out.size(), [&](std::size_t i, cf64 v) {
        // Written out to avoid the NaN-recovery path of std::complex multiplication.
        const double gr = gain * rotator[i].real();
        const double gi = gain * rotator[i].imag();
        out[i] = {out[i].real() + (gr * v.real() - gi * v.imag()),
                  out[i].imag() + (gr * v.imag() + gi * v.real())};
    });
}

IQBuffer resample(const IQBuffer &buf, double out_rate_hz, const ResamplerSpec &spec) {
    const Resampler rs(buf.sample_rate_hz(), out_rate_hz, spec);
    std::vector<cf64> out(rs.output_length(buf.size()));
    rs.render(buf.samples(), 0, out);
    const auto start = std::llround(static_cast<double>(buf.start_sample()) * out_rate_hz /
                                    buf.sample_rate_hz());
    return IQBuffer(std::move(out), out_rate_hz, start);
}

} // namespace iqsim
