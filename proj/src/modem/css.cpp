#include "iqsim/modem/css.hpp"

#include "iqsim/errors.hpp"
#include "iqsim/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace iqsim {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

std::int64_t align_up(std::int64_t x, std::int64_t n) { return -floor_div(-x, n) * n; }

int wrap(int v, int n) {
    v %= n;
    return v < 0 ? v + n : v;
}

int circular_distance(int a, int b, int n) {
    const int d = wrap(a - b, n);
    return std::min(d, n - d);
}

constexpr int kDownSearchWindows = 8;

} // namespace

void css_write_symbol(int symbol, int sf, std::span<cf64> out) {
    const std::int64_t n_sym = std::int64_t{1} << sf;
    const std::int64_t two_n = 2 * n_sym;
    for (std::int64_t n = 0; n < n_sym; ++n) {
        // 2*pi*n*(s/N + n/(2N) - 1/2) = pi * (2ns + n^2 - nN) / N
        std::int64_t k = (2 * n * symbol + n * n - n * n_sym) % two_n;
        if (k < 0) {
            k += two_n;
        }
        out[static_cast<std::size_t>(n)] = std::polar(1.0, std::numbers::pi * static_cast<double>(k) /
                                                               static_cast<double>(n_sym));
    }
}

IQBuffer css_modulate_symbol(int symbol, const CssParams &p) {
    p.validate();
    const int n = p.symbol_count();
    if (symbol < 0 || symbol >= n) {
        throw domain_error("css symbol " + std::to_string(symbol) + " outside [0, " + std::to_string(n) + ")");
    }
    std::vector<cf64> out(static_cast<std::size_t>(n));
    css_write_symbol(symbol, p.spreading_factor, out);
    return IQBuffer(std::move(out), p.native_rate_hz());
}

std::vector<int> css_frame_symbols(const Frame &f, int sf) {
    const auto bits = bytes_to_bits(frame_body(f));
    return bits_to_symbols(bits, sf);
}

IQBuffer css_modulate_frame(const Frame &f, const CssParams &p) {
    p.validate();
    const auto data = css_frame_symbols(f, p.spreading_factor);
    const std::size_t n = static_cast<std::size_t>(p.symbol_count());
    std::vector<cf64> out(frame_sample_count(p, f.payload.size()));

    std::vector<cf64> up(n);
    css_write_symbol(0, p.spreading_factor, up);

    std::size_t pos = 0;
    for (int i = 0; i < p.preamble_upchirps; ++i, pos += n) {
        std::copy(up.begin(), up.end(), out.begin() + static_cast<std::ptrdiff_t>(pos));
    }
    for (const int s : kCssSyncSymbols) {
        css_write_symbol(s, p.spreading_factor, std::span(out).subspan(pos, n));
        pos += n;
    }
    const std::size_t down_len = 2 * n + n / 4;
    for (std::size_t i = 0; i < down_len; ++i) {
        out[pos + i] = std::conj(up[i % n]);
    }
    pos += down_len;
    for (const int s : data) {
        css_write_symbol(s, p.spreading_factor, std::span(out).subspan(pos, n));
        pos += n;
    }
    return IQBuffer(std::move(out), p.native_rate_hz());
}

int css_dechirp_argmax(std::span<const cf64> window, int sf) {
    const std::size_t n = std::size_t{1} << sf;
    if (window.size() != n) {
        throw domain_error("css window must hold exactly 2^sf samples");
    }
    std::vector<cf64> up(n);
    css_write_symbol(0, sf, up);
    std::vector<cf64> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = window[i] * std::conj(up[i]);
    }
    std::vector<cf64> spec(n);
    Fft(n).forward(z, spec);
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k) {
        if (std::norm(spec[k]) > std::norm(spec[best])) {
            best = k;
        }
    }
    return static_cast<int>(best);
}

CssDemodulator::CssDemodulator(const CssParams &p, std::int64_t origin, PowerCalibration cal)
    : StreamDemodulator(p.native_rate_hz(), origin, cal), p_(p), n_(p.symbol_count()),
      fft_(static_cast<std::size_t>(n_)), up_(static_cast<std::size_t>(n_)), rot_(static_cast<std::size_t>(n_)),
      work_(static_cast<std::size_t>(n_)), spec_(static_cast<std::size_t>(n_)) {
    p_.validate();
    css_write_symbol(0, p_.spreading_factor, up_);
    std::fill(rot_.begin(), rot_.end(), cf64(1.0, 0.0));
}

CssDemodulator::Window CssDemodulator::window_at(std::span<const cf64> buf, std::int64_t base, std::int64_t pos,
                                                 bool down) {
    const cf64 *src = buf.data() + (pos - base);
    for (int i = 0; i < n_; ++i) {
        work_[i] = src[i] * (down ? up_[i] : std::conj(up_[i]));
    }
    fft_.forward(work_, spec_);
    int best = 0;
    double peak = -1.0;
    double sum = 0.0;
    for (int k = 0; k < n_; ++k) {
        const double m = std::abs(spec_[k]);
        sum += m;
        if (m > peak) {
            peak = m;
            best = k;
        }
    }
    const double mean = sum / n_;
    Window w;
    w.bin = best;
    w.peak = peak;
    w.strong = mean > 0.0 && peak >= p_.detect_peak_to_mean * mean;
    return w;
}

double CssDemodulator::tone_bins(std::size_t len) {
    // Coarse offset from the summed per-window spectrum, fine offset from a
    // lag-N/4 autocorrelation of the coarse-corrected tone (unambiguous
    // within +-2 bins). Consumes tone_[0, len).
    const std::size_t windows = len / static_cast<std::size_t>(n_);
    power_.assign(static_cast<std::size_t>(n_), 0.0);
    for (std::size_t w = 0; w < windows; ++w) {
        fft_.forward(std::span<const cf64>(tone_).subspan(w * n_, n_), spec_);
        for (int k = 0; k < n_; ++k) {
            power_[k] += std::norm(spec_[k]);
        }
    }
    int coarse = static_cast<int>(std::max_element(power_.begin(), power_.end()) - power_.begin());
    if (coarse >= n_ / 2) {
        coarse -= n_;
    }
    for (std::size_t i = 0; i < len; ++i) {
        const int k = static_cast<int>((static_cast<std::int64_t>(coarse) * static_cast<std::int64_t>(i)) % n_);
        tone_[i] *= std::polar(1.0, -2.0 * std::numbers::pi * k / n_);
    }
    const std::size_t lag = static_cast<std::size_t>(n_ / 4);
    cf64 acc(0.0, 0.0);
    for (std::size_t i = 0; i + lag < len; ++i) {
        acc += tone_[i + lag] * std::conj(tone_[i]);
    }
    if (std::abs(acc) == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return coarse + std::arg(acc) / (2.0 * std::numbers::pi * static_cast<double>(lag)) * n_;
}

bool CssDemodulator::residual_bins(std::span<const cf64> buf, std::int64_t base, std::int64_t boundary,
                                   std::int64_t earliest, double &residual) {
    // Dechirped preamble windows form one continuous tone at (cfo - tau) bins,
    // the two full downchirps one at (cfo + tau), where tau is the arrival
    // time past `boundary` in samples.
    int windows = 0;
    while (windows + 1 < p_.preamble_upchirps) {
        const std::int64_t pos = boundary - static_cast<std::int64_t>(windows + 1) * n_;
        if (pos < earliest || pos < base) {
            break;
        }
        ++windows;
    }
    if (windows == 0) {
        return false;
    }
    const std::int64_t first = boundary - static_cast<std::int64_t>(windows) * n_;
    std::size_t len = static_cast<std::size_t>(windows) * static_cast<std::size_t>(n_);
    tone_.resize(len);
    const cf64 *src = buf.data() + (first - base);
    for (std::size_t i = 0; i < len; ++i) {
        tone_[i] = src[i] * std::conj(up_[i % static_cast<std::size_t>(n_)]);
    }
    const double up_bins = tone_bins(len);

    len = 2 * static_cast<std::size_t>(n_);
    tone_.resize(len);
    src = buf.data() + (boundary + 2 * n_ - base);
    for (std::size_t i = 0; i < len; ++i) {
        tone_[i] = src[i] * up_[i % static_cast<std::size_t>(n_)];
    }
    const double down_bins = tone_bins(len);
    if (!std::isfinite(up_bins) || !std::isfinite(down_bins)) {
        return false;
    }
    residual = up_bins;
    tau_ = 0.5 * (down_bins - up_bins);
    for (int i = 0; i < n_; ++i) {
        rot_[i] = std::polar(1.0, -2.0 * std::numbers::pi * residual * i / n_);
    }
    return true;
}

int CssDemodulator::corrected_symbol(std::span<const cf64> buf, std::int64_t base, std::int64_t pos) {
    const cf64 *src = buf.data() + (pos - base);
    auto argmax = [&] {
        fft_.forward(work_, spec_);
        int best = 0;
        double peak = -1.0;
        for (int k = 0; k < n_; ++k) {
            const double m = std::norm(spec_[k]);
            if (m > peak) {
                peak = m;
                best = k;
            }
        }
        return best;
    };
    for (int i = 0; i < n_; ++i) {
        work_[i] = src[i] * std::conj(up_[i]) * rot_[i];
    }
    const int first = argmax();
    // A chirp sampled tau late picks up a 2*pi*tau phase step where its
    // frequency folds (n > N - s + tau). Undo it for the tentative symbol and
    // decide again; a near miss moves the step by one sample at most.
    const double step = std::abs(tau_ - std::round(tau_));
    if (first == 0 || step < 0.05) {
        return first;
    }
    const int fold = std::clamp(static_cast<int>(std::ceil(n_ - first + tau_)), 0, n_);
    const cf64 undo = std::polar(1.0, -2.0 * std::numbers::pi * tau_);
    for (int i = fold; i < n_; ++i) {
        work_[i] *= undo;
    }
    return argmax();
}

CssDemodulator::Attempt CssDemodulator::try_frame(std::span<const cf64> buf, std::int64_t base,
                                                  std::int64_t run_start, int run_len, int run_bin, bool final) {
    const std::int64_t n = n_;
    const std::int64_t end = base + static_cast<std::int64_t>(buf.size());
    const std::int64_t run_last = run_start + (run_len - 1) * n;
    Attempt a;

    // Downchirp after the preamble pins down timing versus frequency offset.
    bool have_down = false;
    Window down;
    std::int64_t down_pos = 0;
    for (int j = 1; j <= kDownSearchWindows; ++j) {
        const std::int64_t pos = run_last + j * n;
        if (pos + n > end) {
            if (!final) {
                a.status = Status::need_more;
                return a;
            }
            break;
        }
        const Window w = window_at(buf, base, pos, true);
        if (w.strong && (!have_down || w.peak > down.peak)) {
            down = w;
            down_pos = pos;
            have_down = true;
        }
    }
    if (!have_down) {
        spdlog::debug("css sf{}: run at {} (bin {}, {} windows) has no downchirp", p_.spreading_factor, run_start,
                      run_bin, run_len);
        return a;
    }

    // u = delta + cfo, d = cfo - delta (mod N).
    int s = wrap(run_bin + down.bin, n_);
    if (s >= n_ / 2) {
        s -= n_;
    }
    const int cfo = static_cast<int>(floor_div(s, 2));
    const int delta = wrap(run_bin - cfo, n_);
    const std::int64_t first_boundary = run_start - delta;

    std::int64_t sync_pos = 0;
    bool synced = false;
    for (int k = 0; k <= run_len + 3 && !synced; ++k) {
        const std::int64_t b = first_boundary + k * n;
        const std::int64_t down_start = b + 2 * n;
        // The strongest down window may overhang the 2.25-chirp region by a
        // fraction of a symbol; the sync symbols below reject wrong candidates.
        if (down_pos < down_start - n / 4 || down_pos > down_start + n + n / 2) {
            continue;
        }
        if (b + 4 * n > end) {
            if (!final) {
                a.status = Status::need_more;
                return a;
            }
            break;
        }
        double residual = 0.0;
        if (!residual_bins(buf, base, b, run_start - n, residual)) {
            continue;
        }
        if (corrected_symbol(buf, base, b) == kCssSyncSymbols[0] &&
            corrected_symbol(buf, base, b + n) == kCssSyncSymbols[1]) {
            sync_pos = b;
            synced = true;
        }
    }
    if (!synced) {
        spdlog::debug("css sf{}: run at {} (bin {}, down bin {} at {}) found no sync", p_.spreading_factor, run_start,
                      run_bin, down.bin, down_pos);
        return a;
    }

    const int sf = p_.spreading_factor;
    const std::int64_t data_start = sync_pos + 4 * n + n / 4;
    const std::int64_t frame_start = sync_pos - static_cast<std::int64_t>(p_.preamble_upchirps) * n;
    auto available = [&](std::int64_t symbols) { return data_start + symbols * n <= end; };

    const std::int64_t len_symbols = (8 + sf - 1) / sf;
    std::vector<int> symbols;
    auto read_symbols = [&](std::int64_t count) {
        while (static_cast<std::int64_t>(symbols.size()) < count && available(symbols.size() + 1)) {
            symbols.push_back(corrected_symbol(buf, base, data_start + static_cast<std::int64_t>(symbols.size()) * n));
        }
    };

    if (!available(len_symbols) && !final) {
        a.status = Status::need_more;
        return a;
    }
    read_symbols(len_symbols);

    PacketOutcome o;
    o.detected = true;
    o.start_sample = frame_start;
    std::int64_t frame_end = data_start + static_cast<std::int64_t>(symbols.size()) * n;

    if (static_cast<std::int64_t>(symbols.size()) == len_symbols) {
        const auto head = bits_to_bytes(symbols_to_bits(symbols, sf));
        const std::size_t len = head.front();
        if (len > 0) {
            const std::int64_t total = static_cast<std::int64_t>((8 * (len + 3) + sf - 1) / sf);
            if (!available(total) && !final) {
                a.status = Status::need_more;
                return a;
            }
            read_symbols(total);
            frame_end = data_start + static_cast<std::int64_t>(symbols.size()) * n;
            auto bits = symbols_to_bits(symbols, sf);
            bits.resize(std::min(bits.size(), 8 * (len + 3)));
            const auto body = bits_to_bytes(bits);
            if (body.size() == len + 3) {
                o.payload_decoded.assign(body.begin() + 1, body.begin() + 1 + static_cast<std::ptrdiff_t>(len));
                const std::uint16_t rx_crc = static_cast<std::uint16_t>((body[len + 1] << 8) | body[len + 2]);
                o.crc_ok = rx_crc == crc16(o.payload_decoded);
            } else if (body.size() > 1) {
                o.payload_decoded.assign(body.begin() + 1,
                                         body.begin() + static_cast<std::ptrdiff_t>(std::min(body.size(), len + 1)));
            }
        }
    }
    o.rssi_dbm = rssi_over(buf, base, frame_start, frame_end);
    a.status = Status::decoded;
    a.outcome = std::move(o);
    a.frame_end = frame_end;
    return a;
}

StreamDemodulator::ScanResult CssDemodulator::scan(std::span<const cf64> buf, std::int64_t base,
                                                   std::int64_t resume_at, bool final) {
    const std::int64_t n = n_;
    const std::int64_t end = base + static_cast<std::int64_t>(buf.size());
    const int cap = p_.preamble_upchirps + 2;
    // A frame whose run starts at p can begin up to P + 1 symbols earlier.
    const std::int64_t history = (p_.preamble_upchirps + 1) * n;
    ScanResult r;
    std::int64_t p = align_up(std::max(resume_at, base), n);

    while (p + n <= end) {
        const Window first = window_at(buf, base, p, false);
        if (!first.strong) {
            p += n;
            continue;
        }
        const std::int64_t run_start = p;
        Window best = first;
        int len = 1;
        std::int64_t q = p + n;
        bool cut = false;
        while (len < cap) {
            if (q + n > end) {
                cut = true;
                break;
            }
            const Window w = window_at(buf, base, q, false);
            if (!w.strong || circular_distance(w.bin, first.bin, n_) > 1) {
                break;
            }
            if (w.peak > best.peak) {
                best = w;
            }
            ++len;
            q += n;
        }
        if (cut && !final) {
            r.keep_from = run_start - history;
            r.resume_at = run_start;
            return r;
        }
        if (len < p_.detect_windows) {
            // A leading window that only clips the preamble can pick a bin two
            // away from the rest and split the run; retry from the next window.
            p = run_start + n;
            continue;
        }
        spdlog::trace("css sf{}: run at {} bin {} over {} windows", p_.spreading_factor, run_start, best.bin, len);
        Attempt a = try_frame(buf, base, run_start, len, best.bin, final);
        if (a.status == Status::need_more) {
            r.keep_from = run_start - history;
            r.resume_at = run_start;
            return r;
        }
        if (a.status == Status::decoded) {
            const bool ok = a.outcome.crc_ok;
            r.outcomes.push_back(std::move(a.outcome));
            p = ok ? align_up(a.frame_end, n) : q;
        } else {
            p = q;
        }
    }
    r.keep_from = p - history;
    r.resume_at = p;
    return r;
}

} // namespace iqsim
