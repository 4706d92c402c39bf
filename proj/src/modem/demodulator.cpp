#include "iqsim/modem/demodulator.hpp"

#include "iqsim/modem/css.hpp"
#include "iqsim/modem/dbpsk.hpp"
#include "iqsim/modem/fsk.hpp"

#include <algorithm>
#include <cmath>

namespace iqsim {

StreamDemodulator::StreamDemodulator(double sample_rate_hz, std::int64_t origin, PowerCalibration cal)
    : cal_(cal), rate_(sample_rate_hz), base_(origin), resume_(origin) {}

std::vector<PacketOutcome> StreamDemodulator::push(std::span<const cf64> chunk) {
    buf_.insert(buf_.end(), chunk.begin(), chunk.end());
    return run(false);
}

std::vector<PacketOutcome> StreamDemodulator::finish() { return run(true); }

std::vector<PacketOutcome> StreamDemodulator::run(bool final) {
    ScanResult r = scan(buf_, base_, resume_, final);
    const std::int64_t keep = std::clamp(r.keep_from, base_, base_ + static_cast<std::int64_t>(buf_.size()));
    buf_.erase(buf_.begin(), buf_.begin() + (keep - base_));
    base_ = keep;
    resume_ = std::max(r.resume_at, base_);
    return std::move(r.outcomes);
}

double StreamDemodulator::rssi_over(std::span<const cf64> buf, std::int64_t base, std::int64_t from,
                                    std::int64_t to) const {
    const auto end = base + static_cast<std::int64_t>(buf.size());
    from = std::clamp(from, base, end);
    to = std::clamp(to, base, end);
    if (to <= from) {
        return -std::numeric_limits<double>::infinity();
    }
    const double p = mean_power(buf.subspan(from - base, to - from));
    if (!(p > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(p) + cal_.full_scale_dbm;
}

std::unique_ptr<StreamDemodulator> make_demodulator(const ModemParams &params, std::int64_t origin,
                                                    PowerCalibration cal) {
    validate(params);
    if (const auto *c = std::get_if<CssParams>(&params)) {
        return std::make_unique<CssDemodulator>(*c, origin, cal);
    }
    if (const auto *f = std::get_if<FskParams>(&params)) {
        return std::make_unique<FskDemodulator>(*f, origin, cal);
    }
    return std::make_unique<DbpskDemodulator>(std::get<DbpskParams>(params), origin, cal);
}

std::vector<PacketOutcome> demodulate(const IQBuffer &stream, const ModemParams &params,
                                      PowerCalibration cal) {
    auto demod = make_demodulator(params, stream.start_sample(), cal);
    auto out = demod->push(stream.samples());
    auto tail = demod->finish();
    out.insert(out.end(), std::make_move_iterator(tail.begin()), std::make_move_iterator(tail.end()));
    return out;
}

} // namespace iqsim
