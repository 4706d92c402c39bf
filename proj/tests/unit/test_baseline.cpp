#include "doctest.h"

#include "iqsim/baseline.hpp"
#include "iqsim/rng.hpp"

#include <cmath>

using namespace iqsim;

namespace {

// Noise spec whose power over `bw` is exactly `dbm`.
NoiseSpec noise_at(double dbm, double bw) {
    NoiseSpec n;
    n.receiver_noise_figure_db = 0.0;
    n.density_dbm_per_hz = dbm - 10.0 * std::log10(bw);
    return n;
}

AbstractTransmission css(std::uint32_t dev, double dbm, double t0, int sf = 7, double offset = 0.0) {
    return AbstractTransmission::of(dev, dbm, t0, CssParams{sf}, 16, offset);
}

double mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

} // namespace

TEST_CASE("sinr_db linear-domain example: -100 dBm against -110 dBm and -120 dBm noise") {
    const auto t = css(1, -100.0, 0.0);
    const auto n = noise_at(-120.0, t.bandwidth_hz);
    const double oracle = 10.0 * std::log10(1e-10 / (1e-11 + 1e-12));
    // 1e-10 / 1.1e-11 = 9.09, i.e. 9.586 dB (not 9.54, which would be 10*log10(9)).
    CHECK(oracle == doctest::Approx(9.5861).epsilon(1e-4));
    CHECK(sinr_db(t, {css(2, -110.0, 0.0)}, n) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(decide_packet(t, {css(2, -110.0, 0.0)}, SinrRule{}, n));
}

TEST_CASE("sinr_db without interferers is the SNR") {
    const auto t = css(1, -100.0, 0.0);
    CHECK(sinr_db(t, {}, noise_at(-120.0, t.bandwidth_hz)) == doctest::Approx(20.0));
    CHECK(decide_packet(t, {}, SinrRule{}, noise_at(-120.0, t.bandwidth_hz)));
}

TEST_CASE("noise is integrated over the target bandwidth") {
    NoiseSpec n;  // -174 + 6
    const auto t = css(1, -100.0, 0.0);
    CHECK(sinr_db(t, {}, n) == doctest::Approx(-100.0 - (-168.0 + 10.0 * std::log10(125e3))));
}

TEST_CASE("interferer with zero time overlap contributes nothing") {
    const auto t = css(1, -100.0, 1.0);
    const auto n = noise_at(-120.0, t.bandwidth_hz);
    const auto before = css(2, -90.0, 1.0 - t.duration_s);  // ends exactly where the target starts
    const auto after = css(3, -90.0, t.end_time_s());
    CHECK(sinr_db(t, {before, after}, n) == doctest::Approx(20.0));
}

TEST_CASE("equal-power full-overlap co-SF pair: both lost") {
    const auto a = css(1, -100.0, 0.0);
    const auto b = css(2, -100.0, 0.0);
    const auto n = noise_at(-130.0, a.bandwidth_hz);
    CHECK(sinr_db(a, {b}, n) == doctest::Approx(10 * std::log10(mw(-100) / (mw(-100) + mw(-130)))));
    CHECK_FALSE(decide_packet(a, {b}, SinrRule{}, n));
    CHECK_FALSE(decide_packet(b, {a}, SinrRule{}, n));
}

TEST_CASE("worst-case window: disjoint interferers are not summed") {
    const auto t = css(1, -100.0, 0.0);
    const auto n = noise_at(-120.0, t.bandwidth_hz);
    auto i1 = css(2, -110.0, -t.duration_s / 2);  // covers the first half
    auto i2 = css(3, -110.0, t.duration_s / 2);   // covers the second half
    CHECK(sinr_db(t, {i1, i2}, n) == doctest::Approx(10.0 * std::log10(1e-10 / (1e-11 + 1e-12))));
    // Overlapping each other in the middle, they add.
    i2.start_time_s = t.duration_s / 4;
    CHECK(sinr_db(t, {i1, i2}, n) == doctest::Approx(10.0 * std::log10(1e-10 / (2e-11 + 1e-12))));
}

TEST_CASE("spectral weights") {
    const auto t = css(1, -100.0, 0.0, 7);
    CHECK(spectral_weight(t, css(2, -100.0, 0.0, 7)) == 1.0);
    CHECK(spectral_weight(t, css(2, -100.0, 0.0, 8)) == 0.0);          // SF assumed orthogonal
    CHECK(spectral_weight(t, css(2, -100.0, 0.0, 7, 200e3)) == 0.0);   // adjacent channel
    CHECK(spectral_weight(t, css(2, -100.0, 0.0, 7, 62.5e3)) == doctest::Approx(0.5));
    const auto ub = AbstractTransmission::of(3, -80.0, 0.0, DbpskParams{}, 12, 10e3);
    CHECK(spectral_weight(t, ub) == doctest::Approx(200.0 / 125e3));
    CHECK(spectral_weight(ub, t) == 1.0);
    CHECK(co_channel(t, ub));
    CHECK_FALSE(co_channel(t, css(2, -100.0, 0.0, 7, 125e3)));
}

TEST_CASE("narrowband interferer barely moves the baseline SINR") {
    const auto t = css(1, -100.0, 0.0);
    const auto n = noise_at(-130.0, t.bandwidth_hz);
    const auto ub = AbstractTransmission::of(3, -80.0, 0.0, DbpskParams{}, 4, 0.0);
    const double oracle = 10 * std::log10(mw(-100) / (mw(-80) * 200.0 / 125e3 + mw(-130)));
    CHECK(sinr_db(t, {ub}, n) == doctest::Approx(oracle));
    CHECK(decide_packet(t, {ub}, SinrRule{}, n));
}

TEST_CASE("sinr_db is monotone in interferer and target power") {
    auto rng = Rng(5).substream("traffic", 0);
    for (int trial = 0; trial < 500; ++trial) {
        const auto t = css(0, rng.next_uniform(-120, -80), 0.0, 7);
        std::vector<AbstractTransmission> others;
        const int k = 1 + static_cast<int>(rng.next_uniform() * 5);
        for (int i = 0; i < k; ++i) {
            others.push_back(css(i + 1, rng.next_uniform(-130, -80), rng.next_uniform(-0.1, 0.1),
                                 7 + static_cast<int>(rng.next_uniform() * 2), rng.next_uniform(-150e3, 150e3)));
        }
        const auto n = noise_at(-125.0, t.bandwidth_hz);
        const double base = sinr_db(t, others, n);
        const std::size_t j = static_cast<std::size_t>(rng.next_uniform() * others.size());
        auto louder = others;
        louder[j].rx_power_dbm += rng.next_uniform(0.1, 10.0);
        CHECK(sinr_db(t, louder, n) <= base + 1e-12);
        auto stronger = t;
        stronger.rx_power_dbm += 3.0;
        CHECK(sinr_db(stronger, others, n) > base);
    }
}

TEST_CASE("thresholds per class and validation") {
    SinrRule r;
    CHECK(r.threshold_db(css(1, 0, 0)) == 6.0);
    CHECK(r.threshold_db(AbstractTransmission::of(1, 0, 0, FskParams{}, 4, 0)) == 8.0);
    CHECK(r.threshold_db(AbstractTransmission::of(1, 0, 0, DbpskParams{}, 4, 0)) == 8.0);
    r.fsk_threshold_db = std::nan("");
    CHECK_THROWS_AS(r.validate(), iqsim::validation_error);
}

TEST_CASE("classify") {
    const auto t = css(1, -100.0, 0.0, 7);
    CHECK(classify(t, {}) == InterferenceClass::clean);
    CHECK(classify(t, {css(2, -100, 0.0, 7)}) == InterferenceClass::co_channel);
    CHECK(classify(t, {css(2, -100, 0.0, 9)}) == InterferenceClass::inter_sf);
    CHECK(classify(t, {css(2, -100, 0.0, 7, 200e3)}) == InterferenceClass::adjacent_channel);
    CHECK(classify(t, {css(2, -100, 0.0, 7, 600e3)}) == InterferenceClass::clean);
    CHECK(classify(t, {css(2, -100, 10.0, 7)}) == InterferenceClass::clean);
    const auto ub = AbstractTransmission::of(3, -80.0, 0.0, DbpskParams{}, 4, 0.0);
    CHECK(classify(t, {css(2, -100, 0.0, 9), ub}) == InterferenceClass::cross_technology);
}

TEST_CASE("compare_runs confusion matrix") {
    std::vector<PacketVerdict> w, b;
    const bool wd[] = {true, true, false, false, true};
    const bool bd[] = {true, false, true, false, true};
    for (int i = 0; i < 5; ++i) {
        w.push_back({static_cast<std::uint64_t>(i), i < 3 ? InterferenceClass::clean : InterferenceClass::co_channel, wd[i]});
        b.push_back({static_cast<std::uint64_t>(i), w.back().cls, bd[i]});
    }
    const auto c = compare_runs(w, b);
    CHECK(c.overall.both_deliver == 2);
    CHECK(c.overall.both_lose == 1);
    CHECK(c.overall.baseline_only == 1);
    CHECK(c.overall.waveform_only == 1);
    CHECK(c.overall.disagreement_rate() == doctest::Approx(0.4));
    CHECK(c.by_class.at("clean").total() == 3);
    CHECK(c.by_class.at("co_channel").both_lose == 1);
    CHECK(compare_runs(w, b) == c);

    CHECK(compare_runs(w, w).overall.disagreements() == 0);
    auto shifted = b;
    shifted[2].key = 99;
    CHECK_THROWS_AS(compare_runs(w, shifted), iqsim::validation_error);
    shifted.pop_back();
    CHECK_THROWS_AS(compare_runs(w, shifted), iqsim::validation_error);
}

TEST_CASE("back-to-back frames touch but do not overlap") {
    const DbpskParams p;
    const double dur = frame_duration_s(p, 4);
    const auto n = noise_at(-140.0, occupied_bandwidth_hz(p));
    for (int k = 1; k < 40; ++k) {
        // k * dur rounds differently from (k - 1) * dur + dur for some k.
        const auto prev = AbstractTransmission::of(1, -80.0, (k - 1) * dur, p, 4, 0.0);
        const auto next = AbstractTransmission::of(1, -80.0, k * dur, p, 4, 0.0);
        CHECK(sinr_db(next, {prev}, n) == doctest::Approx(60.0));
    }
    // A real overlap still counts.
    const auto a = AbstractTransmission::of(1, -80.0, 0.0, p, 4, 0.0);
    const auto b = AbstractTransmission::of(2, -80.0, dur - 1e-6, p, 4, 0.0);
    CHECK(sinr_db(b, {a}, n) < 1.0);
}

TEST_CASE("target straddling two back-to-back interferers sees only one at a time") {
    const DbpskParams p;
    const double dur = frame_duration_s(p, 4);
    const auto t = css(1, -100.0, 9.0 * dur - 0.01);
    const auto n = noise_at(-120.0, t.bandwidth_hz);
    std::vector<AbstractTransmission> others;
    for (int k = 0; k < 12; ++k) others.push_back(AbstractTransmission::of(2, -80.0, k * dur, p, 4, 0.0));
    const double one = sinr_db(t, {others[8]}, n);
    CHECK(sinr_db(t, others, n) == doctest::Approx(one).epsilon(1e-12));
}
