#include "doctest.h"
#include "support/oracles.hpp"
#include "support/signal.hpp"

#include "iqsim/io.hpp"
#include "iqsim/modem/modem.hpp"

#include <sys/stat.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

using namespace iqsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("iqsim_io_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<cf64> random_samples(std::size_t n, std::uint64_t entity, double scale = 0.3) {
    auto rng = Rng(17).substream("noise", entity);
    std::vector<cf64> x(n);
    for (auto &v : x) v = scale * cf64(rng.next_gaussian(), rng.next_gaussian());
    return x;
}

std::vector<cf64> lattice(std::span<const cf64> x) { return dequantize(quantize(x)); }

std::vector<IQBuffer> blocks_of(const std::vector<cf64> &x, double rate, std::size_t block) {
    std::vector<IQBuffer> out;
    for (std::size_t a = 0; a < x.size(); a += block) {
        const std::size_t len = std::min(block, x.size() - a);
        out.emplace_back(std::vector<cf64>(x.begin() + static_cast<std::ptrdiff_t>(a),
                                           x.begin() + static_cast<std::ptrdiff_t>(a + len)),
                         rate, static_cast<std::int64_t>(a));
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------- cs16

TEST_CASE("quantize: 4 bytes per sample and symmetric endpoints") {
    CHECK(quantize(std::vector<cf64>(1000)).size() == 4000);
    const auto b = quantize(std::vector<cf64>{cf64(1.0, -1.0)});
    REQUIRE(b.size() == 4);
    CHECK(static_cast<std::int16_t>(b[0] | (b[1] << 8)) == 32767);
    CHECK(static_cast<std::int16_t>(b[2] | (b[3] << 8)) == -32767);
    QuantizeStats st;
    quantize(std::vector<cf64>{cf64(1.5, 0.0), cf64(-2.0, -1.0000001), cf64(0.5, 0.5)}, &st);
    CHECK(st.clipped_components == 3);
}

TEST_CASE("dequantize examples and errors") {
    CHECK(dequantize(std::vector<std::uint8_t>{0, 0, 0, 0}) == std::vector<cf64>{cf64(0, 0)});
    CHECK(dequantize(std::vector<std::uint8_t>{0xFF, 0x7F, 0, 0}) == std::vector<cf64>{cf64(1.0, 0)});
    CHECK_THROWS_AS(dequantize(std::vector<std::uint8_t>{1, 2, 3}), iqsim::format_error);
    CHECK_THROWS_AS(dequantize(std::vector<std::uint8_t>(4001)), iqsim::format_error);
}

TEST_CASE("quantization error is bounded by one step") {
    const auto x = random_samples(20000, 1, 0.4);
    std::vector<cf64> clipped;
    for (auto v : x) {
        if (std::abs(v.real()) <= 1 && std::abs(v.imag()) <= 1) clipped.push_back(v);
    }
    const auto y = lattice(clipped);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(std::abs(y[i].real() - clipped[i].real()) <= 1.0 / 32767);
        CHECK(std::abs(y[i].imag() - clipped[i].imag()) <= 1.0 / 32767);
    }
}

TEST_CASE("quantize(dequantize(bytes)) is the identity on the symmetric lattice") {
    auto rng = Rng(3).substream("payload", 0);
    std::vector<std::uint8_t> bytes(40000);
    for (std::size_t i = 0; i < bytes.size(); i += 2) {
        std::int16_t v;
        do {
            v = static_cast<std::int16_t>(rng.next_u64() & 0xFFFF);
        } while (v == -32768);
        bytes[i] = static_cast<std::uint8_t>(static_cast<std::uint16_t>(v) & 0xFF);
        bytes[i + 1] = static_cast<std::uint8_t>(static_cast<std::uint16_t>(v) >> 8);
    }
    QuantizeStats st;
    CHECK(quantize(dequantize(bytes), &st) == bytes);
    CHECK(st.clipped_components == 0);
    // -32768 lies outside the +-32767 lattice: it reads as just below -1.0 and
    // requantizes as a clipped -32767.
    const std::vector<std::uint8_t> low{0x00, 0x80, 0x00, 0x00};
    CHECK(dequantize(low)[0].real() == doctest::Approx(-32768.0 / 32767.0));
    const auto again = quantize(dequantize(low), &st);
    CHECK(again == std::vector<std::uint8_t>{0x01, 0x80, 0x00, 0x00});
    CHECK(st.clipped_components == 1);
}

TEST_CASE("full-scale tone keeps >= 80 dB signal to quantization noise") {
    const std::size_t n = 4096;
    const auto tone = testsig::tone(n, 333.0 * 1e6 / n, 1e6);
    const auto q = lattice(tone);
    const auto spec = oracle::dft(q);
    double sig = 0.0, rest = 0.0;
    for (std::size_t k = 0; k < n; ++k) (k == 333 ? sig : rest) += std::norm(spec[k]);
    const double snr = oracle::lin_to_db(sig / rest);
    MESSAGE("cs16 tone SNR " << snr << " dB");
    CHECK(snr >= 80.0);
}

// ---------------------------------------------------------------- files

TEST_CASE("file round trip preserves metadata and lattice samples") {
    TempDir tmp;
    const auto x = random_samples(16384, 2);
    const IQBuffer buf(x, 125e3, 4242);
    const auto path = tmp.path / "burst.cs16";
    write_iq_file(buf, path, 868.1e6);
    CHECK(fs::file_size(path) == 65536);
    CHECK(fs::exists(tmp.path / "burst.meta"));
    const auto rec = read_iq_file(path);
    CHECK(rec.meta.sample_rate_hz == 125e3);
    CHECK(rec.meta.center_frequency_hz == 868.1e6);
    CHECK(rec.meta.start_sample == 4242);
    CHECK(rec.meta.format == "cs16le");
    CHECK(rec.meta.schema_version == 1);
    CHECK(rec.samples.start_sample() == 4242);
    CHECK(rec.samples.sample_rate_hz() == 125e3);
    const auto want = lattice(x);
    CHECK(std::equal(want.begin(), want.end(), rec.samples.samples().begin()));
}

TEST_CASE("one second at 1.5 MHz is exactly 6,000,000 bytes") {
    TempDir tmp;
    const auto path = tmp.path / "second.cs16";
    IqFileWriter w(path, 1.5e6);
    const std::vector<cf64> block(65536, cf64(0.1, -0.1));
    std::size_t left = 1500000;
    while (left > 0) {
        const std::size_t n = std::min(left, block.size());
        w.append(std::span(block).first(n));
        left -= n;
    }
    w.close();
    CHECK(fs::file_size(path) == 6000000);
    CHECK(read_iq_file(path).samples.size() == 1500000);
}

TEST_CASE("file size law holds for every length") {
    TempDir tmp;
    for (std::size_t n : {0u, 1u, 3u, 1000u, 4097u}) {
        const auto path = tmp.path / ("n" + std::to_string(n) + ".cs16");
        write_iq_file(IQBuffer(random_samples(n, n), 48e3), path);
        CHECK(fs::file_size(path) == 4 * n);
    }
}

TEST_CASE("sidecar problems are format errors naming the field") {
    TempDir tmp;
    const auto path = tmp.path / "x.cs16";
    write_iq_file(IQBuffer(random_samples(10, 4), 1e3), path);
    auto rewrite_meta = [&](const std::string &text) { std::ofstream(sidecar_path(path), std::ios::trunc) << text; };
    auto message_of = [&]() -> std::string {
        try {
            read_iq_file(path);
        } catch (const format_error &e) {
            return e.what();
        }
        return "no error";
    };

    rewrite_meta("format = cs16le\ncenter_frequency_hz = 0\nstart_sample = 0\nschema_version = 1\n");
    CHECK(message_of().find("sample_rate_hz") != std::string::npos);
    rewrite_meta("format = cf32\nsample_rate_hz = 1000\ncenter_frequency_hz = 0\nstart_sample = 0\nschema_version = 1\n");
    CHECK(message_of().find("format") != std::string::npos);
    rewrite_meta("format = cs16le\nsample_rate_hz = abc\ncenter_frequency_hz = 0\nstart_sample = 0\nschema_version = 1\n");
    CHECK(message_of().find("sample_rate_hz") != std::string::npos);
    rewrite_meta("format = cs16le\nsample_rate_hz = 1000\ncenter_frequency_hz = 0\nstart_sample = 0\nschema_version = 1\n"
                 "sample_count = 11\n");
    CHECK(message_of().find("sample_count") != std::string::npos);
    rewrite_meta("format = cs16le\nsample_rate_hz = 1000\ncenter_frequency_hz = 0\nstart_sample = 0\nschema_version = 2\n");
    CHECK(message_of().find("schema_version") != std::string::npos);
    fs::remove(sidecar_path(path));
    CHECK(message_of().find("missing") != std::string::npos);

    write_iq_file(IQBuffer(random_samples(10, 4), 1e3), path);
    std::ofstream(path, std::ios::app | std::ios::binary) << 'x';
    CHECK_THROWS_AS(read_iq_file(path), iqsim::format_error);
}

TEST_CASE("sidecar text round trip") {
    IqMeta m;
    m.sample_rate_hz = 1e5 / 3.0;
    m.center_frequency_hz = 868.3e6;
    m.start_sample = -17;
    m.sample_count = 99;
    CHECK(parse_meta(format_meta(m)) == m);
}

// ---------------------------------------------------------------- replay

TEST_CASE("replayed CSS recording decodes end to end") {
    TempDir tmp;
    const Frame f = Frame::make({1, 2, 3, 4, 5, 6, 7, 8});
    const CssParams p{8};
    const auto path = tmp.path / "css.cs16";
    write_iq_file(modulate(f, p).scaled(0.9), path);
    const auto rec = read_iq_file(path);
    MixerConfig cfg;
    cfg.cal.full_scale_dbm = -60.0;
    const auto burst = replay_source(rec, 250e3, 0.01, 1.5e6, -20.0, 3);
    CHECK(burst.start_sample == 15000);
    const auto stream = mix({burst}, cfg, 0, burst.start_sample + 12 * static_cast<std::int64_t>(rec.samples.size()) + 30000,
                            Rng(1).substream("noise", 0));
    const auto out = demodulate(channelize(stream, 250e3, 125e3), p, cfg.cal);
    REQUIRE(out.size() == 1);
    CHECK(out[0].crc_ok);
    CHECK(out[0].payload_decoded == f.payload);
    CHECK(out[0].start_sample == 1250);
}

TEST_CASE("muted replay contributes nothing; out-of-band replay is rejected") {
    const IqRecording rec{IQBuffer(std::vector<cf64>(100, cf64(1, 0)), 125e3), {}};
    const auto muted = replay_source(rec, 0.0, 0.0, 1.5e6, -std::numeric_limits<double>::infinity());
    CHECK(muted.waveform.empty());
    MixerConfig cfg;
    cfg.noise.enabled = false;
    const auto out = mix({muted}, cfg, 0, 2000, Rng(1).substream("noise", 0));
    for (auto v : out.samples()) CHECK(v == cf64{});
    CHECK_THROWS_AS(replay_source(rec, 700e3, 0.0, 1.5e6, 0.0), iqsim::validation_error);
    const IqRecording wide{IQBuffer(std::vector<cf64>(10), 2e6), {}};
    CHECK_THROWS_AS(replay_source(wide, 0.0, 0.0, 1.5e6, 0.0), iqsim::validation_error);
}

TEST_CASE("replay of a recorded mixture demodulates like live mixing") {
    TempDir tmp;
    MixerConfig cfg;
    cfg.cal.full_scale_dbm = -60.0;
    const double rx_dbm = -72.0;
    const CssParams css{7};
    const FskParams fsk{};
    const Frame fa = Frame::make({0xDE, 0xAD, 0xBE, 0xEF});
    const Frame fb = Frame::make({9, 8, 7, 6, 5, 4, 3, 2, 1});
    const double amp = dbm_to_amplitude(rx_dbm, cfg.cal);
    std::vector<PlacedBurst> live{{modulate(fa, css).scaled(amp), 200e3, 1200, 1},
                                  {modulate(fb, fsk).scaled(amp), -300e3, 3750, 2}};
    const auto noise = Rng(12).substream("noise", 0);
    const auto stream = mix(live, cfg, 0, 100000, noise);

    const auto path = tmp.path / "mixture.cs16";
    write_iq_file(stream, path);
    const auto rec = read_iq_file(path);
    MixerConfig quiet = cfg;
    quiet.noise.enabled = false;
    const auto replayed = mix({replay_source(rec, 0.0, 0.0, 1.5e6, 0.0, 1)}, quiet, 0, 100000, noise);

    const std::vector<std::pair<ModemParams, double>> listeners{{css, 200e3}, {fsk, -300e3}};
    for (const auto &[p, off] : listeners) {
        const auto a = demodulate(channelize(stream, off, native_rate_hz(p)), p, cfg.cal);
        const auto b = demodulate(channelize(replayed, off, native_rate_hz(p)), p, cfg.cal);
        REQUIRE(a.size() == 1);
        REQUIRE(b.size() == a.size());
        CHECK(a[0].crc_ok);
        CHECK(b[0].crc_ok == a[0].crc_ok);
        CHECK(b[0].payload_decoded == a[0].payload_decoded);
        CHECK(b[0].start_sample == a[0].start_sample);
        CHECK(b[0].rssi_dbm == doctest::Approx(a[0].rssi_dbm).epsilon(1e-3));
    }
}

// ---------------------------------------------------------------- streaming

TEST_CASE("in-process serve then consume is bit-identical on the lattice") {
    const auto x = random_samples(50000, 5);
    const auto blocks = blocks_of(x, 1.5e6, 4096);
    MemorySink sink;
    serve_stream(blocks, sink);
    CHECK(sink.data().size() == 50000 * 4 + kFrameHeaderBytes * (blocks.size() + 1));
    MemorySource src(sink.data());
    const auto got = consume_stream(src, 1.5e6);
    REQUIRE(got.size() == blocks.size());
    const auto want = lattice(x);
    std::size_t k = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].start_sample() == blocks[i].start_sample());
        for (auto v : got[i].samples()) CHECK(v == want[k++]);
    }
}

TEST_CASE("frame header layout") {
    const auto f = encode_frame(std::vector<cf64>(3), -2, kFlagEndOfStream);
    REQUIRE(f.size() == 18 + 12);
    CHECK(std::string(f.begin(), f.begin() + 4) == "IQS1");
    CHECK(f[4] == 1);
    CHECK(f[5] == 0);
    CHECK(f[6] == 3);
    CHECK(f[10] == 0xFE);
    CHECK(f[17] == 0xFF);
}

TEST_CASE("corrupt magic, gaps and truncation abort the session at the right frame") {
    const auto blocks = blocks_of(random_samples(10000, 6), 1e6, 1000);
    MemorySink sink;
    serve_stream(blocks, sink);
    const std::size_t frame_bytes = kFrameHeaderBytes + 4000;

    auto bytes = sink.data();
    bytes[3 * frame_bytes] = 'X';
    MemorySource bad_magic(bytes);
    StreamConsumer c(bad_magic, 1e6);
    try {
        while (c.next()) {
        }
        FAIL("expected protocol_error");
    } catch (const protocol_error &e) {
        CHECK(e.frame_index() == 3);
    }

    // Frame 5 claims to start one sample late.
    bytes = sink.data();
    bytes[5 * frame_bytes + 10] += 1;
    MemorySource gap(bytes);
    try {
        consume_stream(gap, 1e6);
        FAIL("expected protocol_error");
    } catch (const protocol_error &e) {
        CHECK(e.frame_index() == 5);
        CHECK(std::string(e.what()).find("gap") != std::string::npos);
    }

    bytes = sink.data();
    bytes.resize(7 * frame_bytes + 100);
    MemorySource cut(bytes);
    try {
        consume_stream(cut, 1e6);
        FAIL("expected protocol_error");
    } catch (const protocol_error &e) {
        CHECK(e.frame_index() == 7);
    }
}

TEST_CASE("stream over TCP loopback") {
    const auto x = random_samples(30000, 7);
    const auto blocks = blocks_of(x, 1.5e6, 3000);
    TcpServerSink sink("127.0.0.1", 0);
    const std::uint16_t port = sink.port();
    std::thread producer([&] { serve_stream(blocks, sink); });
    TcpSource src("127.0.0.1", port);
    const auto got = consume_stream(src, 1.5e6);
    producer.join();
    REQUIRE(got.size() == blocks.size());
    const auto want = lattice(x);
    std::size_t k = 0;
    for (const auto &b : got) {
        for (auto v : b.samples()) CHECK(v == want[k++]);
    }
}

TEST_CASE("stream through a named pipe") {
    TempDir tmp;
    const auto fifo = tmp.path / "iq.fifo";
    REQUIRE(::mkfifo(fifo.c_str(), 0600) == 0);
    const auto x = random_samples(20000, 8);
    const auto blocks = blocks_of(x, 1e6, 2500);
    std::thread producer([&] {
        auto sink = open_sink(fifo.string());
        serve_stream(blocks, *sink);
    });
    auto src = open_source(fifo.string());
    const auto got = consume_stream(*src, 1e6);
    producer.join();
    CHECK(got.size() == blocks.size());
}

TEST_CASE("realtime serving waits for each block's wall-clock deadline") {
    const auto blocks = blocks_of(std::vector<cf64>(5000), 1e5, 1000);  // 5 x 10 ms
    MemorySink sink;
    const auto t0 = std::chrono::steady_clock::now();
    serve_stream(blocks, sink, true);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(elapsed >= 0.05);
}

TEST_CASE("consumer feeding a demodulator matches in-process demodulation") {
    const CssParams p{7};
    const Frame f = Frame::make({10, 20, 30, 40, 50});
    std::vector<cf64> x(3000);
    const auto frame = modulate(f, p).scaled(0.5);
    x.insert(x.end(), frame.samples().begin(), frame.samples().end());
    x.resize(x.size() + 3000);
    const auto ref = demodulate(IQBuffer(lattice(x), 125e3), p);

    MemorySink sink;
    serve_stream(blocks_of(x, 125e3, 777), sink);
    MemorySource src(sink.data());
    StreamConsumer c(src, 125e3);
    auto demod = make_demodulator(p);
    std::vector<PacketOutcome> got;
    while (auto b = c.next()) {
        auto o = demod->push(b->samples());
        got.insert(got.end(), o.begin(), o.end());
    }
    auto tail = demod->finish();
    got.insert(got.end(), tail.begin(), tail.end());
    CHECK(got == ref);
    REQUIRE(got.size() == 1);
    CHECK(got[0].crc_ok);
}
