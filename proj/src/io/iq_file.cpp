#include "iqsim/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace iqsim {

namespace {

std::int16_t to_cs16(double x, QuantizeStats *stats) {
    if (x > 1.0 || x < -1.0) {
        if (stats) ++stats->clipped_components;
        x = std::clamp(x, -1.0, 1.0);
    }
    return static_cast<std::int16_t>(std::lround(x * kCs16Scale));
}

void put_i16(std::uint8_t *p, std::int16_t v) {
    const auto u = static_cast<std::uint16_t>(v);
    p[0] = static_cast<std::uint8_t>(u & 0xFF);
    p[1] = static_cast<std::uint8_t>(u >> 8);
}

std::int16_t get_i16(const std::uint8_t *p) {
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
}

std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

template <typename T>
T parse_number(const std::map<std::string, std::string> &kv, const std::string &key) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        throw format_error("sidecar field '" + key + "' is missing");
    }
    T value{};
    const auto &s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw format_error("sidecar field '" + key + "' is not a number: '" + s + "'");
    }
    return value;
}

} // namespace

void quantize_into(std::span<const cf64> samples, std::uint8_t *out, QuantizeStats *stats) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        put_i16(out + 4 * i, to_cs16(samples[i].real(), stats));
        put_i16(out + 4 * i + 2, to_cs16(samples[i].imag(), stats));
    }
}

std::vector<std::uint8_t> quantize(std::span<const cf64> samples, QuantizeStats *stats) {
    std::vector<std::uint8_t> out(samples.size() * kBytesPerSample);
    quantize_into(samples, out.data(), stats);
    return out;
}

std::vector<cf64> dequantize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % kBytesPerSample != 0) {
        throw format_error("cs16 data length " + std::to_string(bytes.size()) + " is not a multiple of 4");
    }
    std::vector<cf64> out(bytes.size() / kBytesPerSample);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = cf64(get_i16(&bytes[4 * i]) / kCs16Scale, get_i16(&bytes[4 * i + 2]) / kCs16Scale);
    }
    return out;
}

IQBuffer dequantize(std::span<const std::uint8_t> bytes, double sample_rate_hz, std::int64_t start_sample) {
    return IQBuffer(dequantize(bytes), sample_rate_hz, start_sample);
}

std::string format_meta(const IqMeta &m) {
    std::ostringstream os;
    os.precision(17);
    os << "format = " << m.format << "\n"
       << "sample_rate_hz = " << m.sample_rate_hz << "\n"
       << "center_frequency_hz = " << m.center_frequency_hz << "\n"
       << "start_sample = " << m.start_sample << "\n"
       << "schema_version = " << m.schema_version << "\n";
    if (m.sample_count) {
        os << "sample_count = " << *m.sample_count << "\n";
    }
    return os.str();
}

IqMeta parse_meta(const std::string &text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw format_error("sidecar line " + std::to_string(line_no) + " has no '='");
        }
        kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
    }
    IqMeta m;
    const auto fmt = kv.find("format");
    if (fmt == kv.end()) {
        throw format_error("sidecar field 'format' is missing");
    }
    if (fmt->second != "cs16le") {
        throw format_error("sidecar field 'format' must be cs16le, got '" + fmt->second + "'");
    }
    m.format = fmt->second;
    m.schema_version = parse_number<int>(kv, "schema_version");
    if (m.schema_version != 1) {
        throw format_error("sidecar field 'schema_version' " + std::to_string(m.schema_version) + " is not supported");
    }
    m.sample_rate_hz = parse_number<double>(kv, "sample_rate_hz");
    if (!(m.sample_rate_hz > 0.0) || !std::isfinite(m.sample_rate_hz)) {
        throw format_error("sidecar field 'sample_rate_hz' must be positive");
    }
    m.center_frequency_hz = parse_number<double>(kv, "center_frequency_hz");
    m.start_sample = parse_number<std::int64_t>(kv, "start_sample");
    if (kv.count("sample_count")) {
        m.sample_count = parse_number<std::uint64_t>(kv, "sample_count");
    }
    return m;
}

std::filesystem::path sidecar_path(const std::filesystem::path &data_path) {
    auto p = data_path;
    p.replace_extension(".meta");
    return p;
}

QuantizeStats write_iq_file(const IQBuffer &buf, const std::filesystem::path &path, double center_frequency_hz) {
    IqFileWriter w(path, buf.sample_rate_hz(), center_frequency_hz, buf.start_sample());
    w.append(buf.samples());
    w.close();
    return w.stats();
}

IqRecording read_iq_file(const std::filesystem::path &path) {
    const auto meta_path = sidecar_path(path);
    std::ifstream meta_in(meta_path);
    if (!meta_in) {
        throw format_error("sidecar " + meta_path.string() + " is missing");
    }
    std::stringstream text;
    text << meta_in.rdbuf();
    IqMeta meta = parse_meta(text.str());

    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw format_error("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % kBytesPerSample != 0) {
        throw format_error(path.string() + ": length " + std::to_string(bytes.size()) + " is not a multiple of 4");
    }
    if (meta.sample_count && *meta.sample_count != bytes.size() / kBytesPerSample) {
        throw format_error("sidecar field 'sample_count' says " + std::to_string(*meta.sample_count) +
                           " but the data file holds " + std::to_string(bytes.size() / kBytesPerSample));
    }
    return {dequantize(bytes, meta.sample_rate_hz, meta.start_sample), meta};
}

IqFileWriter::IqFileWriter(std::filesystem::path path, double sample_rate_hz, double center_frequency_hz,
                           std::int64_t start_sample)
    : path_(std::move(path)), out_(path_, std::ios::binary | std::ios::trunc) {
    if (!(sample_rate_hz > 0.0)) {
        throw domain_error("sample rate must be positive");
    }
    if (!out_) {
        throw format_error("cannot create " + path_.string());
    }
    meta_.sample_rate_hz = sample_rate_hz;
    meta_.center_frequency_hz = center_frequency_hz;
    meta_.start_sample = start_sample;
}

IqFileWriter::~IqFileWriter() {
    try {
        close();
    } catch (...) {
    }
}

void IqFileWriter::append(std::span<const cf64> samples) {
    if (closed_) {
        throw format_error("append after close on " + path_.string());
    }
    scratch_.resize(samples.size() * kBytesPerSample);
    quantize_into(samples, scratch_.data(), &stats_);
    out_.write(reinterpret_cast<const char *>(scratch_.data()), static_cast<std::streamsize>(scratch_.size()));
    if (!out_) {
        throw format_error("write failed on " + path_.string());
    }
    written_ += samples.size();
}

void IqFileWriter::close() {
    if (closed_) return;
    closed_ = true;
    out_.close();
    meta_.sample_count = written_;
    std::ofstream meta(sidecar_path(path_), std::ios::trunc);
    meta << format_meta(meta_);
    if (!meta) {
        throw format_error("cannot write " + sidecar_path(path_).string());
    }
}

PlacedBurst replay_source(const IqRecording &rec, double carrier_offset_hz, double start_time_s,
                          double stream_rate_hz, double gain_db, std::uint32_t device_id) {
    const double rate = rec.samples.sample_rate_hz();
    if (rate > stream_rate_hz) {
        throw validation_error("replay.sample_rate_hz", "recording rate " + std::to_string(rate) +
                                                            " Hz exceeds the stream rate");
    }
    PlacedBurst b;
    b.carrier_offset_hz = carrier_offset_hz;
    b.start_sample = seconds_to_sample(start_time_s, stream_rate_hz);
    b.source_device_id = device_id;
    if (!burst_contained(PlacedBurst{IQBuffer(rate), carrier_offset_hz, 0, device_id}, stream_rate_hz)) {
        throw validation_error("replay.carrier_offset_hz",
                               "offset " + std::to_string(carrier_offset_hz) + " Hz puts the recording outside the band");
    }
    if (std::isinf(gain_db) && gain_db < 0) {
        b.waveform = IQBuffer(rate);
    } else {
        b.waveform = rec.samples.scaled(dbm_to_amplitude(gain_db)).with_start(0);
    }
    return b;
}

} // namespace iqsim
