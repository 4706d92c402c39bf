#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iqsim/iq_core.hpp"
#include "iqsim/mixer.hpp"

namespace iqsim {

// ---------------------------------------------------------------- cs16

inline constexpr double kCs16Scale = 32767.0;
inline constexpr std::size_t kBytesPerSample = 4;

struct QuantizeStats {
    std::uint64_t clipped_components = 0;
};

// round(clamp(x, -1, 1) * 32767) per component, little-endian, I then Q.
std::vector<std::uint8_t> quantize(std::span<const cf64> samples, QuantizeStats *stats = nullptr);
void quantize_into(std::span<const cf64> samples, std::uint8_t *out, QuantizeStats *stats = nullptr);

// x = v / 32767. Throws format_error on a trailing partial sample.
std::vector<cf64> dequantize(std::span<const std::uint8_t> bytes);
IQBuffer dequantize(std::span<const std::uint8_t> bytes, double sample_rate_hz, std::int64_t start_sample = 0);

// ---------------------------------------------------------------- files

// Text sidecar stored next to `<name>.cs16` as `<name>.meta`, one `key = value` per line.
struct IqMeta {
    std::string format = "cs16le";
    double sample_rate_hz = 0.0;
    double center_frequency_hz = 0.0;
    std::int64_t start_sample = 0;
    int schema_version = 1;
    std::optional<std::uint64_t> sample_count;  // written by this library; checked when present

    bool operator==(const IqMeta &) const = default;
};

std::string format_meta(const IqMeta &meta);
// Throws format_error naming the missing or malformed field.
IqMeta parse_meta(const std::string &text);

std::filesystem::path sidecar_path(const std::filesystem::path &data_path);

struct IqRecording {
    IQBuffer samples{1.0};
    IqMeta meta;
};

QuantizeStats write_iq_file(const IQBuffer &buf, const std::filesystem::path &path, double center_frequency_hz = 0.0);
IqRecording read_iq_file(const std::filesystem::path &path);

// Incremental writer for long streams; the sidecar is written on close().
class IqFileWriter {
public:
    IqFileWriter(std::filesystem::path path, double sample_rate_hz, double center_frequency_hz = 0.0,
                 std::int64_t start_sample = 0);
    ~IqFileWriter();

    IqFileWriter(const IqFileWriter &) = delete;
    IqFileWriter &operator=(const IqFileWriter &) = delete;

    void append(std::span<const cf64> samples);
    void close();

    std::uint64_t samples_written() const noexcept { return written_; }
    const QuantizeStats &stats() const noexcept { return stats_; }
    const std::filesystem::path &path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    IqMeta meta_;
    std::ofstream out_;
    std::vector<std::uint8_t> scratch_;
    std::uint64_t written_ = 0;
    QuantizeStats stats_;
    bool closed_ = false;
};

// Places a recording on a stream timeline like a modulated burst. The file's
// samples are taken as the transmitted waveform at full scale; `gain_db`
// scales them (-inf mutes the source, giving an empty waveform).
PlacedBurst replay_source(const IqRecording &rec, double carrier_offset_hz, double start_time_s,
                          double stream_rate_hz, double gain_db, std::uint32_t device_id = 0);

// ---------------------------------------------------------------- stream framing

inline constexpr std::array<std::uint8_t, 4> kStreamMagic{'I', 'Q', 'S', '1'};
inline constexpr std::size_t kFrameHeaderBytes = 18;
inline constexpr std::uint16_t kFlagEndOfStream = 0x0001;

struct FrameHeader {
    std::uint16_t flags = 0;
    std::uint32_t sample_count = 0;
    std::int64_t start_sample = 0;
};

// magic | flags u16 | sample_count u32 | start_sample i64 | cs16le payload
std::vector<std::uint8_t> encode_frame(std::span<const cf64> samples, std::int64_t start_sample,
                                       std::uint16_t flags = 0, QuantizeStats *stats = nullptr);

// Ordered, reliable byte transport.
class ByteSink {
public:
    virtual ~ByteSink() = default;
    virtual void write(std::span<const std::uint8_t> bytes) = 0;
    virtual void close() {}
};

class ByteSource {
public:
    virtual ~ByteSource() = default;
    // Reads up to bytes.size(); returns 0 only at end of stream.
    virtual std::size_t read(std::span<std::uint8_t> bytes) = 0;
};

class MemorySink final : public ByteSink {
public:
    void write(std::span<const std::uint8_t> bytes) override { data_.insert(data_.end(), bytes.begin(), bytes.end()); }
    std::vector<std::uint8_t> &data() noexcept { return data_; }

private:
    std::vector<std::uint8_t> data_;
};

class MemorySource final : public ByteSource {
public:
    explicit MemorySource(std::vector<std::uint8_t> data) : data_(std::move(data)) {}
    std::size_t read(std::span<std::uint8_t> bytes) override;

private:
    std::vector<std::uint8_t> data_;
    std::size_t pos_ = 0;
};

// Listens on host:port and accepts a single consumer on first use. Port 0
// picks a free port, reported by port().
class TcpServerSink final : public ByteSink {
public:
    TcpServerSink(const std::string &host, std::uint16_t port);
    ~TcpServerSink() override;
    std::uint16_t port() const noexcept;
    void accept();
    void write(std::span<const std::uint8_t> bytes) override;
    void close() override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class TcpSource final : public ByteSource {
public:
    // Retries the connection until `timeout` elapses.
    TcpSource(const std::string &host, std::uint16_t port,
              std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));
    ~TcpSource() override;
    std::size_t read(std::span<std::uint8_t> bytes) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Endpoints: "tcp://host:port" (server side listens, consumer connects) or a
// filesystem path, which also covers named pipes.
std::unique_ptr<ByteSink> open_sink(const std::string &endpoint);
std::unique_ptr<ByteSource> open_source(const std::string &endpoint);

// Producer side of one session. Blocks must be contiguous; in realtime mode
// each block is held back until the wall clock reaches its last sample time.
class StreamServer {
public:
    StreamServer(ByteSink &sink, double sample_rate_hz, bool realtime = false);

    void send(const IQBuffer &block);
    // Sends the end-of-stream frame and closes the sink.
    void finish();

    std::size_t frames_sent() const noexcept { return frames_; }
    const QuantizeStats &stats() const noexcept { return stats_; }

private:
    ByteSink &sink_;
    double rate_;
    bool realtime_;
    std::optional<std::int64_t> next_;
    std::int64_t first_ = 0;
    std::chrono::steady_clock::time_point t0_;
    std::size_t frames_ = 0;
    QuantizeStats stats_;
    bool finished_ = false;
};

// Consumer side. next() returns blocks until the end-of-stream frame or EOF;
// a bad magic, truncated frame or gap throws protocol_error with the index of
// the offending frame.
class StreamConsumer {
public:
    StreamConsumer(ByteSource &source, double sample_rate_hz);

    std::optional<IQBuffer> next();
    std::size_t frames_read() const noexcept { return index_; }

private:
    bool read_exact(std::span<std::uint8_t> out, bool allow_eof);

    ByteSource &source_;
    double rate_;
    std::size_t index_ = 0;
    std::optional<std::int64_t> next_;
    bool done_ = false;
};

void serve_stream(const std::vector<IQBuffer> &blocks, ByteSink &sink, bool realtime = false);
std::vector<IQBuffer> consume_stream(ByteSource &source, double sample_rate_hz);

} // namespace iqsim
