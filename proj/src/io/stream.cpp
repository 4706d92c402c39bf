#include "iqsim/io.hpp"

#include "iqsim/log.hpp"

#include <boost/asio.hpp>

#include <cstring>
#include <thread>

namespace iqsim {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

template <typename T>
void put_le(std::uint8_t *p, T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        p[i] = static_cast<std::uint8_t>(u & 0xFF);
        u = static_cast<U>(u >> 8);
    }
}

template <typename T>
T get_le(const std::uint8_t *p) {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
        u = static_cast<U>((u << 8) | p[i]);
    }
    return static_cast<T>(u);
}

struct TcpAddress {
    std::string host;
    std::uint16_t port;
};

std::optional<TcpAddress> parse_tcp(const std::string &endpoint) {
    constexpr std::string_view prefix = "tcp://";
    if (endpoint.rfind(prefix, 0) != 0) {
        return std::nullopt;
    }
    const std::string rest = endpoint.substr(prefix.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
        throw validation_error("endpoint", "expected tcp://host:port, got '" + endpoint + "'");
    }
    const int port = std::stoi(rest.substr(colon + 1));
    if (port < 0 || port > 65535) {
        throw validation_error("endpoint", "port out of range in '" + endpoint + "'");
    }
    return TcpAddress{rest.substr(0, colon), static_cast<std::uint16_t>(port)};
}

class FileSink final : public ByteSink {
public:
    explicit FileSink(const std::string &path) : out_(path, std::ios::binary) {
        if (!out_) throw format_error("cannot open " + path + " for writing");
    }
    void write(std::span<const std::uint8_t> bytes) override {
        out_.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out_) throw format_error("stream write failed");
    }
    void close() override {
        out_.flush();
        out_.close();
    }

private:
    std::ofstream out_;
};

class FileSource final : public ByteSource {
public:
    explicit FileSource(const std::string &path) : in_(path, std::ios::binary) {
        if (!in_) throw format_error("cannot open " + path + " for reading");
    }
    std::size_t read(std::span<std::uint8_t> bytes) override {
        in_.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        return static_cast<std::size_t>(in_.gcount());
    }

private:
    std::ifstream in_;
};

} // namespace

std::vector<std::uint8_t> encode_frame(std::span<const cf64> samples, std::int64_t start_sample,
                                       std::uint16_t flags, QuantizeStats *stats) {
    if (samples.size() > 0xFFFFFFFFull) {
        throw domain_error("stream block too large for one frame");
    }
    std::vector<std::uint8_t> out(kFrameHeaderBytes + samples.size() * kBytesPerSample);
    std::memcpy(out.data(), kStreamMagic.data(), kStreamMagic.size());
    put_le<std::uint16_t>(out.data() + 4, flags);
    put_le<std::uint32_t>(out.data() + 6, static_cast<std::uint32_t>(samples.size()));
    put_le<std::int64_t>(out.data() + 10, start_sample);
    quantize_into(samples, out.data() + kFrameHeaderBytes, stats);
    return out;
}

std::size_t MemorySource::read(std::span<std::uint8_t> bytes) {
    const std::size_t n = std::min(bytes.size(), data_.size() - pos_);
    std::memcpy(bytes.data(), data_.data() + pos_, n);
    pos_ += n;
    return n;
}

// ---------------------------------------------------------------- TCP

struct TcpServerSink::Impl {
    asio::io_context io;
    tcp::acceptor acceptor{io};
    tcp::socket socket{io};
    bool connected = false;
};

TcpServerSink::TcpServerSink(const std::string &host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
    tcp::resolver resolver(impl_->io);
    const auto results = resolver.resolve(host, std::to_string(port));
    const tcp::endpoint ep = *results.begin();
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen(1);
}

TcpServerSink::~TcpServerSink() = default;

std::uint16_t TcpServerSink::port() const noexcept { return impl_->acceptor.local_endpoint().port(); }

void TcpServerSink::accept() {
    if (!impl_->connected) {
        impl_->acceptor.accept(impl_->socket);
        impl_->socket.set_option(tcp::no_delay(true));
        impl_->connected = true;
    }
}

void TcpServerSink::write(std::span<const std::uint8_t> bytes) {
    accept();
    asio::write(impl_->socket, asio::buffer(bytes.data(), bytes.size()));
}

void TcpServerSink::close() {
    if (impl_->connected) {
        boost::system::error_code ec;
        impl_->socket.shutdown(tcp::socket::shutdown_send, ec);
        impl_->socket.close(ec);
        impl_->connected = false;
    }
}

struct TcpSource::Impl {
    asio::io_context io;
    tcp::socket socket{io};
};

TcpSource::TcpSource(const std::string &host, std::uint16_t port, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>()) {
    tcp::resolver resolver(impl_->io);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        boost::system::error_code ec;
        asio::connect(impl_->socket, resolver.resolve(host, std::to_string(port)), ec);
        if (!ec) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            throw format_error("cannot connect to " + host + ":" + std::to_string(port) + ": " + ec.message());
        }
        impl_->socket.close();
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

TcpSource::~TcpSource() = default;

std::size_t TcpSource::read(std::span<std::uint8_t> bytes) {
    boost::system::error_code ec;
    const std::size_t n = impl_->socket.read_some(asio::buffer(bytes.data(), bytes.size()), ec);
    if (ec == asio::error::eof) return 0;
    if (ec) throw format_error("stream read failed: " + ec.message());
    return n;
}

std::unique_ptr<ByteSink> open_sink(const std::string &endpoint) {
    if (auto tcp_addr = parse_tcp(endpoint)) {
        return std::make_unique<TcpServerSink>(tcp_addr->host, tcp_addr->port);
    }
    return std::make_unique<FileSink>(endpoint);
}

std::unique_ptr<ByteSource> open_source(const std::string &endpoint) {
    if (auto tcp_addr = parse_tcp(endpoint)) {
        return std::make_unique<TcpSource>(tcp_addr->host, tcp_addr->port);
    }
    return std::make_unique<FileSource>(endpoint);
}

// ---------------------------------------------------------------- sessions

StreamServer::StreamServer(ByteSink &sink, double sample_rate_hz, bool realtime)
    : sink_(sink), rate_(sample_rate_hz), realtime_(realtime) {
    if (!(sample_rate_hz > 0.0)) throw domain_error("sample rate must be positive");
}

void StreamServer::send(const IQBuffer &block) {
    if (finished_) throw domain_error("send after finish");
    if (next_ && block.start_sample() != *next_) {
        throw domain_error("stream blocks must be contiguous: expected " + std::to_string(*next_) + ", got " +
                           std::to_string(block.start_sample()));
    }
    if (!next_) {
        first_ = block.start_sample();
        t0_ = std::chrono::steady_clock::now();
    }
    next_ = block.end_sample();
    const auto bytes = encode_frame(block.samples(), block.start_sample(), 0, &stats_);
    if (realtime_) {
        const auto due = t0_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(static_cast<double>(block.end_sample() - first_) / rate_));
        std::this_thread::sleep_until(due);
    }
    sink_.write(bytes);
    ++frames_;
}

void StreamServer::finish() {
    if (finished_) return;
    finished_ = true;
    sink_.write(encode_frame({}, next_.value_or(0), kFlagEndOfStream));
    sink_.close();
}

StreamConsumer::StreamConsumer(ByteSource &source, double sample_rate_hz) : source_(source), rate_(sample_rate_hz) {}

bool StreamConsumer::read_exact(std::span<std::uint8_t> out, bool allow_eof) {
    std::size_t got = 0;
    while (got < out.size()) {
        const std::size_t n = source_.read(out.subspan(got));
        if (n == 0) {
            if (got == 0 && allow_eof) return false;
            throw protocol_error(index_, "truncated frame (" + std::to_string(got) + " of " +
                                             std::to_string(out.size()) + " bytes)");
        }
        got += n;
    }
    return true;
}

std::optional<IQBuffer> StreamConsumer::next() {
    if (done_) return std::nullopt;
    std::array<std::uint8_t, kFrameHeaderBytes> head{};
    if (!read_exact(head, true)) {
        done_ = true;
        return std::nullopt;
    }
    if (!std::equal(kStreamMagic.begin(), kStreamMagic.end(), head.begin())) {
        throw protocol_error(index_, "bad magic");
    }
    FrameHeader h;
    h.flags = get_le<std::uint16_t>(head.data() + 4);
    h.sample_count = get_le<std::uint32_t>(head.data() + 6);
    h.start_sample = get_le<std::int64_t>(head.data() + 10);
    if (next_ && h.start_sample != *next_) {
        throw protocol_error(index_, "gap: expected start " + std::to_string(*next_) + ", got " +
                                         std::to_string(h.start_sample));
    }
    std::vector<std::uint8_t> payload(static_cast<std::size_t>(h.sample_count) * kBytesPerSample);
    read_exact(payload, false);
    ++index_;
    next_ = h.start_sample + static_cast<std::int64_t>(h.sample_count);
    if (h.flags & kFlagEndOfStream) {
        done_ = true;
        if (h.sample_count == 0) return std::nullopt;
    }
    return dequantize(payload, rate_, h.start_sample);
}

void serve_stream(const std::vector<IQBuffer> &blocks, ByteSink &sink, bool realtime) {
    if (blocks.empty()) {
        sink.write(encode_frame({}, 0, kFlagEndOfStream));
        sink.close();
        return;
    }
    StreamServer server(sink, blocks.front().sample_rate_hz(), realtime);
    for (const auto &b : blocks) server.send(b);
    server.finish();
}

std::vector<IQBuffer> consume_stream(ByteSource &source, double sample_rate_hz) {
    StreamConsumer c(source, sample_rate_hz);
    std::vector<IQBuffer> out;
    while (auto b = c.next()) out.push_back(std::move(*b));
    return out;
}

} // namespace iqsim
