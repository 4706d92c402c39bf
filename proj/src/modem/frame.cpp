#include "iqsim/modem/frame.hpp"

#include "iqsim/errors.hpp"

#include <string>

namespace iqsim {

std::uint16_t crc16(std::span<const std::uint8_t> payload) noexcept {
    std::uint16_t crc = 0xFFFF;
    for (const std::uint8_t byte : payload) {
        crc ^= static_cast<std::uint16_t>(byte) << 8;
        for (int b = 0; b < 8; ++b) {
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
        }
    }
    return crc;
}

Frame Frame::make(std::vector<std::uint8_t> payload) {
    if (payload.empty() || payload.size() > kMaxPayload) {
        throw domain_error("frame payload must hold 1..255 bytes, got " +
                           std::to_string(payload.size()));
    }
    Frame f;
    f.crc = crc16(payload);
    f.payload = std::move(payload);
    return f;
}

std::vector<std::uint8_t> frame_body(const Frame &f) {
    if (f.payload.empty() || f.payload.size() > kMaxPayload) {
        throw domain_error("frame payload must hold 1..255 bytes");
    }
    std::vector<std::uint8_t> body;
    body.reserve(f.payload.size() + 3);
    body.push_back(static_cast<std::uint8_t>(f.payload.size()));
    body.insert(body.end(), f.payload.begin(), f.payload.end());
    body.push_back(static_cast<std::uint8_t>(f.crc >> 8));
    body.push_back(static_cast<std::uint8_t>(f.crc & 0xFF));
    return body;
}

std::vector<std::uint8_t> bytes_to_bits(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (const std::uint8_t byte : bytes) {
        for (int b = 7; b >= 0; --b) {
            bits.push_back(static_cast<std::uint8_t>((byte >> b) & 1));
        }
    }
    return bits;
}

std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits) {
    std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            bytes[i / 8] |= static_cast<std::uint8_t>(0x80 >> (i % 8));
        }
    }
    return bytes;
}

std::vector<int> bits_to_symbols(std::span<const std::uint8_t> bits, int width) {
    std::vector<int> symbols((bits.size() + width - 1) / width, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            symbols[i / width] |= 1 << (width - 1 - static_cast<int>(i % width));
        }
    }
    return symbols;
}

std::vector<std::uint8_t> symbols_to_bits(std::span<const int> symbols, int width) {
    std::vector<std::uint8_t> bits;
    bits.reserve(symbols.size() * width);
    for (const int s : symbols) {
        for (int b = width - 1; b >= 0; --b) {
            bits.push_back(static_cast<std::uint8_t>((s >> b) & 1));
        }
    }
    return bits;
}

std::vector<std::uint8_t> bit_frame(const Frame &f) {
    std::vector<std::uint8_t> bytes(kBitPreambleBytes, kBitPreambleByte);
    bytes.push_back(static_cast<std::uint8_t>(kBitSyncWord >> 8));
    bytes.push_back(static_cast<std::uint8_t>(kBitSyncWord & 0xFF));
    const auto body = frame_body(f);
    bytes.insert(bytes.end(), body.begin(), body.end());
    return bytes_to_bits(bytes);
}

} // namespace iqsim
