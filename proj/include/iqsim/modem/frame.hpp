#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace iqsim {

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16(std::span<const std::uint8_t> payload) noexcept;

// Payload of 1..255 bytes plus its checksum.
struct Frame {
    std::vector<std::uint8_t> payload;
    std::uint16_t crc = 0xFFFF;

    static Frame make(std::vector<std::uint8_t> payload);
    bool operator==(const Frame &) const = default;
};

inline constexpr std::size_t kMaxPayload = 255;

// Bytes carried after the receiver-side sync: length, payload, CRC (big-endian).
std::vector<std::uint8_t> frame_body(const Frame &f);

// MSB-first bit expansion.
std::vector<std::uint8_t> bytes_to_bits(std::span<const std::uint8_t> bytes);
// Packs MSB-first bits into bytes; a short tail is zero-padded.
std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits);

// Groups bits MSB-first into `width`-bit symbols, zero-padding the last one.
std::vector<int> bits_to_symbols(std::span<const std::uint8_t> bits, int width);
std::vector<std::uint8_t> symbols_to_bits(std::span<const int> symbols, int width);

// Preamble and sync word shared by the FSK and DBPSK framers.
inline constexpr std::uint8_t kBitPreambleByte = 0xAA;
inline constexpr int kBitPreambleBytes = 4;
inline constexpr std::uint16_t kBitSyncWord = 0x2DD4;

// Full on-air bit sequence for FSK / DBPSK: preamble, sync word, body.
std::vector<std::uint8_t> bit_frame(const Frame &f);

} // namespace iqsim
