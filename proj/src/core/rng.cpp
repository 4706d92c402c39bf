#include "iqsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace iqsim {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi, std::uint32_t &lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> philox_round(const std::array<std::uint32_t, 4> &c,
                                                 const std::array<std::uint32_t, 2> &k) noexcept {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept {
    counter = philox_round(counter, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
        counter = philox_round(counter, key);
    }
    return counter;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char ch : text) {
        h ^= static_cast<std::uint8_t>(ch);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::array<std::uint64_t, 2> RngStream::block_at(std::uint64_t index) const noexcept {
    const auto out = philox4x32_10(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0u, 0u},
        {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
    return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
            (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

std::uint64_t RngStream::next_u64() noexcept {
    if (pending_count_ == 0) {
        pending_ = block_at(counter_++);
        pending_count_ = 2;
    }
    return pending_[2 - pending_count_--];
}

double RngStream::next_uniform() noexcept { return to_unit(next_u64()); }

double RngStream::next_gaussian() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_gaussian_;
    }
    const cf64 g = complex_gaussian_at(counter_++);
    spare_gaussian_ = g.imag();
    has_spare_ = true;
    return g.real();
}

double RngStream::next_exponential(double rate) noexcept {
    return -std::log1p(-next_uniform()) / rate;
}

cf64 RngStream::complex_gaussian_at(std::uint64_t index) const noexcept {
    const auto b = block_at(index);
    // u1 in (0, 1] keeps the log finite.
    const double u1 = 1.0 - to_unit(b[0]);
    const double u2 = to_unit(b[1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

RngStream Rng::substream(std::string_view role, std::uint64_t entity) const noexcept {
    const std::uint64_t key =
        splitmix64(splitmix64(seed_) ^ fnv1a64(role) ^ splitmix64(entity ^ 0x9e3779b97f4a7c15ull));
    return RngStream(key);
}

} // namespace iqsim
