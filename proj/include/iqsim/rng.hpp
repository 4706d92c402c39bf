#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "iqsim/iq_core.hpp"

namespace iqsim {

// Philox4x32-10 (Salmon et al., Random123). Counter-based: output is a pure
// function of (counter, key), so any draw can be recomputed by index and
// results never depend on evaluation order or thread scheduling.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

// One independent random stream. Sequential draws walk the 64-bit counter;
// the *_at() accessors address a counter directly without touching state.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }

    std::uint64_t next_u64() noexcept;
    // Uniform in [0, 1) with 53 bits of resolution.
    double next_uniform() noexcept;
    double next_uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_uniform(); }
    // Standard normal (Box-Muller over one counter block; the paired value is cached).
    double next_gaussian() noexcept;
    // Exponential with the given rate.
    double next_exponential(double rate) noexcept;

    // Complex Gaussian with unit variance per component, derived from counter `index` alone.
    cf64 complex_gaussian_at(std::uint64_t index) const noexcept;

private:
    std::array<std::uint64_t, 2> block_at(std::uint64_t index) const noexcept;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> pending_{};
    int pending_count_ = 0;
    double spare_gaussian_ = 0.0;
    bool has_spare_ = false;
};

// Seeded root of all randomness in a run.
//
// Substream key = splitmix64(splitmix64(seed) ^ fnv1a64(role) ^ splitmix64(entity ^ 0x9e3779b97f4a7c15)).
// Roles in use: "traffic", "payload", "shadowing", "phase_noise", "noise".
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    RngStream substream(std::string_view role, std::uint64_t entity) const noexcept;

private:
    std::uint64_t seed_;
};

} // namespace iqsim
