#include "picard/rng.hpp"

#include <cmath>
#include <numbers>

namespace picard
{
namespace
{
constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;
constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

inline std::uint64_t combine(std::uint32_t hi, std::uint32_t lo)
{
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

// Counter words: 63-bit cell index (bit 63 of word 1 tags the uniform stream), replica.
inline Philox4x32::Counter make_counter(StreamKey key, std::uint64_t index, bool uniform = false)
{
    return {static_cast<std::uint32_t>(index),
            static_cast<std::uint32_t>(index >> 32) | (uniform ? 0x80000000u : 0u),
            static_cast<std::uint32_t>(key.replica),
            static_cast<std::uint32_t>(key.replica >> 32)};
}

inline Philox4x32::Key make_key(StreamKey key)
{
    return {static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
}

// 53-bit uniforms: u in [0, 1).
inline double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * kTwoPow53Inv; }

} // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) noexcept
{
    for (int round = 0; round < 10; ++round)
    {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, Stream tag) noexcept
{
    return mix64(mix64(seed) ^ static_cast<std::uint64_t>(tag));
}

void standard_normals(StreamKey key, std::uint64_t row, std::span<double> out) noexcept
{
    standard_normal_entries(key, row * out.size(), out);
}

void standard_normal_entries(StreamKey key, std::uint64_t first, std::span<double> out) noexcept
{
    // Entry e takes normal (e % 2) of the Box-Muller pair of block e / 2.
    const auto k = make_key(key);
    std::uint64_t e = first;
    const std::uint64_t end = e + out.size();
    std::size_t c = 0;
    while (e < end)
    {
        const std::uint64_t pair = e / 2;
        const auto r = Philox4x32::block(make_counter(key, pair), k);
        // 1 - u keeps the log argument in (0, 1].
        const double u1 = 1.0 - to_unit(combine(r[0], r[1]));
        const double u2 = to_unit(combine(r[2], r[3]));
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        if (e % 2 == 0)
        {
            out[c++] = radius * std::cos(angle);
            ++e;
            if (e == end)
                break;
        }
        out[c++] = radius * std::sin(angle);
        ++e;
    }
}

double uniform01(StreamKey key, std::uint64_t row) noexcept
{
    const auto r = Philox4x32::block(make_counter(key, row, true), make_key(key));
    return to_unit(combine(r[0], r[1]));
}

} // namespace picard
