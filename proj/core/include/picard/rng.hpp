#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace picard
{

/// Philox4x32-10 counter-based generator.
///
/// Stateless: every output block is a pure function of (key, counter), so any
/// cell of any replica can be regenerated on its own, in any order, on any
/// thread. See Salmon et al., "Parallel random numbers: as easy as 1, 2, 3".
class Philox4x32
{
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key) noexcept;
};

/// Independent random streams derived from one user seed.
enum class Stream : std::uint64_t
{
    signal_noise = 1,
    observation_noise = 2,
    resampling = 3,
    hidden_signal = 4,
};

/// SplitMix64 finalizer; used to derive stream seeds from the user seed.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Seed of stream `tag` under user seed `seed`.
std::uint64_t derive_seed(std::uint64_t seed, Stream tag) noexcept;

/// Identity of one random stream: which seed, which replica.
struct StreamKey
{
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Fill `out` with independent standard normals for cell `row` of `key`.
///
/// Entries are numbered e = row * out.size() + column and consecutive pairs
/// (2q, 2q + 1) share one Philox block via Box-Muller. The value of an entry
/// depends only on (key, e), never on which rows were generated before it.
void standard_normals(StreamKey key, std::uint64_t row, std::span<double> out) noexcept;

/// Entries first, first + 1, ... of the stream written to `out`; a whole
/// table in one call equals the row-by-row fill.
void standard_normal_entries(StreamKey key, std::uint64_t first, std::span<double> out) noexcept;

/// Uniform double in [0, 1) for cell `row` of `key`.
double uniform01(StreamKey key, std::uint64_t row) noexcept;

} // namespace picard
