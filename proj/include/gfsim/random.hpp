#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace gfsim {

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
 * easy as 1, 2, 3", SC 2011).
 */
struct Philox4x32
{
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter ctr, Key key) noexcept
    {
        constexpr std::uint32_t m0 = 0xD2511F53u;
        constexpr std::uint32_t m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u;
        constexpr std::uint32_t w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round)
        {
            const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }
};

// SplitMix64 finalizer, used only to derive child keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

//---------------------------------------------------------------------------//
/*!
 * Splittable counter-based random stream.
 *
 * A stream is identified by a 64-bit key. Its output is the Philox block
 * sequence at counters 0, 1, 2, ... so any block can also be read at random
 * via block(). split(i) derives an independent child stream whose key is a
 * hash of (key, i); the child does not depend on how much of the parent has
 * been consumed.
 */
class RandomStream
{
  public:
    RandomStream() = default;
    explicit RandomStream(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc909ull)) {}

    static RandomStream from_key(std::uint64_t key)
    {
        RandomStream s;
        s.key_ = key;
        return s;
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t position() const noexcept { return counter_; }

    RandomStream split(std::uint64_t index) const noexcept
    {
        return from_key(mix64(key_ ^ mix64(index + 0x3c6ef372fe94f82bull)));
    }

    //! Raw 128-bit block at an arbitrary counter value.
    std::array<std::uint64_t, 2> block(std::uint64_t counter) const noexcept
    {
        const auto out = Philox4x32::apply(
            {static_cast<std::uint32_t>(counter),
             static_cast<std::uint32_t>(counter >> 32), 0x243f6a88u, 0x85a308d3u},
            {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
        return {(std::uint64_t{out[0]} << 32) | out[1],
                (std::uint64_t{out[2]} << 32) | out[3]};
    }

    std::uint64_t next_u64() noexcept
    {
        if (buffered_)
        {
            buffered_ = false;
            return spare_;
        }
        const auto b = block(counter_++);
        spare_ = b[1];
        buffered_ = true;
        return b[0];
    }

    //! Uniform on the open interval (0, 1).
    double uniform() noexcept { return to_open_unit(next_u64()); }

    double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

    double normal() noexcept
    {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    //! Uniform (0, 1) drawn from block `counter` without touching the position.
    double uniform_at(std::uint64_t counter) const noexcept
    {
        return to_open_unit(block(counter)[0]);
    }

    //! Standard normal drawn from block `counter` without touching the position.
    double normal_at(std::uint64_t counter) const noexcept
    {
        const auto b = block(counter);
        return std::sqrt(-2.0 * std::log(to_open_unit(b[0])))
               * std::cos(2.0 * std::numbers::pi * to_open_unit(b[1]));
    }

    static constexpr double to_open_unit(std::uint64_t bits) noexcept
    {
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    friend bool operator==(const RandomStream& a, const RandomStream& b) noexcept
    {
        return a.key_ == b.key_ && a.counter_ == b.counter_ && a.buffered_ == b.buffered_;
    }

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    std::uint64_t spare_ = 0;
    bool buffered_ = false;
};

}  // namespace gfsim
