#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace atcsim
{
    inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept
    {
        std::uint64_t h = 14695981039346656037ull;
        for (const char c : s)
        {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return h;
    }

    inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    /// Derives an independent stream seed from a base seed and a label (e.g. callsign + purpose).
    inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view label) noexcept
    {
        return splitmix64(base ^ splitmix64(fnv1a(label)));
    }

    // The engine is std::mt19937_64 (fully specified by the standard). The variate transforms are
    // written out here because std distributions are implementation-defined, and event logs must
    // be bit-identical across standard libraries.
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed) : m_engine(seed) {}

        /// Uniform on [0, 1) with 53 random bits.
        double uniform01()
        {
            return static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
        }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

        /// Uniform integer in [0, n), n > 0 (rejection sampling, unbiased).
        std::uint64_t below(std::uint64_t n)
        {
            const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                        std::numeric_limits<std::uint64_t>::max() % n;
            std::uint64_t x = m_engine();
            while (x >= limit)
            {
                x = m_engine();
            }
            return x % n;
        }

        /// Standard normal via the Marsaglia polar method.
        double normal()
        {
            if (m_has_spare)
            {
                m_has_spare = false;
                return m_spare;
            }
            double u = 0.0;
            double v = 0.0;
            double s = 0.0;
            do
            {
                u = 2.0 * uniform01() - 1.0;
                v = 2.0 * uniform01() - 1.0;
                s = u * u + v * v;
            } while (s >= 1.0 || s == 0.0);
            const double f = std::sqrt(-2.0 * std::log(s) / s);
            m_spare = v * f;
            m_has_spare = true;
            return u * f;
        }

        double exponential(double rate) { return -std::log(1.0 - uniform01()) / rate; }

        std::mt19937_64 &engine() noexcept { return m_engine; }

    private:
        std::mt19937_64 m_engine;
        double m_spare = 0.0;
        bool m_has_spare = false;
    };
}
