#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace tnkf {

/**
 * Platform-independent random source.
 *
 * Bits come from std::mt19937_64 (whose output sequence is fixed by the C++
 * standard) seeded with the 64-bit seed. Uniforms use the top 53 bits;
 * normals use the Box-Muller transform, consuming two uniforms per pair.
 * std::*_distribution is avoided because its algorithms are
 * implementation-defined.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform();
    /// Standard normal.
    double normal();

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

}  // namespace tnkf
