#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>

namespace kbm {

/// Philox4x32-10 counter-based generator block function. Each (key,
/// counter) pair maps to four independent 32-bit words, so streams are
/// addressable: results depend only on (seed, stream, draw index), never
/// on thread scheduling.
struct PhiloxBlock {
    std::uint32_t w[4];
};

PhiloxBlock philox4x32(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                       std::uint32_t c3, std::uint32_t k0, std::uint32_t k1);

/// Per-stream generator: stream i of a given seed yields an independent
/// sequence of uniforms/normals. One Philox block produces two doubles.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : k0_(static_cast<std::uint32_t>(seed)),
          k1_(static_cast<std::uint32_t>(seed >> 32)),
          s0_(static_cast<std::uint32_t>(stream)),
          s1_(static_cast<std::uint32_t>(stream >> 32)) {}

    /// Uniform double in (0, 1), never exactly 0 or 1.
    double next_uniform() {
        if (!have_second_) {
            refill();
            have_second_ = true;
            return u_[0];
        }
        have_second_ = false;
        return u_[1];
    }

    /// Standard normal via Box-Muller on one Philox block.
    double next_normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        refill();
        have_second_ = false; // normals consume whole blocks
        const double r = std::sqrt(-2.0 * std::log(u_[0]));
        const double a = 2.0 * std::numbers::pi * u_[1];
        cached_normal_ = r * std::sin(a);
        have_cached_normal_ = true;
        return r * std::cos(a);
    }

private:
    void refill() {
        const PhiloxBlock b =
            philox4x32(static_cast<std::uint32_t>(draw_),
                       static_cast<std::uint32_t>(draw_ >> 32), s0_, s1_, k0_, k1_);
        ++draw_;
        u_[0] = to_unit(b.w[0], b.w[1]);
        u_[1] = to_unit(b.w[2], b.w[3]);
    }

    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t v =
            (static_cast<std::uint64_t>(hi) << 32) | lo;
        // 53 significant bits, offset to the open interval (0,1)
        return static_cast<double>(v >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    std::uint32_t k0_, k1_, s0_, s1_;
    std::uint64_t draw_ = 0;
    double u_[2] = {0.0, 0.0};
    bool have_second_ = false;
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace kbm
