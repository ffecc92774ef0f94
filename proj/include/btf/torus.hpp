#ifndef BTF_TORUS_HPP
#define BTF_TORUS_HPP

#include <cmath>
#include <cstdint>

#include "btf/rng.hpp"

namespace btf {

/// One element of the discretized torus T = R/Z, stored as a multiple of
/// 2^-32 in a 32-bit word. Wrap-around addition of the words is exactly
/// addition on the torus.
struct torus_element {
    std::uint32_t raw = 0;

    constexpr torus_element() = default;
    constexpr explicit torus_element(std::uint32_t r) : raw(r) {}

    friend constexpr torus_element operator+(torus_element a, torus_element b) {
        return torus_element(a.raw + b.raw);
    }
    friend constexpr torus_element operator-(torus_element a, torus_element b) {
        return torus_element(a.raw - b.raw);
    }
    constexpr torus_element operator-() const { return torus_element(0u - raw); }
    torus_element& operator+=(torus_element o) {
        raw += o.raw;
        return *this;
    }
    torus_element& operator-=(torus_element o) {
        raw -= o.raw;
        return *this;
    }
    friend constexpr torus_element operator*(std::int64_t k, torus_element t) {
        return torus_element(static_cast<std::uint32_t>(k) * t.raw);
    }
    friend constexpr bool operator==(torus_element a, torus_element b) {
        return a.raw == b.raw;
    }
    friend constexpr bool operator!=(torus_element a, torus_element b) {
        return a.raw != b.raw;
    }

    /// Signed distance from 0, in (-1/2, 1/2] scaled by 2^32.
    constexpr std::int32_t signed_raw() const {
        return static_cast<std::int32_t>(raw);
    }

    double to_double() const { return signed_raw() * 0x1.0p-32; }
};

/// Message encoding: 0 -> 0, 1 -> 1/4.
constexpr std::uint32_t k_encode_one = 0x40000000u;  // 2^30 = 1/4

constexpr torus_element encode_bit(int bit) {
    return torus_element(bit ? k_encode_one : 0u);
}

/// Decode by nearest encoding point on the torus. The decision region for 1
/// is [1/8, 5/8); both midpoints therefore break toward 1 on the low side
/// and 0 on the high side, deterministically.
constexpr int decode_bit(torus_element t) {
    return (t.raw - 0x20000000u) < 0x80000000u ? 1 : 0;
}

/// Round a real value (in torus units, i.e. fractions of 1) to the grid.
inline torus_element double_to_torus(double d) {
    double frac = d - std::floor(d);
    auto r = static_cast<std::uint32_t>(
        static_cast<std::int64_t>(std::llround(frac * 0x1.0p32)));
    return torus_element(r);
}

/// Gaussian noise sample on the discretized torus.
inline torus_element gaussian_torus(entropy_source& rng, double sigma) {
    return double_to_torus(rng.gaussian(sigma));
}

}  // namespace btf

#endif
