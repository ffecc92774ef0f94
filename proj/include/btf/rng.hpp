#ifndef BTF_RNG_HPP
#define BTF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace btf {

/// Seedable entropy source. All randomness in the library flows through one
/// of these, so a fixed seed gives byte-identical keys, ciphertexts and
/// protocol transcripts. Gaussian sampling uses an explicit Box-Muller
/// transform on top of mt19937_64 rather than std::normal_distribution,
/// whose output sequence is implementation-defined.
class entropy_source {
public:
    explicit entropy_source(std::uint64_t seed) : engine_(seed) {}

    static entropy_source from_random_device() {
        std::random_device rd;
        std::uint64_t seed = (std::uint64_t(rd()) << 32) ^ rd();
        return entropy_source(seed);
    }

    std::uint32_t uniform_u32() { return static_cast<std::uint32_t>(engine_()); }

    std::uint64_t uniform_u64() { return engine_(); }

    /// Uniform bit.
    int bit() { return static_cast<int>(engine_() & 1u); }

    /// Uniform double in [0, 1).
    double uniform_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Gaussian with standard deviation sigma, via Box-Muller. One sample per
    /// call; the second branch of the transform is cached.
    double gaussian(double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = uniform_unit();
        double u2 = uniform_unit();
        while (u1 <= 1e-300) u1 = uniform_unit();
        double mag = std::sqrt(-2.0 * std::log(u1));
        double z0 = mag * std::cos(2.0 * M_PI * u2);
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return z0 * sigma;
    }

    /// Derive an independent child source. Used to give each protocol party
    /// its own deterministic stream from one run seed.
    entropy_source fork() {
        std::uint64_t s = engine_() ^ 0x9e3779b97f4a7c15ull;
        return entropy_source(s);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace btf

#endif
