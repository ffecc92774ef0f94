#ifndef BTF_PARAMS_HPP
#define BTF_PARAMS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "btf/errors.hpp"

namespace btf {

enum class param_set : std::uint8_t {
    custom = 0,
    tfhe80 = 1,
    tfhe128 = 2,
};

inline const char* param_set_name(param_set p) {
    switch (p) {
        case param_set::tfhe80: return "tfhe80";
        case param_set::tfhe128: return "tfhe128";
        default: return "custom";
    }
}

/// LWE dimension and fresh-noise level for one security setting.
struct lwe_params {
    param_set name = param_set::custom;
    std::uint32_t n = 0;       // LWE dimension
    double sigma = 0.0;        // fresh Gaussian noise stddev, fraction of the torus

    std::size_t ciphertext_bytes() const { return (std::size_t(n) + 1) * 4; }

    bool operator==(const lwe_params& o) const {
        return name == o.name && n == o.n && sigma == o.sigma;
    }
};

/// Ring dimension and gadget decompositions for gate bootstrapping. The
/// bk fields shape the ring-GSW bootstrapping key, the ks fields the
/// LWE-to-LWE key-switching key; both gadgets use balanced (signed) digits.
struct bootstrap_params {
    lwe_params lwe;

    std::uint32_t ring_dim = 0;       // N, power of two
    std::uint32_t bk_levels = 0;      // gadget levels of the bootstrapping key
    std::uint32_t bk_base_bits = 0;   // log2 of the gadget base
    double bk_sigma = 0.0;            // ring encryption noise
    std::uint32_t ks_levels = 0;      // key-switch decomposition levels
    std::uint32_t ks_base_bits = 0;   // log2 of the key-switch base

    void validate() const {
        if (ring_dim < 16 || (ring_dim & (ring_dim - 1)) != 0)
            throw invalid_params("ring_dim must be a power of two, at least 16");
        if (lwe.n == 0) throw invalid_params("lwe dimension is zero");
        if (bk_levels * bk_base_bits < 14 || bk_levels * bk_base_bits > 32)
            throw invalid_params("bootstrapping gadget precision out of range");
        if (ks_levels * ks_base_bits < 12 || ks_levels * ks_base_bits > 32)
            throw invalid_params("key-switch gadget precision out of range");
    }

    // --- serialized sizes (exact, 4 bytes per torus word) ---

    std::size_t bk_words() const {
        return std::size_t(lwe.n) * 2 * bk_levels * 2 * ring_dim;
    }
    std::size_t ksk_words() const {
        return std::size_t(ring_dim) * ks_levels * (lwe.n + 1);
    }
    std::size_t evk_bytes() const { return (bk_words() + ksk_words()) * 4; }

    // --- noise model (variances in torus^2 units) ---

    /// Expected variance of a freshly bootstrapped ciphertext: blind
    /// rotation plus key switch plus both gadgets' rounding terms.
    double fresh_boot_var() const {
        double beta = double(1u << (bk_base_bits - 1));
        double eps_bk = std::pow(2.0, -double(bk_levels * bk_base_bits + 1));
        double per_ep = 2.0 * bk_levels * ring_dim * beta * beta * bk_sigma * bk_sigma +
                        (1.0 + ring_dim) * eps_bk * eps_bk;
        double br = lwe.n * per_ep;

        double base = double(1u << ks_base_bits);
        // mean square of a balanced digit in [-base/2, base/2)
        double dig_ms = 0.0;
        for (double d = -base / 2; d < base / 2; d += 1.0) dig_ms += d * d;
        dig_ms /= base;
        double ks = double(ring_dim) * ks_levels * dig_ms * lwe.sigma * lwe.sigma;
        double eps_ks = std::pow(2.0, -double(ks_levels * ks_base_bits + 1));
        ks += double(ring_dim) * 0.5 * eps_ks * eps_ks / 3.0;
        return br + ks;
    }

    /// Variance added by switching the modulus to 2N before blind rotation.
    double modswitch_var() const {
        double step = 1.0 / (4.0 * ring_dim);
        return (lwe.n * 0.5 + 1.0) * step * step / 3.0;
    }

    /// How many fresh-noise additions a just-bootstrapped ciphertext can
    /// absorb before refresh becomes mandatory. Conservative: keeps the
    /// accumulated stddev below 1/24 (six sigmas inside the 1/4 margin of
    /// the half-torus decision used by every refresh).
    int fresh_budget() const {
        double unit = fresh_boot_var();
        double safe = (0.25 / 6.0) * (0.25 / 6.0);
        return static_cast<int>((safe - unit) / unit);
    }
};

namespace params {

/// 128-bit security. n = 630 with the ring and gadget shapes of the
/// current-default TFHE gate-bootstrapping set.
inline bootstrap_params tfhe128() {
    bootstrap_params p;
    p.lwe = {param_set::tfhe128, 630, std::pow(2.0, -15)};
    p.ring_dim = 1024;
    p.bk_levels = 3;
    p.bk_base_bits = 7;
    p.bk_sigma = std::pow(2.0, -25);
    p.ks_levels = 5;
    p.ks_base_bits = 3;
    return p;
}

/// 80-bit security. n = 500 with the classic gate-bootstrapping shapes.
inline bootstrap_params tfhe80() {
    bootstrap_params p;
    p.lwe = {param_set::tfhe80, 500, 2.44e-5};
    p.ring_dim = 1024;
    p.bk_levels = 2;
    p.bk_base_bits = 10;
    p.bk_sigma = 3.73e-9;
    p.ks_levels = 5;
    p.ks_base_bits = 3;
    return p;
}

/// Tiny insecure parameters for fast tests. Never use outside tests.
inline bootstrap_params toy() {
    bootstrap_params p;
    p.lwe = {param_set::custom, 32, 1e-7};
    p.ring_dim = 256;
    p.bk_levels = 2;
    p.bk_base_bits = 8;
    p.bk_sigma = 1e-9;
    p.ks_levels = 4;
    p.ks_base_bits = 4;
    return p;
}

inline bootstrap_params by_name(const std::string& name) {
    if (name == "tfhe128") return tfhe128();
    if (name == "tfhe80") return tfhe80();
    if (name == "toy") return toy();
    throw invalid_params("unknown parameter set: " + name);
}

inline bootstrap_params by_id(param_set id) {
    switch (id) {
        case param_set::tfhe80: return tfhe80();
        case param_set::tfhe128: return tfhe128();
        default: throw invalid_params("no preset for custom param id");
    }
}

}  // namespace params
}  // namespace btf

#endif
