#ifndef BTF_LWE_HPP
#define BTF_LWE_HPP

#include <cstdint>
#include <vector>

#include "btf/errors.hpp"
#include "btf/params.hpp"
#include "btf/rng.hpp"
#include "btf/torus.hpp"

namespace btf {

/// Binary LWE secret key of dimension n.
class lwe_secret_key {
public:
    lwe_secret_key() = default;
    lwe_secret_key(lwe_params params, std::vector<std::uint8_t> bits)
        : params_(params), bits_(std::move(bits)) {
        if (bits_.size() != params_.n)
            throw dimension_mismatch("secret key length != n");
    }

    const lwe_params& params() const { return params_; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

private:
    lwe_params params_;
    std::vector<std::uint8_t> bits_;
};

inline lwe_secret_key keygen(const lwe_params& params, entropy_source& rng) {
    std::vector<std::uint8_t> bits(params.n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
    return lwe_secret_key(params, std::move(bits));
}

/// LWE pair (a, b) over the discretized torus. Carries a running noise
/// variance estimate used by the lazy-refresh policy; the estimate is
/// bookkeeping only and is never serialized.
struct lwe_ciphertext {
    std::vector<torus_element> a;
    torus_element b;
    double noise_var = 0.0;

    std::size_t dim() const { return a.size(); }

    /// Noiseless encryption of a public bit: (0, Ecd(bit)).
    static lwe_ciphertext trivial(int bit, const lwe_params& params) {
        lwe_ciphertext ct;
        ct.a.assign(params.n, torus_element(0));
        ct.b = encode_bit(bit);
        ct.noise_var = 0.0;
        return ct;
    }

    static lwe_ciphertext trivial_mu(torus_element mu, const lwe_params& params) {
        lwe_ciphertext ct;
        ct.a.assign(params.n, torus_element(0));
        ct.b = mu;
        ct.noise_var = 0.0;
        return ct;
    }
};

/// b - <a, s>.
inline torus_element phase(const lwe_ciphertext& ct, const lwe_secret_key& sk) {
    if (ct.dim() != sk.params().n)
        throw dimension_mismatch("ciphertext/key dimension mismatch");
    std::uint32_t acc = ct.b.raw;
    const auto& bits = sk.bits();
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) acc -= ct.a[i].raw;
    return torus_element(acc);
}

inline int decrypt(const lwe_ciphertext& ct, const lwe_secret_key& sk) {
    return decode_bit(phase(ct, sk));
}

/// Encryption of mu under sk with fresh Gaussian noise. Used to build
/// public-key sample sets and by test oracles.
inline lwe_ciphertext sk_encrypt_mu(torus_element mu, const lwe_secret_key& sk,
                                    double sigma, entropy_source& rng) {
    const auto& p = sk.params();
    lwe_ciphertext ct;
    ct.a.resize(p.n);
    std::uint32_t acc = mu.raw + gaussian_torus(rng, sigma).raw;
    const auto& bits = sk.bits();
    for (std::size_t i = 0; i < p.n; ++i) {
        ct.a[i] = torus_element(rng.uniform_u32());
        if (bits[i]) acc += ct.a[i].raw;
    }
    ct.b = torus_element(acc);
    ct.noise_var = sigma * sigma;
    return ct;
}

inline lwe_ciphertext lwe_add(const lwe_ciphertext& x, const lwe_ciphertext& y) {
    if (x.dim() != y.dim()) throw dimension_mismatch("lwe_add dimension mismatch");
    lwe_ciphertext out;
    out.a.resize(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i) out.a[i] = x.a[i] + y.a[i];
    out.b = x.b + y.b;
    out.noise_var = x.noise_var + y.noise_var;
    return out;
}

inline lwe_ciphertext lwe_sub(const lwe_ciphertext& x, const lwe_ciphertext& y) {
    if (x.dim() != y.dim()) throw dimension_mismatch("lwe_sub dimension mismatch");
    lwe_ciphertext out;
    out.a.resize(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i) out.a[i] = x.a[i] - y.a[i];
    out.b = x.b - y.b;
    out.noise_var = x.noise_var + y.noise_var;
    return out;
}

/// Small integer scaling; variance grows with k^2.
inline lwe_ciphertext lwe_scale(const lwe_ciphertext& x, std::int64_t k) {
    lwe_ciphertext out;
    out.a.resize(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i) out.a[i] = k * x.a[i];
    out.b = k * x.b;
    out.noise_var = double(k) * double(k) * x.noise_var;
    return out;
}

/// Ordered set of LWE encryptions of zero. Per the single-use rule each
/// sample encrypts exactly one message bit; the cursor only advances.
class public_key_set {
public:
    public_key_set() = default;
    public_key_set(lwe_params params, std::vector<lwe_ciphertext> samples)
        : params_(params), samples_(std::move(samples)) {}

    const lwe_params& params() const { return params_; }
    std::size_t size() const { return samples_.size(); }
    std::size_t used_count() const { return used_; }
    std::size_t remaining() const { return samples_.size() - used_; }
    const std::vector<lwe_ciphertext>& samples() const { return samples_; }

    const lwe_ciphertext& consume() {
        if (used_ >= samples_.size())
            throw exhausted_public_key("no unconsumed public-key sample left");
        return samples_[used_++];
    }

private:
    lwe_params params_;
    std::vector<lwe_ciphertext> samples_;
    std::size_t used_ = 0;
};

inline public_key_set make_public_key(const lwe_secret_key& sk, std::size_t count,
                                      entropy_source& rng) {
    std::vector<lwe_ciphertext> samples;
    samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        samples.push_back(sk_encrypt_mu(torus_element(0), sk, sk.params().sigma, rng));
    return public_key_set(sk.params(), std::move(samples));
}

/// ct = (a, b) + (0, Ecd(m)), consuming one sample.
inline lwe_ciphertext pk_encrypt(int bit, public_key_set& pk) {
    lwe_ciphertext ct = pk.consume();
    ct.b += encode_bit(bit);
    return ct;
}

}  // namespace btf

#endif
