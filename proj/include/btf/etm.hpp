#ifndef BTF_ETM_HPP
#define BTF_ETM_HPP

#include <cstdint>
#include <vector>

#include "btf/bootstrap.hpp"
#include "btf/errors.hpp"
#include "btf/lwe.hpp"

namespace btf {

/// Feature length and acceptance threshold (maximum Hamming distance,
/// inclusive) for encrypted matching.
struct etm_config {
    std::size_t l_w = 2048;
    std::size_t t = 512;

    static etm_config with_default_threshold(std::size_t l_w) {
        return etm_config{l_w, l_w / 4};
    }

    void validate() const {
        if (t > l_w) throw invalid_params("threshold exceeds the feature length");
    }
};

inline std::size_t counter_width(std::size_t l_w) {
    std::size_t w = 0;
    while ((std::size_t(1) << w) < l_w + 1) ++w;
    return w;
}

namespace detail {

/// Little-endian vector of encrypted bits standing for one binary number.
using enc_number = std::vector<lwe_ciphertext>;

/// Ripple-carry addition of two encrypted numbers. Full adder cells are
/// 2 XOR + 2 AND + 1 OR; a missing operand bit or absent carry degrades
/// the cell to a half adder or a copy.
inline enc_number ripple_add(const enc_number& x, const enc_number& y,
                             const evaluation_key& evk) {
    const std::size_t w = std::max(x.size(), y.size());
    enc_number sum;
    sum.reserve(w + 1);
    lwe_ciphertext carry;
    bool have_carry = false;
    for (std::size_t i = 0; i < w; ++i) {
        const bool hx = i < x.size();
        const bool hy = i < y.size();
        if (hx && hy) {
            lwe_ciphertext axb = gate(gate_op::XOR, x[i], y[i], evk);
            if (have_carry) {
                sum.push_back(gate(gate_op::XOR, axb, carry, evk));
                lwe_ciphertext c1 = gate(gate_op::AND, x[i], y[i], evk);
                lwe_ciphertext c2 = gate(gate_op::AND, axb, carry, evk);
                carry = gate(gate_op::OR, c1, c2, evk);
            } else {
                carry = gate(gate_op::AND, x[i], y[i], evk);
                have_carry = true;
                sum.push_back(std::move(axb));
            }
        } else {
            const lwe_ciphertext& only = hx ? x[i] : y[i];
            if (have_carry) {
                sum.push_back(gate(gate_op::XOR, only, carry, evk));
                carry = gate(gate_op::AND, only, carry, evk);
            } else {
                sum.push_back(only);
            }
        }
    }
    if (have_carry) sum.push_back(std::move(carry));
    return sum;
}

}  // namespace detail

/// Encrypted Hamming distance as a little-endian binary counter of
/// ceil(log2(l_w + 1)) bits: an XOR layer followed by a balanced tree of
/// ripple-carry adders.
inline std::vector<lwe_ciphertext> hom_hamming(const std::vector<lwe_ciphertext>& enc_w,
                                               const std::vector<lwe_ciphertext>& enc_w2,
                                               const evaluation_key& evk) {
    if (enc_w.size() != enc_w2.size())
        throw length_mismatch("feature vectors differ in length");
    if (enc_w.empty()) throw length_mismatch("empty feature vector");

    std::vector<detail::enc_number> layer;
    layer.reserve(enc_w.size());
    for (std::size_t i = 0; i < enc_w.size(); ++i)
        layer.push_back({gate(gate_op::XOR, enc_w[i], enc_w2[i], evk)});

    while (layer.size() > 1) {
        std::vector<detail::enc_number> next;
        next.reserve((layer.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < layer.size(); i += 2)
            next.push_back(detail::ripple_add(layer[i], layer[i + 1], evk));
        if (layer.size() % 2) next.push_back(std::move(layer.back()));
        layer = std::move(next);
    }

    auto counter = std::move(layer.front());
    counter.resize(counter_width(enc_w.size()),
                   lwe_ciphertext::trivial(0, evk.bp().lwe));
    return counter;
}

/// Enc(r) with r = 1 iff the counter value is <= t. Ripple-borrow
/// subtraction of the encrypted counter from the plaintext constant t;
/// the final borrow says t < counter, so r is its negation, taken as one
/// XOR with a trivial 1.
inline lwe_ciphertext hom_leq(const std::vector<lwe_ciphertext>& counter, std::size_t t,
                              const evaluation_key& evk) {
    const std::size_t w = counter.size();
    if (w == 0 || (w < 64 && t >= (std::size_t(1) << w)))
        throw width_mismatch("threshold does not fit the counter width");

    lwe_ciphertext borrow = lwe_ciphertext::trivial(0, evk.bp().lwe);
    for (std::size_t i = 0; i < w; ++i) {
        const int t_bit = (t >> i) & 1;
        borrow = t_bit ? gate(gate_op::AND, counter[i], borrow, evk)
                       : gate(gate_op::OR, counter[i], borrow, evk);
    }
    return gate(gate_op::XOR, borrow, lwe_ciphertext::trivial(1, evk.bp().lwe), evk);
}

/// Full error-tolerance match: one ciphertext, accept iff the Hamming
/// distance between the stored template and the probe is at most cfg.t.
inline lwe_ciphertext etm(const std::vector<lwe_ciphertext>& enc_w,
                          const std::vector<lwe_ciphertext>& enc_w2, const etm_config& cfg,
                          const evaluation_key& evk) {
    cfg.validate();
    if (enc_w.size() != cfg.l_w || enc_w2.size() != cfg.l_w)
        throw length_mismatch("feature length does not match the configuration");
    auto counter = hom_hamming(enc_w, enc_w2, evk);
    return hom_leq(counter, cfg.t, evk);
}

}  // namespace btf

#endif
