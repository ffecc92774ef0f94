#ifndef BTF_HOM_TRIVIUM_HPP
#define BTF_HOM_TRIVIUM_HPP

#include <cstdint>
#include <vector>

#include "btf/bootstrap.hpp"
#include "btf/errors.hpp"
#include "btf/lwe.hpp"
#include "btf/serial.hpp"
#include "btf/trivium.hpp"

namespace btf {

/// FHE encryption of the 80 stream-cipher key bits: what the client ships
/// to the server so the server can run the cipher inside the FHE layer.
struct hom_decryption_key {
    std::vector<lwe_ciphertext> bits;  // 80 gate-domain ciphertexts

    std::size_t serialized_bytes(const lwe_params& p) const {
        return bits.size() * p.ciphertext_bytes();
    }
};

inline hom_decryption_key make_hom_decryption_key(const trivium_key& key,
                                                  public_key_set& pk_k) {
    bit_vector kb = bytes_to_bits({key.k.begin(), key.k.end()}, 80);
    hom_decryption_key dk;
    dk.bits.reserve(80);
    for (std::size_t i = 0; i < 80; ++i) dk.bits.push_back(pk_encrypt(kb[i], pk_k));
    return dk;
}

/// The IV is public, so its bits enter the homomorphic state as noiseless
/// trivial ciphertexts.
inline std::vector<lwe_ciphertext> encode_iv(const trivium_key& key, const lwe_params& p) {
    bit_vector ib = bytes_to_bits({key.iv.begin(), key.iv.end()}, 80);
    std::vector<lwe_ciphertext> out;
    out.reserve(80);
    for (std::size_t i = 0; i < 80; ++i) out.push_back(lwe_ciphertext::trivial(ib[i], p));
    return out;
}

/// How XOR chains inside the cipher rounds are evaluated. In lazy mode the
/// chains are accumulated linearly on parity-domain ({0, 1/2}) encodings
/// and refreshed with one bootstrap per produced bit; in pure-gate mode
/// every XOR is a bootstrapped gate. Both decrypt identically.
enum class xor_policy : std::uint8_t { lazy = 0, pure_gate = 1 };

/// Trivium's 288-bit state over LWE ciphertexts. Bit i of the plaintext
/// state corresponds to slot i here; decrypting all slots at any step
/// count reproduces the plaintext state exactly.
class hom_trivium_state {
public:
    hom_trivium_state() = default;

    /// Load and run the 1152 warm-up rounds homomorphically.
    static hom_trivium_state init(const std::vector<lwe_ciphertext>& ct_iv,
                                  const hom_decryption_key& dk, const evaluation_key& evk,
                                  xor_policy policy = xor_policy::lazy) {
        const auto& p = evk.bp().lwe;
        if (dk.bits.size() != 80 || ct_iv.size() != 80)
            throw dimension_mismatch("dk and ct_iv must each hold 80 ciphertexts");
        for (const auto& ct : dk.bits)
            if (ct.dim() != p.n) throw dimension_mismatch("dk dimension mismatch");
        for (const auto& ct : ct_iv)
            if (ct.dim() != p.n) throw dimension_mismatch("ct_iv dimension mismatch");

        hom_trivium_state st;
        st.policy_ = policy;
        st.s_.reserve(k_trivium_state_bits);
        for (std::size_t i = 0; i < 80; ++i) st.s_.push_back(dk.bits[i]);
        for (std::size_t i = 80; i < 93; ++i) st.s_.push_back(lwe_ciphertext::trivial(0, p));
        for (std::size_t i = 0; i < 80; ++i) st.s_.push_back(ct_iv[i]);
        for (std::size_t i = 173; i < 285; ++i) st.s_.push_back(lwe_ciphertext::trivial(0, p));
        for (std::size_t i = 285; i < 288; ++i) st.s_.push_back(lwe_ciphertext::trivial(1, p));

        for (std::size_t i = 0; i < k_trivium_warmup_rounds; ++i) st.step(evk, nullptr);
        return st;
    }

    /// Advance by l rounds, returning the gate-domain keystream bits.
    std::vector<lwe_ciphertext> keystream(std::size_t l, const evaluation_key& evk) {
        std::vector<lwe_ciphertext> out;
        out.reserve(l);
        for (std::size_t i = 0; i < l; ++i) {
            lwe_ciphertext z;
            step(evk, &z);
            out.push_back(std::move(z));
        }
        stream_pos_ += l;
        return out;
    }

    std::uint64_t rounds() const { return rounds_; }
    std::uint64_t stream_position() const { return stream_pos_; }
    xor_policy policy() const { return policy_; }
    const std::vector<lwe_ciphertext>& slots() const { return s_; }

    /// Test/oracle helper: plaintext state under sk.
    std::vector<std::uint8_t> decrypt_state(const lwe_secret_key& sk) const {
        std::vector<std::uint8_t> bits(s_.size());
        for (std::size_t i = 0; i < s_.size(); ++i)
            bits[i] = static_cast<std::uint8_t>(decrypt(s_[i], sk));
        return bits;
    }

    bytes raw() const {
        byte_writer w;
        w.u64(rounds_);
        w.u64(stream_pos_);
        w.u8(static_cast<std::uint8_t>(policy_));
        for (const auto& ct : s_) put_ciphertext(w, ct);
        return w.take();
    }

    static hom_trivium_state from_raw(const bytes& data, const bootstrap_params& bp) {
        hom_trivium_state st;
        byte_reader r(data);
        st.rounds_ = r.u64();
        st.stream_pos_ = r.u64();
        st.policy_ = static_cast<xor_policy>(r.u8());
        st.s_.reserve(k_trivium_state_bits);
        double var = bp.fresh_boot_var();
        for (std::size_t i = 0; i < k_trivium_state_bits; ++i)
            st.s_.push_back(get_ciphertext(r, bp.lwe, var));
        if (!r.done()) throw parse_error("trailing bytes in homomorphic state");
        return st;
    }

private:
    /// Parity-domain accumulation of gate-domain terms (each embedded as
    /// 2x). Refreshes the partial sum early whenever the noise budget is
    /// about to run out; with the shipped parameter sets the budget never
    /// reaches zero inside one round.
    lwe_ciphertext parity_accumulate(const std::vector<const lwe_ciphertext*>& terms,
                                     const evaluation_key& evk) const {
        lwe_ciphertext acc = lwe_scale(*terms[0], 2);
        for (std::size_t i = 1; i < terms.size(); ++i) {
            lwe_ciphertext next = lwe_scale(*terms[i], 2);
            if (noise_budget(acc, evk) == 0) {
                lwe_ciphertext lin = acc;
                lin.b -= torus_element(k_encode_one);
                acc = bootstrap_sign(lin, bit_domain::parity, evk);
            }
            acc = lwe_add(acc, next);
        }
        return acc;
    }

    /// Parity accumulation to a fresh gate-domain bit: one bootstrap.
    lwe_ciphertext fold_xor(const std::vector<const lwe_ciphertext*>& terms,
                            const evaluation_key& evk) const {
        lwe_ciphertext lin = parity_accumulate(terms, evk);
        lin.b -= torus_element(k_encode_one);  // {0,1/2} - 1/4 -> sign decision
        return bootstrap_sign(lin, bit_domain::gate, evk);
    }

    void step(const evaluation_key& evk, lwe_ciphertext* z_out) {
        auto& s = s_;
        lwe_ciphertext a1 = gate(gate_op::AND, s[90], s[91], evk);
        lwe_ciphertext a2 = gate(gate_op::AND, s[174], s[175], evk);
        lwe_ciphertext a3 = gate(gate_op::AND, s[285], s[286], evk);

        lwe_ciphertext t1, t2, t3;
        if (policy_ == xor_policy::lazy) {
            if (z_out)
                *z_out = fold_xor({&s[65], &s[92], &s[161], &s[176], &s[242], &s[287]}, evk);
            t1 = fold_xor({&s[65], &s[92], &a1, &s[170]}, evk);
            t2 = fold_xor({&s[161], &s[176], &a2, &s[263]}, evk);
            t3 = fold_xor({&s[242], &s[287], &a3, &s[68]}, evk);
        } else {
            lwe_ciphertext x1 = gate(gate_op::XOR, s[65], s[92], evk);
            lwe_ciphertext x2 = gate(gate_op::XOR, s[161], s[176], evk);
            lwe_ciphertext x3 = gate(gate_op::XOR, s[242], s[287], evk);
            if (z_out)
                *z_out = gate(gate_op::XOR, gate(gate_op::XOR, x1, x2, evk), x3, evk);
            t1 = gate(gate_op::XOR, gate(gate_op::XOR, x1, a1, evk), s[170], evk);
            t2 = gate(gate_op::XOR, gate(gate_op::XOR, x2, a2, evk), s[263], evk);
            t3 = gate(gate_op::XOR, gate(gate_op::XOR, x3, a3, evk), s[68], evk);
        }

        // shift: registers A = s[0..92], B = s[93..176], C = s[177..287]
        for (std::size_t i = 92; i > 0; --i) s[i] = std::move(s[i - 1]);
        for (std::size_t i = 176; i > 93; --i) s[i] = std::move(s[i - 1]);
        for (std::size_t i = 287; i > 177; --i) s[i] = std::move(s[i - 1]);
        s[0] = std::move(t3);
        s[93] = std::move(t1);
        s[177] = std::move(t2);
        ++rounds_;
    }

    std::vector<lwe_ciphertext> s_;
    std::uint64_t rounds_ = 0;
    std::uint64_t stream_pos_ = 0;
    xor_policy policy_ = xor_policy::lazy;
};

inline hom_trivium_state efhe_init(const std::vector<lwe_ciphertext>& ct_iv,
                                   const hom_decryption_key& dk, const evaluation_key& evk,
                                   xor_policy policy = xor_policy::lazy) {
    return hom_trivium_state::init(ct_iv, dk, evk, policy);
}

/// Homomorphic stream-cipher decryption: Enc(w_i) = Enc(c_i) XOR Enc(kbar_i).
inline std::vector<lwe_ciphertext> hom_stream_decrypt(
    const std::vector<lwe_ciphertext>& enc_c, const std::vector<lwe_ciphertext>& enc_kbar,
    const evaluation_key& evk) {
    if (enc_c.size() != enc_kbar.size())
        throw length_mismatch("ciphertext/keystream length mismatch");
    std::vector<lwe_ciphertext> out;
    out.reserve(enc_c.size());
    for (std::size_t i = 0; i < enc_c.size(); ++i)
        out.push_back(gate(gate_op::XOR, enc_c[i], enc_kbar[i], evk));
    return out;
}

}  // namespace btf

#endif
