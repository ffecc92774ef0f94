#ifndef BTF_TRIVIUM_HPP
#define BTF_TRIVIUM_HPP

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "btf/errors.hpp"
#include "btf/rng.hpp"

namespace btf {

using bit_vector = std::vector<std::uint8_t>;  // one bit per entry, values 0/1

/// Bits are serialized LSB-first: stream bit j lives in byte j/8 at bit
/// position j%8. Key and IV bytes follow the same convention, so key bit 1
/// of the cipher is the least significant bit of the first key byte.
inline bit_vector bytes_to_bits(const std::vector<std::uint8_t>& data, std::size_t nbits) {
    bit_vector bits(nbits);
    for (std::size_t j = 0; j < nbits; ++j) bits[j] = (data[j / 8] >> (j % 8)) & 1;
    return bits;
}

inline std::vector<std::uint8_t> bits_to_bytes(const bit_vector& bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j]) out[j / 8] |= std::uint8_t(1u << (j % 8));
    return out;
}

inline std::string to_hex(const std::vector<std::uint8_t>& data) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(data.size() * 2);
    for (auto b : data) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

inline std::vector<std::uint8_t> from_hex(const std::string& hex) {
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw parse_error("bad hex digit");
    };
    if (hex.size() % 2) throw parse_error("odd hex length");
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::uint8_t((nib(hex[2 * i]) << 4) | nib(hex[2 * i + 1]));
    return out;
}

/// 80-bit key and 80-bit IV.
struct trivium_key {
    std::array<std::uint8_t, 10> k{};
    std::array<std::uint8_t, 10> iv{};

    static trivium_key from_hex_pair(const std::string& key_hex, const std::string& iv_hex) {
        auto kb = from_hex(key_hex);
        auto ib = from_hex(iv_hex);
        if (kb.size() != 10 || ib.size() != 10)
            throw length_mismatch("trivium key and iv must be 10 bytes each");
        trivium_key out;
        std::memcpy(out.k.data(), kb.data(), 10);
        std::memcpy(out.iv.data(), ib.data(), 10);
        return out;
    }
};

inline trivium_key e_keygen(int lambda_sym, entropy_source& rng) {
    if (lambda_sym != 80)
        throw unsupported_level("trivium supports a fixed 80-bit level only");
    trivium_key key;
    for (auto& b : key.k) b = std::uint8_t(rng.uniform_u32() & 0xFF);
    for (auto& b : key.iv) b = std::uint8_t(rng.uniform_u32() & 0xFF);
    return key;
}

constexpr std::size_t k_trivium_state_bits = 288;   // 93 + 84 + 111
constexpr std::size_t k_trivium_warmup_rounds = 1152;  // 4 x 288

/// The 288-bit shift-register state. One step() is one round of the
/// recurrences; initialization runs 1152 rounds with the output discarded.
class trivium_state {
public:
    trivium_state() = default;

    /// Loaded and warmed-up state for (k, iv).
    static trivium_state init(const trivium_key& key) {
        trivium_state st;
        st.load(key);
        for (std::size_t i = 0; i < k_trivium_warmup_rounds; ++i) st.step();
        return st;
    }

    /// One round; returns the keystream bit.
    int step() {
        auto& s = s_;
        int t1 = s[65] ^ s[92];
        int t2 = s[161] ^ s[176];
        int t3 = s[242] ^ s[287];
        int z = t1 ^ t2 ^ t3;
        t1 ^= (s[90] & s[91]) ^ s[170];
        t2 ^= (s[174] & s[175]) ^ s[263];
        t3 ^= (s[285] & s[286]) ^ s[68];
        std::memmove(&s[1], &s[0], 92);        // register A: s1..s93
        std::memmove(&s[94], &s[93], 83);      // register B: s94..s177
        std::memmove(&s[178], &s[177], 110);   // register C: s178..s288
        s[0] = std::uint8_t(t3);
        s[93] = std::uint8_t(t1);
        s[177] = std::uint8_t(t2);
        ++rounds_;
        return z;
    }

    bit_vector keystream(std::size_t l) {
        bit_vector out(l);
        for (std::size_t i = 0; i < l; ++i) out[i] = std::uint8_t(step());
        stream_pos_ += l;
        return out;
    }

    const std::array<std::uint8_t, k_trivium_state_bits>& bits() const { return s_; }
    std::uint64_t rounds() const { return rounds_; }
    std::uint64_t stream_position() const { return stream_pos_; }

    /// 52-byte snapshot: packed state bits then the two counters.
    std::vector<std::uint8_t> raw() const {
        std::vector<std::uint8_t> out(36, 0);
        for (std::size_t i = 0; i < k_trivium_state_bits; ++i)
            if (s_[i]) out[i / 8] |= std::uint8_t(1u << (i % 8));
        for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(rounds_ >> (8 * i)));
        for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(stream_pos_ >> (8 * i)));
        return out;
    }

    static trivium_state from_raw(const std::vector<std::uint8_t>& data) {
        if (data.size() != 52) throw parse_error("bad trivium state snapshot");
        trivium_state st;
        for (std::size_t i = 0; i < k_trivium_state_bits; ++i)
            st.s_[i] = (data[i / 8] >> (i % 8)) & 1;
        st.rounds_ = 0;
        st.stream_pos_ = 0;
        for (int i = 0; i < 8; ++i) st.rounds_ |= std::uint64_t(data[36 + i]) << (8 * i);
        for (int i = 0; i < 8; ++i) st.stream_pos_ |= std::uint64_t(data[44 + i]) << (8 * i);
        return st;
    }

private:
    void load(const trivium_key& key) {
        s_.fill(0);
        bit_vector kb = bytes_to_bits({key.k.begin(), key.k.end()}, 80);
        bit_vector ib = bytes_to_bits({key.iv.begin(), key.iv.end()}, 80);
        for (std::size_t i = 0; i < 80; ++i) s_[i] = kb[i];          // s1..s80
        for (std::size_t i = 0; i < 80; ++i) s_[93 + i] = ib[i];     // s94..s173
        s_[285] = s_[286] = s_[287] = 1;                             // s286..s288
        rounds_ = 0;
        stream_pos_ = 0;
    }

    std::array<std::uint8_t, k_trivium_state_bits> s_{};
    std::uint64_t rounds_ = 0;
    std::uint64_t stream_pos_ = 0;
};

inline trivium_state e_init(const trivium_key& key) { return trivium_state::init(key); }

/// c_i = m_i XOR kbar_i. Involutive and length-preserving.
inline bit_vector e_encrypt(const bit_vector& m, const bit_vector& kbar) {
    if (m.size() != kbar.size())
        throw length_mismatch("message/keystream length mismatch");
    bit_vector c(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) c[i] = m[i] ^ kbar[i];
    return c;
}

}  // namespace btf

#endif
