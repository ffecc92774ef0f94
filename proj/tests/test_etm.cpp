#include <gtest/gtest.h>

#include "btf/etm.hpp"
#include "btf/trivium.hpp"

using namespace btf;

namespace {

struct fixture {
    bootstrap_params bp = params::toy();
    lwe_secret_key sk;
    evaluation_key evk;
    entropy_source rng{333};

    fixture() : sk(make_sk(bp)), evk(make_evk(sk, bp)) {}

    static lwe_secret_key make_sk(const bootstrap_params& p) {
        entropy_source r(81);
        return keygen(p.lwe, r);
    }
    static evaluation_key make_evk(const lwe_secret_key& sk, const bootstrap_params& p) {
        entropy_source r(82);
        return make_evaluation_key(sk, p, r);
    }

    std::vector<lwe_ciphertext> enc(const bit_vector& w) {
        auto pk = make_public_key(sk, w.size(), rng);
        std::vector<lwe_ciphertext> out;
        for (auto b : w) out.push_back(pk_encrypt(b, pk));
        return out;
    }

    std::size_t dec_counter(const std::vector<lwe_ciphertext>& counter) {
        std::size_t v = 0;
        for (std::size_t i = 0; i < counter.size(); ++i)
            v |= std::size_t(decrypt(counter[i], sk)) << i;
        return v;
    }

    bit_vector random_bits(std::size_t n) {
        bit_vector v(n);
        for (auto& b : v) b = std::uint8_t(rng.bit());
        return v;
    }
};

fixture& fx() {
    static fixture f;
    return f;
}

std::size_t plain_hamming(const bit_vector& a, const bit_vector& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] ^ b[i];
    return d;
}

}  // namespace

TEST(etm, counter_width) {
    EXPECT_EQ(counter_width(1), 1u);
    EXPECT_EQ(counter_width(2), 2u);
    EXPECT_EQ(counter_width(63), 6u);
    EXPECT_EQ(counter_width(64), 7u);
    EXPECT_EQ(counter_width(2048), 12u);
}

TEST(etm, hamming_identical_and_complement) {
    auto& f = fx();
    auto w = f.random_bits(32);
    bit_vector flipped(32);
    for (int i = 0; i < 32; ++i) flipped[i] = 1 - w[i];

    auto c_same = hom_hamming(f.enc(w), f.enc(w), f.evk);
    EXPECT_EQ(c_same.size(), counter_width(32));
    EXPECT_EQ(f.dec_counter(c_same), 0u);

    auto c_flip = hom_hamming(f.enc(w), f.enc(flipped), f.evk);
    EXPECT_EQ(f.dec_counter(c_flip), 32u);
}

TEST(etm, hamming_random_pairs_match_popcount) {
    auto& f = fx();
    for (int trial = 0; trial < 12; ++trial) {
        auto a = f.random_bits(64);
        auto b = f.random_bits(64);
        auto counter = hom_hamming(f.enc(a), f.enc(b), f.evk);
        ASSERT_EQ(f.dec_counter(counter), plain_hamming(a, b)) << "trial " << trial;
    }
}

TEST(etm, hamming_odd_length) {
    auto& f = fx();
    auto a = f.random_bits(13);
    auto b = f.random_bits(13);
    EXPECT_EQ(f.dec_counter(hom_hamming(f.enc(a), f.enc(b), f.evk)), plain_hamming(a, b));
}

TEST(etm, leq_exhaustive_six_bit) {
    auto& f = fx();
    // every counter value in [0, 63] against several thresholds
    for (std::size_t t : {0u, 7u, 31u, 63u}) {
        for (std::size_t v = 0; v < 64; ++v) {
            std::vector<lwe_ciphertext> counter;
            for (int i = 0; i < 6; ++i)
                counter.push_back(lwe_ciphertext::trivial((v >> i) & 1, f.bp.lwe));
            auto r = hom_leq(counter, t, f.evk);
            ASSERT_EQ(decrypt(r, f.sk), v <= t ? 1 : 0) << "v=" << v << " t=" << t;
        }
    }
}

TEST(etm, leq_boundaries) {
    auto& f = fx();
    std::vector<lwe_ciphertext> zero;
    for (int i = 0; i < 6; ++i) zero.push_back(lwe_ciphertext::trivial(0, f.bp.lwe));
    EXPECT_EQ(decrypt(hom_leq(zero, 0, f.evk), f.sk), 1);  // 0 <= 0

    std::vector<lwe_ciphertext> val;  // t + 1 with t = 12
    for (int i = 0; i < 6; ++i) val.push_back(lwe_ciphertext::trivial((13 >> i) & 1, f.bp.lwe));
    EXPECT_EQ(decrypt(hom_leq(val, 12, f.evk), f.sk), 0);
}

TEST(etm, leq_width_check) {
    auto& f = fx();
    std::vector<lwe_ciphertext> counter(3, lwe_ciphertext::trivial(0, f.bp.lwe));
    EXPECT_THROW(hom_leq(counter, 8, f.evk), width_mismatch);
    EXPECT_NO_THROW(hom_leq(counter, 7, f.evk));
}

TEST(etm, end_to_end_matches_plain_threshold) {
    auto& f = fx();
    etm_config cfg{48, 12};
    for (int trial = 0; trial < 8; ++trial) {
        auto w = f.random_bits(48);
        auto w2 = w;
        std::size_t flips = f.rng.uniform_u32() % 25;
        for (std::size_t i = 0; i < flips; ++i) w2[(trial * 7 + i * 3) % 48] ^= 1;
        auto r = etm(f.enc(w), f.enc(w2), cfg, f.evk);
        EXPECT_EQ(raw_bytes(r).size(), f.bp.lwe.ciphertext_bytes());
        ASSERT_EQ(decrypt(r, f.sk), plain_hamming(w, w2) <= cfg.t ? 1 : 0)
            << "trial " << trial << " flips " << flips;
    }
}

TEST(etm, result_monotone_under_extra_flips) {
    auto& f = fx();
    etm_config cfg{32, 8};
    auto w = f.random_bits(32);
    bit_vector probe = w;
    int last = 1;
    // flip one new bit at a time; acceptance can only ever switch 1 -> 0
    for (int i = 0; i < 16; ++i) {
        probe[i] ^= 1;
        int r = decrypt(etm(f.enc(w), f.enc(probe), cfg, f.evk), f.sk);
        ASSERT_LE(r, last) << "flip " << i;
        ASSERT_EQ(r, plain_hamming(w, probe) <= cfg.t ? 1 : 0);
        last = r;
    }
}

TEST(etm, config_and_length_validation) {
    auto& f = fx();
    etm_config bad{16, 17};
    auto w = f.random_bits(16);
    EXPECT_THROW(etm(f.enc(w), f.enc(w), bad, f.evk), invalid_params);

    etm_config cfg{16, 4};
    auto short_w = f.random_bits(8);
    EXPECT_THROW(etm(f.enc(short_w), f.enc(w), cfg, f.evk), length_mismatch);
    EXPECT_THROW(hom_hamming(f.enc(w), f.enc(short_w), f.evk), length_mismatch);

    EXPECT_EQ(etm_config::with_default_threshold(2048).t, 512u);
}
