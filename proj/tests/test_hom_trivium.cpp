#include <gtest/gtest.h>

#include "btf/hom_trivium.hpp"

using namespace btf;

namespace {

struct fixture {
    bootstrap_params bp;
    lwe_secret_key sk;
    evaluation_key evk;
    entropy_source rng;

    explicit fixture(const bootstrap_params& p, std::uint64_t seed = 7)
        : bp(p), sk(make(p, seed)), evk(make_evk(sk, p, seed)), rng(seed + 2) {}

    static lwe_secret_key make(const bootstrap_params& p, std::uint64_t seed) {
        entropy_source r(seed);
        return keygen(p.lwe, r);
    }
    static evaluation_key make_evk(const lwe_secret_key& sk, const bootstrap_params& p,
                                   std::uint64_t seed) {
        entropy_source r(seed + 1);
        return make_evaluation_key(sk, p, r);
    }

    hom_trivium_state init_hom(const trivium_key& key, xor_policy pol) {
        auto pk_k = make_public_key(sk, 80, rng);
        auto dk = make_hom_decryption_key(key, pk_k);
        return efhe_init(encode_iv(key, bp.lwe), dk, evk, pol);
    }
};

fixture& toy() {
    static fixture f(params::toy());
    return f;
}

}  // namespace

TEST(hom_trivium, init_state_equals_plaintext_state) {
    auto& f = toy();
    for (int trial = 0; trial < 3; ++trial) {
        auto key = e_keygen(80, f.rng);
        auto hom = f.init_hom(key, xor_policy::lazy);
        auto plain = e_init(key);
        EXPECT_EQ(hom.rounds(), k_trivium_warmup_rounds);
        auto bits = hom.decrypt_state(f.sk);
        for (int i = 0; i < 288; ++i) ASSERT_EQ(bits[i], plain.bits()[i]) << "slot " << i;
    }
}

TEST(hom_trivium, all_zero_key_init) {
    auto& f = toy();
    trivium_key key{};  // all-zero key and iv
    auto hom = f.init_hom(key, xor_policy::lazy);
    auto plain = e_init(key);
    auto bits = hom.decrypt_state(f.sk);
    for (int i = 0; i < 288; ++i) ASSERT_EQ(bits[i], plain.bits()[i]);
}

TEST(hom_trivium, keystream_matches_plaintext) {
    auto& f = toy();
    auto key = e_keygen(80, f.rng);
    auto hom = f.init_hom(key, xor_policy::lazy);
    auto plain = e_init(key);
    auto enc = hom.keystream(96, f.evk);
    auto want = plain.keystream(96);
    for (int i = 0; i < 96; ++i) ASSERT_EQ(decrypt(enc[i], f.sk), want[i]) << "bit " << i;
}

TEST(hom_trivium, zero_length_keystream_keeps_state) {
    auto& f = toy();
    auto key = e_keygen(80, f.rng);
    auto hom = f.init_hom(key, xor_policy::lazy);
    auto before = hom.rounds();
    EXPECT_TRUE(hom.keystream(0, f.evk).empty());
    EXPECT_EQ(hom.rounds(), before);
}

TEST(hom_trivium, stream_splitting_in_lockstep) {
    auto& f = toy();
    auto key = e_keygen(80, f.rng);
    auto hom = f.init_hom(key, xor_policy::lazy);
    auto plain = e_init(key);
    auto part1 = hom.keystream(24, f.evk);
    auto part2 = hom.keystream(40, f.evk);
    auto want = plain.keystream(64);
    EXPECT_EQ(hom.rounds(), plain.rounds());
    EXPECT_EQ(hom.stream_position(), plain.stream_position());
    for (int i = 0; i < 24; ++i) ASSERT_EQ(decrypt(part1[i], f.sk), want[i]);
    for (int i = 0; i < 40; ++i) ASSERT_EQ(decrypt(part2[i], f.sk), want[24 + i]);
}

TEST(hom_trivium, lazy_and_pure_gate_policies_agree) {
    auto& f = toy();
    auto key = e_keygen(80, f.rng);
    auto lazy = f.init_hom(key, xor_policy::lazy);
    auto pure = f.init_hom(key, xor_policy::pure_gate);
    auto plain = e_init(key);

    auto lazy_bits = lazy.decrypt_state(f.sk);
    auto pure_bits = pure.decrypt_state(f.sk);
    for (int i = 0; i < 288; ++i) {
        ASSERT_EQ(lazy_bits[i], pure_bits[i]) << "state slot " << i;
        ASSERT_EQ(lazy_bits[i], plain.bits()[i]);
    }

    auto ks_lazy = lazy.keystream(32, f.evk);
    auto ks_pure = pure.keystream(32, f.evk);
    auto want = plain.keystream(32);
    for (int i = 0; i < 32; ++i) {
        ASSERT_EQ(decrypt(ks_lazy[i], f.sk), want[i]);
        ASSERT_EQ(decrypt(ks_pure[i], f.sk), want[i]);
    }
}

TEST(hom_trivium, transciphering_identity) {
    auto& f = toy();
    auto key = e_keygen(80, f.rng);
    auto hom = f.init_hom(key, xor_policy::lazy);
    auto plain = e_init(key);
    for (std::size_t len : {64u, 256u}) {
        bit_vector w(len);
        for (auto& b : w) b = std::uint8_t(f.rng.bit());
        auto kbar = plain.keystream(len);
        auto c = e_encrypt(w, kbar);

        auto pk_c = make_public_key(f.sk, len, f.rng);
        std::vector<lwe_ciphertext> enc_c;
        for (auto b : c) enc_c.push_back(pk_encrypt(b, pk_c));
        auto enc_kbar = hom.keystream(len, f.evk);
        auto enc_w = hom_stream_decrypt(enc_c, enc_kbar, f.evk);
        for (std::size_t i = 0; i < len; ++i)
            ASSERT_EQ(decrypt(enc_w[i], f.sk), w[i]) << "bit " << i;
    }
}

TEST(hom_trivium, hom_decrypt_with_zero_keystream_is_identity) {
    auto& f = toy();
    bit_vector c(32);
    for (auto& b : c) b = std::uint8_t(f.rng.bit());
    std::vector<lwe_ciphertext> enc_c, zeros;
    auto pk = make_public_key(f.sk, 32, f.rng);
    for (auto b : c) {
        enc_c.push_back(pk_encrypt(b, pk));
        zeros.push_back(lwe_ciphertext::trivial(0, f.bp.lwe));
    }
    auto out = hom_stream_decrypt(enc_c, zeros, f.evk);
    for (std::size_t i = 0; i < 32; ++i) ASSERT_EQ(decrypt(out[i], f.sk), c[i]);
}

TEST(hom_trivium, length_and_dimension_errors) {
    auto& f = toy();
    std::vector<lwe_ciphertext> a(4, lwe_ciphertext::trivial(0, f.bp.lwe));
    std::vector<lwe_ciphertext> b(5, lwe_ciphertext::trivial(0, f.bp.lwe));
    EXPECT_THROW(hom_stream_decrypt(a, b, f.evk), length_mismatch);

    hom_decryption_key dk;  // wrong size
    dk.bits = a;
    EXPECT_THROW(efhe_init(std::vector<lwe_ciphertext>(80), dk, f.evk), dimension_mismatch);
}

TEST(hom_trivium, state_snapshot_roundtrip) {
    auto& f = toy();
    auto key = e_keygen(80, f.rng);
    auto hom = f.init_hom(key, xor_policy::lazy);
    auto plain = e_init(key);
    (void)hom.keystream(16, f.evk);
    (void)plain.keystream(16);

    auto restored = hom_trivium_state::from_raw(hom.raw(), f.bp);
    EXPECT_EQ(restored.rounds(), hom.rounds());
    EXPECT_EQ(restored.policy(), hom.policy());
    auto enc = restored.keystream(32, f.evk);
    auto want = plain.keystream(32);
    for (int i = 0; i < 32; ++i) ASSERT_EQ(decrypt(enc[i], f.sk), want[i]);
}

TEST(hom_trivium, budget_triggered_refresh_still_correct) {
    // a params variant with a tiny safe margin forces parity_accumulate to
    // refresh mid-chain; results must not change
    auto bp = params::toy();
    bp.lwe.sigma = 8.8e-5;  // noisier key switch -> small budget
    fixture f(bp, 99);
    ASSERT_LT(bp.fresh_budget(), 12);
    ASSERT_GT(bp.fresh_budget(), 2);
    auto key = e_keygen(80, f.rng);
    auto hom = f.init_hom(key, xor_policy::lazy);
    auto plain = e_init(key);
    auto bits = hom.decrypt_state(f.sk);
    int mismatches = 0;
    for (int i = 0; i < 288; ++i) mismatches += bits[i] != plain.bits()[i];
    EXPECT_EQ(mismatches, 0);
}
