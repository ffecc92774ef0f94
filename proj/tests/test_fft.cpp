#include <gtest/gtest.h>

#include "btf/fft.hpp"
#include "btf/rng.hpp"

using namespace btf;

namespace {

// worst absolute coefficient difference mod 2^32, as a signed distance
std::uint32_t worst_error(const std::vector<std::uint32_t>& a,
                          const std::vector<std::uint32_t>& b) {
    std::uint32_t worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto d = static_cast<std::int32_t>(a[i] - b[i]);
        std::uint32_t ad = d < 0 ? static_cast<std::uint32_t>(-d) : static_cast<std::uint32_t>(d);
        worst = std::max(worst, ad);
    }
    return worst;
}

}  // namespace

TEST(fft, digit_times_torus_matches_schoolbook) {
    // digit ranges of the two gadget bases; wider digits mean larger
    // intermediate magnitudes and a small tolerated rounding slack
    struct case_t {
        int digit_bound;
        std::uint32_t tol;
    };
    for (std::uint32_t n : {256u, 1024u}) {
        for (auto [bound, tol] : {case_t{64, 0}, case_t{512, 2}}) {
            auto& eng = negacyclic_engine::for_dim(n);
            entropy_source rng(7 + n + bound);
            for (int trial = 0; trial < 5; ++trial) {
                std::vector<std::uint32_t> a(n), b(n);
                std::vector<std::int32_t> digs(n);
                for (auto& v : a) v = rng.uniform_u32();
                for (std::size_t i = 0; i < n; ++i) {
                    digs[i] = static_cast<int>(rng.uniform_u32() % (2 * bound)) - bound;
                    b[i] = static_cast<std::uint32_t>(digs[i]);
                }
                auto want = negacyclic_engine::schoolbook(b, a);
                std::vector<std::uint32_t> got(n, 0);
                poly_spectrum sa(n / 2), sd(n / 2);
                eng.forward_torus(a.data(), sa);
                eng.forward_digits(digs.data(), sd);
                poly_spectrum acc(n / 2);
                acc.add_mul(sd, sa);
                eng.inverse_add(acc, got.data());
                EXPECT_LE(worst_error(got, want), tol) << "n=" << n << " bound=" << bound;
            }
        }
    }
}

TEST(fft, binary_times_torus_matches_schoolbook) {
    auto& eng = negacyclic_engine::for_dim(1024);
    entropy_source rng(99);
    std::vector<std::uint32_t> key(1024), a(1024);
    for (auto& v : key) v = rng.bit();
    for (auto& v : a) v = rng.uniform_u32();
    auto want = negacyclic_engine::schoolbook(key, a);
    std::vector<std::uint32_t> got(1024, 0);
    poly_spectrum sa(512), sk(512);
    eng.forward_torus(a.data(), sa);
    eng.forward_torus(key.data(), sk);
    poly_spectrum acc(512);
    acc.add_mul(sk, sa);
    eng.inverse_add(acc, got.data());
    EXPECT_EQ(worst_error(got, want), 0u);
}

TEST(fft, negacyclic_wraparound_sign) {
    // (X^(n-1)) * (X) = X^n = -1
    const std::uint32_t n = 256;
    std::vector<std::uint32_t> a(n, 0), b(n, 0);
    a[n - 1] = 5;
    b[1] = 1;
    auto c = negacyclic_engine::schoolbook(a, b);
    EXPECT_EQ(c[0], static_cast<std::uint32_t>(-5));
    for (std::size_t i = 1; i < n; ++i) EXPECT_EQ(c[i], 0u);
}

TEST(fft, inverse_accumulates) {
    const std::uint32_t n = 256;
    auto& eng = negacyclic_engine::for_dim(n);
    entropy_source rng(3);
    std::vector<std::uint32_t> a(n);
    for (auto& v : a) v = rng.uniform_u32() % 1000;
    std::vector<std::int32_t> one(n, 0);
    one[0] = 1;
    std::vector<std::uint32_t> out = a;  // inverse_add must add on top
    poly_spectrum sa(n / 2), sone(n / 2);
    eng.forward_torus(a.data(), sa);
    eng.forward_digits(one.data(), sone);
    poly_spectrum acc(n / 2);
    acc.add_mul(sone, sa);
    eng.inverse_add(acc, out.data());
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(out[i], 2 * a[i]);
}
