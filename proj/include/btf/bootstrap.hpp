#ifndef BTF_BOOTSTRAP_HPP
#define BTF_BOOTSTRAP_HPP

#include <cstdint>
#include <vector>

#include "btf/errors.hpp"
#include "btf/fft.hpp"
#include "btf/lwe.hpp"
#include "btf/params.hpp"
#include "btf/rng.hpp"
#include "btf/serial.hpp"
#include "btf/torus.hpp"

namespace btf {

using ring_poly = std::vector<std::uint32_t>;  // torus coefficients mod X^N + 1

namespace detail {

/// (X^a - 1) * p over Z[X]/(X^N + 1), a in [0, 2N).
inline void mul_by_xai_minus_one(ring_poly& out, const ring_poly& p, std::uint32_t a) {
    const std::uint32_t n = static_cast<std::uint32_t>(p.size());
    if (a == 0) {
        std::fill(out.begin(), out.end(), 0u);
        return;
    }
    if (a < n) {
        for (std::uint32_t i = 0; i < a; ++i) out[i] = -p[i - a + n] - p[i];
        for (std::uint32_t i = a; i < n; ++i) out[i] = p[i - a] - p[i];
    } else {
        const std::uint32_t aa = a - n;
        for (std::uint32_t i = 0; i < aa; ++i) out[i] = p[i - aa + n] - p[i];
        for (std::uint32_t i = aa; i < n; ++i) out[i] = -p[i - aa] - p[i];
    }
}

/// Nearest multiple of 1/(2N), as an index in [0, 2N).
inline std::uint32_t mod_switch(std::uint32_t two_n, std::uint32_t phase) {
    std::uint64_t interval = ((1ull << 63) / two_n) * 2;
    std::uint64_t half = interval / 2;
    std::uint64_t p64 = (static_cast<std::uint64_t>(phase) << 32) + half;
    return static_cast<std::uint32_t>(p64 / interval);
}

/// Balanced base-2^bits digit decomposition of a torus word, most
/// significant digit first, with rounding to levels*bits of precision.
struct gadget {
    std::uint32_t bits = 0, levels = 0;
    std::uint32_t offset = 0, mask = 0, half_base = 0;

    gadget() = default;
    gadget(std::uint32_t base_bits, std::uint32_t lv) : bits(base_bits), levels(lv) {
        mask = (1u << bits) - 1;
        half_base = 1u << (bits - 1);
        offset = 0;
        for (std::uint32_t i = 1; i <= levels; ++i)
            offset += half_base << (32 - i * bits);
        offset += 1u << (31 - levels * bits);  // rounding half
    }

    std::int32_t digit(std::uint32_t x_off, std::uint32_t level) const {
        return static_cast<std::int32_t>((x_off >> (32 - (level + 1) * bits)) & mask) -
               static_cast<std::int32_t>(half_base);
    }
};

}  // namespace detail

/// Ring-GSW encryption of one secret-key bit, kept in the Fourier domain.
struct trgsw_fft {
    std::vector<poly_spectrum> rows;  // 2*levels rows x 2 columns

    const poly_spectrum& at(std::size_t row, std::size_t col) const {
        return rows[row * 2 + col];
    }
};

/// Bootstrapping key (ring-GSW per key bit) plus key-switching key. The
/// coefficient-domain words are the canonical serialized form; the Fourier
/// form is rebuilt on construction and load.
class evaluation_key {
public:
    evaluation_key() = default;

    const bootstrap_params& bp() const { return bp_; }
    const std::vector<trgsw_fft>& bk() const { return bk_fft_; }
    const std::vector<std::uint32_t>& ksk_words() const { return ksk_; }

    double blind_rotate_var() const { return br_var_; }
    double key_switch_var() const { return ks_var_; }
    double fresh_var() const { return br_var_ + ks_var_; }

    std::size_t serialized_bytes() const { return (bk_.size() + ksk_.size()) * 4; }
    std::size_t bk_bytes() const { return bk_.size() * 4; }
    std::size_t ksk_bytes() const { return ksk_.size() * 4; }

    bytes raw() const {
        byte_writer w;
        for (auto v : bk_) w.u32(v);
        for (auto v : ksk_) w.u32(v);
        return w.take();
    }

    static evaluation_key from_raw(const bytes& data, const bootstrap_params& bp) {
        evaluation_key evk;
        evk.bp_ = bp;
        if (data.size() != bp.evk_bytes())
            throw parse_error("evaluation key payload has the wrong size");
        evk.bk_.resize(bp.bk_words());
        evk.ksk_.resize(bp.ksk_words());
        byte_reader r(data);
        for (auto& v : evk.bk_) v = r.u32();
        for (auto& v : evk.ksk_) v = r.u32();
        evk.finish();
        return evk;
    }

    friend evaluation_key make_evaluation_key(const lwe_secret_key& sk,
                                              const bootstrap_params& bp,
                                              entropy_source& rng);

private:
    void finish() {
        const auto n = bp_.lwe.n;
        const auto rows = 2 * bp_.bk_levels;
        const auto ring = bp_.ring_dim;
        auto& eng = negacyclic_engine::for_dim(ring);
        bk_fft_.resize(n);
        const std::uint32_t* p = bk_.data();
        for (std::uint32_t i = 0; i < n; ++i) {
            bk_fft_[i].rows.reserve(rows * 2);
            for (std::uint32_t r = 0; r < rows; ++r)
                for (int col = 0; col < 2; ++col) {
                    bk_fft_[i].rows.push_back(eng.forward_torus(p));
                    p += ring;
                }
        }
        br_var_ = [&] {
            double beta = double(1u << (bp_.bk_base_bits - 1));
            double eps = std::pow(2.0, -double(bp_.bk_levels * bp_.bk_base_bits + 1));
            double per = 2.0 * bp_.bk_levels * ring * beta * beta * bp_.bk_sigma * bp_.bk_sigma +
                         (1.0 + ring) * eps * eps;
            return bp_.lwe.n * per;
        }();
        ks_var_ = bp_.fresh_boot_var() - br_var_;
    }

    bootstrap_params bp_;
    std::vector<std::uint32_t> bk_;   // n * 2l * 2N words
    std::vector<std::uint32_t> ksk_;  // N * t * (n+1) words
    std::vector<trgsw_fft> bk_fft_;
    double br_var_ = 0.0, ks_var_ = 0.0;
};

inline evaluation_key make_evaluation_key(const lwe_secret_key& sk,
                                          const bootstrap_params& bp,
                                          entropy_source& rng) {
    if (sk.params().n != bp.lwe.n)
        throw invalid_params("secret key does not match the bootstrap parameters");
    bp.validate();

    const std::uint32_t n = bp.lwe.n;
    const std::uint32_t ring = bp.ring_dim;
    const std::uint32_t l = bp.bk_levels;
    auto& eng = negacyclic_engine::for_dim(ring);

    evaluation_key evk;
    evk.bp_ = bp;

    // ring key, used only here
    ring_poly ring_key(ring);
    for (auto& b : ring_key) b = rng.bit();
    poly_spectrum key_fft = eng.forward_torus(ring_key.data());

    // bootstrapping key: per LWE key bit, 2l ring-LWE rows with the bit on
    // the gadget diagonal
    evk.bk_.resize(bp.bk_words());
    std::uint32_t* out = evk.bk_.data();
    ring_poly a(ring), b(ring);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t bit = sk.bits()[i];
        for (std::uint32_t row = 0; row < 2 * l; ++row) {
            for (auto& v : a) v = rng.uniform_u32();
            // b = a * key + e
            std::fill(b.begin(), b.end(), 0u);
            {
                poly_spectrum prod(ring / 2);
                prod.add_mul(eng.forward_torus(a.data()), key_fft);
                eng.inverse_add(prod, b.data());
            }
            for (auto& v : b) v += gaussian_torus(rng, bp.bk_sigma).raw;
            if (bit) {
                const std::uint32_t h = 1u << (32 - ((row % l) + 1) * bp.bk_base_bits);
                if (row < l)
                    a[0] += h;
                else
                    b[0] += h;
            }
            std::copy(a.begin(), a.end(), out);
            out += ring;
            std::copy(b.begin(), b.end(), out);
            out += ring;
        }
    }

    // key-switching key: ring-key coefficients re-encrypted under the LWE key
    detail::gadget ks(bp.ks_base_bits, bp.ks_levels);
    evk.ksk_.resize(bp.ksk_words());
    std::uint32_t* kout = evk.ksk_.data();
    for (std::uint32_t i = 0; i < ring; ++i) {
        for (std::uint32_t j = 0; j < bp.ks_levels; ++j) {
            const std::uint32_t mu = ring_key[i] << (32 - (j + 1) * bp.ks_base_bits);
            lwe_ciphertext ct =
                sk_encrypt_mu(torus_element(mu), sk, bp.lwe.sigma, rng);
            for (std::uint32_t t = 0; t < n; ++t) kout[t] = ct.a[t].raw;
            kout[n] = ct.b.raw;
            kout += n + 1;
        }
    }

    evk.finish();
    return evk;
}

namespace detail {

struct blind_rotate_ws {
    ring_poly acc_a, acc_b, rot_a, rot_b;
    std::vector<std::int32_t> digits;
    poly_spectrum s0, s1, d;

    explicit blind_rotate_ws(std::uint32_t ring, std::uint32_t levels)
        : acc_a(ring), acc_b(ring), rot_a(ring), rot_b(ring),
          digits(std::size_t(2) * levels * ring), s0(ring / 2), s1(ring / 2), d(ring / 2) {}
};

/// Core loop: rotate the +-mu test vector by the phase and return the
/// extracted level-1 LWE sample (dimension N) encrypting mu * sign(phase).
inline lwe_ciphertext blind_rotate_extract(const lwe_ciphertext& ct, torus_element mu,
                                           const evaluation_key& evk) {
    const auto& bp = evk.bp();
    const std::uint32_t ring = bp.ring_dim;
    const std::uint32_t two_n = 2 * ring;
    const std::uint32_t l = bp.bk_levels;
    auto& eng = negacyclic_engine::for_dim(ring);
    gadget g(bp.bk_base_bits, l);
    blind_rotate_ws ws(ring, l);

    // test vector rotated by the body part
    const std::uint32_t bara_b = two_n - mod_switch(two_n, ct.b.raw);
    std::fill(ws.acc_a.begin(), ws.acc_a.end(), 0u);
    if (bara_b < ring) {
        for (std::uint32_t i = 0; i < bara_b; ++i) ws.acc_b[i] = -mu.raw;
        for (std::uint32_t i = bara_b; i < ring; ++i) ws.acc_b[i] = mu.raw;
    } else {
        const std::uint32_t r = bara_b - ring;
        for (std::uint32_t i = 0; i < r; ++i) ws.acc_b[i] = mu.raw;
        for (std::uint32_t i = r; i < ring; ++i) ws.acc_b[i] = -mu.raw;
    }

    // one CMUX per mask coordinate
    for (std::uint32_t i = 0; i < ct.dim(); ++i) {
        const std::uint32_t bara = mod_switch(two_n, ct.a[i].raw);
        if (bara == 0) continue;

        mul_by_xai_minus_one(ws.rot_a, ws.acc_a, bara);
        mul_by_xai_minus_one(ws.rot_b, ws.acc_b, bara);

        // decompose both polynomials into balanced digits, one level per pass
        for (std::uint32_t lv = 0; lv < l; ++lv) {
            const std::uint32_t sh = 32 - (lv + 1) * g.bits;
            const std::int32_t hb = static_cast<std::int32_t>(g.half_base);
            std::int32_t* __restrict da = &ws.digits[std::size_t(lv) * ring];
            std::int32_t* __restrict db = &ws.digits[std::size_t(l + lv) * ring];
            const std::uint32_t* __restrict ra = ws.rot_a.data();
            const std::uint32_t* __restrict rb = ws.rot_b.data();
            for (std::uint32_t j = 0; j < ring; ++j) {
                da[j] = static_cast<std::int32_t>(((ra[j] + g.offset) >> sh) & g.mask) - hb;
                db[j] = static_cast<std::int32_t>(((rb[j] + g.offset) >> sh) & g.mask) - hb;
            }
        }

        ws.s0.set_zero();
        ws.s1.set_zero();
        const trgsw_fft& bk = evk.bk()[i];
        for (std::uint32_t row = 0; row < 2 * l; ++row) {
            eng.forward_digits(&ws.digits[row * ring], ws.d);
            ws.s0.add_mul(ws.d, bk.at(row, 0));
            ws.s1.add_mul(ws.d, bk.at(row, 1));
        }
        eng.inverse_add(ws.s0, ws.acc_a.data());
        eng.inverse_add(ws.s1, ws.acc_b.data());
    }

    // sample extract at index 0
    lwe_ciphertext out;
    out.a.resize(ring);
    out.a[0] = torus_element(ws.acc_a[0]);
    for (std::uint32_t i = 1; i < ring; ++i)
        out.a[i] = torus_element(-ws.acc_a[ring - i]);
    out.b = torus_element(ws.acc_b[0]);
    out.noise_var = evk.blind_rotate_var();
    return out;
}

/// Level-1 (dimension N) to level-0 (dimension n) key switch.
inline lwe_ciphertext key_switch(const lwe_ciphertext& ct, const evaluation_key& evk) {
    const auto& bp = evk.bp();
    const std::uint32_t ring = bp.ring_dim;
    const std::uint32_t n = bp.lwe.n;
    const std::uint32_t t = bp.ks_levels;
    gadget g(bp.ks_base_bits, t);

    lwe_ciphertext out;
    out.a.assign(n, torus_element(0));
    out.b = ct.b;
    const std::uint32_t* ksk = evk.ksk_words().data();
    for (std::uint32_t i = 0; i < ring; ++i) {
        const std::uint32_t x = ct.a[i].raw + g.offset;
        for (std::uint32_t j = 0; j < t; ++j) {
            const std::int32_t d = g.digit(x, j);
            if (d == 0) continue;
            const std::uint32_t* row = ksk + (std::size_t(i) * t + j) * (n + 1);
            const std::uint32_t du = static_cast<std::uint32_t>(d);
            for (std::uint32_t k = 0; k < n; ++k) out.a[k].raw -= du * row[k];
            out.b.raw -= du * row[n];
        }
    }
    out.noise_var = ct.noise_var + evk.key_switch_var();
    return out;
}

}  // namespace detail

/// Output encodings of a refresh: gate domain {0, 1/4} or parity domain
/// {0, 1/2}. The parity domain makes XOR a plain ciphertext addition.
enum class bit_domain { gate, parity };

/// Bootstrap a sign decision: out encodes 1 iff phase(ct) lies in (0, 1/2).
inline lwe_ciphertext bootstrap_sign(const lwe_ciphertext& ct, bit_domain domain,
                                     const evaluation_key& evk) {
    const torus_element mu(domain == bit_domain::gate ? 0x20000000u : 0x40000000u);
    lwe_ciphertext lvl1 = detail::blind_rotate_extract(ct, mu, evk);
    lwe_ciphertext out = detail::key_switch(lvl1, evk);
    out.b += mu;  // shift {-mu, +mu} to {0, 2*mu}
    out.noise_var = evk.fresh_var();
    return out;
}

enum class gate_op { AND, XOR, NAND, OR };

inline const char* gate_name(gate_op op) {
    switch (op) {
        case gate_op::AND: return "AND";
        case gate_op::XOR: return "XOR";
        case gate_op::NAND: return "NAND";
        default: return "OR";
    }
}

/// Bootstrapped binary gate on gate-domain ciphertexts. Every output is
/// fresh: noise does not depend on the inputs.
inline lwe_ciphertext gate(gate_op op, const lwe_ciphertext& x, const lwe_ciphertext& y,
                           const evaluation_key& evk) {
    if (x.dim() != y.dim() || x.dim() != evk.bp().lwe.n)
        throw dimension_mismatch("gate operand dimension mismatch");
    lwe_ciphertext lin;
    switch (op) {
        case gate_op::AND:
            lin = lwe_add(x, y);
            lin.b -= torus_element(0x60000000u);  // x + y - 3/8
            break;
        case gate_op::OR:
            lin = lwe_add(x, y);
            lin.b -= torus_element(0x20000000u);  // x + y - 1/8
            break;
        case gate_op::NAND:
            lin = lwe_sub(lwe_ciphertext::trivial_mu(torus_element(0x60000000u), evk.bp().lwe), x);
            lin = lwe_sub(lin, y);  // 3/8 - x - y
            break;
        case gate_op::XOR:
            lin = lwe_scale(lwe_add(x, y), 2);
            lin.b -= torus_element(0x40000000u);  // 2(x + y) - 1/4
            break;
    }
    return bootstrap_sign(lin, bit_domain::gate, evk);
}

/// Plaintext-free negation of a gate-domain bit: 1/4 - x. Linear.
inline lwe_ciphertext lwe_not(const lwe_ciphertext& x) {
    lwe_ciphertext out;
    out.a.resize(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i) out.a[i] = -x.a[i];
    out.b = torus_element(k_encode_one) - x.b;
    out.noise_var = x.noise_var;
    return out;
}

/// sel ? a : b via two blind rotations sharing one key switch.
inline lwe_ciphertext mux(const lwe_ciphertext& sel, const lwe_ciphertext& a,
                          const lwe_ciphertext& b, const evaluation_key& evk) {
    if (sel.dim() != a.dim() || sel.dim() != b.dim() || sel.dim() != evk.bp().lwe.n)
        throw dimension_mismatch("mux operand dimension mismatch");
    const torus_element mu(0x20000000u);

    lwe_ciphertext lin1 = lwe_add(sel, a);
    lin1.b -= torus_element(0x60000000u);  // AND(sel, a)
    lwe_ciphertext u1 = detail::blind_rotate_extract(lin1, mu, evk);

    lwe_ciphertext lin2 = lwe_add(lwe_not(sel), b);
    lin2.b -= torus_element(0x60000000u);  // AND(!sel, b)
    lwe_ciphertext u2 = detail::blind_rotate_extract(lin2, mu, evk);

    lwe_ciphertext sum = lwe_add(u1, u2);
    sum.b += mu;
    lwe_ciphertext out = detail::key_switch(sum, evk);
    out.b += mu;
    out.noise_var = 2.0 * evk.blind_rotate_var() + evk.key_switch_var();
    return out;
}

/// Remaining linear additions this ciphertext can absorb before a refresh
/// is mandatory. Zero means refresh now.
inline int noise_budget(const lwe_ciphertext& ct, const evaluation_key& evk) {
    const double unit = evk.fresh_var();
    const double safe = (0.25 / 6.0) * (0.25 / 6.0);
    const double left = (safe - ct.noise_var) / unit;
    return left <= 0.0 ? 0 : static_cast<int>(left);
}

}  // namespace btf

#endif
