#ifndef BTF_FFT_HPP
#define BTF_FFT_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

namespace btf {

/// Spectrum of a length-N real polynomial under the negacyclic transform:
/// N/2 complex points (stored bit-reversed, which pointwise products never
/// notice), separate re/im arrays.
struct poly_spectrum {
    std::vector<double> re, im;

    explicit poly_spectrum(std::size_t m = 0) : re(m, 0.0), im(m, 0.0) {}

    std::size_t size() const { return re.size(); }

    void set_zero() {
        std::fill(re.begin(), re.end(), 0.0);
        std::fill(im.begin(), im.end(), 0.0);
    }

    /// this += x * y, complex pointwise.
    void add_mul(const poly_spectrum& x, const poly_spectrum& y) {
        const std::size_t m = size();
        const double* __restrict xr = x.re.data();
        const double* __restrict xi = x.im.data();
        const double* __restrict yr = y.re.data();
        const double* __restrict yi = y.im.data();
        double* __restrict zr = re.data();
        double* __restrict zi = im.data();
        for (std::size_t i = 0; i < m; ++i) {
            zr[i] += xr[i] * yr[i] - xi[i] * yi[i];
            zi[i] += xr[i] * yi[i] + xi[i] * yr[i];
        }
    }
};

namespace detail {

/// Round to nearest and reduce mod 2^32 in one step. Valid for |x| < 2^51,
/// far above any value formed here.
inline std::uint32_t round_to_torus(double x) {
    double y = x + 6755399441055744.0;  // 2^52 + 2^51
    return static_cast<std::uint32_t>(std::bit_cast<std::uint64_t>(y));
}

}  // namespace detail

/// Negacyclic FFT over Z[X]/(X^N + 1) with torus32 coefficients.
///
/// A real length-N sequence is folded to N/2 complex points and twisted by
/// odd 2N-th roots of unity, turning negacyclic convolution into pointwise
/// products of N/2-point DFTs. The forward pass is decimation-in-frequency
/// and leaves the spectrum bit-reversed; the inverse is decimation-in-time
/// and consumes it that way, so no reordering pass ever runs.
class negacyclic_engine {
public:
    explicit negacyclic_engine(std::uint32_t n) : n_(n), m_(n / 2) { build_tables(); }

    negacyclic_engine(const negacyclic_engine&) = delete;

    /// Shared per-dimension instance.
    static negacyclic_engine& for_dim(std::uint32_t n) {
        thread_local std::vector<std::unique_ptr<negacyclic_engine>> cache;
        for (auto& e : cache)
            if (e->n_ == n) return *e;
        cache.emplace_back(new negacyclic_engine(n));
        return *cache.back();
    }

    std::uint32_t dim() const { return n_; }
    std::size_t spectrum_size() const { return m_; }

    void forward_torus(const std::uint32_t* poly, poly_spectrum& out) const {
        double* __restrict re = out.re.data();
        double* __restrict im = out.im.data();
        for (std::size_t j = 0; j < m_; ++j) {
            const double x = static_cast<double>(static_cast<std::int32_t>(poly[j]));
            const double y = static_cast<double>(static_cast<std::int32_t>(poly[j + m_]));
            re[j] = x * twist_re_[j] - y * twist_im_[j];
            im[j] = x * twist_im_[j] + y * twist_re_[j];
        }
        dif(re, im);
    }

    void forward_digits(const std::int32_t* poly, poly_spectrum& out) const {
        double* __restrict re = out.re.data();
        double* __restrict im = out.im.data();
        for (std::size_t j = 0; j < m_; ++j) {
            const double x = static_cast<double>(poly[j]);
            const double y = static_cast<double>(poly[j + m_]);
            re[j] = x * twist_re_[j] - y * twist_im_[j];
            im[j] = x * twist_im_[j] + y * twist_re_[j];
        }
        dif(re, im);
    }

    poly_spectrum forward_torus(const std::uint32_t* poly) const {
        poly_spectrum s(m_);
        forward_torus(poly, s);
        return s;
    }

    /// Inverse transform of s (destroyed); rounds to the torus grid and
    /// adds into out.
    void inverse_add(poly_spectrum& s, std::uint32_t* out) const {
        double* __restrict re = s.re.data();
        double* __restrict im = s.im.data();
        dit(re, im);
        // untwist folded in with the 1/m normalization
        for (std::size_t j = 0; j < m_; ++j) {
            const double cr = re[j] * untwist_re_[j] + im[j] * untwist_im_[j];
            const double ci = im[j] * untwist_re_[j] - re[j] * untwist_im_[j];
            out[j] += detail::round_to_torus(cr);
            out[j + m_] += detail::round_to_torus(ci);
        }
    }

    /// Exact negacyclic product for small inputs; the quadratic reference
    /// the transform is tested against.
    static std::vector<std::uint32_t> schoolbook(const std::vector<std::uint32_t>& a,
                                                 const std::vector<std::uint32_t>& b) {
        const std::size_t n = a.size();
        std::vector<std::uint32_t> c(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i] == 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                std::uint32_t prod = a[i] * b[j];
                std::size_t k = i + j;
                if (k < n)
                    c[k] += prod;
                else
                    c[k - n] -= prod;
            }
        }
        return c;
    }

private:
    void build_tables() {
        twist_re_.resize(m_);
        twist_im_.resize(m_);
        untwist_re_.resize(m_);
        untwist_im_.resize(m_);
        const double inv_m = 1.0 / static_cast<double>(m_);
        for (std::size_t j = 0; j < m_; ++j) {
            double ang = M_PI * static_cast<double>(j) / static_cast<double>(n_);
            twist_re_[j] = std::cos(ang);
            twist_im_[j] = std::sin(ang);
            untwist_re_[j] = std::cos(ang) * inv_m;
            untwist_im_[j] = std::sin(ang) * inv_m;
        }
        // per-stage twiddles, forward sign; sizes m/2, m/4, ..., 1
        std::size_t half = m_ / 2;
        while (half >= 1) {
            std::vector<double> tr(half), ti(half);
            const std::size_t len = half * 2;
            for (std::size_t k = 0; k < half; ++k) {
                double ang = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(len);
                tr[k] = std::cos(ang);
                ti[k] = std::sin(ang);
            }
            stage_re_.push_back(std::move(tr));
            stage_im_.push_back(std::move(ti));
            half /= 2;
        }
    }

    /// Decimation in frequency: natural order in, bit-reversed out. The
    /// two shortest stages are fused into one multiply-free radix-4 pass.
    void dif(double* __restrict re, double* __restrict im) const {
        std::size_t stage = 0;
        for (std::size_t len = m_; len >= 8; len >>= 1, ++stage) {
            const std::size_t half = len >> 1;
            const double* __restrict wr = stage_re_[stage].data();
            const double* __restrict wi = stage_im_[stage].data();
            for (std::size_t base = 0; base < m_; base += len) {
                double* __restrict ru = re + base;
                double* __restrict iu = im + base;
                double* __restrict rv = ru + half;
                double* __restrict iv = iu + half;
                for (std::size_t j = 0; j < half; ++j) {
                    const double ur = ru[j], ui = iu[j];
                    const double vr = rv[j], vi = iv[j];
                    const double dr = ur - vr, di = ui - vi;
                    ru[j] = ur + vr;
                    iu[j] = ui + vi;
                    rv[j] = dr * wr[j] - di * wi[j];
                    iv[j] = dr * wi[j] + di * wr[j];
                }
            }
        }
        for (std::size_t b = 0; b < m_; b += 4) {
            const double u0r = re[b], u0i = im[b];
            const double u1r = re[b + 1], u1i = im[b + 1];
            const double u2r = re[b + 2], u2i = im[b + 2];
            const double u3r = re[b + 3], u3i = im[b + 3];
            // len 4: w in {1, -i}
            const double a0r = u0r + u2r, a0i = u0i + u2i;
            const double c0r = u0r - u2r, c0i = u0i - u2i;
            const double a1r = u1r + u3r, a1i = u1i + u3i;
            const double c1r = u1i - u3i, c1i = u3r - u1r;  // -i * (u1 - u3)
            // len 2
            re[b] = a0r + a1r;
            im[b] = a0i + a1i;
            re[b + 1] = a0r - a1r;
            im[b + 1] = a0i - a1i;
            re[b + 2] = c0r + c1r;
            im[b + 2] = c0i + c1i;
            re[b + 3] = c0r - c1r;
            im[b + 3] = c0i - c1i;
        }
    }

    /// Decimation in time: bit-reversed in, natural order out. Conjugate
    /// twiddles give the inverse transform (normalization lives in the
    /// untwist table). Mirrors dif: fused radix-4 head, then generic stages.
    void dit(double* __restrict re, double* __restrict im) const {
        for (std::size_t b = 0; b < m_; b += 4) {
            const double u0r = re[b], u0i = im[b];
            const double u1r = re[b + 1], u1i = im[b + 1];
            const double u2r = re[b + 2], u2i = im[b + 2];
            const double u3r = re[b + 3], u3i = im[b + 3];
            // len 2 on (u0,u1) and (u2,u3)
            const double p0r = u0r + u1r, p0i = u0i + u1i;
            const double p1r = u0r - u1r, p1i = u0i - u1i;
            const double p2r = u2r + u3r, p2i = u2i + u3i;
            const double p3r = u2r - u3r, p3i = u2i - u3i;
            // len 4: conjugate twiddles {1, +i}; t = i * p3
            const double t3r = -p3i, t3i = p3r;
            re[b] = p0r + p2r;
            im[b] = p0i + p2i;
            re[b + 2] = p0r - p2r;
            im[b + 2] = p0i - p2i;
            re[b + 1] = p1r + t3r;
            im[b + 1] = p1i + t3i;
            re[b + 3] = p1r - t3r;
            im[b + 3] = p1i - t3i;
        }
        std::size_t stage = stage_re_.size() - 3;
        for (std::size_t len = 8; len <= m_; len <<= 1) {
            const std::size_t half = len >> 1;
            const double* __restrict wr = stage_re_[stage].data();
            const double* __restrict wi = stage_im_[stage].data();
            --stage;
            for (std::size_t base = 0; base < m_; base += len) {
                double* __restrict ru = re + base;
                double* __restrict iu = im + base;
                double* __restrict rv = ru + half;
                double* __restrict iv = iu + half;
                for (std::size_t j = 0; j < half; ++j) {
                    const double tr = rv[j] * wr[j] + iv[j] * wi[j];
                    const double ti = iv[j] * wr[j] - rv[j] * wi[j];
                    const double ur = ru[j], ui = iu[j];
                    ru[j] = ur + tr;
                    iu[j] = ui + ti;
                    rv[j] = ur - tr;
                    iv[j] = ui - ti;
                }
            }
        }
    }

    std::size_t n_, m_;
    std::vector<double> twist_re_, twist_im_, untwist_re_, untwist_im_;
    std::vector<std::vector<double>> stage_re_, stage_im_;
};

}  // namespace btf

#endif
