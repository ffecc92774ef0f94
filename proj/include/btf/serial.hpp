#ifndef BTF_SERIAL_HPP
#define BTF_SERIAL_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "btf/errors.hpp"
#include "btf/lwe.hpp"
#include "btf/params.hpp"

namespace btf {

using bytes = std::vector<std::uint8_t>;

/// Little-endian byte writer.
class byte_writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) {
        u8(v & 0xFF);
        u8(v >> 8);
    }
    void u32(std::uint32_t v) {
        u8(v & 0xFF);
        u8((v >> 8) & 0xFF);
        u8((v >> 16) & 0xFF);
        u8((v >> 24) & 0xFF);
    }
    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v));
        u32(static_cast<std::uint32_t>(v >> 32));
    }
    void raw(const void* p, std::size_t len) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + len);
    }
    bytes take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    bytes buf_;
};

class byte_reader {
public:
    explicit byte_reader(const bytes& b) : buf_(b) {}

    std::uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }
    std::uint16_t u16() {
        std::uint16_t v = u8();
        return static_cast<std::uint16_t>(v | (u16_hi() << 8));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = std::uint32_t(buf_[pos_]) | (std::uint32_t(buf_[pos_ + 1]) << 8) |
                          (std::uint32_t(buf_[pos_ + 2]) << 16) |
                          (std::uint32_t(buf_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t lo = u32();
        return lo | (std::uint64_t(u32()) << 32);
    }
    void raw(void* p, std::size_t len) {
        need(len);
        std::memcpy(p, buf_.data() + pos_, len);
        pos_ += len;
    }
    std::size_t remaining() const { return buf_.size() - pos_; }
    bool done() const { return pos_ == buf_.size(); }

private:
    std::uint16_t u16_hi() { return u8(); }
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw parse_error("truncated buffer");
    }
    const bytes& buf_;
    std::size_t pos_ = 0;
};

// --- raw (headerless) encodings; these byte counts are what the ledger
// --- records and what the size assertions check.

inline void put_ciphertext(byte_writer& w, const lwe_ciphertext& ct) {
    for (const auto& t : ct.a) w.u32(t.raw);
    w.u32(ct.b.raw);
}

inline lwe_ciphertext get_ciphertext(byte_reader& r, const lwe_params& p,
                                     double var_estimate) {
    lwe_ciphertext ct;
    ct.a.resize(p.n);
    for (auto& t : ct.a) t = torus_element(r.u32());
    ct.b = torus_element(r.u32());
    ct.noise_var = var_estimate;
    return ct;
}

inline bytes raw_bytes(const lwe_ciphertext& ct) {
    byte_writer w;
    put_ciphertext(w, ct);
    return w.take();
}

inline bytes raw_bytes(const public_key_set& pk) {
    byte_writer w;
    for (const auto& s : pk.samples()) put_ciphertext(w, s);
    return w.take();
}

inline bytes raw_bytes(const std::vector<lwe_ciphertext>& cts) {
    byte_writer w;
    for (const auto& ct : cts) put_ciphertext(w, ct);
    return w.take();
}

/// Secret keys serialize as packed bits, LSB of byte 0 first.
inline bytes raw_bytes(const lwe_secret_key& sk) {
    bytes out((sk.params().n + 7) / 8, 0);
    for (std::size_t i = 0; i < sk.params().n; ++i)
        if (sk.bits()[i]) out[i / 8] |= std::uint8_t(1u << (i % 8));
    return out;
}

inline std::vector<lwe_ciphertext> parse_ciphertexts(const bytes& b, const lwe_params& p,
                                                     double var_estimate) {
    if (b.size() % p.ciphertext_bytes() != 0)
        throw parse_error("byte length is not a multiple of the ciphertext size");
    byte_reader r(b);
    std::vector<lwe_ciphertext> out;
    out.reserve(b.size() / p.ciphertext_bytes());
    while (!r.done()) out.push_back(get_ciphertext(r, p, var_estimate));
    return out;
}

// --- file container: 8-byte header then the raw payload.

enum class artifact_tag : std::uint8_t {
    ciphertext = 0x01,
    secret_key = 0x02,
    public_key_set = 0x03,
    evaluation_key = 0x04,
    hom_decryption_key = 0x05,
    trivium_key = 0x06,
    session_key = 0x07,
    ciphertext_vector = 0x08,
    hom_state = 0x09,
};

constexpr std::size_t k_container_header_bytes = 8;

inline bytes wrap_container(param_set id, artifact_tag tag, const bytes& payload) {
    byte_writer w;
    w.raw("BTF1", 4);
    w.u8(static_cast<std::uint8_t>(id));
    w.u8(static_cast<std::uint8_t>(tag));
    w.u16(0);  // reserved
    bytes out = w.take();
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

struct container {
    param_set id;
    artifact_tag tag;
    bytes payload;
};

inline container unwrap_container(const bytes& file) {
    if (file.size() < k_container_header_bytes || std::memcmp(file.data(), "BTF1", 4) != 0)
        throw parse_error("bad container magic");
    container c;
    c.id = static_cast<param_set>(file[4]);
    c.tag = static_cast<artifact_tag>(file[5]);
    c.payload.assign(file.begin() + k_container_header_bytes, file.end());
    return c;
}

inline void write_file(const std::string& path, const bytes& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
    if (!f) throw error("write failed: " + path);
}

inline bytes read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw error("cannot open for reading: " + path);
    auto len = f.tellg();
    f.seekg(0);
    bytes data(static_cast<std::size_t>(len));
    f.read(reinterpret_cast<char*>(data.data()), len);
    if (!f) throw error("read failed: " + path);
    return data;
}

}  // namespace btf

#endif
