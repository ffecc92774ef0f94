#ifndef BTF_WIRE_HPP
#define BTF_WIRE_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "btf/errors.hpp"
#include "btf/params.hpp"
#include "btf/serial.hpp"

namespace btf {

enum class channel : std::uint8_t {
    tp_to_c = 0,
    tp_to_s = 1,
    c_to_s = 2,
    s_to_c = 3,
    s_to_tp = 4,
};

/// Everything that can be held by a party or move on a channel. Wire
/// messages use a subset; sk and k never leave their owners.
enum class artifact : std::uint8_t {
    sk = 0,
    k = 1,
    pk_k = 2,
    pk_c = 3,
    evk = 4,
    dk = 5,
    e_dk_kprime = 6,
    iv = 7,
    k_prime = 8,
    c = 9,
    c_prime = 10,
    enc_w = 11,
    enc_w_prime = 12,
    enc_r = 13,
    result = 14,
};

enum class protocol_phase : std::uint8_t { kdp = 0, inp = 1, rs = 2, vs = 3 };

enum class auth_model : std::uint8_t { btf = 0, st_fhe = 1, orig_tc = 2 };

inline const char* channel_name(channel c) {
    switch (c) {
        case channel::tp_to_c: return "tp_to_c";
        case channel::tp_to_s: return "tp_to_s";
        case channel::c_to_s: return "c_to_s";
        case channel::s_to_c: return "s_to_c";
        default: return "s_to_tp";
    }
}

inline const char* artifact_name(artifact a) {
    switch (a) {
        case artifact::sk: return "sk";
        case artifact::k: return "k";
        case artifact::pk_k: return "pk_k";
        case artifact::pk_c: return "pk_c";
        case artifact::evk: return "evk";
        case artifact::dk: return "dk";
        case artifact::e_dk_kprime: return "E(dk,k')";
        case artifact::iv: return "iv";
        case artifact::k_prime: return "k'";
        case artifact::c: return "c";
        case artifact::c_prime: return "c'";
        case artifact::enc_w: return "Enc(w)";
        case artifact::enc_w_prime: return "Enc(w')";
        case artifact::enc_r: return "Enc(r)";
        default: return "r";
    }
}

inline const char* phase_name(protocol_phase p) {
    switch (p) {
        case protocol_phase::kdp: return "kdp";
        case protocol_phase::inp: return "inp";
        case protocol_phase::rs: return "rs";
        default: return "vs";
    }
}

inline const char* model_name(auth_model m) {
    switch (m) {
        case auth_model::btf: return "btf";
        case auth_model::st_fhe: return "st-fhe";
        default: return "orig-tc";
    }
}

inline auth_model model_by_name(const std::string& s) {
    if (s == "btf") return auth_model::btf;
    if (s == "st-fhe" || s == "st_fhe") return auth_model::st_fhe;
    if (s == "orig-tc" || s == "orig_tc") return auth_model::orig_tc;
    throw invalid_params("unknown model: " + s);
}

/// One framed protocol message. The secure flag marks traffic that the
/// deployment would wrap in TLS; the transport asserts ordered,
/// authenticated delivery for it (no extra bytes are modeled).
struct message {
    channel ch;
    artifact art;
    bool secure = false;
    bytes payload;
};

/// Frame: u32 length (of the rest), u8 channel, u8 artifact, u8 secure,
/// payload.
inline bytes encode_frame(const message& m) {
    byte_writer w;
    w.u32(static_cast<std::uint32_t>(3 + m.payload.size()));
    w.u8(static_cast<std::uint8_t>(m.ch));
    w.u8(static_cast<std::uint8_t>(m.art));
    w.u8(m.secure ? 1 : 0);
    bytes out = w.take();
    out.insert(out.end(), m.payload.begin(), m.payload.end());
    return out;
}

inline message decode_frame(const bytes& frame) {
    byte_reader r(frame);
    std::uint32_t len = r.u32();
    if (len + 4 != frame.size()) throw parse_error("frame length mismatch");
    message m;
    m.ch = static_cast<channel>(r.u8());
    m.art = static_cast<artifact>(r.u8());
    m.secure = r.u8() != 0;
    m.payload.assign(frame.begin() + 7, frame.end());
    return m;
}

/// The (channel, artifact) pairs each architecture is allowed to emit.
/// Any send outside its row is a protocol bug and raises channel_violation.
inline bool flow_allowed(auth_model m, channel ch, artifact a) {
    using ch_t = channel;
    using ar = artifact;
    switch (m) {
        case auth_model::btf:
            switch (ch) {
                case ch_t::tp_to_c: return a == ar::pk_k || a == ar::result;
                case ch_t::tp_to_s:
                    return a == ar::pk_c || a == ar::evk || a == ar::result;
                case ch_t::c_to_s:
                    return a == ar::iv || a == ar::k_prime || a == ar::e_dk_kprime ||
                           a == ar::c || a == ar::c_prime;
                case ch_t::s_to_c: return false;
                case ch_t::s_to_tp: return a == ar::enc_r;
            }
            return false;
        case auth_model::st_fhe:
            if (ch == ch_t::c_to_s)
                return a == ar::evk || a == ar::enc_w || a == ar::enc_w_prime;
            return ch == ch_t::s_to_c && a == ar::enc_r;
        case auth_model::orig_tc:
            if (ch == ch_t::c_to_s)
                return a == ar::pk_c || a == ar::evk || a == ar::dk || a == ar::iv ||
                       a == ar::c || a == ar::c_prime;
            return ch == ch_t::s_to_c && a == ar::enc_r;
    }
    return false;
}

struct ledger_entry {
    protocol_phase ph;
    channel ch;
    artifact art;
    std::uint64_t bytes;
};

/// Per-run byte accounting: one entry per sent message, payload bytes
/// exactly. Owned and appended by the transport.
class transmission_ledger {
public:
    transmission_ledger() = default;
    transmission_ledger(auth_model m, param_set p) : model_(m), params_(p) {}

    auth_model model() const { return model_; }
    param_set params() const { return params_; }
    const std::vector<ledger_entry>& entries() const { return entries_; }

    void append(ledger_entry e) { entries_.push_back(e); }

    std::uint64_t total(channel ch) const {
        std::uint64_t t = 0;
        for (const auto& e : entries_)
            if (e.ch == ch) t += e.bytes;
        return t;
    }

    std::uint64_t total(protocol_phase ph, channel ch) const {
        std::uint64_t t = 0;
        for (const auto& e : entries_)
            if (e.ph == ph && e.ch == ch) t += e.bytes;
        return t;
    }

    /// Setup stage = KDP + INP.
    std::uint64_t setup_total(channel ch) const {
        return total(protocol_phase::kdp, ch) + total(protocol_phase::inp, ch);
    }

    /// Multiset of (channel, artifact) sends, as sorted counts.
    std::map<std::pair<channel, artifact>, std::size_t> flow_multiset() const {
        std::map<std::pair<channel, artifact>, std::size_t> m;
        for (const auto& e : entries_) ++m[{e.ch, e.art}];
        return m;
    }

private:
    auth_model model_ = auth_model::btf;
    param_set params_ = param_set::custom;
    std::vector<ledger_entry> entries_;
};

/// Ordered message transport between the three parties. Implementations
/// move identical frame bytes; the ledger sees payload sizes only and is
/// therefore transport-agnostic.
class transport {
public:
    explicit transport(auth_model m, param_set p) : ledger_(m, p) {}
    virtual ~transport() = default;

    void send(protocol_phase ph, const message& m) {
        if (!flow_allowed(ledger_.model(), m.ch, m.art))
            throw channel_violation(std::string("artifact ") + artifact_name(m.art) +
                                    " not allowed on " + channel_name(m.ch));
        {
            std::lock_guard<std::mutex> lock(mu_);
            ledger_.append({ph, m.ch, m.art, m.payload.size()});
            frame_bytes_ += encode_frame(m).size();
        }
        do_send(m);
    }

    message recv(channel ch) { return do_recv(ch); }

    const transmission_ledger& ledger() const { return ledger_; }
    transmission_ledger& ledger() { return ledger_; }

    /// Total framed bytes moved; payload totals plus 7 per message.
    std::uint64_t frame_bytes() const { return frame_bytes_; }

protected:
    virtual void do_send(const message& m) = 0;
    virtual message do_recv(channel ch) = 0;

private:
    std::mutex mu_;
    transmission_ledger ledger_;
    std::uint64_t frame_bytes_ = 0;
};

/// Per-channel FIFO queues; frames are encoded and decoded so both
/// transports exercise the same byte path.
class inproc_transport : public transport {
public:
    using transport::transport;

protected:
    void do_send(const message& m) override {
        std::lock_guard<std::mutex> lock(mu_);
        queues_[static_cast<int>(m.ch)].push_back(encode_frame(m));
    }

    message do_recv(channel ch) override {
        std::lock_guard<std::mutex> lock(mu_);
        auto& q = queues_[static_cast<int>(ch)];
        if (q.empty())
            throw error(std::string("recv on empty channel ") + channel_name(ch));
        bytes frame = std::move(q.front());
        q.pop_front();
        return decode_frame(frame);
    }

private:
    std::mutex mu_;
    std::deque<bytes> queues_[5];
};

}  // namespace btf

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <thread>

namespace btf {

/// Local stream sockets, one socketpair per channel. Each channel has a
/// writer thread so a large frame (the evaluation key) cannot deadlock a
/// single-threaded protocol driver against the kernel buffer.
class socket_transport : public transport {
public:
    socket_transport(auth_model m, param_set p) : transport(m, p) {
        for (auto& ch : chans_) {
            int fds[2];
            if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
                throw error("socketpair failed");
            ch.wfd = fds[0];
            ch.rfd = fds[1];
            ch.writer = std::thread([&ch] { ch.run(); });
        }
    }

    ~socket_transport() override {
        for (auto& ch : chans_) {
            {
                std::lock_guard<std::mutex> lock(ch.mu);
                ch.closing = true;
            }
            ch.cv.notify_all();
            ch.writer.join();
            ::close(ch.wfd);
            ::close(ch.rfd);
        }
    }

protected:
    void do_send(const message& m) override {
        auto& ch = chans_[static_cast<int>(m.ch)];
        {
            std::lock_guard<std::mutex> lock(ch.mu);
            ch.pending.push_back(encode_frame(m));
        }
        ch.cv.notify_one();
    }

    message do_recv(channel c) override {
        auto& ch = chans_[static_cast<int>(c)];
        bytes hdr(4);
        read_exact(ch.rfd, hdr.data(), 4);
        std::uint32_t len = std::uint32_t(hdr[0]) | (std::uint32_t(hdr[1]) << 8) |
                            (std::uint32_t(hdr[2]) << 16) | (std::uint32_t(hdr[3]) << 24);
        bytes frame(4 + std::size_t(len));
        std::copy(hdr.begin(), hdr.end(), frame.begin());
        read_exact(ch.rfd, frame.data() + 4, len);
        return decode_frame(frame);
    }

private:
    static void read_exact(int fd, std::uint8_t* dst, std::size_t len) {
        std::size_t got = 0;
        while (got < len) {
            ssize_t r = ::read(fd, dst + got, len - got);
            if (r <= 0) throw error("socket read failed");
            got += static_cast<std::size_t>(r);
        }
    }

    struct chan {
        int wfd = -1, rfd = -1;
        std::thread writer;
        std::mutex mu;
        std::condition_variable cv;
        std::deque<bytes> pending;
        bool closing = false;

        void run() {
            for (;;) {
                bytes frame;
                {
                    std::unique_lock<std::mutex> lock(mu);
                    cv.wait(lock, [this] { return closing || !pending.empty(); });
                    if (pending.empty()) return;
                    frame = std::move(pending.front());
                    pending.pop_front();
                }
                std::size_t sent = 0;
                while (sent < frame.size()) {
                    ssize_t w = ::write(wfd, frame.data() + sent, frame.size() - sent);
                    if (w <= 0) return;
                    sent += static_cast<std::size_t>(w);
                }
            }
        }
    };

    chan chans_[5];
};

}  // namespace btf

#endif
