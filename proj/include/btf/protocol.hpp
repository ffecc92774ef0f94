#ifndef BTF_PROTOCOL_HPP
#define BTF_PROTOCOL_HPP

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "btf/bootstrap.hpp"
#include "btf/errors.hpp"
#include "btf/etm.hpp"
#include "btf/hom_trivium.hpp"
#include "btf/lwe.hpp"
#include "btf/trivium.hpp"
#include "btf/wire.hpp"

namespace btf {

/// Session key for the double encryption of dk: a fresh pad as long as the
/// serialized dk. Its keystream is the pad itself.
struct session_key {
    bytes pad;
};

inline session_key make_session_key(std::size_t dk_bytes, entropy_source& rng) {
    session_key k;
    k.pad.resize(dk_bytes);
    for (auto& b : k.pad) b = std::uint8_t(rng.uniform_u32() & 0xFF);
    return k;
}

/// Stream-cipher layer over the serialized dk; involutive, no expansion.
inline bytes double_encrypt(const bytes& dk_raw, const session_key& kp) {
    if (dk_raw.size() != kp.pad.size())
        throw length_mismatch("session key does not match the dk length");
    bytes out(dk_raw.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = dk_raw[i] ^ kp.pad[i];
    return out;
}

/// Wall-clock per-operation log, keyed by operation label.
class timing_log {
public:
    void add(protocol_phase ph, const std::string& op, double seconds) {
        entries_.push_back({ph, op, seconds});
    }

    double total(protocol_phase ph) const {
        double t = 0;
        for (const auto& e : entries_)
            if (e.ph == ph) t += e.seconds;
        return t;
    }

    double op_total(const std::string& op) const {
        double t = 0;
        for (const auto& e : entries_)
            if (e.op == op) t += e.seconds;
        return t;
    }

    struct entry {
        protocol_phase ph;
        std::string op;
        double seconds;
    };
    const std::vector<entry>& entries() const { return entries_; }

private:
    std::vector<entry> entries_;
};

namespace detail {

class stopwatch {
public:
    stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

struct protocol_config {
    bootstrap_params bp = params::tfhe128();
    std::size_t l_w = 64;
    std::size_t threshold = 16;  // max accepted Hamming distance
    xor_policy policy = xor_policy::lazy;
    bool defer_init = false;  // key distribution only; no cipher initialization
    std::uint64_t seed = 1;

    static protocol_config make(const bootstrap_params& bp, std::size_t l_w,
                                std::uint64_t seed) {
        protocol_config cfg;
        cfg.bp = bp;
        cfg.l_w = l_w;
        cfg.threshold = l_w / 4;
        cfg.seed = seed;
        return cfg;
    }

    etm_config etm() const { return etm_config{l_w, threshold}; }
};

/// Common session surface so the harness can drive any of the three
/// architectures uniformly.
class session {
public:
    virtual ~session() = default;
    virtual void setup() = 0;
    virtual void register_template(const bit_vector& w) = 0;
    virtual int verify(const bit_vector& w_prime) = 0;
    virtual const transmission_ledger& ledger() const = 0;
    virtual const timing_log& timings() const = 0;
};

// ---------------------------------------------------------------------------
// BTF: client / server / trusted party
// ---------------------------------------------------------------------------

/// Generates and holds the FHE key set; decrypts nothing but the final
/// result bit.
class btf_trusted_party {
public:
    btf_trusted_party(const protocol_config& cfg, entropy_source rng)
        : cfg_(cfg), rng_(std::move(rng)) {}

    void kdp_generate(timing_log& tl) {
        detail::stopwatch sw;
        sk_ = keygen(cfg_.bp.lwe, rng_);
        evk_ = make_evaluation_key(*sk_, cfg_.bp, rng_);
        tl.add(protocol_phase::kdp, "Enc.KeyGen", sw.seconds());
        held_ = {artifact::sk, artifact::evk};
    }

    void kdp_distribute(transport& t, std::size_t n_clients) {
        for (std::size_t i = 0; i < n_clients; ++i) {
            auto pk_k = make_public_key(*sk_, 80, rng_);
            t.send(protocol_phase::kdp,
                   {channel::tp_to_c, artifact::pk_k, true, raw_bytes(pk_k)});
        }
        auto pk_c = make_public_key(*sk_, cfg_.l_w, rng_);
        t.send(protocol_phase::kdp, {channel::tp_to_s, artifact::pk_c, true, raw_bytes(pk_c)});
        t.send(protocol_phase::kdp, {channel::tp_to_s, artifact::evk, true, evk_->raw()});
    }

    /// Issue a fresh single-use sample batch; the public key set is global,
    /// so one reissue serves whichever client is active.
    void reissue_pk_c(transport& t, protocol_phase ph, std::size_t count) {
        auto pk_c = make_public_key(*sk_, count, rng_);
        t.send(ph, {channel::tp_to_s, artifact::pk_c, true, raw_bytes(pk_c)});
    }

    /// Receive Enc(r), decrypt, notify client and server.
    int vs_decrypt_and_notify(transport& t, timing_log& tl) {
        message m = t.recv(channel::s_to_tp);
        auto cts = parse_ciphertexts(m.payload, cfg_.bp.lwe, cfg_.bp.fresh_boot_var());
        if (cts.size() != 1) throw parse_error("expected a single result ciphertext");
        detail::stopwatch sw;
        int r = decrypt(cts[0], *sk_);
        tl.add(protocol_phase::vs, "Dec(Enc(r),sk)", sw.seconds());
        bytes rb{static_cast<std::uint8_t>(r)};
        t.send(protocol_phase::vs, {channel::tp_to_c, artifact::result, true, rb});
        t.send(protocol_phase::vs, {channel::tp_to_s, artifact::result, true, rb});
        return r;
    }

    const std::set<artifact>& held() const { return held_; }

    /// Test-oracle access; protocol code of other parties never touches it.
    const lwe_secret_key& secret_key() const { return *sk_; }
    const evaluation_key& evk() const { return *evk_; }

    void save_state(byte_writer& w) const {
        bytes skb = raw_bytes(*sk_);
        w.u32(static_cast<std::uint32_t>(skb.size()));
        w.raw(skb.data(), skb.size());
        bytes evkb = evk_->raw();
        w.u64(evkb.size());
        w.raw(evkb.data(), evkb.size());
    }

    void restore_state(byte_reader& r) {
        bytes skb(r.u32());
        r.raw(skb.data(), skb.size());
        std::vector<std::uint8_t> bits(cfg_.bp.lwe.n);
        for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (skb[i / 8] >> (i % 8)) & 1;
        sk_.emplace(cfg_.bp.lwe, std::move(bits));
        bytes evkb(static_cast<std::size_t>(r.u64()));
        r.raw(evkb.data(), evkb.size());
        evk_ = evaluation_key::from_raw(evkb, cfg_.bp);
        held_ = {artifact::sk, artifact::evk};
    }

    void reseed(std::uint64_t seed) { rng_ = entropy_source(seed); }

private:
    protocol_config cfg_;
    entropy_source rng_;
    std::optional<lwe_secret_key> sk_;
    std::optional<evaluation_key> evk_;
    std::set<artifact> held_;
};

/// Holds only the lightweight symmetric key; all FHE material it touches
/// is transient.
class btf_client {
public:
    btf_client(const protocol_config& cfg, entropy_source rng)
        : cfg_(cfg), rng_(std::move(rng)) {}

    void kdp(transport& t, timing_log& tl) {
        message m = t.recv(channel::tp_to_c);
        public_key_set pk_k(cfg_.bp.lwe,
                            parse_ciphertexts(m.payload, cfg_.bp.lwe,
                                              cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma));

        key_ = e_keygen(80, rng_);

        detail::stopwatch sw_dk;
        hom_decryption_key dk = make_hom_decryption_key(*key_, pk_k);
        tl.add(protocol_phase::kdp, "Enc(k,pk_k)", sw_dk.seconds());

        bytes dk_raw = raw_bytes(dk.bits);
        session_key kp = make_session_key(dk_raw.size(), rng_);

        detail::stopwatch sw_de;
        bytes wrapped = double_encrypt(dk_raw, kp);
        tl.add(protocol_phase::kdp, "E(dk,k')", sw_de.seconds());

        t.send(protocol_phase::kdp, {channel::c_to_s, artifact::e_dk_kprime, false, wrapped});
        bytes ivb(key_->iv.begin(), key_->iv.end());
        t.send(protocol_phase::kdp, {channel::c_to_s, artifact::iv, true, ivb});
        t.send(protocol_phase::kdp, {channel::c_to_s, artifact::k_prime, true, kp.pad});
        held_ = {artifact::k, artifact::iv};
    }

    void inp(timing_log& tl) {
        detail::stopwatch sw;
        state_ = e_init(*key_);
        tl.add(protocol_phase::inp, "E.Init", sw.seconds());
        kbar_ = state_->keystream(cfg_.l_w);
    }

    void rs_send(transport& t, const bit_vector& w, timing_log& tl) {
        if (!state_) throw missing_key("client cipher not initialized");
        if (w.size() != cfg_.l_w) throw length_mismatch("feature length != l_w");
        bit_vector kbar = take_keystream(tl);
        detail::stopwatch sw;
        bit_vector c = e_encrypt(w, kbar);
        tl.add(protocol_phase::rs, "E(w,kbar)", sw.seconds());
        t.send(protocol_phase::rs, {channel::c_to_s, artifact::c, false, bits_to_bytes(c)});
    }

    void vs_send(transport& t, const bit_vector& w_prime, timing_log& tl) {
        if (!state_) throw missing_key("client cipher not initialized");
        if (w_prime.size() != cfg_.l_w) throw length_mismatch("probe length != l_w");
        bit_vector kbar = take_keystream(tl);
        bit_vector c = e_encrypt(w_prime, kbar);
        t.send(protocol_phase::vs, {channel::c_to_s, artifact::c_prime, false, bits_to_bytes(c)});
    }

    int vs_result(transport& t) {
        message m = t.recv(channel::tp_to_c);
        if (!m.secure) throw channel_violation("result notification must be authenticated");
        return m.payload.at(0);
    }

    std::uint64_t cipher_steps() const { return state_ ? state_->rounds() : 0; }
    const std::set<artifact>& held() const { return held_; }
    const trivium_key& symmetric_key() const { return *key_; }

    void save_state(byte_writer& w) const {
        w.raw(key_->k.data(), 10);
        w.raw(key_->iv.data(), 10);
        w.u8(state_ ? 1 : 0);
        if (state_) {
            auto st = state_->raw();
            w.raw(st.data(), st.size());
        }
        w.u32(static_cast<std::uint32_t>(kbar_.size()));
        auto packed = bits_to_bytes(kbar_);
        w.raw(packed.data(), packed.size());
    }

    void restore_state(byte_reader& r, std::uint64_t reseed) {
        trivium_key key;
        r.raw(key.k.data(), 10);
        r.raw(key.iv.data(), 10);
        key_ = key;
        if (r.u8()) {
            std::vector<std::uint8_t> st(52);
            r.raw(st.data(), st.size());
            state_ = trivium_state::from_raw(st);
        }
        std::uint32_t nbits = r.u32();
        std::vector<std::uint8_t> packed((nbits + 7) / 8);
        r.raw(packed.data(), packed.size());
        kbar_ = bytes_to_bits(packed, nbits);
        held_ = {artifact::k, artifact::iv};
        rng_ = entropy_source(reseed);
    }

private:
    bit_vector take_keystream(timing_log& tl) {
        if (kbar_.size() < cfg_.l_w) {
            detail::stopwatch sw;
            auto more = state_->keystream(cfg_.l_w - kbar_.size());
            tl.add(protocol_phase::vs, "E.KeyStream", sw.seconds());
            kbar_.insert(kbar_.end(), more.begin(), more.end());
        }
        bit_vector out(kbar_.begin(), kbar_.begin() + cfg_.l_w);
        kbar_.erase(kbar_.begin(), kbar_.begin() + cfg_.l_w);
        return out;
    }

    protocol_config cfg_;
    entropy_source rng_;
    std::optional<trivium_key> key_;
    std::optional<trivium_state> state_;
    bit_vector kbar_;
    std::set<artifact> held_;
};

/// Stores the global public material, per-client homomorphic cipher state
/// and templates. Never sees a symmetric or secret key in the clear.
class btf_server {
public:
    explicit btf_server(const protocol_config& cfg) : cfg_(cfg) {}

    void kdp(transport& t, std::size_t n_clients, timing_log& tl) {
        message mp = t.recv(channel::tp_to_s);
        pk_c_.emplace(cfg_.bp.lwe, parse_ciphertexts(mp.payload, cfg_.bp.lwe,
                                                     cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma));
        message me = t.recv(channel::tp_to_s);
        evk_ = evaluation_key::from_raw(me.payload, cfg_.bp);
        held_ = {artifact::pk_c, artifact::evk};

        for (std::size_t id = 0; id < n_clients; ++id) {
            client_record rec;
            message m_dk = t.recv(channel::c_to_s);
            message m_iv = t.recv(channel::c_to_s);
            message m_kp = t.recv(channel::c_to_s);
            if (m_dk.art != artifact::e_dk_kprime || m_iv.art != artifact::iv ||
                m_kp.art != artifact::k_prime)
                throw channel_violation("unexpected key-distribution message order");
            if (!m_iv.secure || !m_kp.secure)
                throw channel_violation("iv and k' must arrive on the secure channel");

            detail::stopwatch sw;
            session_key kp{m_kp.payload};
            bytes dk_raw = double_encrypt(m_dk.payload, kp);  // involution strips the layer
            tl.add(protocol_phase::kdp, "E^-1(E(dk,k'),k')", sw.seconds());

            rec.dk.bits = parse_ciphertexts(dk_raw, cfg_.bp.lwe,
                                            cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma);
            if (rec.dk.bits.size() != 80) throw parse_error("dk must hold 80 ciphertexts");
            std::copy(m_iv.payload.begin(), m_iv.payload.end(), rec.iv.iv.begin());
            rec.kp = std::move(kp);
            clients_[id] = std::move(rec);
        }
        held_.insert(artifact::dk);
        held_.insert(artifact::iv);
        held_.insert(artifact::k_prime);
    }

    void inp(std::size_t id, timing_log& tl) {
        auto& rec = at(id);
        detail::stopwatch sw_iv;
        auto ct_iv = encode_iv(rec.iv, cfg_.bp.lwe);
        tl.add(protocol_phase::inp, "Enc(IV)", sw_iv.seconds());

        detail::stopwatch sw_init;
        rec.hom = efhe_init(ct_iv, rec.dk, *evk_, cfg_.policy);
        tl.add(protocol_phase::inp, "E_FHE.Init", sw_init.seconds());

        detail::stopwatch sw_ks;
        rec.enc_kbar = rec.hom->keystream(cfg_.l_w, *evk_);
        tl.add(protocol_phase::inp, "E_FHE.KeyStream", sw_ks.seconds());
    }

    /// k' is session material for the setup stage only.
    void drop_session_keys() {
        for (auto& [id, rec] : clients_) rec.kp.reset();
        held_.erase(artifact::k_prime);
    }

    void rs(transport& t, std::size_t id, timing_log& tl) {
        auto& rec = at(id);
        if (!rec.hom) throw missing_key("homomorphic cipher not initialized");
        message m = t.recv(channel::c_to_s);
        bit_vector c = bytes_to_bits(m.payload, cfg_.l_w);

        detail::stopwatch sw_enc;
        std::vector<lwe_ciphertext> enc_c = encrypt_bits(c);
        tl.add(protocol_phase::rs, "Enc(c,pk_c)", sw_enc.seconds());

        auto enc_kbar = take_enc_keystream(rec, protocol_phase::rs, tl);
        detail::stopwatch sw_einv;
        rec.tmpl = hom_stream_decrypt(enc_c, enc_kbar, *evk_);
        tl.add(protocol_phase::rs, "Eval(E^-1)", sw_einv.seconds());
        held_.insert(artifact::enc_w);
    }

    void vs(transport& t, std::size_t id, timing_log& tl) {
        auto& rec = at(id);
        if (!rec.hom) throw missing_key("homomorphic cipher not initialized");
        if (!rec.tmpl) throw no_template("no registered template for this client");
        message m = t.recv(channel::c_to_s);
        bit_vector c = bytes_to_bits(m.payload, cfg_.l_w);

        detail::stopwatch sw_enc;
        std::vector<lwe_ciphertext> enc_c = encrypt_bits(c);
        tl.add(protocol_phase::vs, "Enc(c,pk_c)", sw_enc.seconds());

        auto enc_kbar = take_enc_keystream(rec, protocol_phase::vs, tl);
        detail::stopwatch sw_einv;
        auto enc_w_prime = hom_stream_decrypt(enc_c, enc_kbar, *evk_);
        tl.add(protocol_phase::vs, "Eval(E^-1)", sw_einv.seconds());

        detail::stopwatch sw_etm;
        lwe_ciphertext enc_r = etm(*rec.tmpl, enc_w_prime, cfg_.etm(), *evk_);
        tl.add(protocol_phase::vs, "Eval(ETM)", sw_etm.seconds());
        t.send(protocol_phase::vs, {channel::s_to_tp, artifact::enc_r, false, raw_bytes(enc_r)});
    }

    int vs_result(transport& t) {
        message m = t.recv(channel::tp_to_s);
        if (!m.secure) throw channel_violation("result notification must be authenticated");
        return m.payload.at(0);
    }

    void accept_pk_c(transport& t) {
        message m = t.recv(channel::tp_to_s);
        if (m.art != artifact::pk_c) throw channel_violation("expected a pk_c reissue");
        pk_c_.emplace(cfg_.bp.lwe, parse_ciphertexts(m.payload, cfg_.bp.lwe,
                                                     cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma));
    }

    std::size_t pk_c_remaining() const { return pk_c_ ? pk_c_->remaining() : 0; }
    std::uint64_t cipher_steps(std::size_t id) const {
        auto it = clients_.find(id);
        return it != clients_.end() && it->second.hom ? it->second.hom->rounds() : 0;
    }
    const std::set<artifact>& held() const { return held_; }
    const std::vector<lwe_ciphertext>& stored_template(std::size_t id) const {
        auto it = clients_.find(id);
        if (it == clients_.end() || !it->second.tmpl)
            throw no_template("no registered template for this client");
        return *it->second.tmpl;
    }

    /// Snapshot for the state directory. Consumed public-key samples are
    /// dropped: only the unconsumed tail is stored, so single use survives
    /// a save/load cycle. The evaluation key is stored once, by the
    /// trusted party.
    void save_state(byte_writer& w) const {
        std::uint32_t remaining =
            pk_c_ ? static_cast<std::uint32_t>(pk_c_->remaining()) : 0;
        w.u32(remaining);
        if (pk_c_)
            for (std::size_t i = pk_c_->used_count(); i < pk_c_->size(); ++i)
                put_ciphertext(w, pk_c_->samples()[i]);
        w.u32(static_cast<std::uint32_t>(clients_.size()));
        for (const auto& [id, rec] : clients_) {
            w.u32(static_cast<std::uint32_t>(id));
            for (const auto& ct : rec.dk.bits) put_ciphertext(w, ct);
            w.raw(rec.iv.iv.data(), 10);
            w.u8(rec.hom ? 1 : 0);
            if (rec.hom) {
                bytes h = rec.hom->raw();
                w.u64(h.size());
                w.raw(h.data(), h.size());
            }
            w.u32(static_cast<std::uint32_t>(rec.enc_kbar.size()));
            for (const auto& ct : rec.enc_kbar) put_ciphertext(w, ct);
            w.u8(rec.tmpl ? 1 : 0);
            if (rec.tmpl) {
                w.u32(static_cast<std::uint32_t>(rec.tmpl->size()));
                for (const auto& ct : *rec.tmpl) put_ciphertext(w, ct);
            }
        }
    }

    void restore_state(byte_reader& r, const evaluation_key& evk) {
        const auto& p = cfg_.bp.lwe;
        const double fresh = p.sigma * p.sigma;
        evk_ = evk;
        std::uint32_t remaining = r.u32();
        std::vector<lwe_ciphertext> samples;
        samples.reserve(remaining);
        for (std::uint32_t i = 0; i < remaining; ++i)
            samples.push_back(get_ciphertext(r, p, fresh));
        pk_c_.emplace(p, std::move(samples));
        std::uint32_t n = r.u32();
        clients_.clear();
        const double boot = cfg_.bp.fresh_boot_var();
        for (std::uint32_t i = 0; i < n; ++i) {
            std::uint32_t id = r.u32();
            client_record rec;
            rec.dk.bits.reserve(80);
            for (int j = 0; j < 80; ++j) rec.dk.bits.push_back(get_ciphertext(r, p, fresh));
            r.raw(rec.iv.iv.data(), 10);
            if (r.u8()) {
                bytes h(static_cast<std::size_t>(r.u64()));
                r.raw(h.data(), h.size());
                rec.hom = hom_trivium_state::from_raw(h, cfg_.bp);
            }
            std::uint32_t nk = r.u32();
            for (std::uint32_t j = 0; j < nk; ++j)
                rec.enc_kbar.push_back(get_ciphertext(r, p, boot));
            if (r.u8()) {
                std::uint32_t nt = r.u32();
                std::vector<lwe_ciphertext> t;
                t.reserve(nt);
                for (std::uint32_t j = 0; j < nt; ++j) t.push_back(get_ciphertext(r, p, boot));
                rec.tmpl = std::move(t);
            }
            clients_[id] = std::move(rec);
        }
        held_ = {artifact::pk_c, artifact::evk, artifact::dk, artifact::iv};
    }

private:
    struct client_record {
        hom_decryption_key dk;
        trivium_key iv{};  // only the iv half is meaningful
        std::optional<session_key> kp;
        std::optional<hom_trivium_state> hom;
        std::vector<lwe_ciphertext> enc_kbar;
        std::optional<std::vector<lwe_ciphertext>> tmpl;
    };

    client_record& at(std::size_t id) {
        auto it = clients_.find(id);
        if (it == clients_.end()) throw missing_key("unknown client id");
        return it->second;
    }

    std::vector<lwe_ciphertext> encrypt_bits(const bit_vector& bits) {
        std::vector<lwe_ciphertext> out;
        out.reserve(bits.size());
        for (auto b : bits) out.push_back(pk_encrypt(b, *pk_c_));
        return out;
    }

    std::vector<lwe_ciphertext> take_enc_keystream(client_record& rec, protocol_phase ph,
                                                   timing_log& tl) {
        if (rec.enc_kbar.size() < cfg_.l_w) {
            detail::stopwatch sw;
            auto more = rec.hom->keystream(cfg_.l_w - rec.enc_kbar.size(), *evk_);
            tl.add(ph, "E_FHE.KeyStream", sw.seconds());
            for (auto& ct : more) rec.enc_kbar.push_back(std::move(ct));
        }
        std::vector<lwe_ciphertext> out(
            std::make_move_iterator(rec.enc_kbar.begin()),
            std::make_move_iterator(rec.enc_kbar.begin() + cfg_.l_w));
        rec.enc_kbar.erase(rec.enc_kbar.begin(), rec.enc_kbar.begin() + cfg_.l_w);
        return out;
    }

    protocol_config cfg_;
    std::optional<public_key_set> pk_c_;
    std::optional<evaluation_key> evk_;
    std::map<std::size_t, client_record> clients_;
    std::set<artifact> held_;
};

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

/// Three-party run: trusted party generates and distributes keys, clients
/// ship doubly-encrypted symmetric keys, the server matches under FHE and
/// the trusted party decrypts and notifies.
class btf_session : public session {
public:
    btf_session(const protocol_config& cfg, transport& t, std::size_t n_clients = 1)
        : cfg_(cfg), t_(t) {
        entropy_source root(cfg.seed);
        tp_.emplace(cfg, root.fork());
        srv_.emplace(cfg);
        for (std::size_t i = 0; i < n_clients; ++i) clients_.emplace_back(cfg, root.fork());
    }

    void setup() override {
        tp_->kdp_generate(tl_);
        tp_->kdp_distribute(t_, clients_.size());
        for (auto& c : clients_) c.kdp(t_, tl_);
        srv_->kdp(t_, clients_.size(), tl_);
        check_privacy("kdp");

        if (!cfg_.defer_init) {
            for (std::size_t id = 0; id < clients_.size(); ++id) {
                clients_[id].inp(tl_);
                srv_->inp(id, tl_);
            }
        }
        check_privacy("inp");
        srv_->drop_session_keys();
    }

    void register_template(const bit_vector& w) override { register_template(0, w); }

    void register_template(std::size_t id, const bit_vector& w) {
        ensure_samples(protocol_phase::rs);
        clients_.at(id).rs_send(t_, w, tl_);
        srv_->rs(t_, id, tl_);
        check_privacy("rs");
    }

    int verify(const bit_vector& w_prime) override { return verify(0, w_prime); }

    int verify(std::size_t id, const bit_vector& w_prime) {
        ensure_samples(protocol_phase::vs);
        clients_.at(id).vs_send(t_, w_prime, tl_);
        srv_->vs(t_, id, tl_);
        int r_tp = tp_->vs_decrypt_and_notify(t_, tl_);
        int r_client = clients_.at(id).vs_result(t_);
        int r_server = srv_->vs_result(t_);
        if (r_client != r_tp || r_server != r_tp)
            throw error("result notification mismatch");
        check_privacy("vs");
        return r_tp;
    }

    const transmission_ledger& ledger() const override { return t_.ledger(); }
    const timing_log& timings() const override { return tl_; }

    btf_trusted_party& trusted_party() { return *tp_; }
    btf_server& server() { return *srv_; }
    btf_client& client(std::size_t id = 0) { return clients_.at(id); }
    const std::vector<std::string>& privacy_trace() const { return privacy_trace_; }

    /// Whole-session snapshot: trusted party, clients, server. Lets a CLI
    /// run continue a session in a later process.
    bytes save_state() const {
        byte_writer w;
        w.raw("BTFS", 4);
        w.u64(epoch_ + 1);
        w.u32(static_cast<std::uint32_t>(clients_.size()));
        tp_->save_state(w);
        for (const auto& c : clients_) c.save_state(w);
        srv_->save_state(w);
        return w.take();
    }

    void restore_state(const bytes& blob) {
        byte_reader r(blob);
        char magic[4];
        r.raw(magic, 4);
        if (std::string(magic, 4) != "BTFS") throw parse_error("bad session snapshot");
        epoch_ = r.u64();
        std::uint32_t n = r.u32();
        if (n != clients_.size())
            throw parse_error("snapshot client count does not match the session");
        tp_->restore_state(r);
        const std::uint64_t mix = 0x9e3779b97f4a7c15ull;
        tp_->reseed(cfg_.seed + mix * epoch_);
        for (std::uint32_t i = 0; i < n; ++i)
            clients_[i].restore_state(r, cfg_.seed + mix * (epoch_ + 1 + i));
        srv_->restore_state(r, tp_->evk());
        if (!r.done()) throw parse_error("trailing bytes in session snapshot");
    }

    /// The structural separation: the server never sees a symmetric or FHE
    /// secret key, the trusted party never sees symmetric keys, session
    /// pads, features or stream ciphertexts. Holdings are tracked per
    /// party and re-asserted after every phase.
    void check_privacy(const std::string& where) {
        auto deny = [&](const std::set<artifact>& held, artifact a, const char* who) {
            if (held.count(a))
                throw error(std::string(who) + " holds " + artifact_name(a) + " after " +
                            where);
        };
        deny(srv_->held(), artifact::sk, "server");
        deny(srv_->held(), artifact::k, "server");
        deny(tp_->held(), artifact::k, "trusted party");
        deny(tp_->held(), artifact::k_prime, "trusted party");
        deny(tp_->held(), artifact::c, "trusted party");
        deny(tp_->held(), artifact::enc_w, "trusted party");
        for (auto& c : clients_) deny(c.held(), artifact::sk, "client");
        privacy_trace_.push_back(where);
    }

private:
    void ensure_samples(protocol_phase ph) {
        if (srv_->pk_c_remaining() < cfg_.l_w) {
            tp_->reissue_pk_c(t_, ph, cfg_.l_w);
            srv_->accept_pk_c(t_);
        }
    }

    protocol_config cfg_;
    transport& t_;
    std::optional<btf_trusted_party> tp_;
    std::optional<btf_server> srv_;
    std::vector<btf_client> clients_;
    timing_log tl_;
    std::vector<std::string> privacy_trace_;
    std::uint64_t epoch_ = 0;
};

/// Standard FHE baseline: the client owns the whole key set, sends its
/// evaluation key once, then ships full FHE ciphertexts both ways.
class st_fhe_session : public session {
public:
    st_fhe_session(const protocol_config& cfg, transport& t) : cfg_(cfg), t_(t), rng_(cfg.seed) {}

    void setup() override {
        detail::stopwatch sw;
        sk_ = keygen(cfg_.bp.lwe, rng_);
        evk_client_ = make_evaluation_key(*sk_, cfg_.bp, rng_);
        tl_.add(protocol_phase::kdp, "Enc.KeyGen", sw.seconds());
        t_.send(protocol_phase::kdp, {channel::c_to_s, artifact::evk, false, evk_client_->raw()});
        evk_server_ = evaluation_key::from_raw(t_.recv(channel::c_to_s).payload, cfg_.bp);
    }

    void register_template(const bit_vector& w) override {
        if (!sk_) throw missing_key("setup has not run");
        if (w.size() != cfg_.l_w) throw length_mismatch("feature length != l_w");
        detail::stopwatch sw;
        auto pk = make_public_key(*sk_, cfg_.l_w, rng_);  // client-local, never shipped
        std::vector<lwe_ciphertext> enc_w;
        for (auto b : w) enc_w.push_back(pk_encrypt(b, pk));
        tl_.add(protocol_phase::rs, "Enc(w,pk)", sw.seconds());
        t_.send(protocol_phase::rs, {channel::c_to_s, artifact::enc_w, false, raw_bytes(enc_w)});
        tmpl_ = parse_ciphertexts(t_.recv(channel::c_to_s).payload, cfg_.bp.lwe,
                                  cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma);
    }

    int verify(const bit_vector& w_prime) override {
        if (!tmpl_) throw no_template("register a template first");
        if (w_prime.size() != cfg_.l_w) throw length_mismatch("probe length != l_w");
        auto pk = make_public_key(*sk_, cfg_.l_w, rng_);
        std::vector<lwe_ciphertext> enc_wp;
        for (auto b : w_prime) enc_wp.push_back(pk_encrypt(b, pk));
        t_.send(protocol_phase::vs,
                {channel::c_to_s, artifact::enc_w_prime, false, raw_bytes(enc_wp)});

        // server side
        auto probe = parse_ciphertexts(t_.recv(channel::c_to_s).payload, cfg_.bp.lwe,
                                       cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma);
        detail::stopwatch sw;
        lwe_ciphertext enc_r = etm(*tmpl_, probe, cfg_.etm(), *evk_server_);
        tl_.add(protocol_phase::vs, "Eval(ETM)", sw.seconds());
        t_.send(protocol_phase::vs, {channel::s_to_c, artifact::enc_r, false, raw_bytes(enc_r)});

        // client decrypts the returned ciphertext itself
        auto cts = parse_ciphertexts(t_.recv(channel::s_to_c).payload, cfg_.bp.lwe,
                                     cfg_.bp.fresh_boot_var());
        detail::stopwatch sw_dec;
        int r = decrypt(cts.at(0), *sk_);
        tl_.add(protocol_phase::vs, "Dec(Enc(r),sk)", sw_dec.seconds());
        return r;
    }

    const transmission_ledger& ledger() const override { return t_.ledger(); }
    const timing_log& timings() const override { return tl_; }

private:
    protocol_config cfg_;
    transport& t_;
    entropy_source rng_;
    std::optional<lwe_secret_key> sk_;
    std::optional<evaluation_key> evk_client_, evk_server_;
    std::optional<std::vector<lwe_ciphertext>> tmpl_;
    timing_log tl_;
};

/// Original transciphering baseline: two parties; the client generates all
/// keys, ships pk_c, evk, dk and IV, sends stream ciphertexts, and still
/// receives the FHE-encrypted result.
class orig_tc_session : public session {
public:
    orig_tc_session(const protocol_config& cfg, transport& t) : cfg_(cfg), t_(t), rng_(cfg.seed) {}

    void setup() override {
        detail::stopwatch sw;
        sk_ = keygen(cfg_.bp.lwe, rng_);
        auto evk_local = make_evaluation_key(*sk_, cfg_.bp, rng_);
        tl_.add(protocol_phase::kdp, "Enc.KeyGen", sw.seconds());

        key_ = e_keygen(80, rng_);
        auto pk_k = make_public_key(*sk_, 80, rng_);  // client-local
        detail::stopwatch sw_dk;
        hom_decryption_key dk = make_hom_decryption_key(*key_, pk_k);
        tl_.add(protocol_phase::kdp, "Enc(k,pk_k)", sw_dk.seconds());

        auto pk_c = make_public_key(*sk_, cfg_.l_w, rng_);
        t_.send(protocol_phase::kdp, {channel::c_to_s, artifact::pk_c, false, raw_bytes(pk_c)});
        t_.send(protocol_phase::kdp, {channel::c_to_s, artifact::evk, false, evk_local.raw()});
        t_.send(protocol_phase::kdp, {channel::c_to_s, artifact::dk, false, raw_bytes(dk.bits)});
        bytes ivb(key_->iv.begin(), key_->iv.end());
        t_.send(protocol_phase::kdp, {channel::c_to_s, artifact::iv, false, ivb});

        // server side receive
        pk_c_srv_.emplace(cfg_.bp.lwe,
                          parse_ciphertexts(t_.recv(channel::c_to_s).payload, cfg_.bp.lwe,
                                            cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma));
        evk_srv_ = evaluation_key::from_raw(t_.recv(channel::c_to_s).payload, cfg_.bp);
        hom_decryption_key dk_srv;
        dk_srv.bits = parse_ciphertexts(t_.recv(channel::c_to_s).payload, cfg_.bp.lwe,
                                        cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma);
        trivium_key iv_only{};
        auto m_iv = t_.recv(channel::c_to_s);
        std::copy(m_iv.payload.begin(), m_iv.payload.end(), iv_only.iv.begin());

        if (!cfg_.defer_init) {
            detail::stopwatch sw_init;
            state_ = e_init(*key_);
            tl_.add(protocol_phase::inp, "E.Init", sw_init.seconds());
            kbar_ = state_->keystream(cfg_.l_w);

            auto ct_iv = encode_iv(iv_only, cfg_.bp.lwe);
            detail::stopwatch sw_hinit;
            hom_ = efhe_init(ct_iv, dk_srv, *evk_srv_, cfg_.policy);
            tl_.add(protocol_phase::inp, "E_FHE.Init", sw_hinit.seconds());
            detail::stopwatch sw_ks;
            enc_kbar_ = hom_->keystream(cfg_.l_w, *evk_srv_);
            tl_.add(protocol_phase::inp, "E_FHE.KeyStream", sw_ks.seconds());
        }
    }

    void register_template(const bit_vector& w) override {
        tmpl_ = transcipher(w, artifact::c, protocol_phase::rs);
    }

    int verify(const bit_vector& w_prime) override {
        if (!tmpl_) throw no_template("register a template first");
        if (pk_c_srv_->remaining() < cfg_.l_w) {
            // client supplies the verification-stage sample batch
            auto pk_c = make_public_key(*sk_, cfg_.l_w, rng_);
            t_.send(protocol_phase::vs,
                    {channel::c_to_s, artifact::pk_c, false, raw_bytes(pk_c)});
            pk_c_srv_.emplace(cfg_.bp.lwe,
                              parse_ciphertexts(t_.recv(channel::c_to_s).payload, cfg_.bp.lwe,
                                                cfg_.bp.lwe.sigma * cfg_.bp.lwe.sigma));
        }
        auto probe = transcipher(w_prime, artifact::c_prime, protocol_phase::vs);

        detail::stopwatch sw;
        lwe_ciphertext enc_r = etm(*tmpl_, probe, cfg_.etm(), *evk_srv_);
        tl_.add(protocol_phase::vs, "Eval(ETM)", sw.seconds());
        t_.send(protocol_phase::vs, {channel::s_to_c, artifact::enc_r, false, raw_bytes(enc_r)});

        auto cts = parse_ciphertexts(t_.recv(channel::s_to_c).payload, cfg_.bp.lwe,
                                     cfg_.bp.fresh_boot_var());
        detail::stopwatch sw_dec;
        int r = decrypt(cts.at(0), *sk_);
        tl_.add(protocol_phase::vs, "Dec(Enc(r),sk)", sw_dec.seconds());
        return r;
    }

    const transmission_ledger& ledger() const override { return t_.ledger(); }
    const timing_log& timings() const override { return tl_; }

private:
    std::vector<lwe_ciphertext> transcipher(const bit_vector& w, artifact art,
                                            protocol_phase ph) {
        if (!state_) throw missing_key("cipher not initialized");
        if (w.size() != cfg_.l_w) throw length_mismatch("feature length != l_w");
        if (kbar_.size() < cfg_.l_w) {
            auto more = state_->keystream(cfg_.l_w - kbar_.size());
            kbar_.insert(kbar_.end(), more.begin(), more.end());
        }
        bit_vector kbar(kbar_.begin(), kbar_.begin() + cfg_.l_w);
        kbar_.erase(kbar_.begin(), kbar_.begin() + cfg_.l_w);
        bit_vector c = e_encrypt(w, kbar);
        t_.send(ph, {channel::c_to_s, art, false, bits_to_bytes(c)});

        bit_vector c_srv = bytes_to_bits(t_.recv(channel::c_to_s).payload, cfg_.l_w);
        detail::stopwatch sw_enc;
        std::vector<lwe_ciphertext> enc_c;
        for (auto b : c_srv) enc_c.push_back(pk_encrypt(b, *pk_c_srv_));
        tl_.add(ph, "Enc(c,pk_c)", sw_enc.seconds());

        if (enc_kbar_.size() < cfg_.l_w) {
            detail::stopwatch sw_ks;
            auto more = hom_->keystream(cfg_.l_w - enc_kbar_.size(), *evk_srv_);
            tl_.add(ph, "E_FHE.KeyStream", sw_ks.seconds());
            for (auto& ct : more) enc_kbar_.push_back(std::move(ct));
        }
        std::vector<lwe_ciphertext> enc_kbar(
            std::make_move_iterator(enc_kbar_.begin()),
            std::make_move_iterator(enc_kbar_.begin() + cfg_.l_w));
        enc_kbar_.erase(enc_kbar_.begin(), enc_kbar_.begin() + cfg_.l_w);

        detail::stopwatch sw;
        auto out = hom_stream_decrypt(enc_c, enc_kbar, *evk_srv_);
        tl_.add(ph, "Eval(E^-1)", sw.seconds());
        return out;
    }

    protocol_config cfg_;
    transport& t_;
    entropy_source rng_;
    std::optional<lwe_secret_key> sk_;
    std::optional<trivium_key> key_;
    std::optional<trivium_state> state_;
    bit_vector kbar_;
    std::optional<public_key_set> pk_c_srv_;
    std::optional<evaluation_key> evk_srv_;
    std::optional<hom_trivium_state> hom_;
    std::vector<lwe_ciphertext> enc_kbar_;
    std::optional<std::vector<lwe_ciphertext>> tmpl_;
    timing_log tl_;
};

}  // namespace btf

#endif
