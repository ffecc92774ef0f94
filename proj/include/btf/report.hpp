#ifndef BTF_REPORT_HPP
#define BTF_REPORT_HPP

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>

#include <json.hpp>

#include "btf/errors.hpp"
#include "btf/params.hpp"
#include "btf/protocol.hpp"
#include "btf/wire.hpp"

namespace btf {

inline double to_kib(std::uint64_t b) { return double(b) / 1024.0; }
inline double to_mib(std::uint64_t b) { return double(b) / (1024.0 * 1024.0); }

/// Serialized sizes of every key artifact at one parameter set. sk is
/// listed at one LWE sample's size, the usual bookkeeping convention for
/// these tables; its packed form is (n+7)/8 bytes.
struct key_size_table {
    param_set params;
    std::uint64_t sk;       // (n+1)*4
    std::uint64_t pk_k;     // 80 samples
    std::uint64_t pk_c;     // pk_c_samples samples
    std::uint64_t evk;
    std::uint64_t k;        // 10
    std::uint64_t k_prime;  // |dk|
    std::uint64_t dk;       // 80 ciphertexts
};

inline key_size_table measure_key_sizes(const bootstrap_params& bp,
                                        std::size_t pk_c_samples = 2048) {
    const std::uint64_t ct = bp.lwe.ciphertext_bytes();
    key_size_table t;
    t.params = bp.lwe.name;
    t.sk = ct;
    t.pk_k = 80 * ct;
    t.pk_c = pk_c_samples * ct;
    t.evk = bp.evk_bytes();
    t.k = 10;
    t.dk = 80 * ct;
    t.k_prime = t.dk;
    return t;
}

/// Setup-stage transmission totals for the three architectures plus the
/// client-to-server reduction ratios of the two baselines over btf.
struct setup_report {
    param_set params;
    std::uint64_t btf_tp_to_c, btf_tp_to_s, btf_c_to_s;
    std::uint64_t st_c_to_s;
    std::uint64_t tc_c_to_s;
    double ratio_st;  // st_c_to_s / btf_c_to_s
    double ratio_tc;  // tc_c_to_s / btf_c_to_s
};

inline setup_report report_setup(const transmission_ledger& btf,
                                 const transmission_ledger& st,
                                 const transmission_ledger& tc) {
    if (btf.model() != auth_model::btf || st.model() != auth_model::st_fhe ||
        tc.model() != auth_model::orig_tc)
        throw incomplete_run("report_setup needs one ledger per model, in order");
    if (btf.params() != st.params() || btf.params() != tc.params())
        throw incomplete_run("ledgers were produced at different parameter sets");
    setup_report r;
    r.params = btf.params();
    r.btf_tp_to_c = btf.setup_total(channel::tp_to_c);
    r.btf_tp_to_s = btf.setup_total(channel::tp_to_s);
    r.btf_c_to_s = btf.setup_total(channel::c_to_s);
    r.st_c_to_s = st.setup_total(channel::c_to_s);
    r.tc_c_to_s = tc.setup_total(channel::c_to_s);
    if (r.btf_c_to_s == 0 || r.st_c_to_s == 0 || r.tc_c_to_s == 0)
        throw incomplete_run("a ledger has no setup-stage client-to-server traffic");
    r.ratio_st = double(r.st_c_to_s) / double(r.btf_c_to_s);
    r.ratio_tc = double(r.tc_c_to_s) / double(r.btf_c_to_s);
    return r;
}

/// How much larger an FHE-encrypted feature vector is than its stream
/// ciphertext. Two conventions are printed: the exact binary-unit factor
/// for the packed l_w-bit payload, and the variant that prices the stream
/// payload at half a decimal kilobyte while quoting the template in binary
/// megabytes rounded to two digits - the two disagree and the report
/// labels both rather than picking one.
struct expansion_report {
    std::uint64_t template_bytes;
    std::uint64_t stream_bytes;
    double factor_exact;
    double factor_half_kb_decimal;
    std::uint64_t result_ct_bytes;
    double result_bit_factor;  // result ciphertext bits per plaintext bit
};

inline expansion_report report_template_expansion(const bootstrap_params& bp,
                                                  std::size_t l_w = 2048) {
    expansion_report r;
    r.template_bytes = std::uint64_t(l_w) * bp.lwe.ciphertext_bytes();
    r.stream_bytes = l_w / 8;
    r.factor_exact = double(r.template_bytes) / double(r.stream_bytes);
    const double mb_2dp = std::round(to_mib(r.template_bytes) * 100.0) / 100.0;
    r.factor_half_kb_decimal = mb_2dp * 1e6 / 500.0;
    r.result_ct_bytes = bp.lwe.ciphertext_bytes();
    r.result_bit_factor = double(r.result_ct_bytes) * 8.0;
    return r;
}

/// Closed-form storage and setup-traffic projections as the client count
/// grows, from measured unit sizes. btf keeps one global (pk_c, evk, sk)
/// while the baselines multiply their big keys per client.
struct scaling_report {
    std::size_t n_c;
    param_set params;
    std::uint64_t btf_server, btf_tp, btf_client_each;
    std::uint64_t st_server, st_client_each;
    std::uint64_t tc_server, tc_client_each;
    std::uint64_t btf_c_to_s, btf_tp_to_s, btf_tp_to_c;
    std::uint64_t st_c_to_s, tc_c_to_s;
};

inline scaling_report report_scaling(const bootstrap_params& bp, std::size_t n_c,
                                     std::size_t pk_c_samples = 2048) {
    const key_size_table k = measure_key_sizes(bp, pk_c_samples);
    scaling_report r;
    r.n_c = n_c;
    r.params = bp.lwe.name;
    r.btf_server = k.evk + k.pk_c + n_c * k.dk;
    r.btf_tp = k.sk + k.evk;
    r.btf_client_each = k.k;
    r.st_server = n_c * k.evk;
    r.st_client_each = k.sk;
    r.tc_server = n_c * (k.evk + k.pk_c + k.dk);
    r.tc_client_each = k.sk + k.k;
    r.btf_c_to_s = n_c * (10 + k.k_prime + k.dk);
    r.btf_tp_to_s = k.pk_c + k.evk;
    r.btf_tp_to_c = n_c * k.pk_k;
    r.st_c_to_s = n_c * k.evk;
    r.tc_c_to_s = n_c * (k.pk_c + k.evk + k.dk + 10);
    return r;
}

// ---------------------------------------------------------------------------
// JSON serialization of ledgers and reports
// ---------------------------------------------------------------------------

inline nlohmann::json ledger_to_json(const transmission_ledger& led,
                                     const timing_log* timings = nullptr) {
    nlohmann::json j;
    j["model"] = model_name(led.model());
    j["params"] = param_set_name(led.params());
    j["entries"] = nlohmann::json::array();
    for (const auto& e : led.entries()) {
        j["entries"].push_back({{"phase", phase_name(e.ph)},
                                {"channel", channel_name(e.ch)},
                                {"artifact", artifact_name(e.art)},
                                {"bytes", e.bytes}});
    }
    nlohmann::json totals;
    const channel chans[] = {channel::tp_to_c, channel::tp_to_s, channel::c_to_s,
                             channel::s_to_c, channel::s_to_tp};
    for (auto ch : chans) {
        totals[channel_name(ch)] = led.total(ch);
        totals[std::string("setup_") + channel_name(ch)] = led.setup_total(ch);
    }
    j["totals"] = totals;
    if (timings) {
        j["timings"] = nlohmann::json::array();
        for (const auto& e : timings->entries())
            j["timings"].push_back(
                {{"phase", phase_name(e.ph)}, {"op", e.op}, {"seconds", e.seconds}});
    }
    return j;
}

inline protocol_phase phase_by_name(const std::string& s) {
    if (s == "kdp") return protocol_phase::kdp;
    if (s == "inp") return protocol_phase::inp;
    if (s == "rs") return protocol_phase::rs;
    if (s == "vs") return protocol_phase::vs;
    throw parse_error("unknown phase: " + s);
}

inline channel channel_by_name(const std::string& s) {
    if (s == "tp_to_c") return channel::tp_to_c;
    if (s == "tp_to_s") return channel::tp_to_s;
    if (s == "c_to_s") return channel::c_to_s;
    if (s == "s_to_c") return channel::s_to_c;
    if (s == "s_to_tp") return channel::s_to_tp;
    throw parse_error("unknown channel: " + s);
}

inline artifact artifact_by_name(const std::string& s) {
    for (int i = 0; i <= int(artifact::result); ++i)
        if (s == artifact_name(static_cast<artifact>(i))) return static_cast<artifact>(i);
    throw parse_error("unknown artifact: " + s);
}

inline param_set param_set_by_name(const std::string& s) {
    if (s == "tfhe80") return param_set::tfhe80;
    if (s == "tfhe128") return param_set::tfhe128;
    return param_set::custom;
}

inline transmission_ledger ledger_from_json(const nlohmann::json& j) {
    transmission_ledger led(model_by_name(j.at("model").get<std::string>()),
                            param_set_by_name(j.at("params").get<std::string>()));
    for (const auto& e : j.at("entries")) {
        led.append({phase_by_name(e.at("phase").get<std::string>()),
                    channel_by_name(e.at("channel").get<std::string>()),
                    artifact_by_name(e.at("artifact").get<std::string>()),
                    e.at("bytes").get<std::uint64_t>()});
    }
    return led;
}

// ---------------------------------------------------------------------------
// Human-readable tables
// ---------------------------------------------------------------------------

inline void print_key_sizes(std::ostream& os, const key_size_table& t) {
    os << "key sizes [" << param_set_name(t.params) << "]\n";
    auto row = [&](const char* name, std::uint64_t b) {
        os << "  " << std::left << std::setw(8) << name << std::right << std::setw(12) << b
           << " B";
        if (b >= 1024 * 1024)
            os << "  (" << std::fixed << std::setprecision(2) << to_mib(b) << " MB)";
        else
            os << "  (" << std::fixed << std::setprecision(2) << to_kib(b) << " KB)";
        os << "\n";
    };
    row("sk", t.sk);
    row("pk_k", t.pk_k);
    row("pk_c", t.pk_c);
    row("evk", t.evk);
    row("k", t.k);
    row("k'", t.k_prime);
    row("dk", t.dk);
}

inline void print_setup_report(std::ostream& os, const setup_report& r) {
    os << "setup-stage transmission [" << param_set_name(r.params) << "]\n";
    os << std::fixed;
    os << "  btf      tp->c " << std::setw(11) << r.btf_tp_to_c << " B ("
       << std::setprecision(2) << to_kib(r.btf_tp_to_c) << " KB)\n";
    os << "  btf      tp->s " << std::setw(11) << r.btf_tp_to_s << " B ("
       << std::setprecision(2) << to_mib(r.btf_tp_to_s) << " MB)\n";
    os << "  btf      c->s  " << std::setw(11) << r.btf_c_to_s << " B ("
       << std::setprecision(2) << to_kib(r.btf_c_to_s) << " KB)\n";
    os << "  st-fhe   c->s  " << std::setw(11) << r.st_c_to_s << " B ("
       << std::setprecision(2) << to_mib(r.st_c_to_s) << " MB)\n";
    os << "  orig-tc  c->s  " << std::setw(11) << r.tc_c_to_s << " B ("
       << std::setprecision(2) << to_mib(r.tc_c_to_s) << " MB)\n";
    os << "  reduction vs st-fhe:  " << std::setprecision(1) << r.ratio_st << "x\n";
    os << "  reduction vs orig-tc: " << std::setprecision(1) << r.ratio_tc << "x\n";
}

inline void print_expansion_report(std::ostream& os, const expansion_report& r) {
    os << std::fixed;
    os << "template expansion\n";
    os << "  fhe template   " << r.template_bytes << " B (" << std::setprecision(2)
       << to_mib(r.template_bytes) << " MB)\n";
    os << "  stream payload " << r.stream_bytes << " B\n";
    os << "  exact factor   " << std::setprecision(0) << r.factor_exact << "x\n";
    os << "  0.5-decimal-KB convention: " << std::setprecision(0) << r.factor_half_kb_decimal
       << "x  (template in binary MB over a 500 B payload; conventions disagree,"
          " both shown)\n";
    os << "  result bit: " << r.result_ct_bytes << " B ciphertext vs 1 plaintext bit ("
       << std::setprecision(0) << r.result_bit_factor << "x)\n";
}

inline void print_scaling_report(std::ostream& os, const scaling_report& r) {
    os << "scaling at n_c = " << r.n_c << " [" << param_set_name(r.params) << "]\n"
       << std::fixed << std::setprecision(2);
    os << "  stored keys:\n";
    os << "    btf      server " << std::setw(12) << r.btf_server << " B ("
       << to_mib(r.btf_server) << " MB), tp " << r.btf_tp << " B, client " << r.btf_client_each
       << " B each\n";
    os << "    st-fhe   server " << std::setw(12) << r.st_server << " B ("
       << to_mib(r.st_server) << " MB), client " << r.st_client_each << " B each\n";
    os << "    orig-tc  server " << std::setw(12) << r.tc_server << " B ("
       << to_mib(r.tc_server) << " MB), client " << r.tc_client_each << " B each\n";
    os << "  cumulative setup traffic:\n";
    os << "    btf      c->s " << r.btf_c_to_s << " B, tp->s " << r.btf_tp_to_s
       << " B, tp->c " << r.btf_tp_to_c << " B\n";
    os << "    st-fhe   c->s " << r.st_c_to_s << " B\n";
    os << "    orig-tc  c->s " << r.tc_c_to_s << " B\n";
}

}  // namespace btf

#endif
