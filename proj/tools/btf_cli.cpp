// Command-line front end: key generation, protocol runs, byte-accounting
// reports and scaling projections.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "btf/btf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct common_opts {
    std::string params = "tfhe128";
    std::string model = "btf";
    std::size_t lw = 64;
    long threshold = -1;  // -1: default lw/4
    std::uint64_t seed = 1;
    std::string transport_kind = "inproc";
    std::string out;
};

btf::protocol_config make_config(const common_opts& o) {
    auto cfg = btf::protocol_config::make(btf::params::by_name(o.params), o.lw, o.seed);
    if (o.threshold >= 0) cfg.threshold = static_cast<std::size_t>(o.threshold);
    return cfg;
}

std::unique_ptr<btf::transport> make_transport(const std::string& kind, btf::auth_model m,
                                               btf::param_set p) {
    if (kind == "socket") return std::make_unique<btf::socket_transport>(m, p);
    if (kind == "inproc") return std::make_unique<btf::inproc_transport>(m, p);
    throw btf::invalid_params("unknown transport: " + kind);
}

btf::bit_vector random_feature(std::size_t lw, std::uint64_t seed) {
    btf::entropy_source rng(seed);
    btf::bit_vector w(lw);
    for (auto& b : w) b = std::uint8_t(rng.bit());
    return w;
}

btf::bit_vector feature_from_hex(const std::string& hex, std::size_t lw) {
    auto data = btf::from_hex(hex);
    if (data.size() * 8 < lw)
        throw btf::length_mismatch("feature hex shorter than the configured length");
    return btf::bytes_to_bits(data, lw);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw btf::error("cannot write " + path);
    f << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw btf::error("cannot read " + path);
    json j;
    f >> j;
    return j;
}

// --- state directory for btf sessions ---

struct state_dir {
    fs::path dir;

    fs::path config() const { return dir / "config.json"; }
    fs::path session() const { return dir / "session.bin"; }
    fs::path ledger() const { return dir / "ledger.json"; }

    void save_config(const common_opts& o, const btf::protocol_config& cfg) const {
        write_json(config().string(), json{{"params", o.params},
                                           {"model", "btf"},
                                           {"lw", cfg.l_w},
                                           {"threshold", cfg.threshold},
                                           {"seed", cfg.seed}});
    }

    std::pair<common_opts, btf::protocol_config> load_config() const {
        json j = read_json(config().string());
        common_opts o;
        o.params = j.at("params").get<std::string>();
        o.lw = j.at("lw").get<std::size_t>();
        o.threshold = j.at("threshold").get<long>();
        o.seed = j.at("seed").get<std::uint64_t>();
        return {o, make_config(o)};
    }
};

void seed_ledger_from_json(btf::transmission_ledger& led, const json& j) {
    auto loaded = btf::ledger_from_json(j);
    for (const auto& e : loaded.entries()) led.append(e);
}

int cmd_keygen(const common_opts& o) {
    auto bp = btf::params::by_name(o.params);
    btf::entropy_source rng(o.seed);
    auto sk = btf::keygen(bp.lwe, rng);
    auto evk = btf::make_evaluation_key(sk, bp, rng);

    auto table = btf::measure_key_sizes(bp);
    table.evk = evk.serialized_bytes();
    btf::print_key_sizes(std::cout, table);

    if (!o.out.empty()) {
        fs::create_directories(o.out);
        btf::write_file((fs::path(o.out) / "sk.btf").string(),
                        btf::wrap_container(bp.lwe.name, btf::artifact_tag::secret_key,
                                            btf::raw_bytes(sk)));
        btf::write_file((fs::path(o.out) / "evk.btf").string(),
                        btf::wrap_container(bp.lwe.name, btf::artifact_tag::evaluation_key,
                                            evk.raw()));
        write_json((fs::path(o.out) / "sizes.json").string(),
                   json{{"params", o.params},
                        {"sk", table.sk},
                        {"pk_k", table.pk_k},
                        {"pk_c", table.pk_c},
                        {"evk", table.evk},
                        {"k", table.k},
                        {"k_prime", table.k_prime},
                        {"dk", table.dk}});
        std::cout << "wrote sk.btf, evk.btf, sizes.json to " << o.out << "\n";
    }
    return 0;
}

int cmd_setup(const common_opts& o, bool defer_init, const std::string& state) {
    auto cfg = make_config(o);
    cfg.defer_init = defer_init;
    auto model = btf::model_by_name(o.model);
    auto t = make_transport(o.transport_kind, model, cfg.bp.lwe.name);

    std::unique_ptr<btf::session> s;
    btf::btf_session* bs = nullptr;
    switch (model) {
        case btf::auth_model::btf: {
            auto owned = std::make_unique<btf::btf_session>(cfg, *t);
            bs = owned.get();
            s = std::move(owned);
            break;
        }
        case btf::auth_model::st_fhe:
            s = std::make_unique<btf::st_fhe_session>(cfg, *t);
            break;
        case btf::auth_model::orig_tc:
            s = std::make_unique<btf::orig_tc_session>(cfg, *t);
            break;
    }
    s->setup();

    json led = btf::ledger_to_json(t->ledger(), &s->timings());
    if (!o.out.empty()) write_json(o.out, led);

    std::cout << "setup complete [" << o.model << ", " << o.params << ", l_w=" << cfg.l_w
              << (defer_init ? ", cipher init deferred" : "") << "]\n";
    std::cout << "  c->s setup bytes:  " << t->ledger().setup_total(btf::channel::c_to_s)
              << "\n";
    std::cout << "  tp->s setup bytes: " << t->ledger().setup_total(btf::channel::tp_to_s)
              << "\n";

    if (!state.empty()) {
        if (!bs) {
            std::cerr << "--state is supported for the btf model only\n";
            return 1;
        }
        state_dir sd{fs::path(state)};
        fs::create_directories(sd.dir);
        sd.save_config(o, cfg);
        btf::write_file(sd.session().string(), bs->save_state());
        write_json(sd.ledger().string(), led);
        std::cout << "session state saved to " << state << "\n";
    }
    return 0;
}

// Rebuild a btf session from a state directory; returns the transport too
// so its ledger keeps accumulating.
struct resumed {
    btf::protocol_config cfg;
    std::unique_ptr<btf::transport> t;
    std::unique_ptr<btf::btf_session> s;
    state_dir sd;
};

resumed resume(const std::string& state, const std::string& transport_kind) {
    resumed r{.cfg = {}, .t = nullptr, .s = nullptr, .sd = {fs::path(state)}};
    auto [opts, cfg] = r.sd.load_config();
    r.cfg = cfg;
    r.t = make_transport(transport_kind, btf::auth_model::btf, cfg.bp.lwe.name);
    seed_ledger_from_json(r.t->ledger(), read_json(r.sd.ledger().string()));
    r.s = std::make_unique<btf::btf_session>(cfg, *r.t);
    r.s->restore_state(btf::read_file(r.sd.session().string()));
    return r;
}

void persist(resumed& r) {
    btf::write_file(r.sd.session().string(), r.s->save_state());
    write_json(r.sd.ledger().string(), btf::ledger_to_json(r.t->ledger(), &r.s->timings()));
}

int cmd_register(const std::string& state, const std::string& feature_hex,
                 std::uint64_t feature_seed, const std::string& transport_kind) {
    auto r = resume(state, transport_kind);
    btf::bit_vector w = feature_hex.empty()
                            ? random_feature(r.cfg.l_w, feature_seed)
                            : feature_from_hex(feature_hex, r.cfg.l_w);
    r.s->register_template(w);
    persist(r);
    std::cout << "template registered (" << r.cfg.l_w << " bits)\n";
    return 0;
}

int cmd_verify(const std::string& state, const std::string& probe_hex,
               std::uint64_t probe_seed, const std::string& transport_kind) {
    auto r = resume(state, transport_kind);
    btf::bit_vector w = probe_hex.empty() ? random_feature(r.cfg.l_w, probe_seed)
                                          : feature_from_hex(probe_hex, r.cfg.l_w);
    int result = r.s->verify(w);
    persist(r);
    std::cout << "authentication result r=" << result << "\n";
    return result == 1 ? 0 : 3;
}

int cmd_bench(const common_opts& o) {
    auto cfg = make_config(o);
    auto model = btf::model_by_name(o.model);
    auto t = make_transport(o.transport_kind, model, cfg.bp.lwe.name);

    std::unique_ptr<btf::session> s;
    switch (model) {
        case btf::auth_model::btf: s = std::make_unique<btf::btf_session>(cfg, *t); break;
        case btf::auth_model::st_fhe:
            s = std::make_unique<btf::st_fhe_session>(cfg, *t);
            break;
        case btf::auth_model::orig_tc:
            s = std::make_unique<btf::orig_tc_session>(cfg, *t);
            break;
    }

    btf::entropy_source rng(o.seed ^ 0xfeedface);
    btf::bit_vector w(cfg.l_w), probe_bad(cfg.l_w);
    for (auto& b : w) b = std::uint8_t(rng.bit());
    probe_bad = w;
    for (std::size_t i = 0; i < cfg.threshold + 1; ++i) probe_bad[i % cfg.l_w] ^= 1;

    s->setup();
    s->register_template(w);
    int genuine = s->verify(w);
    int impostor = s->verify(probe_bad);

    std::cout << "bench [" << o.model << ", " << o.params << ", l_w=" << cfg.l_w
              << ", seed=" << o.seed << "]\n";
    std::cout << "  genuine probe:  r=" << genuine << "\n";
    std::cout << "  impostor probe: r=" << impostor << "\n";
    for (auto ph : {btf::protocol_phase::kdp, btf::protocol_phase::inp,
                    btf::protocol_phase::rs, btf::protocol_phase::vs})
        std::cout << "  " << btf::phase_name(ph) << " time: " << std::fixed
                  << std::setprecision(3) << s->timings().total(ph) << " s\n";

    if (!o.out.empty()) {
        write_json(o.out, btf::ledger_to_json(t->ledger(), &s->timings()));
        std::cout << "ledger written to " << o.out << "\n";
    }
    return (genuine == 1 && impostor == 0) ? 0 : 4;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
    if (inputs.size() != 3)
        throw btf::incomplete_run("report needs three ledger files (btf, st-fhe, orig-tc)");
    btf::transmission_ledger leds[3] = {btf::ledger_from_json(read_json(inputs[0])),
                                        btf::ledger_from_json(read_json(inputs[1])),
                                        btf::ledger_from_json(read_json(inputs[2]))};
    const btf::transmission_ledger* by_model[3] = {nullptr, nullptr, nullptr};
    for (const auto& led : leds) by_model[static_cast<int>(led.model())] = &led;
    if (!by_model[0] || !by_model[1] || !by_model[2])
        throw btf::incomplete_run("need one ledger per model");

    auto rep = btf::report_setup(*by_model[0], *by_model[1], *by_model[2]);
    btf::print_setup_report(std::cout, rep);

    auto bp = btf::params::by_id(rep.params);
    auto exp = btf::report_template_expansion(bp);
    btf::print_expansion_report(std::cout, exp);

    if (!out.empty()) {
        write_json(out, json{{"params", btf::param_set_name(rep.params)},
                             {"btf_c_to_s", rep.btf_c_to_s},
                             {"btf_tp_to_s", rep.btf_tp_to_s},
                             {"btf_tp_to_c", rep.btf_tp_to_c},
                             {"st_fhe_c_to_s", rep.st_c_to_s},
                             {"orig_tc_c_to_s", rep.tc_c_to_s},
                             {"ratio_st_fhe", rep.ratio_st},
                             {"ratio_orig_tc", rep.ratio_tc},
                             {"template_bytes", exp.template_bytes},
                             {"expansion_exact", exp.factor_exact},
                             {"expansion_half_kb_decimal", exp.factor_half_kb_decimal}});
    }
    return 0;
}

int cmd_scaling(const common_opts& o, std::size_t nc) {
    auto bp = btf::params::by_name(o.params);
    auto rep = btf::report_scaling(bp, nc);
    btf::print_scaling_report(std::cout, rep);
    if (!o.out.empty()) {
        write_json(o.out, json{{"params", o.params},
                               {"n_c", rep.n_c},
                               {"btf_server", rep.btf_server},
                               {"btf_tp", rep.btf_tp},
                               {"btf_client_each", rep.btf_client_each},
                               {"st_fhe_server", rep.st_server},
                               {"st_fhe_client_each", rep.st_client_each},
                               {"orig_tc_server", rep.tc_server},
                               {"orig_tc_client_each", rep.tc_client_each},
                               {"btf_c_to_s", rep.btf_c_to_s},
                               {"btf_tp_to_s", rep.btf_tp_to_s},
                               {"btf_tp_to_c", rep.btf_tp_to_c},
                               {"st_fhe_c_to_s", rep.st_c_to_s},
                               {"orig_tc_c_to_s", rep.tc_c_to_s}});
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bidirectional transciphering for biometric authentication"};
    app.require_subcommand(1);

    common_opts o;
    bool defer_init = false;
    std::string state, feature_hex, probe_hex;
    std::uint64_t feature_seed = 7, probe_seed = 7;
    std::vector<std::string> report_inputs;
    std::size_t nc = 1;

    auto add_common = [&](CLI::App* c, bool with_model) {
        c->add_option("--params", o.params, "tfhe80 | tfhe128")->capture_default_str();
        if (with_model)
            c->add_option("--model", o.model, "btf | st-fhe | orig-tc")->capture_default_str();
        c->add_option("--lw", o.lw, "feature length in bits")->capture_default_str();
        c->add_option("--threshold", o.threshold, "max accepted Hamming distance");
        c->add_option("--seed", o.seed, "run seed")->capture_default_str();
        c->add_option("--transport", o.transport_kind, "inproc | socket")
            ->capture_default_str();
        c->add_option("--out", o.out, "output file (or directory for keygen)");
    };

    auto* keygen = app.add_subcommand("keygen", "generate an FHE key set and print sizes");
    add_common(keygen, false);

    auto* setup = app.add_subcommand("setup", "run the setup stage and record the ledger");
    add_common(setup, true);
    setup->add_flag("--defer-init", defer_init,
                    "distribute keys only; skip cipher initialization");
    setup->add_option("--state", state, "directory for resumable btf session state");

    auto* reg = app.add_subcommand("register", "register a feature vector (btf state dir)");
    reg->add_option("--state", state, "state directory from setup")->required();
    reg->add_option("--feature", feature_hex, "feature bits as hex (LSB-first)");
    reg->add_option("--feature-seed", feature_seed, "seed for a synthetic feature");
    reg->add_option("--transport", o.transport_kind, "inproc | socket")
        ->capture_default_str();

    auto* verify = app.add_subcommand("verify", "verify a probe against the registered template");
    verify->add_option("--state", state, "state directory from setup")->required();
    verify->add_option("--probe", probe_hex, "probe bits as hex (LSB-first)");
    verify->add_option("--probe-seed", probe_seed, "seed for a synthetic probe");
    verify->add_option("--transport", o.transport_kind, "inproc | socket")
        ->capture_default_str();

    auto* bench = app.add_subcommand("bench", "full deterministic run with timing log");
    add_common(bench, true);

    auto* report = app.add_subcommand("report", "setup-stage comparison from three ledgers");
    report->add_option("--in", report_inputs, "three ledger json files")->expected(3);
    report->add_option("--out", o.out, "machine-readable report file");

    auto* scaling = app.add_subcommand("scaling", "storage and traffic as clients grow");
    add_common(scaling, false);
    scaling->add_option("--nc", nc, "client count")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (keygen->parsed()) return cmd_keygen(o);
        if (setup->parsed()) return cmd_setup(o, defer_init, state);
        if (reg->parsed())
            return cmd_register(state, feature_hex, feature_seed, o.transport_kind);
        if (verify->parsed()) return cmd_verify(state, probe_hex, probe_seed, o.transport_kind);
        if (bench->parsed()) return cmd_bench(o);
        if (report->parsed()) return cmd_report(report_inputs, o.out);
        if (scaling->parsed()) return cmd_scaling(o, nc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
