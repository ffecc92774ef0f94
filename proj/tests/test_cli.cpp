// Drives the installed CLI binary end to end on toy-scale work: key
// generation artifacts, setup/register/verify against a state directory,
// bench determinism and the three-ledger report.
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "btf/serial.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct temp_dir {
    fs::path path;
    temp_dir() {
        path = fs::temp_directory_path() /
               ("btf_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~temp_dir() { fs::remove_all(path); }
};

int run(const std::string& args) {
    std::string cmd = std::string(BTF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json read_json(const fs::path& p) {
    std::ifstream f(p);
    json j;
    f >> j;
    return j;
}

}  // namespace

TEST(cli, usage_errors_exit_nonzero) {
    EXPECT_NE(run(""), 0);
    EXPECT_NE(run("frobnicate"), 0);
    EXPECT_NE(run("bench --params nosuch"), 0);
    EXPECT_NE(run("verify --state /nonexistent/dir"), 0);
}

TEST(cli, keygen_writes_artifacts) {
    temp_dir td;
    ASSERT_EQ(run("keygen --params toy --seed 3 --out " + td.path.string()), 0);
    auto evk_file = btf::read_file((td.path / "evk.btf").string());
    auto c = btf::unwrap_container(evk_file);
    EXPECT_EQ(c.tag, btf::artifact_tag::evaluation_key);
    EXPECT_EQ(c.payload.size(), btf::params::toy().evk_bytes());
    auto sizes = read_json(td.path / "sizes.json");
    EXPECT_EQ(sizes.at("evk").get<std::uint64_t>(), btf::params::toy().evk_bytes());
}

TEST(cli, setup_register_verify_state_flow) {
    temp_dir td;
    auto state = (td.path / "state").string();
    ASSERT_EQ(run("setup --params toy --model btf --lw 64 --seed 9 --state " + state), 0);
    ASSERT_EQ(run("register --state " + state + " --feature-seed 4"), 0);
    // matching probe accepts with exit 0
    EXPECT_EQ(run("verify --state " + state + " --probe-seed 4"), 0);
    // an unrelated random probe rejects with exit 3
    EXPECT_EQ(run("verify --state " + state + " --probe-seed 5"), 3);
}

TEST(cli, bench_is_deterministic_and_report_runs) {
    temp_dir td;
    auto led = [&](const std::string& model, const std::string& name) {
        return "bench --params toy --model " + model + " --lw 64 --seed 7 --out " +
               (td.path / name).string();
    };
    ASSERT_EQ(run(led("btf", "btf.json")), 0);
    ASSERT_EQ(run(led("btf", "btf2.json")), 0);
    ASSERT_EQ(run(led("st-fhe", "st.json")), 0);
    ASSERT_EQ(run(led("orig-tc", "tc.json")), 0);

    auto a = read_json(td.path / "btf.json");
    auto b = read_json(td.path / "btf2.json");
    EXPECT_EQ(a.at("entries"), b.at("entries"));  // seeded ledger determinism

    ASSERT_EQ(run("report --in " + (td.path / "btf.json").string() + " " +
                  (td.path / "st.json").string() + " " + (td.path / "tc.json").string() +
                  " --out " + (td.path / "report.json").string()),
              0);
    auto rep = read_json(td.path / "report.json");
    EXPECT_GT(rep.at("ratio_st_fhe").get<double>(), 1.0);
    EXPECT_GT(rep.at("ratio_orig_tc").get<double>(), rep.at("ratio_st_fhe").get<double>());
}

TEST(cli, scaling_report) {
    temp_dir td;
    auto out = (td.path / "scaling.json").string();
    ASSERT_EQ(run("scaling --params tfhe128 --nc 10 --out " + out), 0);
    auto j = read_json(out);
    EXPECT_EQ(j.at("n_c").get<int>(), 10);
    EXPECT_EQ(j.at("st_fhe_server").get<std::uint64_t>(),
              10u * btf::params::tfhe128().evk_bytes());
}
