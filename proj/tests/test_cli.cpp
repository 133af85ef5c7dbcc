#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "toda_cli_test";

int run(const std::string& args, const fs::path& capture = {}) {
    std::string cmd = std::string(TODA_CLI_PATH) + " " + args;
    if (!capture.empty())
        cmd += " > " + capture.string() + " 2>/dev/null";
    else
        cmd += " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_cfg(const std::string& name, const json& j) {
    fs::create_directories(kTmp);
    fs::path p = kTmp / name;
    std::ofstream(p) << j.dump();
    return p;
}

json sample_cfg() {
    return {{"n_modes", 64},
            {"x_modes", 64},
            {"lambda", {{1, 1.0, 0.0}, {0, 0.1, 0.0}}},
            {"lambdabar", {{-1, 0.25, 0.0}}},
            {"lambda_x", {{1, 0, 0.05, 0.0}}}};
}

json slurp(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

}  // namespace

TEST_CASE("validate: sample point is in the big cell") {
    auto cfg = write_cfg("sample.json", sample_cfg());
    auto out = kTmp / "validate.json";
    CHECK(run("validate " + cfg.string(), out) == 0);
    json r = slurp(out);
    CHECK(r["in_m1"] == true);
    CHECK(r["in_m0"] == true);
    CHECK(r["gamma_winding"] == 1);
}

TEST_CASE("validate: vanishing leading coefficient reports not-in-M1") {
    json cfg = sample_cfg();
    cfg["lambdabar"] = json::array();
    cfg.erase("lambda_x");
    auto p = write_cfg("degenerate.json", cfg);
    auto out = kTmp / "validate2.json";
    CHECK(run("validate " + p.string(), out) == 1);
    CHECK(slurp(out)["in_m1"] == false);
}

TEST_CASE("exit code 3 on I/O and parse problems") {
    CHECK(run("validate " + (kTmp / "missing.json").string()) == 3);
    fs::create_directories(kTmp);
    std::ofstream(kTmp / "garbage.json") << "{not json";
    CHECK(run("validate " + (kTmp / "garbage.json").string()) == 3);
}

TEST_CASE("exit code 2 on suite precondition violations") {
    json cfg = sample_cfg();
    cfg["lambdabar"] = json::array();
    cfg.erase("lambda_x");
    auto p = write_cfg("offmanifold.json", cfg);
    CHECK(run("check zs " + p.string()) == 2);
}

TEST_CASE("check suites pass on the sample point and report structure") {
    auto cfg = write_cfg("sample.json", sample_cfg());
    for (std::string s : {"metric", "classical", "levelt"}) {
        auto out = kTmp / ("check_" + s + ".json");
        CHECK(run("check " + s + " " + cfg.string(), out) == 0);
        json r = slurp(out);
        CHECK(r["suite"] == s);
        CHECK(r["pass"] == true);
        for (auto& c : r["checks"]) {
            CHECK(c["pass"] == true);
            CHECK(c["residual"].get<double>() <= c["tolerance"].get<double>());
            CHECK(c.contains("name"));
            CHECK(c.contains("indices"));
            CHECK(c.contains("runtime_ms"));
        }
    }
}

TEST_CASE("tolerance override can force a failure exit code") {
    auto cfg = write_cfg("sample.json", sample_cfg());
    CHECK(run("check metric " + cfg.string() + " --tol 1e-30") == 1);
}

TEST_CASE("reports are deterministic given config and seed") {
    auto cfg = write_cfg("sample.json", sample_cfg());
    auto o1 = kTmp / "det1.json", o2 = kTmp / "det2.json";
    CHECK(run("check flatness " + cfg.string() + " --seed 7", o1) == 0);
    CHECK(run("check flatness " + cfg.string() + " --seed 7", o2) == 0);
    json a = slurp(o1), b = slurp(o2);
    for (std::size_t i = 0; i < a["checks"].size(); ++i)
        CHECK(a["checks"][i]["residual"] == b["checks"][i]["residual"]);
}

TEST_CASE("evolve: zero time reproduces the snapshot byte-for-byte") {
    auto cfg = write_cfg("sample.json", sample_cfg());
    auto s1 = kTmp / "snap1.json", s2 = kTmp / "snap2.json";
    CHECK(run("evolve " + cfg.string() + " --flow v,1 --time 0 --out " + s1.string()) == 0);
    CHECK(run("evolve " + cfg.string() + " --flow v,1 --time 0 --out " + s2.string()) == 0);
    std::ifstream f1(s1), f2(s2);
    std::stringstream b1, b2;
    b1 << f1.rdbuf();
    b2 << f2.rdbuf();
    CHECK(b1.str() == b2.str());
    CHECK(!b1.str().empty());
}

TEST_CASE("evolve: conserved quantities drift below tolerance") {
    auto cfg = write_cfg("sample.json", sample_cfg());
    auto out = kTmp / "evolve.json";
    CHECK(run("evolve " + cfg.string() + " --flow u,0 --time 0.05 --dt 1e-3", out) == 0);
    json r = slurp(out);
    CHECK(r["max_drift"].get<double>() < 1e-7);
}

TEST_CASE("TODA_THREADS parallel run gives the same report") {
    auto cfg = write_cfg("sample.json", sample_cfg());
    auto o1 = kTmp / "par1.json", o2 = kTmp / "par2.json";
    CHECK(run("check orthogonality " + cfg.string(), o1) == 0);
    std::string cmd = "TODA_THREADS=4 " + std::string(TODA_CLI_PATH) + " check orthogonality " +
                      cfg.string() + " > " + o2.string() + " 2>/dev/null";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    json a = slurp(o1), b = slurp(o2);
    REQUIRE(a["checks"].size() == b["checks"].size());
    for (std::size_t i = 0; i < a["checks"].size(); ++i) {
        CHECK(a["checks"][i]["name"] == b["checks"][i]["name"]);
        CHECK(a["checks"][i]["residual"] == b["checks"][i]["residual"]);
    }
}
