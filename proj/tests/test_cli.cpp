#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

// runs the CLI through the shell; `prefix` goes before the binary (env vars);
// with merge_stderr the diagnostic stream is folded into the captured output,
// otherwise it is discarded so stdout stays parseable
RunResult run_cli(const std::string& args, const std::string& prefix = "",
                  bool merge_stderr = true) {
    const std::string cmd = prefix + std::string(SRP_CLI_PATH) + " " + args +
                            (merge_stderr ? " 2>&1" : " 2>/dev/null");
    RunResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (size_t got = fread(buf, 1, sizeof(buf), pipe)) res.out.append(buf, got);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string first_line(const std::string& text) {
    const size_t nl = text.find('\n');
    return nl == std::string::npos ? text : text.substr(0, nl);
}

nlohmann::json manifest_of(const std::string& args, const std::string& prefix = "") {
    const RunResult res = run_cli(args, prefix, false);
    REQUIRE(res.exit_code == 0);
    return nlohmann::json::parse(first_line(res.out));
}

const std::string quick_hn = "hn --alpha 0 --n-max 5";

} // namespace

TEST_CASE("version, help and argument errors") {
    const RunResult version = run_cli("--version");
    CHECK(version.exit_code == 0);
    CHECK(version.out.find("srp 0.1.0") != std::string::npos);

    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("rho-c --help").exit_code == 0);

    // no subcommand: usage on stderr, config-error exit
    const RunResult bare = run_cli("");
    CHECK(bare.exit_code == 2);

    const RunResult missing = run_cli("rho-c");
    CHECK(missing.exit_code == 2);
    CHECK(missing.out.find("--beta") != std::string::npos);

    CHECK(run_cli("--no-such-flag").exit_code == 2);
    CHECK(run_cli(quick_hn + " --weights bogus").exit_code == 2);
    // overrides belong to the asymptotic regime only
    CHECK(run_cli(quick_hn + " --override 2:0.5").exit_code == 2);
}

TEST_CASE("run manifest") {
    const nlohmann::json m = manifest_of(quick_hn + " --seed 77");
    CHECK(m.at("record") == "manifest");
    CHECK(m.at("command") == "hn");
    CHECK(m.at("seed") == 77);
    CHECK(m.at("version") == "srp 0.1.0");
    CHECK(m.at("params").is_object());
    CHECK(m.at("config_digest").is_string());
    CHECK(!m.at("config_digest").get<std::string>().empty());
}

TEST_CASE("seed precedence: flag, config file, environment, default") {
    // default
    CHECK(manifest_of(quick_hn).at("seed") == 1);
    // environment overrides the default
    CHECK(manifest_of(quick_hn, "SRP_SEED=123 ").at("seed") == 123);
    // config file overrides the environment
    const std::string cfg = "/tmp/srp_test_cli.ini";
    {
        std::ofstream f(cfg);
        f << "seed=9\n";
    }
    CHECK(manifest_of(quick_hn + " --config " + cfg).at("seed") == 9);
    CHECK(manifest_of(quick_hn + " --config " + cfg, "SRP_SEED=123 ").at("seed") == 9);
    // explicit flag beats everything
    CHECK(manifest_of(quick_hn + " --config " + cfg + " --seed 11", "SRP_SEED=123 ").at("seed") ==
          11);

    const RunResult pc = run_cli("--print-config " + quick_hn);
    CHECK(pc.exit_code == 0);
    CHECK(pc.out.find("seed") != std::string::npos);
}

TEST_CASE("repeat runs are byte-identical and seeds change the stream") {
    const std::string cmd = "sample-fourier --beta 0.0795774715 --n-points 32 --density 4 "
                            "--sampler exact --samples 5 --seed 3";
    const RunResult a = run_cli(cmd, "", false);
    const RunResult b = run_cli(cmd, "", false);
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(a.out == b.out);

    const RunResult c = run_cli("sample-fourier --beta 0.0795774715 --n-points 32 --density 4 "
                                "--sampler exact --samples 5 --seed 4",
                                "", false);
    CHECK(c.exit_code == 0);
    CHECK(c.out != a.out);
}

TEST_CASE("self checks pass end to end") {
    const RunResult res = run_cli("selftest --seed 5");
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("10/10 checks passed") != std::string::npos);
}

TEST_CASE("oversized exact-sampler requests are refused with a budget error") {
    const RunResult res = run_cli("sample-fourier --beta 0.0795774715 --n-points 4000 "
                                  "--density 5 --sampler exact --samples 1 --seed 2");
    CHECK(res.exit_code == 4);
    CHECK(res.out.find("budget refusal") != std::string::npos);
}

TEST_CASE("spatial sampler runs headless") {
    const RunResult res = run_cli("sample-spatial --beta 0.05 --n-points 8 --density 2 "
                                  "--sweeps 60 --burn-in 20 --thinning 4 --seed 6",
                                  "", false);
    CHECK(res.exit_code == 0);
    const bool has_diagnostics =
        res.out.find("\"record\":\"diagnostics\"") != std::string::npos ||
        res.out.find("\"record\": \"diagnostics\"") != std::string::npos;
    CHECK(has_diagnostics);
}
