#include "amerput/cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / ("amerput_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

CliRun cli(const std::string& args, const std::string& env = "") {
    const fs::path out = scratch() / "stdout.txt";
    const std::string cmd = env + " " + AMERPUT_CLI_PATH + " " + args + " > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

std::string write_market(const std::string& name, const std::string& american, const std::string& extra = "") {
    const fs::path p = scratch() / name;
    std::ofstream f(p);
    f << R"({"spot": 1, "rate": 0.6931471805599453, "maturity": 1,
             "european": [{"strike": 1, "price": 0}, {"strike": 2, "price": 0.125}, {"strike": 3, "price": 0.5}],
             "american": )"
      << american << extra << "}\n";
    return p.string();
}

const std::string kWorked = R"([{"strike": 0.6, "price": 0}, {"strike": 1, "price": 0.1}])";

} // namespace

TEST(Cli, CheckWorkedMarketPasses) {
    const CliRun r = cli("check --format text --input " + write_market("w.json", kWorked));
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("passed"), std::string::npos);
}

TEST(Cli, MonotonicityBreachListsStrikes) {
    const std::string path =
        write_market("mono.json", R"([{"strike": 0.6, "price": 0.05}, {"strike": 1, "price": 0.01}])");
    const CliRun r = cli("check --input " + path);
    EXPECT_EQ(r.code, 1);
    const auto doc = nlohmann::json::parse(r.out);
    bool found = false;
    for (const auto& v : doc.at("report").at("violations"))
        if (v.at("kind") == "A_MONOTONE") {
            found = true;
            EXPECT_FALSE(v.at("strikes").empty());
        }
    EXPECT_TRUE(found);

    const CliRun a = cli("arbitrage --input " + path);
    EXPECT_EQ(a.code, 1);
    const auto strategies = nlohmann::json::parse(a.out).at("strategies");
    ASSERT_FALSE(strategies.empty());
    for (const auto& s : strategies) {
        EXPECT_GT(s.at("initial_credit").get<double>(), 0.0);
        EXPECT_TRUE(s.at("payoffs_nonnegative").get<bool>());
    }
}

TEST(Cli, BuildThenVerify) {
    const std::string market = write_market("wb.json", kWorked);
    const std::string model = (scratch() / "model.json").string();
    EXPECT_EQ(cli("build --input " + market + " --output " + model).code, 0);
    const CliRun v = cli("verify --input " + model + " --market " + market);
    EXPECT_EQ(v.code, 0);
    EXPECT_TRUE(nlohmann::json::parse(v.out).at("reprice").at("passed").get<bool>());
}

TEST(Cli, RoundtripSeed) {
    const CliRun r = cli("roundtrip --seed 7");
    EXPECT_EQ(r.code, 0);
    EXPECT_LE(nlohmann::json::parse(r.out).at("max_reprice_error").get<double>(), 1e-8);
}

TEST(Cli, DemoMatchesWorkedValues) {
    const CliRun r = cli("demo");
    EXPECT_EQ(r.code, 0);
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_NEAR(doc.at("critical_time").get<double>(), std::log2(1.1), 1e-12);
    EXPECT_NEAR(doc.at("p_down").get<double>(), 0.275, 1e-12);
    EXPECT_NEAR(doc.at("s_down").get<double>(), 0.6, 1e-12);
}

TEST(Cli, InputErrorsExitTwo) {
    EXPECT_EQ(cli("check --input /nonexistent/market.json").code, 2);
    const fs::path bad = scratch() / "bad.json";
    std::ofstream(bad) << "{\"spot\": 1,";
    EXPECT_EQ(cli("check --input " + bad.string()).code, 2);
    EXPECT_EQ(cli("check --input " + write_market("neg.json", kWorked, R"(, "tolerance": -1)")).code, 2);
    EXPECT_EQ(cli("check").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
    EXPECT_EQ(cli("roundtrip --depth 9").code, 2);
    EXPECT_EQ(cli("roundtrip --branching 5").code, 2);
}

TEST(Cli, OutputIsByteDeterministic) {
    const std::string path = write_market("det.json", kWorked);
    for (const std::string args : {"build --input " + path, "arbitrage --format text --input " + path,
                                   std::string("roundtrip --seed 3 --depth 3")}) {
        const CliRun a = cli(args);
        const CliRun b = cli(args);
        EXPECT_EQ(a.out, b.out) << args;
        EXPECT_FALSE(a.out.empty());
    }
}

TEST(Cli, TolerancePrecedence) {
    // A(1) exceeds E(2) by 1e-6
    const std::string path =
        write_market("tol.json", R"([{"strike": 0.6, "price": 0}, {"strike": 1, "price": 0.125001}])");
    EXPECT_EQ(cli("check --input " + path).code, 1);
    EXPECT_EQ(cli("check --input " + path, "AMERPUT_TOLERANCE=1e-4").code, 0);
    EXPECT_EQ(cli("check --tolerance 1e-9 --input " + path, "AMERPUT_TOLERANCE=1e-4").code, 1);
    EXPECT_EQ(cli("check --tolerance 1e-4 --input " + path).code, 0);
    // a tolerance in the file beats the environment
    const std::string pinned = write_market(
        "tol2.json", R"([{"strike": 0.6, "price": 0}, {"strike": 1, "price": 0.125001}])", R"(, "tolerance": 1e-9)");
    EXPECT_EQ(cli("check --input " + pinned, "AMERPUT_TOLERANCE=1e-4").code, 1);
    EXPECT_EQ(cli("check --input " + path, "AMERPUT_TOLERANCE=abc").code, 2);
}

TEST(Cli, RunRejectsNonPositiveTolerance) {
    amerput::RunConfig cfg;
    cfg.command = amerput::Command::Demo;
    cfg.tolerance = 0.0;
    std::ostringstream out, err;
    EXPECT_EQ(amerput::run(cfg, out, err), 2);
    EXPECT_NE(err.str().find("tolerance"), std::string::npos);
}
