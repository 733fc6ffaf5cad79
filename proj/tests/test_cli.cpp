#include <doctest.h>

#include <filesystem>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lipreach/cli.hpp"
#include "lipreach/errors.hpp"
#include "lipreach/io.hpp"

using namespace lipreach;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "lipreach");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("lipreach-cli-" + name);
    fs::remove_all(p);
    return p.string();
}

const std::string kChain = std::string(LIPREACH_SOURCE_DIR) + "/models/chain2.mdp";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes follow the taxonomy") {
    CHECK(invoke({"run", "--model", kChain, "--mode", "vi-lower", "--xi", "0.4", "--out", fresh_dir("yes")}).code == cli::kOk);
    CHECK(invoke({"run", "--model", kChain, "--mode", "vi-lower", "--xi", "0.6", "--max-steps", "10000", "--out",
               fresh_dir("budget")})
              .code == cli::kBudget);
    CHECK(invoke({"run", "--model", "frequency-chain", "--bad-constant", "--epsilon", "0.01", "--out", fresh_dir("bad")})
              .code == cli::kUnsound);
    CHECK(invoke({"run", "--model", "no-such-model", "--out", fresh_dir("unknown")}).code == cli::kUsage);
    CHECK(invoke({"run"}).code == cli::kUsage);
    CHECK(invoke({"run", "--model", kChain, "--epsilon", "abc"}).code == cli::kUsage);
    CHECK(invoke({"frobnicate"}).code == cli::kUsage);

    const std::string broken = (fs::temp_directory_path() / "lipreach-cli-broken.mdp").string();
    io::write_file_atomic(broken, "states 2\ninitial 0\ntarget 1\ntrans 0 0 1 x\n");
    Run r = invoke({"run", "--model", broken, "--out", fresh_dir("parse")});
    CHECK(r.code == cli::kParse);
    auto j = nlohmann::json::parse(r.err);
    CHECK(j["line"] == 4);
    CHECK(j["column"] == 13);
}

TEST_CASE("a failed run writes an error record") {
    const std::string dir = fresh_dir("error");
    Run r = invoke({"run", "--model", "frequency-chain", "--bad-constant", "--epsilon", "0.01", "--out", dir});
    REQUIRE(r.code == cli::kUnsound);
    auto j = nlohmann::json::parse(io::read_file(dir + "/error.json"));
    CHECK(j.contains("error"));
    CHECK(j == nlohmann::json::parse(r.err));
}

TEST_CASE("same seed gives byte-identical outputs") {
    const std::string a = fresh_dir("det-a"), b = fresh_dir("det-b");
    for (const auto& dir : {a, b})
        REQUIRE(invoke({"run", "--model", "random-finite", "--seed", "5", "--epsilon", "0.02", "--out", dir, "--snapshot"}).code ==
                cli::kOk);
    for (const char* f : {"trace.csv", "curve.csv", "actionmap.csv", "summary.csv", "snapshot.lrs"}) {
        CAPTURE(f);
        CHECK(io::read_file(a + "/" + f) == io::read_file(b + "/" + f));
    }
    CHECK(fs::exists(a + "/timing.csv"));
}

TEST_CASE("every output parses and the summary agrees with the trace") {
    const std::string dir = fresh_dir("parse-all");
    REQUIRE(invoke({"run", "--model", "frequency-chain", "--k", "2", "--epsilon", "0.05", "--curve-res", "11", "--map-res",
                 "5", "--out", dir, "--snapshot"})
                .code == cli::kOk);
    auto [th, trace] = io::read_trace(io::read_file(dir + "/trace.csv"));
    auto [ch, curve] = io::read_curve(io::read_file(dir + "/curve.csv"));
    auto [ah, amap] = io::read_action_map(io::read_file(dir + "/actionmap.csv"));
    auto [sh, summary] = io::read_summary(io::read_file(dir + "/summary.csv"));
    REQUIRE_FALSE(trace.empty());
    // Eleven points on the chain's interval plus one for each absorbing state.
    CHECK(curve.size() == 13);
    CHECK(amap.size() == 7);
    for (const auto& c : curve) CHECK(c.lower <= c.upper + 1e-12);
    std::map<std::string, std::string> kv(summary.begin(), summary.end());
    CHECK(kv["outcome"] == "bounds");
    CHECK(std::stod(kv["lower"]) == trace.back().lower);
    CHECK(std::stod(kv["upper"]) == trace.back().upper);
    CHECK(*th.find("model") == "frequency-chain");
    CHECK(*sh.find("seed") == "1");
    MdpModel m = models::catalog("frequency-chain", [] {
        models::CatalogOptions o;
        o.k = 2;
        return o;
    }());
    CHECK(io::read_snapshot(io::read_file(dir + "/snapshot.lrs"), m).size() == std::stoul(kv["store_size"]));
}

TEST_CASE("warm start from a snapshot") {
    const std::string first = fresh_dir("warm-1"), second = fresh_dir("warm-2");
    REQUIRE(invoke({"run", "--model", "random-finite", "--epsilon", "0.01", "--out", first, "--snapshot"}).code == cli::kOk);
    REQUIRE(invoke({"run", "--model", "random-finite", "--epsilon", "0.01", "--out", second, "--warm-start",
                 first + "/snapshot.lrs"})
                .code == cli::kOk);
    auto [h, trace] = io::read_trace(io::read_file(second + "/trace.csv"));
    CHECK(trace.back().step <= 32);
    // A snapshot of another model is refused.
    CHECK(invoke({"run", "--model", "random-finite", "--model-seed", "2", "--out", fresh_dir("warm-3"), "--warm-start",
               first + "/snapshot.lrs"})
              .code == cli::kParse);
}

TEST_CASE("validate reports traps and bad files") {
    Run ok = invoke({"validate", "--model", "gravity-1d"});
    CHECK(ok.code == cli::kOk);
    CHECK(ok.out.find("ok") != std::string::npos);
    Run trap = invoke({"validate", "--model", "two-state"});
    CHECK(trap.code == cli::kOk);
    CHECK(trap.out.find("warning") != std::string::npos);
    CHECK(invoke({"validate", "--model", "nope"}).code == cli::kUsage);
}

TEST_CASE("reach-avoid, discounting and step bounds from the command line") {
    CHECK(invoke({"run", "--model", "navigation-2d", "--mode", "reach-avoid", "--avoid", "box:0:0.4;0:0.6;0.3", "--epsilon",
               "0.5", "--curve-res", "3", "--map-res", "3", "--out", fresh_dir("avoid")})
              .code == cli::kOk);
    const std::string disc = fresh_dir("gamma");
    REQUIRE(invoke({"run", "--model", "self-loop", "--gamma", "0.5", "--epsilon", "0.01", "--out", disc}).code == cli::kOk);
    auto [h, summary] = io::read_summary(io::read_file(disc + "/summary.csv"));
    std::map<std::string, std::string> kv(summary.begin(), summary.end());
    // 0.5 * 0.5 / (1 - 0.5 * 0.5) = 1/3
    CHECK(std::stod(kv["lower"]) <= 1.0 / 3 + 1e-9);
    CHECK(std::stod(kv["upper"]) >= 1.0 / 3 - 1e-9);
    CHECK(invoke({"run", "--model", "self-loop", "--mode", "step-bounded", "--horizon", "2", "--out", fresh_dir("steps")}).code ==
          cli::kOk);
    CHECK_THROWS_AS(cli::parse_shape("circle:0:1"), UsageError);
}

}  // TEST_SUITE
