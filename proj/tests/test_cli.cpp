#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("exitsim_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Result run(const std::string& args) {
    const fs::path err = scratch("stderr.txt");
    const std::string cmd = std::string(EXITSIM_CLI) + " " + args + " >/dev/null 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    Result r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = slurp(err);
    return r;
}

// small enough for a test run
const std::string kSmall = "--space_level 6 --time_level 10 --horizon 0.25 --particles 2000 --frontier_replicas 500";

}  // namespace

TEST(Cli, UnknownKindWritesNothing) {
    const fs::path out = scratch("unknown_kind");
    const Result r = run("bogus --out " + out.string());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("bogus"), std::string::npos);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, UnknownConfigKeyIsNamed) {
    const fs::path cfg = scratch("bad.json");
    std::ofstream(cfg) << "{ \"sigma1\": 0.5, \"not_a_key\": 3 }\n";
    const fs::path out = scratch("unknown_key");
    const Result r = run("solve --config " + cfg.string() + " --out " + out.string());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("not_a_key"), std::string::npos);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, BadFlagAndBadValue) {
    EXPECT_EQ(run("solve --no_such_flag 1").status, 2);
    const fs::path out = scratch("bad_value");
    EXPECT_EQ(run("solve --space_level abc --out " + out.string()).status, 2);
    EXPECT_EQ(run("solve --sigma1 -1 --out " + out.string()).status, 2);
}

TEST(Cli, RerunIsByteIdentical) {
    const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
    ASSERT_EQ(run("solve " + kSmall + " --seed 7 --b_seeds 2 --out " + a.string()).status, 0);
    ASSERT_EQ(run("solve " + kSmall + " --seed 7 --b_seeds 2 --out " + b.string()).status, 0);
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    ASSERT_EQ(manifest["runs"].size(), 1u);
    const auto& files = manifest["runs"][0]["files"];
    EXPECT_GE(files.size(), 4u);
    for (const auto& f : files) {
        const std::string name = f["name"];
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
        EXPECT_EQ(fs::file_size(a / name), f["bytes"].get<std::size_t>());
    }
    EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
    // path streams derive from the master seed
    EXPECT_EQ(manifest["runs"][0]["seeds"], nlohmann::json::array({7}));
}

TEST(Cli, ManifestAppends) {
    const fs::path out = scratch("append");
    ASSERT_EQ(run("solve " + kSmall + " --out " + out.string()).status, 0);
    ASSERT_EQ(run("lemma31 --lemma_seeds 200 --out " + out.string()).status, 0);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    ASSERT_EQ(manifest["runs"].size(), 2u);
    EXPECT_EQ(manifest["runs"][0]["kind"], "solve");
    EXPECT_EQ(manifest["runs"][1]["kind"], "lemma31");
    EXPECT_NE(manifest["runs"][0]["config_hash"], manifest["runs"][1]["config_hash"]);
}

TEST(Cli, ConfigFileAndOverride) {
    const fs::path cfg = scratch("good.json");
    std::ofstream(cfg) << "// test config\n{ \"space_level\": 6, \"time_level\": 10, \"horizon\": 0.25, \"seed\": 3 }\n";
    const fs::path out = scratch("override");
    ASSERT_EQ(run("solve --config " + cfg.string() + " --seed 9 --plots --out " + out.string()).status, 0);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["runs"][0]["config"]["seed"], 9);
    EXPECT_EQ(manifest["runs"][0]["config"]["space_level"], 6);
    EXPECT_TRUE(fs::exists(out / "exit_cdf.svg"));
}

TEST(Cli, SolverFailureHasDiagnostics) {
    const fs::path out = scratch("failure");
    const Result r = run("solve --scheme fixed_frame --space_level 7 --time_level 12 --horizon 0.25 --sigma1 0.5 --out " +
                         out.string());
    EXPECT_EQ(r.status, 3);
    EXPECT_TRUE(fs::exists(out / "failure_b0.json"));
    const auto f = nlohmann::json::parse(slurp(out / "failure_b0.json"));
    EXPECT_FALSE(f.empty());
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["runs"][0]["status"], "failed");
}

TEST(Cli, CalibrateReportsSecondOrder) {
    const fs::path out = scratch("calibrate");
    ASSERT_EQ(run("calibrate --out " + out.string()).status, 0);
    const auto j = nlohmann::json::parse(slurp(out / "calibrate.json"));
    ASSERT_TRUE(j["spatial_order"].is_number());
    const double order = j["spatial_order"];
    EXPECT_GE(order, 1.5);
    EXPECT_LE(order, 2.5);
}

TEST(Cli, BoundsAndCompareRun) {
    const fs::path out = scratch("bounds");
    ASSERT_EQ(run("bounds --range_replicas 2000 --gamma_replicas 2000 --out " + out.string()).status, 0);
    const auto j = nlohmann::json::parse(slurp(out / "bounds.json"));
    EXPECT_TRUE(j.contains("p"));
    EXPECT_TRUE(j.contains("gamma"));
    const fs::path cmp = scratch("compare");
    ASSERT_EQ(run("compare " + kSmall + " --grid_points 9 --out " + cmp.string()).status, 0);
    EXPECT_TRUE(fs::exists(cmp / "compare.csv"));
}
