#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <sys/wait.h>

#include "test_env.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(UTILBENCH_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, EndToEndAndExitCodes) {
    testenv::TempDir dir;
    const std::string d = dir.path().string();
    ASSERT_EQ(run("make-fixture --out " + d), 0);
    const std::string cfg = "--config " + (dir / "config.json").string();

    EXPECT_EQ(run("eval-set -q " + cfg), 1);  // no prior artifacts
    EXPECT_EQ(run("run -q --stage gold " + cfg), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "gold" / "mock_a.jsonl"));
    EXPECT_FALSE(fs::exists(dir / "out" / "judge"));
    EXPECT_EQ(run("judge -q " + cfg), 0);
    EXPECT_EQ(run("run -q --resume " + cfg), 0);
    const std::string report = slurp(dir / "out" / "report" / "report.json");
    EXPECT_FALSE(report.empty());

    fs::remove_all(dir / "out" / "report");
    EXPECT_EQ(run("report -q " + cfg), 0);
    EXPECT_EQ(slurp(dir / "out" / "report" / "report.json"), report);

    EXPECT_EQ(run("run -q --stage nonsense " + cfg), 1);
    EXPECT_EQ(run("run -q --backend nobody " + cfg), 1);
    EXPECT_NE(run("run -q --config " + (dir / "missing.json").string()), 0);
}

TEST(Cli, InvalidConfigExitsOne) {
    testenv::TempDir dir;
    ASSERT_EQ(run("make-fixture --out " + dir.path().string()), 0);
    std::ifstream in(dir / "config.json");
    auto j = nlohmann::json::parse(in);
    in.close();
    j["methods"] = {"nonsense"};
    std::ofstream(dir / "config.json") << j.dump();
    EXPECT_EQ(run("run -q --config " + (dir / "config.json").string()), 1);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, RuntimeFailureExitsTwo) {
    testenv::TempDir dir;
    ASSERT_EQ(run("make-fixture --out " + dir.path().string()), 0);
    std::ifstream in(dir / "config.json");
    auto j = nlohmann::json::parse(in);
    in.close();
    // an unreachable remote backend fails at run time, not validation
    j["backends"] = {{{"backend_id", "remote"},
                      {"kind", "http_openai_compatible"},
                      {"endpoint", "http://127.0.0.1:9/v1"},
                      {"model_name", "m"},
                      {"capabilities", {"generate"}}}};
    j["methods"] = {"pointwise"};
    j["retry"] = {{"max_attempts", 2}, {"base_delay_ms", 1}};
    std::ofstream(dir / "config.json") << j.dump();
    EXPECT_EQ(run("run -q --stage partition --config " + (dir / "config.json").string()), 2);
}

TEST(Cli, TwoRunsByteIdentical) {
    testenv::TempDir a, b;
    ASSERT_EQ(run("make-fixture --out " + a.path().string()), 0);
    ASSERT_EQ(run("make-fixture --out " + b.path().string()), 0);
    ASSERT_EQ(run("run -q --config " + (a / "config.json").string()), 0);
    ASSERT_EQ(run("run -q --config " + (b / "config.json").string()), 0);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a / "out")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a / "out");
        EXPECT_EQ(slurp(e.path()), slurp(b / "out" / rel)) << rel;
        ++files;
    }
    EXPECT_GT(files, 20u);
}
