#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_env.hpp"
#include "utilbench/errors.hpp"
#include "utilbench/experiment.hpp"
#include "utilbench/fixture.hpp"

using namespace utilbench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every file under dir, relative path -> bytes.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return out;
}

struct Workspace {
    Workspace() {
        FixtureOptions o;
        o.n_queries = 12;
        write_fixture(make_fixture(o), dir.path());
    }
    ExperimentConfig config() const { return ExperimentConfig::load(dir / "config.json"); }
    fs::path out() const { return dir / "out"; }
    testenv::TempDir dir;
};

RunOptions resume() {
    RunOptions r;
    r.resume = true;
    return r;
}

}  // namespace

TEST(Experiment, UnknownMethodRejectedBeforeAnyCall) {
    Workspace w;
    std::ifstream in(w.dir / "config.json");
    auto j = nlohmann::json::parse(in);
    j["methods"] = {"pointwise", "telepathy"};
    EXPECT_THROW(ExperimentConfig::from_json(j, w.dir.path()), ValidationError);
    EXPECT_FALSE(fs::exists(w.out()));
}

TEST(Experiment, ConfigValidation) {
    Workspace w;
    std::ifstream in(w.dir / "config.json");
    const auto base = nlohmann::json::parse(in);

    auto missing = base;
    missing["data"]["queries"] = "nope.jsonl";
    EXPECT_THROW(ExperimentConfig::from_json(missing, w.dir.path()).validate(), ValidationError);

    auto key = base;
    key["backends"][0]["api_key"] = "sk-123";
    EXPECT_THROW(ExperimentConfig::from_json(key, w.dir.path()), ValidationError);

    auto none = base;
    none["backends"] = nlohmann::json::array();
    EXPECT_THROW(ExperimentConfig::from_json(none, w.dir.path()).validate(), ValidationError);

    auto dup = base;
    dup["backends"][1]["backend_id"] = base["backends"][0]["backend_id"];
    EXPECT_THROW(ExperimentConfig::from_json(dup, w.dir.path()).validate(), ValidationError);

    auto k0 = base;
    k0["metric_k"] = {0};
    EXPECT_THROW(ExperimentConfig::from_json(k0, w.dir.path()).validate(), ValidationError);

    EXPECT_NO_THROW(ExperimentConfig::from_json(base, w.dir.path()).validate());
    EXPECT_THROW(stage_from_string("gold-ish"), ValidationError);
    EXPECT_EQ(stage_from_string("eval-set"), Stage::eval_set);
}

TEST(Experiment, FullRunThenResumeMakesNoCalls) {
    Workspace w;
    const auto cfg = w.config();
    const auto first = run_experiment(cfg);
    EXPECT_EQ(first.stages_run.size(), std::size(kAllStages));
    EXPECT_GT(first.stats.backend_calls, 0);
    ASSERT_FALSE(first.report.is_null());
    for (const char* f : {"report.json", "report.txt", "overlap.csv", "ppl.csv"}) {
        EXPECT_TRUE(fs::exists(w.out() / "report" / f)) << f;
    }
    for (const auto& b : cfg.backends) {
        for (const char* stage : {"partition", "gold", "judge", "pseudo", "eval-set", "eval-rank", "eval-rag"}) {
            EXPECT_TRUE(fs::exists(w.out() / stage / (b.descriptor.backend_id + ".jsonl")))
                << stage << " " << b.descriptor.backend_id;
        }
    }

    const auto again = run_experiment(cfg, resume());
    EXPECT_TRUE(again.stages_run.empty());
    EXPECT_EQ(again.stats.backend_calls, 0);
    EXPECT_EQ(again.report, first.report);
}

TEST(Experiment, DeletingReportRecomputesWithoutGenerations) {
    Workspace w;
    const auto cfg = w.config();
    const auto first = run_experiment(cfg);
    const std::string before = slurp(w.out() / "report" / "report.json");
    fs::remove_all(w.out() / "report");
    const auto again = run_experiment(cfg, resume());
    EXPECT_EQ(again.stages_run, (std::vector<std::string>{"report"}));
    EXPECT_EQ(again.stats.backend_calls, 0);
    EXPECT_EQ(slurp(w.out() / "report" / "report.json"), before);
}

TEST(Experiment, StageIsolation) {
    Workspace w;
    const auto cfg = w.config();
    run_experiment(cfg);
    const auto before = snapshot(w.out());
    const auto gold_time = fs::last_write_time(w.out() / "gold" / "mock_a.jsonl");
    fs::remove_all(w.out() / "eval-rag");
    const auto again = run_experiment(cfg, resume());
    EXPECT_EQ(again.stages_run,
              (std::vector<std::string>{"eval-rag", "transfer", "overlap", "ppl", "report"}));
    EXPECT_EQ(fs::last_write_time(w.out() / "gold" / "mock_a.jsonl"), gold_time);
    // everything served from cache, and the outputs are unchanged
    EXPECT_EQ(again.stats.backend_calls, 0);
    EXPECT_EQ(snapshot(w.out()), before);
}

TEST(Experiment, Idempotent) {
    Workspace w;
    const auto cfg = w.config();
    run_experiment(cfg);
    const auto first = snapshot(w.out());
    fs::remove_all(w.out());
    run_experiment(cfg);
    EXPECT_EQ(snapshot(w.out()), first);
}

TEST(Experiment, SingleStageNeedsPriorArtifacts) {
    Workspace w;
    const auto cfg = w.config();
    RunOptions only;
    only.only = Stage::eval_set;
    EXPECT_THROW(run_experiment(cfg, only), ValidationError);

    RunOptions until;
    until.until = Stage::gold;
    const auto r = run_experiment(cfg, until);
    EXPECT_EQ(r.stages_run, (std::vector<std::string>{"ingest", "partition", "gold"}));
    EXPECT_FALSE(fs::exists(w.out() / "judge"));
}

TEST(Experiment, BackendFilter) {
    Workspace w;
    const auto cfg = w.config();
    RunOptions o;
    o.until = Stage::gold;
    o.backend_filter = "mock_b";
    run_experiment(cfg, o);
    EXPECT_TRUE(fs::exists(w.out() / "gold" / "mock_b.jsonl"));
    EXPECT_FALSE(fs::exists(w.out() / "gold" / "mock_a.jsonl"));
    o.backend_filter = "nobody";
    EXPECT_THROW(run_experiment(cfg, o), ValidationError);
}

TEST(Experiment, ForceBypassesCache) {
    Workspace w;
    const auto cfg = w.config();
    RunOptions o;
    o.until = Stage::partition;
    const auto first = run_experiment(cfg, o);
    EXPECT_GT(first.stats.backend_calls, 0);
    const auto cached = run_experiment(cfg, o);
    EXPECT_EQ(cached.stats.backend_calls, 0);
    o.force = true;
    const auto forced = run_experiment(cfg, o);
    EXPECT_EQ(forced.stats.backend_calls, first.stats.backend_calls);
}
