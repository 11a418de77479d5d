// utilbench: command-line driver for the utility judgment benchmark.
//
// Exit codes: 0 success, 1 invalid input or config, 2 runtime failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "utilbench/errors.hpp"
#include "utilbench/experiment.hpp"
#include "utilbench/fixture.hpp"

namespace {

using namespace utilbench;

struct CommonFlags {
    std::string config;
    std::string stage;
    std::string backend;
    bool resume = false;
    bool force = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_stage) {
    cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    if (with_stage) cmd->add_option("--stage", f.stage, "stop after this stage");
    cmd->add_option("--backend", f.backend, "only run this backend id");
    cmd->add_flag("--resume", f.resume, "keep artifacts of stages that are already complete");
    cmd->add_flag("--force", f.force, "ignore cached backend responses");
    cmd->add_flag("-q,--quiet", f.quiet, "log warnings and errors only");
}

int run(const CommonFlags& f, std::optional<Stage> only) {
    if (f.quiet) spdlog::set_level(spdlog::level::warn);
    const auto config = ExperimentConfig::load(f.config);
    RunOptions options;
    options.only = only;
    if (!f.stage.empty()) options.until = stage_from_string(f.stage);
    if (!f.backend.empty()) options.backend_filter = f.backend;
    options.resume = f.resume;
    options.force = f.force;
    const auto bundle = run_experiment(config, options);
    if (!bundle.text.empty() && !f.quiet) std::cout << bundle.text;
    spdlog::info("done: {} backend calls, {} cache hits, {} retries", bundle.stats.backend_calls,
                 bundle.stats.cache_hits, bundle.stats.retries);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Build LLM-specific gold utility sets and evaluate utility judgments"};
    app.require_subcommand(1);

    const std::map<std::string, Stage> stage_commands{
        {"ingest-check", Stage::ingest}, {"partition", Stage::partition}, {"build-gold", Stage::gold},
        {"judge", Stage::judge},         {"eval-set", Stage::eval_set},   {"eval-rank", Stage::eval_rank},
        {"eval-rag", Stage::eval_rag},   {"transfer", Stage::transfer},   {"overlap", Stage::overlap},
        {"ppl", Stage::ppl},             {"report", Stage::report},
    };

    CommonFlags flags;
    std::map<CLI::App*, Stage> stage_of;
    for (const auto& [name, stage] : stage_commands) {
        auto* cmd = app.add_subcommand(name, "run the " + std::string(to_string(stage)) + " stage on prior artifacts");
        add_common(cmd, flags, false);
        stage_of[cmd] = stage;
    }
    auto* run_cmd = app.add_subcommand("run", "run every stage in order");
    add_common(run_cmd, flags, true);

    std::string fixture_dir;
    std::uint64_t seed = FixtureOptions{}.seed;
    double distractor_rate = 0.0;
    auto* fixture_cmd = app.add_subcommand("make-fixture", "write a synthetic mock benchmark and its config");
    fixture_cmd->add_option("--out", fixture_dir, "output directory")->required();
    fixture_cmd->add_option("--seed", seed, "generator seed");
    fixture_cmd->add_option("--distractor-readable-rate", distractor_rate, "readable share of distractors")
        ->check(CLI::Range(0.0, 1.0));

    CLI11_PARSE(app, argc, argv);

    try {
        if (fixture_cmd->parsed()) {
            FixtureOptions options;
            options.seed = seed;
            options.distractor_readable_rate = distractor_rate;
            write_fixture(make_fixture(options), fixture_dir);
            std::cout << "fixture written to " << fixture_dir << "\n";
            return 0;
        }
        if (run_cmd->parsed()) return run(flags, std::nullopt);
        for (const auto& [cmd, stage] : stage_of) {
            if (cmd->parsed()) return run(flags, stage);
        }
    } catch (const ValidationError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const ParseError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const CapabilityError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 2;
}
