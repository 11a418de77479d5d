#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "utilbench/gateway/gateway.hpp"
#include "utilbench/gateway/mock_backend.hpp"
#include "utilbench/types.hpp"

namespace utilbench {

struct DataPaths {
    std::filesystem::path queries;
    std::filesystem::path corpus;
    std::filesystem::path run;
    std::optional<std::filesystem::path> qrels;
};

struct BackendConfig {
    BackendDescriptor descriptor;
    std::optional<MockKnowledgeSpec> mock;
};

struct ExperimentConfig {
    int schema_version = 1;
    DataPaths data;
    std::vector<BackendConfig> backends;
    std::vector<CandidateSource> candidate_modes{CandidateSource::retrieval_topk};
    std::vector<JudgmentMethod> methods;
    int candidate_depth = 20;
    std::vector<int> metric_k{5};
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> cache_dir;
    int concurrency = 8;
    RetryPolicy retry;
    std::optional<std::filesystem::path> prompts_dir;
    bool known_rejection = false;
    bool length_normalized_likelihood = false;

    // Relative paths resolve against base_dir. Throws ValidationError.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static ExperimentConfig load(const std::filesystem::path& path);

    // Files exist, ids unique, at least one backend and one method.
    void validate() const;
};

enum class Stage {
    ingest,
    partition,
    gold,
    judge,
    eval_set,
    eval_rank,
    eval_rag,
    transfer,
    overlap,
    ppl,
    report,
};

inline constexpr Stage kAllStages[] = {
    Stage::ingest,    Stage::partition, Stage::gold,     Stage::judge, Stage::eval_set, Stage::eval_rank,
    Stage::eval_rag,  Stage::transfer,  Stage::overlap,  Stage::ppl,   Stage::report,
};

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view name);  // throws ValidationError

struct RunOptions {
    // Run only this stage on prior artifacts.
    std::optional<Stage> only;
    // Run every stage up to and including this one.
    std::optional<Stage> until;
    std::optional<std::string> backend_filter;
    // Keep existing artifacts of stages that no earlier stage rewrote.
    bool resume = false;
    // Ignore cached responses.
    bool force = false;
};

struct ReportBundle {
    nlohmann::json report;  // empty unless the report stage ran
    std::string text;
    std::vector<std::string> stages_run;
    GatewayStats stats;
};

std::shared_ptr<Backend> make_backend(const BackendConfig& config);

ReportBundle run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace utilbench
