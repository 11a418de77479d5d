#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "utilbench/answer.hpp"
#include "utilbench/ingest.hpp"
#include "utilbench/types.hpp"

namespace utilbench {

// query id -> passages handed to the generator, in prompt order.
using PassageSource = std::map<std::string, std::vector<Passage>>;

struct RagQueryResult {
    std::string query_id;
    std::optional<bool> known;
    int has_answer = 0;
    std::string generation;
    std::optional<std::string> error;
};

struct RagReport {
    std::string backend_id;
    double mean = 0.0;
    double mean_known = 0.0;
    double mean_unknown = 0.0;
    int n = 0;
    int n_known = 0;
    int n_unknown = 0;
    int n_failed = 0;
    std::vector<RagQueryResult> per_query;  // sorted by query id
    std::vector<std::string> warnings;
};

// One generation per query. Queries missing from `source` get no passages.
// Failed queries are kept in per_query but left out of every mean.
RagReport eval_rag(const BackendHandle& llm, std::span<const Query> queries, const PassageSource& source,
                   const std::map<std::string, KnownnessLabel>& knownness);

// Gold members of each query, in candidate order.
PassageSource gold_passages(const std::map<std::string, CandidateSet>& candidates,
                            std::span<const GoldUtilitySet> golds);
PassageSource candidate_passages(const std::map<std::string, CandidateSet>& candidates);

struct TransferMatrix {
    std::vector<std::string> generators;
    std::vector<std::string> gold_sources;
    // [generator][gold source] -> mean has_answer
    std::map<std::string, std::map<std::string, double>> cells;
};

// Every generator answers with every gold source's sets; the keys of `golds`
// are the gold sources. `knownness` is keyed by generator backend id.
TransferMatrix transfer_matrix(std::span<const BackendHandle> generators,
                               const std::map<std::string, std::vector<GoldUtilitySet>>& golds,
                               std::span<const Query> queries,
                               const std::map<std::string, CandidateSet>& candidates,
                               const std::map<std::string, std::map<std::string, KnownnessLabel>>& knownness);

struct OverlapStats {
    std::string backend_id;
    double mean_intersection = 0.0;
    double mean_human_only = 0.0;
    double mean_gold_only = 0.0;
    int n_queries = 0;
};

std::map<std::string, OverlapStats> overlap_stats(const std::map<std::string, std::vector<GoldUtilitySet>>& golds,
                                                  const HumanQrels& qrels);

struct PerplexityHints {
    std::optional<Query> query;
    std::optional<Passage> passage;
};

// exp of the negative mean token logprob of `text`; condition tokens are
// context only. Throws ValidationError on empty or zero-token text.
double perplexity(Gateway& gateway, const std::string& backend_id, const std::string& text,
                  const std::optional<std::string>& condition, const PerplexityHints& hints = {});

struct PplRow {
    std::string query_id;
    std::string passage_id;
    bool in_gold = false;
    double ppl_passage = 0.0;
    double ppl_joint = 0.0;
};

struct PplGroups {
    std::string backend_id;
    std::optional<double> in_gold_passage;
    std::optional<double> out_gold_passage;
    std::optional<double> in_gold_joint;
    std::optional<double> out_gold_joint;
    int n_in = 0;
    int n_out = 0;
    int n_queries = 0;
    std::vector<PplRow> rows;
};

// Human passages of queries with non-empty gold, split by gold membership.
// Joint scores use the query text as condition.
PplGroups ppl_group_compare(Gateway& gateway, const std::string& backend_id, std::span<const Query> queries,
                            std::span<const GoldUtilitySet> golds, const HumanQrels& qrels, const Corpus& corpus);

void to_json(nlohmann::json& j, const RagQueryResult& r);
void to_json(nlohmann::json& j, const RagReport& r);
void to_json(nlohmann::json& j, const TransferMatrix& t);
void to_json(nlohmann::json& j, const OverlapStats& o);
void to_json(nlohmann::json& j, const PplRow& r);
void to_json(nlohmann::json& j, const PplGroups& g);

}  // namespace utilbench
