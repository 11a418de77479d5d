#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "utilbench/types.hpp"

namespace utilbench {

struct SetMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double empty_gold_accuracy = 0.0;
    int n_nonempty = 0;
    int n_empty = 0;
};

struct PerQuerySet {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// P = |S∩G|/|S| (0 when S is empty), R = |S∩G|/|G|. G must be non-empty.
PerQuerySet set_scores(const std::set<std::string>& selected, const std::set<std::string>& gold);

// Macro-averaged over non-empty-gold queries; empty-gold queries feed the
// accuracy term instead. Both lists must cover the same query ids.
SetMetrics set_metrics(std::span<const JudgmentResult> results, std::span<const GoldUtilitySet> golds);

// Binary gains, log2(i+1) discount. Precondition: gold non-empty.
double ndcg_at_k(std::span<const std::string> ranked_ids, const std::set<std::string>& gold, int k);
double recall_at_k(std::span<const std::string> ranked_ids, const std::set<std::string>& gold, int k);

struct RankMetrics {
    double ndcg_at_k = 0.0;
    double recall_at_k = 0.0;
    int k = 0;
    int n_evaluated = 0;
};

// Queries with empty gold are skipped.
RankMetrics rank_metrics(std::span<const JudgmentResult> results, std::span<const GoldUtilitySet> golds, int k);

void to_json(nlohmann::json& j, const SetMetrics& m);
void to_json(nlohmann::json& j, const RankMetrics& m);

}  // namespace utilbench
