#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace utilbench {

struct Query {
    std::string id;
    std::string text;
    std::vector<std::string> answers;
    std::string dataset;
};

struct Passage {
    std::string id;
    std::optional<std::string> title;
    std::string text;
};

enum class CandidateSource { retrieval_topk, union_with_human };

std::string_view to_string(CandidateSource source);
CandidateSource candidate_source_from_string(std::string_view name);

// Candidates keep retrieval order; prompt position depends on it.
struct CandidateSet {
    std::string query_id;
    std::vector<Passage> passages;
    CandidateSource source = CandidateSource::retrieval_topk;

    std::vector<std::string> ids() const;
};

struct GoldUtilitySet {
    std::string query_id;
    std::string backend_id;
    std::set<std::string> member_ids;
    CandidateSource candidate_source = CandidateSource::retrieval_topk;
};

enum class JudgmentMethod {
    pointwise,
    pointwise_with_answer,
    listwise,
    listwise_with_answer,
    rank_verbalized,
    rank_verbalized_with_answer,
    rank_attention,
    rank_likelihood,
};

inline constexpr JudgmentMethod kAllMethods[] = {
    JudgmentMethod::pointwise,          JudgmentMethod::pointwise_with_answer,
    JudgmentMethod::listwise,           JudgmentMethod::listwise_with_answer,
    JudgmentMethod::rank_verbalized,    JudgmentMethod::rank_verbalized_with_answer,
    JudgmentMethod::rank_attention,     JudgmentMethod::rank_likelihood,
};

std::string_view to_string(JudgmentMethod method);
// Throws ValidationError on unknown names.
JudgmentMethod judgment_method_from_string(std::string_view name);
bool is_selection_method(JudgmentMethod method);
bool uses_pseudo_answer(JudgmentMethod method);

struct JudgmentResult {
    std::string query_id;
    std::string backend_id;
    JudgmentMethod method = JudgmentMethod::pointwise;
    CandidateSource candidate_source = CandidateSource::retrieval_topk;
    std::set<std::string> selected_ids;
    std::vector<std::string> ranked_ids;
    std::optional<std::map<std::string, double>> scores;
    std::vector<std::string> warnings;
};

struct GenerationResult {
    std::string text;
    std::string finish_reason;
    long token_count = 0;
    nlohmann::json raw;  // provider payload kept for audit

    bool operator==(const GenerationResult&) const = default;
};

struct KnownnessLabel {
    std::string query_id;
    std::string backend_id;
    bool known = false;
};

void to_json(nlohmann::json& j, const Query& q);
void from_json(const nlohmann::json& j, Query& q);
void to_json(nlohmann::json& j, const Passage& p);
void from_json(const nlohmann::json& j, Passage& p);
void to_json(nlohmann::json& j, const GoldUtilitySet& g);
void from_json(const nlohmann::json& j, GoldUtilitySet& g);
void to_json(nlohmann::json& j, const JudgmentResult& r);
void from_json(const nlohmann::json& j, JudgmentResult& r);
void to_json(nlohmann::json& j, const GenerationResult& r);
void from_json(const nlohmann::json& j, GenerationResult& r);
void to_json(nlohmann::json& j, const KnownnessLabel& k);
void from_json(const nlohmann::json& j, KnownnessLabel& k);

}  // namespace utilbench
