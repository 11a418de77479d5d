#include "utilbench/types.hpp"


#include "utilbench/errors.hpp"

namespace utilbench {

using json = nlohmann::json;

std::string_view to_string(CandidateSource source) {
    switch (source) {
        case CandidateSource::retrieval_topk: return "retrieval_topk";
        case CandidateSource::union_with_human: return "union_with_human";
    }
    return "retrieval_topk";
}

CandidateSource candidate_source_from_string(std::string_view name) {
    if (name == "retrieval_topk") return CandidateSource::retrieval_topk;
    if (name == "union_with_human") return CandidateSource::union_with_human;
    throw ValidationError("unknown candidate source '" + std::string(name) + "'");
}

std::vector<std::string> CandidateSet::ids() const {
    std::vector<std::string> out;
    out.reserve(passages.size());
    for (const auto& p : passages) out.push_back(p.id);
    return out;
}

std::string_view to_string(JudgmentMethod method) {
    switch (method) {
        case JudgmentMethod::pointwise: return "pointwise";
        case JudgmentMethod::pointwise_with_answer: return "pointwise_with_answer";
        case JudgmentMethod::listwise: return "listwise";
        case JudgmentMethod::listwise_with_answer: return "listwise_with_answer";
        case JudgmentMethod::rank_verbalized: return "rank_verbalized";
        case JudgmentMethod::rank_verbalized_with_answer: return "rank_verbalized_with_answer";
        case JudgmentMethod::rank_attention: return "rank_attention";
        case JudgmentMethod::rank_likelihood: return "rank_likelihood";
    }
    return "pointwise";
}

JudgmentMethod judgment_method_from_string(std::string_view name) {
    for (auto m : kAllMethods) {
        if (to_string(m) == name) return m;
    }
    throw ValidationError("unknown judgment method '" + std::string(name) + "'");
}

bool is_selection_method(JudgmentMethod method) {
    switch (method) {
        case JudgmentMethod::pointwise:
        case JudgmentMethod::pointwise_with_answer:
        case JudgmentMethod::listwise:
        case JudgmentMethod::listwise_with_answer:
            return true;
        default:
            return false;
    }
}

bool uses_pseudo_answer(JudgmentMethod method) {
    return method == JudgmentMethod::pointwise_with_answer ||
           method == JudgmentMethod::listwise_with_answer ||
           method == JudgmentMethod::rank_verbalized_with_answer ||
           method == JudgmentMethod::rank_likelihood;
}

void to_json(json& j, const Query& q) {
    j = json{{"id", q.id}, {"text", q.text}, {"answers", q.answers}, {"dataset", q.dataset}};
}

void from_json(const json& j, Query& q) {
    j.at("id").get_to(q.id);
    j.at("text").get_to(q.text);
    j.at("answers").get_to(q.answers);
    q.dataset = j.value("dataset", std::string{});
}

void to_json(json& j, const Passage& p) {
    j = json{{"id", p.id}, {"text", p.text}};
    if (p.title) j["title"] = *p.title;
}

void from_json(const json& j, Passage& p) {
    j.at("id").get_to(p.id);
    j.at("text").get_to(p.text);
    if (j.contains("title") && j["title"].is_string()) {
        p.title = j["title"].get<std::string>();
    } else {
        p.title.reset();
    }
}

void to_json(json& j, const GoldUtilitySet& g) {
    j = json{{"query_id", g.query_id},
             {"backend_id", g.backend_id},
             {"candidate_source", to_string(g.candidate_source)},
             {"member_ids", g.member_ids}};
}

void from_json(const json& j, GoldUtilitySet& g) {
    j.at("query_id").get_to(g.query_id);
    j.at("backend_id").get_to(g.backend_id);
    g.candidate_source = candidate_source_from_string(j.at("candidate_source").get<std::string>());
    g.member_ids = j.at("member_ids").get<std::set<std::string>>();
}

void to_json(json& j, const JudgmentResult& r) {
    j = json{{"query_id", r.query_id},
             {"backend_id", r.backend_id},
             {"method", to_string(r.method)},
             {"candidate_source", to_string(r.candidate_source)},
             {"selected_ids", r.selected_ids},
             {"ranked_ids", r.ranked_ids},
             {"warnings", r.warnings}};
    if (r.scores) {
        j["scores"] = *r.scores;
    } else {
        j["scores"] = nullptr;
    }
}

void from_json(const json& j, JudgmentResult& r) {
    j.at("query_id").get_to(r.query_id);
    j.at("backend_id").get_to(r.backend_id);
    r.method = judgment_method_from_string(j.at("method").get<std::string>());
    r.candidate_source = candidate_source_from_string(j.at("candidate_source").get<std::string>());
    r.selected_ids = j.value("selected_ids", std::set<std::string>{});
    r.ranked_ids = j.value("ranked_ids", std::vector<std::string>{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("scores") && j["scores"].is_object()) {
        r.scores = j["scores"].get<std::map<std::string, double>>();
    } else {
        r.scores.reset();
    }
}

void to_json(json& j, const GenerationResult& r) {
    j = json{{"text", r.text},
             {"finish_reason", r.finish_reason},
             {"token_count", r.token_count},
             {"raw", r.raw}};
}

void from_json(const json& j, GenerationResult& r) {
    j.at("text").get_to(r.text);
    j.at("finish_reason").get_to(r.finish_reason);
    j.at("token_count").get_to(r.token_count);
    r.raw = j.value("raw", json{});
}

void to_json(json& j, const KnownnessLabel& k) {
    j = json{{"query_id", k.query_id}, {"backend_id", k.backend_id}, {"known", k.known}};
}

void from_json(const json& j, KnownnessLabel& k) {
    j.at("query_id").get_to(k.query_id);
    j.at("backend_id").get_to(k.backend_id);
    j.at("known").get_to(k.known);
}

}  // namespace utilbench
