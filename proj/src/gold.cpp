#include "utilbench/gold.hpp"

#include "utilbench/text.hpp"

namespace utilbench {

BaselineAnswer answer_without_context(const BackendHandle& llm, const Query& query) {
    BaselineAnswer out;
    out.generation = answer_query(llm, query, {});
    out.has_answer = has_answer(out.generation.text, query.answers);
    return out;
}

namespace {

int indicator_given_baseline(const BackendHandle& llm, const Query& query, const Passage& passage, int baseline) {
    // strict improvement is impossible over a correct baseline
    if (baseline == 1) return 0;
    const Passage single[] = {passage};
    const auto with_passage = answer_query(llm, query, single);
    return has_answer(with_passage.text, query.answers) > baseline ? 1 : 0;
}

}  // namespace

int utility_indicator(const BackendHandle& llm, const Query& query, const Passage& passage) {
    const int baseline = answer_without_context(llm, query).has_answer;
    return indicator_given_baseline(llm, query, passage, baseline);
}

GoldUtilitySet build_gold_set(const BackendHandle& llm, const Query& query, const CandidateSet& candidates) {
    GoldUtilitySet gold;
    gold.query_id = query.id;
    gold.backend_id = llm.backend_id;
    gold.candidate_source = candidates.source;

    const int baseline = answer_without_context(llm, query).has_answer;
    std::vector<int> bits(candidates.passages.size(), 0);
    llm.gateway.parallel_for(candidates.passages.size(), [&](std::size_t i) {
        bits[i] = indicator_given_baseline(llm, query, candidates.passages[i], baseline);
    });
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == 1) gold.member_ids.insert(candidates.passages[i].id);
    }
    return gold;
}

std::map<std::string, KnownnessLabel> partition_known(const BackendHandle& llm, std::span<const Query> queries) {
    std::vector<KnownnessLabel> labels(queries.size());
    llm.gateway.parallel_for(queries.size(), [&](std::size_t i) {
        labels[i] = {queries[i].id, llm.backend_id, answer_without_context(llm, queries[i]).has_answer == 1};
    });
    std::map<std::string, KnownnessLabel> out;
    for (auto& l : labels) out.emplace(l.query_id, std::move(l));
    return out;
}

}  // namespace utilbench
