#include "utilbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "utilbench/errors.hpp"

namespace utilbench {

using json = nlohmann::json;

namespace {

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t n = 0;
    for (const auto& x : a) n += b.count(x);
    return n;
}

// Pairs each result with its gold set by query id, in query id order.
std::vector<std::pair<const JudgmentResult*, const GoldUtilitySet*>> align(std::span<const JudgmentResult> results,
                                                                           std::span<const GoldUtilitySet> golds) {
    std::map<std::string, const GoldUtilitySet*> by_id;
    for (const auto& g : golds) {
        if (!by_id.emplace(g.query_id, &g).second) throw ValidationError("duplicate gold set for query " + g.query_id);
    }
    std::map<std::string, const JudgmentResult*> res_by_id;
    for (const auto& r : results) {
        if (!res_by_id.emplace(r.query_id, &r).second) throw ValidationError("duplicate result for query " + r.query_id);
        if (!by_id.count(r.query_id)) throw ValidationError("no gold set for query " + r.query_id);
    }
    for (const auto& [qid, _] : by_id) {
        if (!res_by_id.count(qid)) throw ValidationError("no judgment result for query " + qid);
    }
    std::vector<std::pair<const JudgmentResult*, const GoldUtilitySet*>> out;
    for (const auto& [qid, r] : res_by_id) out.emplace_back(r, by_id.at(qid));
    return out;
}

}  // namespace

PerQuerySet set_scores(const std::set<std::string>& selected, const std::set<std::string>& gold) {
    PerQuerySet s;
    const auto hit = static_cast<double>(intersection_size(selected, gold));
    s.precision = selected.empty() ? 0.0 : hit / static_cast<double>(selected.size());
    s.recall = gold.empty() ? 0.0 : hit / static_cast<double>(gold.size());
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

SetMetrics set_metrics(std::span<const JudgmentResult> results, std::span<const GoldUtilitySet> golds) {
    SetMetrics m;
    double p = 0.0, r = 0.0, f = 0.0, acc = 0.0;
    for (const auto& [res, gold] : align(results, golds)) {
        if (gold->member_ids.empty()) {
            ++m.n_empty;
            acc += res->selected_ids.empty() ? 1.0 : 0.0;
            continue;
        }
        ++m.n_nonempty;
        const auto s = set_scores(res->selected_ids, gold->member_ids);
        p += s.precision;
        r += s.recall;
        f += s.f1;
    }
    if (m.n_nonempty > 0) {
        m.precision = p / m.n_nonempty;
        m.recall = r / m.n_nonempty;
        m.f1 = f / m.n_nonempty;
    }
    if (m.n_empty > 0) m.empty_gold_accuracy = acc / m.n_empty;
    return m;
}

double ndcg_at_k(std::span<const std::string> ranked_ids, const std::set<std::string>& gold, int k) {
    if (gold.empty() || k <= 0) return 0.0;
    const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked_ids.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (gold.count(ranked_ids[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    const auto ideal = std::min<std::size_t>(static_cast<std::size_t>(k), gold.size());
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

double recall_at_k(std::span<const std::string> ranked_ids, const std::set<std::string>& gold, int k) {
    if (gold.empty() || k <= 0) return 0.0;
    const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked_ids.size());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < depth; ++i) hit += gold.count(ranked_ids[i]);
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

RankMetrics rank_metrics(std::span<const JudgmentResult> results, std::span<const GoldUtilitySet> golds, int k) {
    RankMetrics m;
    m.k = k;
    double ndcg = 0.0, recall = 0.0;
    for (const auto& [res, gold] : align(results, golds)) {
        if (gold->member_ids.empty()) continue;
        ++m.n_evaluated;
        ndcg += ndcg_at_k(res->ranked_ids, gold->member_ids, k);
        recall += recall_at_k(res->ranked_ids, gold->member_ids, k);
    }
    if (m.n_evaluated > 0) {
        m.ndcg_at_k = ndcg / m.n_evaluated;
        m.recall_at_k = recall / m.n_evaluated;
    }
    return m;
}

void to_json(json& j, const SetMetrics& m) {
    j = json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
             {"empty_gold_accuracy", m.empty_gold_accuracy}, {"n_nonempty", m.n_nonempty}, {"n_empty", m.n_empty}};
}

void to_json(json& j, const RankMetrics& m) {
    j = json{{"ndcg_at_k", m.ndcg_at_k}, {"recall_at_k", m.recall_at_k}, {"k", m.k}, {"n_evaluated", m.n_evaluated}};
}

}  // namespace utilbench
