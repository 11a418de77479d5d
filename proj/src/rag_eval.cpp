#include "utilbench/rag_eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "utilbench/errors.hpp"
#include "utilbench/text.hpp"

namespace utilbench {

using json = nlohmann::json;

namespace {

std::string describe(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& ex) {
        return ex.what();
    } catch (...) {
        return "unknown error";
    }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RagReport eval_rag(const BackendHandle& llm, std::span<const Query> queries, const PassageSource& source,
                   const std::map<std::string, KnownnessLabel>& knownness) {
    RagReport report;
    report.backend_id = llm.backend_id;
    std::vector<const Query*> ordered;
    for (const auto& q : queries) ordered.push_back(&q);
    std::sort(ordered.begin(), ordered.end(), [](const Query* a, const Query* b) { return a->id < b->id; });

    report.per_query.resize(ordered.size());
    const std::vector<Passage> none;
    auto failures = llm.gateway.parallel_try(ordered.size(), [&](std::size_t i) {
        const Query& q = *ordered[i];
        auto it = source.find(q.id);
        const auto& passages = it == source.end() ? none : it->second;
        auto gen = answer_query(llm, q, passages);
        report.per_query[i].has_answer = has_answer(gen.text, q.answers);
        report.per_query[i].generation = std::move(gen.text);
    });

    double sum = 0.0, sum_known = 0.0, sum_unknown = 0.0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        auto& row = report.per_query[i];
        row.query_id = ordered[i]->id;
        if (auto k = knownness.find(row.query_id); k != knownness.end()) row.known = k->second.known;
        if (failures[i]) {
            row.error = describe(failures[i]);
            row.has_answer = 0;
            ++report.n_failed;
            continue;
        }
        ++report.n;
        sum += row.has_answer;
        if (row.known == true) {
            ++report.n_known;
            sum_known += row.has_answer;
        } else if (row.known == false) {
            ++report.n_unknown;
            sum_unknown += row.has_answer;
        }
    }
    if (report.n > 0) report.mean = sum / report.n;
    if (report.n_known > 0) report.mean_known = sum_known / report.n_known;
    if (report.n_unknown > 0) report.mean_unknown = sum_unknown / report.n_unknown;
    if (report.n_failed > 0) {
        report.warnings.push_back(fmt::format("{} of {} queries failed and are excluded from the means",
                                              report.n_failed, ordered.size()));
        spdlog::warn("{}: {}", llm.backend_id, report.warnings.back());
    }
    return report;
}

PassageSource gold_passages(const std::map<std::string, CandidateSet>& candidates,
                            std::span<const GoldUtilitySet> golds) {
    PassageSource out;
    for (const auto& g : golds) {
        auto& list = out[g.query_id];
        if (g.member_ids.empty()) continue;
        auto it = candidates.find(g.query_id);
        if (it == candidates.end()) throw ValidationError("gold set for query without candidates: " + g.query_id);
        std::size_t found = 0;
        for (const auto& p : it->second.passages) {
            if (g.member_ids.count(p.id)) {
                list.push_back(p);
                ++found;
            }
        }
        if (found != g.member_ids.size()) {
            throw ValidationError("gold set of query " + g.query_id + " names passages outside its candidates");
        }
    }
    return out;
}

PassageSource candidate_passages(const std::map<std::string, CandidateSet>& candidates) {
    PassageSource out;
    for (const auto& [qid, c] : candidates) out[qid] = c.passages;
    return out;
}

TransferMatrix transfer_matrix(std::span<const BackendHandle> generators,
                               const std::map<std::string, std::vector<GoldUtilitySet>>& golds,
                               std::span<const Query> queries,
                               const std::map<std::string, CandidateSet>& candidates,
                               const std::map<std::string, std::map<std::string, KnownnessLabel>>& knownness) {
    TransferMatrix t;
    for (const auto& [id, _] : golds) t.gold_sources.push_back(id);
    for (const auto& g : generators) {
        if (!golds.count(g.backend_id)) throw ValidationError("missing gold sets for backend " + g.backend_id);
        t.generators.push_back(g.backend_id);
    }
    std::map<std::string, PassageSource> sources;
    for (const auto& id : t.gold_sources) sources[id] = gold_passages(candidates, golds.at(id));

    const std::map<std::string, KnownnessLabel> no_labels;
    for (const auto& gen : generators) {
        auto k = knownness.find(gen.backend_id);
        const auto& labels = k == knownness.end() ? no_labels : k->second;
        for (const auto& src : t.gold_sources) {
            t.cells[gen.backend_id][src] = eval_rag(gen, queries, sources.at(src), labels).mean;
        }
    }
    return t;
}

std::map<std::string, OverlapStats> overlap_stats(const std::map<std::string, std::vector<GoldUtilitySet>>& golds,
                                                  const HumanQrels& qrels) {
    std::map<std::string, OverlapStats> out;
    const std::set<std::string> none;
    for (const auto& [backend_id, sets] : golds) {
        OverlapStats s;
        s.backend_id = backend_id;
        double inter = 0.0, human_only = 0.0, gold_only = 0.0;
        for (const auto& g : sets) {
            auto it = qrels.find(g.query_id);
            const auto& human = it == qrels.end() ? none : it->second;
            std::size_t both = 0;
            for (const auto& id : g.member_ids) both += human.count(id);
            inter += static_cast<double>(both);
            human_only += static_cast<double>(human.size() - both);
            gold_only += static_cast<double>(g.member_ids.size() - both);
            ++s.n_queries;
        }
        if (s.n_queries > 0) {
            s.mean_intersection = inter / s.n_queries;
            s.mean_human_only = human_only / s.n_queries;
            s.mean_gold_only = gold_only / s.n_queries;
        }
        out.emplace(backend_id, s);
    }
    return out;
}

double perplexity(Gateway& gateway, const std::string& backend_id, const std::string& text,
                  const std::optional<std::string>& condition, const PerplexityHints& hints) {
    if (text.empty()) throw ValidationError("perplexity of empty text");
    ScoreRequest request;
    request.prompt = condition.value_or("");
    request.continuation = text;
    request.template_version = condition ? "ppl-joint" : "ppl";
    if (hints.query) request.context = PromptContext{PromptTask::answer, *hints.query, {}, std::nullopt, false};
    request.continuation_passage = hints.passage;
    const TokenScores ts = gateway.score_continuation(backend_id, request);
    if (ts.tokens.empty()) throw ValidationError("perplexity of zero-token text");
    return std::exp(-ts.sum_logprob / static_cast<double>(ts.tokens.size()));
}

PplGroups ppl_group_compare(Gateway& gateway, const std::string& backend_id, std::span<const Query> queries,
                            std::span<const GoldUtilitySet> golds, const HumanQrels& qrels, const Corpus& corpus) {
    PplGroups out;
    out.backend_id = backend_id;
    std::map<std::string, const Query*> by_id;
    for (const auto& q : queries) by_id[q.id] = &q;

    std::vector<PplRow> rows;
    std::vector<const Query*> row_query;
    std::map<std::string, const GoldUtilitySet*> gold_by_id;
    for (const auto& g : golds) gold_by_id[g.query_id] = &g;
    for (const auto& [qid, g] : gold_by_id) {
        if (g->member_ids.empty()) continue;
        auto q = by_id.find(qid);
        auto h = qrels.find(qid);
        if (q == by_id.end() || h == qrels.end()) continue;
        ++out.n_queries;
        for (const auto& pid : h->second) {
            rows.push_back({qid, pid, g->member_ids.count(pid) > 0, 0.0, 0.0});
            row_query.push_back(q->second);
        }
    }

    gateway.parallel_for(rows.size(), [&](std::size_t i) {
        const Passage& p = corpus.at(rows[i].passage_id);
        PerplexityHints hints{*row_query[i], p};
        rows[i].ppl_passage = perplexity(gateway, backend_id, p.text, std::nullopt, hints);
        rows[i].ppl_joint = perplexity(gateway, backend_id, p.text, row_query[i]->text, hints);
    });

    double in_p = 0.0, out_p = 0.0, in_j = 0.0, out_j = 0.0;
    for (const auto& r : rows) {
        if (r.in_gold) {
            ++out.n_in;
            in_p += r.ppl_passage;
            in_j += r.ppl_joint;
        } else {
            ++out.n_out;
            out_p += r.ppl_passage;
            out_j += r.ppl_joint;
        }
    }
    if (out.n_in > 0) {
        out.in_gold_passage = in_p / out.n_in;
        out.in_gold_joint = in_j / out.n_in;
    }
    if (out.n_out > 0) {
        out.out_gold_passage = out_p / out.n_out;
        out.out_gold_joint = out_j / out.n_out;
    }
    out.rows = std::move(rows);
    return out;
}

void to_json(json& j, const RagQueryResult& r) {
    j = json{{"query_id", r.query_id},
             {"known", r.known ? json(*r.known) : json(nullptr)},
             {"has_answer", r.has_answer},
             {"generation", r.generation}};
    if (r.error) j["error"] = *r.error;
}

void to_json(json& j, const RagReport& r) {
    j = json{{"backend_id", r.backend_id}, {"mean", r.mean},           {"mean_known", r.mean_known},
             {"mean_unknown", r.mean_unknown}, {"n", r.n},             {"n_known", r.n_known},
             {"n_unknown", r.n_unknown},   {"n_failed", r.n_failed},   {"warnings", r.warnings}};
}

void to_json(json& j, const TransferMatrix& t) {
    j = json{{"generators", t.generators}, {"gold_sources", t.gold_sources}, {"cells", t.cells}};
}

void to_json(json& j, const OverlapStats& o) {
    j = json{{"backend_id", o.backend_id},
             {"mean_intersection", o.mean_intersection},
             {"mean_human_only", o.mean_human_only},
             {"mean_gold_only", o.mean_gold_only},
             {"n_queries", o.n_queries}};
}

void to_json(json& j, const PplRow& r) {
    j = json{{"query_id", r.query_id},
             {"passage_id", r.passage_id},
             {"in_gold", r.in_gold},
             {"ppl_passage", r.ppl_passage},
             {"ppl_joint", r.ppl_joint}};
}

void to_json(json& j, const PplGroups& g) {
    j = json{{"backend_id", g.backend_id},
             {"in_gold_passage", optional_json(g.in_gold_passage)},
             {"out_gold_passage", optional_json(g.out_gold_passage)},
             {"in_gold_joint", optional_json(g.in_gold_joint)},
             {"out_gold_joint", optional_json(g.out_gold_joint)},
             {"n_in", g.n_in},
             {"n_out", g.n_out},
             {"n_queries", g.n_queries}};
}

}  // namespace utilbench
