#include <gtest/gtest.h>

#include <cmath>

#include "test_env.hpp"
#include "utilbench/errors.hpp"
#include "utilbench/fixture.hpp"
#include "utilbench/gold.hpp"
#include "utilbench/ingest.hpp"
#include "utilbench/rag_eval.hpp"

using namespace utilbench;

namespace {

GoldUtilitySet gold(const std::string& qid, std::set<std::string> g, const std::string& backend = "mock") {
    GoldUtilitySet s;
    s.query_id = qid;
    s.backend_id = backend;
    s.member_ids = std::move(g);
    return s;
}

struct Bench {
    Fixture fx = make_fixture();
    Corpus corpus = fixture_corpus(fx);
    std::map<std::string, CandidateSet> topk =
        assemble_candidates(fx.run, nullptr, corpus, CandidateSource::retrieval_topk);
};

}  // namespace

TEST(RagEval, FormulasOnFixture) {
    Bench s;
    testenv::MockLlm llm(s.fx.mock_a);
    const auto known = partition_known(llm.handle(), s.fx.queries);
    std::vector<GoldUtilitySet> golds;
    int n_known = 0, n_unknown_gold = 0;
    for (const auto& q : s.fx.queries) {
        golds.push_back(build_gold_set(llm.handle(), q, s.topk.at(q.id)));
        n_known += known.at(q.id).known;
        n_unknown_gold += !known.at(q.id).known && !golds.back().member_ids.empty();
    }
    const double nq = static_cast<double>(s.fx.queries.size());

    const auto with_gold = eval_rag(llm.handle(), s.fx.queries, gold_passages(s.topk, golds), known);
    EXPECT_EQ(with_gold.mean, (n_known + n_unknown_gold) / nq);
    EXPECT_EQ(with_gold.mean_known, 1.0);
    EXPECT_EQ(with_gold.n, 50);
    EXPECT_EQ(with_gold.n_known, n_known);

    const auto none = eval_rag(llm.handle(), s.fx.queries, PassageSource{}, known);
    EXPECT_EQ(none.mean, n_known / nq);
    EXPECT_EQ(none.mean_unknown, 0.0);

    const auto full = eval_rag(llm.handle(), s.fx.queries, candidate_passages(s.topk), known);
    EXPECT_GE(with_gold.mean, full.mean);
    EXPECT_GT(full.mean, none.mean);
    ASSERT_EQ(full.per_query.size(), 50u);
    EXPECT_TRUE(std::is_sorted(full.per_query.begin(), full.per_query.end(),
                               [](const auto& a, const auto& b) { return a.query_id < b.query_id; }));
}

TEST(RagEval, FailuresExcludedWithWarning) {
    Gateway gw;
    const auto templates = TemplateSet::defaults();
    class Failing final : public Backend {
    public:
        Failing() : Backend(testenv::mock_descriptor("bad")) {}
        GenerationResult generate(const GenerationRequest& r) override {
            if (r.prompt.find("fail me") != std::string::npos) throw ValidationError("scripted");
            return {"Lima", "stop", 1, nullptr};
        }
    };
    gw.add_backend(std::make_shared<Failing>());
    const std::vector<Query> qs = {testenv::query("a", "fail me", {"Lima"}), testenv::query("b", "fine", {"Lima"})};
    const auto r = eval_rag(BackendHandle{gw, "bad", templates}, qs, PassageSource{}, {});
    EXPECT_EQ(r.n_failed, 1);
    EXPECT_EQ(r.n, 1);
    EXPECT_EQ(r.mean, 1.0);
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_TRUE(r.per_query[0].error.has_value());
}

TEST(RagEval, GoldPassagesKeepCandidateOrder) {
    std::map<std::string, CandidateSet> cands;
    cands["q"] = {"q", {testenv::passage("d3", "c"), testenv::passage("d1", "a"), testenv::passage("d2", "b")},
                  CandidateSource::retrieval_topk};
    const std::vector<GoldUtilitySet> g = {gold("q", {"d1", "d3"})};
    const auto src = gold_passages(cands, g);
    ASSERT_EQ(src.at("q").size(), 2u);
    EXPECT_EQ(src.at("q")[0].id, "d3");
    EXPECT_EQ(src.at("q")[1].id, "d1");
    const std::vector<GoldUtilitySet> bad = {gold("q", {"zz"})};
    EXPECT_THROW(gold_passages(cands, bad), ValidationError);
}

TEST(RagEval, TransferSingleAndDisjoint) {
    Bench s;
    testenv::MockLlm a(s.fx.mock_a, "mock_a");
    testenv::MockLlm b(s.fx.mock_b, "mock_b");
    std::map<std::string, std::vector<GoldUtilitySet>> golds;
    std::map<std::string, std::map<std::string, KnownnessLabel>> known;
    for (auto* llm : {&a, &b}) {
        known[llm->backend_id] = partition_known(llm->handle(), s.fx.queries);
        for (const auto& q : s.fx.queries) {
            golds[llm->backend_id].push_back(build_gold_set(llm->handle(), q, s.topk.at(q.id)));
        }
    }
    const std::vector<BackendHandle> only_a = {a.handle()};
    const std::map<std::string, std::vector<GoldUtilitySet>> ga = {{"mock_a", golds.at("mock_a")}};
    const auto single = transfer_matrix(only_a, ga, s.fx.queries, s.topk, known);
    const auto own = eval_rag(a.handle(), s.fx.queries, gold_passages(s.topk, golds.at("mock_a")), known.at("mock_a"));
    EXPECT_EQ(single.cells.at("mock_a").at("mock_a"), own.mean);

    const std::vector<BackendHandle> both = {a.handle(), b.handle()};
    const auto m = transfer_matrix(both, golds, s.fx.queries, s.topk, known);
    EXPECT_GT(m.cells.at("mock_a").at("mock_a"), m.cells.at("mock_a").at("mock_b"));
    EXPECT_GT(m.cells.at("mock_b").at("mock_b"), m.cells.at("mock_b").at("mock_a"));
    EXPECT_EQ(m.generators, (std::vector<std::string>{"mock_a", "mock_b"}));
}

TEST(RagEval, IdenticalMocksGiveSymmetricMatrix) {
    Bench s;
    testenv::MockLlm a(s.fx.mock_a, "x");
    testenv::MockLlm b(s.fx.mock_a, "y");
    std::map<std::string, std::vector<GoldUtilitySet>> golds;
    std::map<std::string, std::map<std::string, KnownnessLabel>> known;
    for (auto* llm : {&a, &b}) {
        known[llm->backend_id] = partition_known(llm->handle(), s.fx.queries);
        for (const auto& q : s.fx.queries) {
            golds[llm->backend_id].push_back(build_gold_set(llm->handle(), q, s.topk.at(q.id)));
        }
    }
    const std::vector<BackendHandle> both = {a.handle(), b.handle()};
    const auto m = transfer_matrix(both, golds, s.fx.queries, s.topk, known);
    const double v = m.cells.at("x").at("x");
    EXPECT_EQ(m.cells.at("x").at("y"), v);
    EXPECT_EQ(m.cells.at("y").at("x"), v);
    EXPECT_EQ(m.cells.at("y").at("y"), v);
}

TEST(RagEval, OverlapMeans) {
    std::map<std::string, std::vector<GoldUtilitySet>> golds;
    golds["m"] = {gold("q1", {"d1", "d2"}), gold("q2", {"d9"}), gold("q3", {"d1", "d2", "d3"}), gold("q4", {"d4"})};
    const HumanQrels qrels = {{"q1", {"d2", "d3"}}, {"q2", {"d1"}}, {"q3", {"d1", "d2"}}, {"q4", {"d4", "d5"}}};
    const auto o = overlap_stats(golds, qrels).at("m");
    EXPECT_EQ(o.n_queries, 4);
    EXPECT_DOUBLE_EQ(o.mean_intersection, 1.0);
    EXPECT_DOUBLE_EQ(o.mean_human_only, (1 + 1 + 0 + 1) / 4.0);
    EXPECT_DOUBLE_EQ(o.mean_gold_only, (1 + 1 + 1 + 0) / 4.0);
}

TEST(RagEval, PerplexityConstants) {
    MockKnowledgeSpec s;
    s.known_answers = {{"q", "Lima is the capital"}};
    testenv::MockLlm llm(s);
    const Query q = testenv::query("q", "capital of peru", {"Lima"});
    PerplexityHints hints;
    hints.query = q;
    // continuation equal to the mock's own answer
    EXPECT_NEAR(perplexity(llm.gateway, "mock", "Lima is the capital", q.text, hints), std::exp(0.1), 1e-12);
    EXPECT_NEAR(perplexity(llm.gateway, "mock", "something else entirely", q.text, hints), std::exp(2.0), 1e-12);
    EXPECT_THROW(perplexity(llm.gateway, "mock", "", std::nullopt), ValidationError);
    EXPECT_THROW(perplexity(llm.gateway, "mock", "   ", std::nullopt), ValidationError);

    MockKnowledgeSpec sure;
    sure.per_token_logprob_match = -1e-300;
    sure.known_answers = {{"q", "a b"}};
    testenv::MockLlm one(sure);
    EXPECT_NEAR(perplexity(one.gateway, "mock", "a b", q.text, hints), 1.0, 1e-12);
}

TEST(RagEval, PplGroups) {
    MockKnowledgeSpec s;
    s.readable_passages = {{"h1", true}, {"h3", true}};
    testenv::MockLlm llm(s);
    Corpus corpus;
    for (const char* id : {"h1", "h2", "h3"}) corpus.add(testenv::passage(id, std::string("text of ") + id));
    const std::vector<Query> qs = {testenv::query("q1", "one", {"x"}), testenv::query("q2", "two", {"x"}),
                                   testenv::query("q3", "three", {"x"})};
    const std::vector<GoldUtilitySet> golds = {gold("q1", {"h1"}), gold("q2", {"d7"}), gold("q3", {})};
    const HumanQrels qrels = {{"q1", {"h1"}}, {"q2", {"h2"}}, {"q3", {"h3"}}};
    const auto g = ppl_group_compare(llm.gateway, "mock", qs, golds, qrels, corpus);
    EXPECT_EQ(g.n_queries, 2);
    EXPECT_EQ(g.n_in, 1);
    EXPECT_EQ(g.n_out, 1);
    EXPECT_NEAR(*g.in_gold_passage, std::exp(0.1), 1e-9);
    EXPECT_NEAR(*g.out_gold_passage, std::exp(2.0), 1e-9);
    EXPECT_NEAR(*g.in_gold_joint, std::exp(0.1), 1e-9);
    EXPECT_NEAR(*g.out_gold_joint, std::exp(2.0), 1e-9);

    const std::vector<GoldUtilitySet> all_in = {gold("q1", {"h1"})};
    const auto only = ppl_group_compare(llm.gateway, "mock", qs, all_in, qrels, corpus);
    EXPECT_TRUE(only.in_gold_passage.has_value());
    EXPECT_FALSE(only.out_gold_passage.has_value());
    EXPECT_FALSE(only.out_gold_joint.has_value());

    // same readability for every passage: equal group means
    MockKnowledgeSpec flat;
    testenv::MockLlm blind(flat);
    const auto eq = ppl_group_compare(blind.gateway, "mock", qs, golds, qrels, corpus);
    EXPECT_EQ(*eq.in_gold_passage, *eq.out_gold_passage);
}
