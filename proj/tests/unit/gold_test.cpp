#include <gtest/gtest.h>

#include "mock_oracle.hpp"
#include "test_env.hpp"
#include "utilbench/fixture.hpp"
#include "utilbench/gold.hpp"
#include "utilbench/ingest.hpp"

using namespace utilbench;

namespace {

MockKnowledgeSpec small_spec() {
    MockKnowledgeSpec s;
    s.known_answers = {{"q1", "paris"}};
    s.readable_passages = {{"d2", true}};
    return s;
}

CandidateSet candidates(const std::string& qid, std::vector<Passage> ps) {
    return CandidateSet{qid, std::move(ps), CandidateSource::retrieval_topk};
}

}  // namespace

TEST(Gold, AnswerWithoutContext) {
    testenv::MockLlm llm(small_spec());
    const auto known = answer_without_context(llm.handle(), testenv::query("q1", "capital of france", {"Paris"}));
    EXPECT_EQ(known.generation.text, "paris");
    EXPECT_EQ(known.has_answer, 1);
    const auto unknown = answer_without_context(llm.handle(), testenv::query("q2", "capital of peru", {"Lima"}));
    EXPECT_EQ(unknown.generation.text, "unknown");
    EXPECT_EQ(unknown.has_answer, 0);

    MockKnowledgeSpec s;
    s.known_answers = {{"f1", "supports."}};
    testenv::MockLlm fact(s);
    EXPECT_EQ(answer_without_context(fact.handle(), testenv::query("f1", "claim", {"SUPPORTS"})).has_answer, 1);
}

TEST(Gold, UtilityIndicator) {
    testenv::MockLlm llm(small_spec());
    const auto d2 = testenv::passage("d2", "The capital is Lima.");
    const auto d1 = testenv::passage("d1", "The capital is Lima, they say.");
    EXPECT_EQ(utility_indicator(llm.handle(), testenv::query("q1", "capital of france", {"Paris"}),
                                testenv::passage("d2", "Paris is the capital.")),
              0);
    const auto q2 = testenv::query("q2", "capital of peru", {"Lima"});
    EXPECT_EQ(utility_indicator(llm.handle(), q2, d2), 1);
    EXPECT_EQ(utility_indicator(llm.handle(), q2, d1), 0);
}

TEST(Gold, BuildGoldSet) {
    testenv::MockLlm llm(small_spec());
    const auto q2 = testenv::query("q2", "capital of peru", {"Lima"});
    const auto g = build_gold_set(
        llm.handle(), q2,
        candidates("q2", {testenv::passage("d1", "Lima is big."), testenv::passage("d2", "Lima is the capital.")}));
    EXPECT_EQ(g.member_ids, (std::set<std::string>{"d2"}));
    EXPECT_EQ(g.query_id, "q2");
    EXPECT_EQ(g.backend_id, "mock");
    EXPECT_TRUE(build_gold_set(llm.handle(), q2, candidates("q2", {})).member_ids.empty());

    std::vector<Passage> twenty;
    for (int i = 0; i < 20; ++i) twenty.push_back(testenv::passage("d" + std::to_string(i), "Paris here"));
    EXPECT_TRUE(build_gold_set(llm.handle(), testenv::query("q1", "capital of france", {"Paris"}),
                               candidates("q1", twenty))
                    .member_ids.empty());
}

TEST(Gold, PartitionKnown) {
    testenv::MockLlm llm(small_spec());
    const std::vector<Query> qs = {testenv::query("q1", "a", {"Paris"}), testenv::query("q2", "b", {"Lima"})};
    const auto labels = partition_known(llm.handle(), qs);
    EXPECT_TRUE(labels.at("q1").known);
    EXPECT_FALSE(labels.at("q2").known);
    EXPECT_EQ(labels.at("q2").backend_id, "mock");
    EXPECT_TRUE(partition_known(llm.handle(), {}).empty());
}

TEST(Gold, DisjointKnowledgeGivesDisjointKnownSets) {
    const auto fx = make_fixture();
    testenv::MockLlm a(fx.mock_a, "mock_a");
    testenv::MockLlm b(fx.mock_b, "mock_b");
    const auto la = partition_known(a.handle(), fx.queries);
    const auto lb = partition_known(b.handle(), fx.queries);
    int ka = 0, kb = 0;
    for (const auto& q : fx.queries) {
        EXPECT_FALSE(la.at(q.id).known && lb.at(q.id).known) << q.id;
        ka += la.at(q.id).known;
        kb += lb.at(q.id).known;
    }
    EXPECT_GT(ka, 0);
    EXPECT_GT(kb, 0);
}

// Gold sets through the gateway equal the brute-force oracle, for both
// candidate modes, and indicators agree on shared passages.
TEST(Gold, MatchesOracleOnFixture) {
    const auto fx = make_fixture();
    const auto corpus = fixture_corpus(fx);
    const auto topk = assemble_candidates(fx.run, nullptr, corpus, CandidateSource::retrieval_topk);
    const auto uni = assemble_candidates(fx.run, &fx.qrels, corpus, CandidateSource::union_with_human);
    for (const auto* spec : {&fx.mock_a, &fx.mock_b}) {
        testenv::MockLlm llm(*spec);
        for (const auto& q : fx.queries) {
            const auto gt = build_gold_set(llm.handle(), q, topk.at(q.id));
            const auto gu = build_gold_set(llm.handle(), q, uni.at(q.id));
            EXPECT_EQ(gt.member_ids, oracle::gold(*spec, q, topk.at(q.id))) << q.id;
            EXPECT_EQ(gu.member_ids, oracle::gold(*spec, q, uni.at(q.id))) << q.id;
            const auto ids = topk.at(q.id).ids();
            for (const auto& id : gu.member_ids) {
                if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
                    EXPECT_TRUE(gt.member_ids.count(id));
                }
            }
            EXPECT_TRUE(std::includes(gu.member_ids.begin(), gu.member_ids.end(), gt.member_ids.begin(),
                                      gt.member_ids.end()));
            if (oracle::known(*spec, q)) {
                EXPECT_TRUE(gu.member_ids.empty()) << q.id;
            }
        }
    }
}
