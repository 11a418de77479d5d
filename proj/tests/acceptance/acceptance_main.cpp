// End-to-end acceptance checks on the seeded mock fixture. One line per
// criterion; exit status is non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include <spdlog/spdlog.h>

#include "mock_oracle.hpp"
#include "test_env.hpp"
#include "utilbench/fixture.hpp"
#include "utilbench/gold.hpp"
#include "utilbench/ingest.hpp"
#include "utilbench/judge.hpp"
#include "utilbench/metrics.hpp"
#include "utilbench/rag_eval.hpp"

using namespace utilbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok && pass) detail << what;
        pass = pass && ok;
    }
};

int failures = 0;

void report(const std::string& name, const std::function<void(Outcome&)>& body) {
    Outcome o;
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << "exception: " << e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name;
    const std::string d = o.detail.str();
    if (!d.empty()) std::cout << "  (" << d << ")";
    std::cout << std::endl;
    failures += o.pass ? 0 : 1;
}

struct Bench {
    Fixture fx = make_fixture();
    Corpus corpus = fixture_corpus(fx);
    std::map<std::string, CandidateSet> topk =
        assemble_candidates(fx.run, nullptr, corpus, CandidateSource::retrieval_topk);
    std::map<std::string, CandidateSet> uni =
        assemble_candidates(fx.run, &fx.qrels, corpus, CandidateSource::union_with_human);

    MockKnowledgeSpec reliant() const {
        auto s = fx.mock_a;
        s.over_reliance = true;
        return s;
    }
};

std::vector<GoldUtilitySet> golds_for(testenv::MockLlm& llm, const Bench& b,
                                      const std::map<std::string, CandidateSet>& cands) {
    std::vector<GoldUtilitySet> out;
    for (const auto& q : b.fx.queries) out.push_back(build_gold_set(llm.handle(), q, cands.at(q.id)));
    return out;
}

// Replies with a fresh random string on every call.
class Babbler final : public Backend {
public:
    explicit Babbler(std::uint64_t seed) : Backend(descriptor()), rng_(seed) {}

    static BackendDescriptor descriptor() {
        auto d = testenv::mock_descriptor("babbler");
        d.kind = BackendKind::http_openai_compatible;
        d.endpoint = "http://unused";
        d.capabilities = {Capability::generate};
        return d;
    }

    GenerationResult generate(const GenerationRequest&) override {
        static const std::string alphabet = "0123456789[],> -\nabYESno.";
        std::lock_guard lock(mutex_);
        std::string s;
        const int n = static_cast<int>(rng_() % 48);
        for (int i = 0; i < n; ++i) {
            const auto r = rng_() % 10;
            if (r == 0) {
                s += std::to_string(static_cast<long long>(rng_() % 40) - 5);
            } else if (r == 1) {
                s += static_cast<char>(rng_() % 256);
            } else {
                s += alphabet[rng_() % alphabet.size()];
            }
        }
        return {s, "stop", 1, nullptr};
    }

private:
    std::mutex mutex_;
    std::mt19937_64 rng_;
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(UTILBENCH_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    const Bench b;

    report("mock oracle equivalence (50 queries x 20 candidates, < 5 s)", [&](Outcome& o) {
        const auto t0 = std::chrono::steady_clock::now();
        int compared = 0;
        for (const auto& spec : {b.fx.mock_a, b.fx.mock_b, b.reliant()}) {
            testenv::MockLlm llm(spec);
            for (const auto* cands : {&b.topk, &b.uni}) {
                for (const auto& q : b.fx.queries) {
                    const auto& c = cands->at(q.id);
                    const auto got = build_gold_set(llm.handle(), q, c).member_ids;
                    o.check(got == oracle::gold(spec, q, c), "mismatch on " + q.id);
                    ++compared;
                }
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.check(b.fx.queries.size() == 50, "fixture size");
        for (const auto& [qid, c] : b.topk) o.check(c.passages.size() == 20, "candidate depth " + qid);
        o.check(secs < 5.0, "too slow");
        o.detail << compared << " gold sets, " << secs << " s";
    });

    report("known queries have empty gold sets", [&](Outcome& o) {
        int known = 0;
        for (const auto& spec : {b.fx.mock_a, b.fx.mock_b, b.reliant()}) {
            testenv::MockLlm llm(spec);
            const auto labels = partition_known(llm.handle(), b.fx.queries);
            for (const auto* cands : {&b.topk, &b.uni}) {
                for (const auto& q : b.fx.queries) {
                    if (!labels.at(q.id).known) continue;
                    ++known;
                    o.check(build_gold_set(llm.handle(), q, cands->at(q.id)).member_ids.empty(), q.id);
                }
            }
        }
        o.check(known > 0, "no known queries");
        o.detail << known << " known (backend, mode, query) cases";
    });

    report("metric ground truth within 1e-9", [&](Outcome& o) {
        const std::vector<std::string> r1 = {"d2", "d1", "d3", "d4", "d5"};
        const std::vector<std::string> r2 = {"d1", "d3", "d2", "d4", "d5"};
        const std::vector<std::string> r0 = {"d1", "d2", "d3", "d4", "d5"};
        const double a = ndcg_at_k(r1, {"d1"}, 5);
        const double c = ndcg_at_k(r2, {"d1", "d2"}, 5);
        o.check(std::abs(ndcg_at_k(r0, {"d1"}, 5) - 1.0) < 1e-9, "ideal ndcg");
        o.check(std::abs(a - 1.0 / std::log2(3.0)) < 1e-9 && std::abs(a - 0.63093) < 5e-6, "0.63093");
        o.check(std::abs(c - 1.5 / (1.0 + 1.0 / std::log2(3.0))) < 1e-9 && std::abs(c - 0.91972) < 5e-6,
                "0.91972");
        JudgmentResult res;
        res.query_id = "q";
        res.selected_ids = {"d1", "d2"};
        GoldUtilitySet g;
        g.query_id = "q";
        g.member_ids = {"d1", "d3"};
        const std::vector<JudgmentResult> rs = {res};
        const std::vector<GoldUtilitySet> gs = {g};
        const auto m = set_metrics(rs, gs);
        o.check(std::abs(m.precision - 0.5) < 1e-9 && std::abs(m.recall - 0.5) < 1e-9 && std::abs(m.f1 - 0.5) < 1e-9,
                "P=R=F1=0.5");
        o.detail << "ndcg " << a << ", " << c << "; P/R/F1 " << m.precision << "/" << m.recall << "/" << m.f1;
    });

    report("has_answer: gold >= candidates >= none, strict where guaranteed", [&](Outcome& o) {
        for (const auto& spec : {b.fx.mock_a, b.fx.mock_b}) {
            testenv::MockLlm llm(spec);
            const auto labels = partition_known(llm.handle(), b.fx.queries);
            for (const auto* cands : {&b.topk, &b.uni}) {
                const auto golds = golds_for(llm, b, *cands);
                const auto g = eval_rag(llm.handle(), b.fx.queries, gold_passages(*cands, golds), labels).mean;
                const auto f = eval_rag(llm.handle(), b.fx.queries, candidate_passages(*cands), labels).mean;
                const auto n = eval_rag(llm.handle(), b.fx.queries, PassageSource{}, labels).mean;
                o.check(g >= f, "gold < candidates");
                o.check(f > n, "candidates <= none");
                o.detail << g << " >= " << f << " > " << n << "; ";
            }
        }
    });

    report("transfer: diagonal beats off-diagonal for each generator", [&](Outcome& o) {
        testenv::MockLlm a(b.fx.mock_a, "mock_a");
        testenv::MockLlm bb(b.fx.mock_b, "mock_b");
        std::map<std::string, std::vector<GoldUtilitySet>> golds;
        std::map<std::string, std::map<std::string, KnownnessLabel>> known;
        for (auto* llm : {&a, &bb}) {
            known[llm->backend_id] = partition_known(llm->handle(), b.fx.queries);
            golds[llm->backend_id] = golds_for(*llm, b, b.topk);
        }
        const std::vector<BackendHandle> gens = {a.handle(), bb.handle()};
        const auto t = transfer_matrix(gens, golds, b.fx.queries, b.topk, known);
        const auto& c = t.cells;
        o.check(c.at("mock_a").at("mock_a") > c.at("mock_a").at("mock_b"), "row mock_a");
        o.check(c.at("mock_b").at("mock_b") > c.at("mock_b").at("mock_a"), "row mock_b");
        o.detail << "A: " << c.at("mock_a").at("mock_a") << " vs " << c.at("mock_a").at("mock_b") << "; B: "
                 << c.at("mock_b").at("mock_b") << " vs " << c.at("mock_b").at("mock_a");
    });

    report("over-reliance: known queries do worse with non-gold passages than with none", [&](Outcome& o) {
        testenv::MockLlm llm(b.reliant(), "mock_a_reliant");
        const auto labels = partition_known(llm.handle(), b.fx.queries);
        for (const auto* cands : {&b.topk, &b.uni}) {
            const auto golds = golds_for(llm, b, *cands);
            PassageSource non_gold;
            for (const auto& g : golds) {
                for (const auto& p : cands->at(g.query_id).passages) {
                    if (!g.member_ids.count(p.id)) non_gold[g.query_id].push_back(p);
                }
            }
            const auto with = eval_rag(llm.handle(), b.fx.queries, non_gold, labels);
            const auto none = eval_rag(llm.handle(), b.fx.queries, PassageSource{}, labels);
            o.check(with.n_known > 0, "no known queries");
            o.check(with.mean_known < none.mean_known, "not lower");
            o.detail << with.mean_known << " < " << none.mean_known << "; ";
        }
    });

    report("reply parser fuzz: 10k selections are subsets, 10k rankings are permutations", [&](Outcome& o) {
        Gateway gw;
        gw.add_backend(std::make_shared<Babbler>(20240917));
        const auto templates = TemplateSet::defaults();
        const BackendHandle h{gw, "babbler", templates};
        std::mt19937_64 rng(5);
        for (int i = 0; i < 10000; ++i) {
            const std::size_t n = rng() % 21;
            CandidateSet cs{"q" + std::to_string(i), {}, CandidateSource::retrieval_topk};
            for (std::size_t j = 0; j < n; ++j) cs.passages.push_back(testenv::passage("p" + std::to_string(j), "x"));
            const Query q = testenv::query(cs.query_id, "question " + std::to_string(i), {"a"});
            const auto ids = cs.ids();
            const std::set<std::string> all(ids.begin(), ids.end());
            const auto sel = select_listwise(h, q, cs, std::nullopt);
            o.check(std::includes(all.begin(), all.end(), sel.selected_ids.begin(), sel.selected_ids.end()),
                    "non-subset at " + std::to_string(i));
            auto ranked = rank_verbalized(h, q, cs, std::nullopt).ranked_ids;
            auto sorted_ids = ids;
            std::sort(ranked.begin(), ranked.end());
            std::sort(sorted_ids.begin(), sorted_ids.end());
            o.check(ranked == sorted_ids, "non-permutation at " + std::to_string(i));
        }
        o.detail << gw.stats().backend_calls << " replies";
    });

    report("likelihood and attention rank a readable answer passage first", [&](Outcome& o) {
        int cases = 0;
        for (const auto& spec : {b.fx.mock_a, b.fx.mock_b}) {
            testenv::MockLlm llm(spec);
            for (const auto& q : b.fx.queries) {
                const auto& cs = b.topk.at(q.id);
                std::set<std::string> targets;
                for (const auto& p : cs.passages) {
                    if (spec.readable(p.id) && oracle::contains_answer(p.text, q.answers)) targets.insert(p.id);
                }
                if (targets.empty()) continue;
                ++cases;
                const auto pseudo = generate_pseudo_answer(llm.handle(), q, cs);
                const auto lik = score_likelihood(llm.handle(), q, cs, pseudo);
                const auto att = score_attention(llm.handle(), q, cs);
                o.check(targets.count(lik.ranked_ids.front()) > 0, "likelihood on " + q.id);
                o.check(targets.count(att.ranked_ids.front()) > 0, "attention on " + q.id);
            }
        }
        o.check(cases > 0, "no eligible queries");
        o.detail << cases << " (backend, query) cases";
    });

    report("ppl: in-gold human passages exp(0.1) < out-of-gold exp(2.0)", [&](Outcome& o) {
        for (const auto& spec : {b.fx.mock_a, b.fx.mock_b}) {
            testenv::MockLlm llm(spec);
            const auto golds = golds_for(llm, b, b.uni);
            const auto g = ppl_group_compare(llm.gateway, "mock", b.fx.queries, golds, b.fx.qrels, b.corpus);
            o.check(g.in_gold_passage && g.out_gold_passage, "empty group");
            if (!g.in_gold_passage || !g.out_gold_passage) return;
            o.check(std::abs(*g.in_gold_passage - std::exp(0.1)) < 1e-9, "in-gold value");
            o.check(std::abs(*g.out_gold_passage - std::exp(2.0)) < 1e-9, "out-of-gold value");
            o.check(*g.in_gold_passage < *g.out_gold_passage, "order");
            o.detail << *g.in_gold_passage << " (n=" << g.n_in << ") < " << *g.out_gold_passage << " (n=" << g.n_out
                     << "); ";
        }
    });

    report("two runs produce byte-identical JSONL artifacts", [&](Outcome& o) {
        testenv::TempDir x, y;
        for (const auto* d : {&x, &y}) {
            o.check(run_cli("make-fixture --out " + d->path().string()) == 0, "make-fixture");
            o.check(run_cli("run -q --config " + (d->path() / "config.json").string()) == 0, "run");
        }
        int files = 0;
        for (const auto& e : fs::recursive_directory_iterator(x / "out")) {
            if (!e.is_regular_file() || e.path().extension() != ".jsonl") continue;
            const auto rel = fs::relative(e.path(), x / "out");
            o.check(slurp(e.path()) == slurp(y / "out" / rel), "differs: " + rel.string());
            ++files;
        }
        o.check(files > 0, "no artifacts");
        o.detail << files << " files compared";
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
