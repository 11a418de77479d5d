#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "utilbench/gateway/mock_backend.hpp"
#include "utilbench/ingest.hpp"
#include "utilbench/types.hpp"

namespace utilbench {

// Synthetic benchmark with two mocks of disjoint knowledge and disjoint
// readable passages. Readable passages always carry the answer unless
// distractor_readable_rate > 0.
struct FixtureOptions {
    std::uint64_t seed = 20240917;
    int n_queries = 50;
    int n_candidates = 20;
    int max_answer_passages = 5;
    double known_rate = 0.3;             // per mock
    double wrong_known_rate = 0.3;       // of the remaining queries, per mock
    double distractor_readable_rate = 0.0;
};

struct Fixture {
    std::vector<Query> queries;
    std::vector<Passage> passages;
    RetrievalRun run;
    HumanQrels qrels;
    MockKnowledgeSpec mock_a;
    MockKnowledgeSpec mock_b;
    // Query ids chosen by construction, used to make comparisons strict.
    std::string both_unknown_query;  // unknown to both, readable answer passage for each
    std::string a_known_blind_query;  // known by A, no answer passage readable by A
    std::string b_known_blind_query;  // known by B, no answer passage readable by B
};

Fixture make_fixture(const FixtureOptions& options = {});

Corpus fixture_corpus(const Fixture& fixture);

// Writes queries.jsonl, corpus.tsv, run.trec, qrels.txt and config.json.
// The config runs mock_a, mock_b and an over-reliant copy of mock_a over
// every method with union candidates.
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

nlohmann::json fixture_config(const Fixture& fixture, const std::filesystem::path& output_dir,
                              const std::filesystem::path& cache_dir);

}  // namespace utilbench
