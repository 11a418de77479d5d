#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "utilbench/types.hpp"

namespace utilbench {

// Id-indexed passage table.
class Corpus {
public:
    void add(Passage passage);  // throws ValidationError on duplicate id / empty text
    const Passage* find(const std::string& id) const;
    const Passage& at(const std::string& id) const;  // throws ValidationError
    std::size_t size() const { return passages_.size(); }

private:
    std::unordered_map<std::string, Passage> passages_;
};

// query_id -> passage ids judged relevant (rel > 0).
using HumanQrels = std::map<std::string, std::set<std::string>>;

struct RunEntry {
    std::string passage_id;
    double score = 0.0;
};

struct RetrievalRun {
    std::map<std::string, std::vector<RunEntry>> by_query;
    int k = 20;
};

std::vector<Query> load_queries(const std::filesystem::path& path);

// TSV (id<TAB>text<TAB>title, optional "id" header line) or JSONL by extension.
Corpus load_corpus(const std::filesystem::path& path);

// TREC run: "qid Q0 docid rank score tag". Keeps the top-k per query by rank.
RetrievalRun load_run(const std::filesystem::path& path, int k);

// TREC qrels: "qid 0 docid rel"; rel > 0 counts as relevant.
HumanQrels load_qrels(const std::filesystem::path& path);

// Ensures every run/qrels id resolves in the corpus.
void check_resolvable(const RetrievalRun& run, const HumanQrels* qrels, const Corpus& corpus);

// retrieval_topk: run order. union_with_human: run order, then human passages
// not already present, sorted by id.
std::map<std::string, CandidateSet> assemble_candidates(const RetrievalRun& run,
                                                        const HumanQrels* qrels,
                                                        const Corpus& corpus,
                                                        CandidateSource mode);

}  // namespace utilbench
