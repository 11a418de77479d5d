#include "utilbench/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "utilbench/errors.hpp"
#include "utilbench/jsonl.hpp"

namespace utilbench {

namespace fs = std::filesystem;
using json = nlohmann::json;

void Corpus::add(Passage passage) {
    if (passage.id.empty()) throw ValidationError("passage with empty id");
    if (passage.text.empty()) throw ValidationError("passage " + passage.id + " has empty text");
    auto id = passage.id;
    auto [it, inserted] = passages_.emplace(id, std::move(passage));
    if (!inserted) throw ValidationError("duplicate passage id '" + id + "'");
}

const Passage* Corpus::find(const std::string& id) const {
    auto it = passages_.find(id);
    return it == passages_.end() ? nullptr : &it->second;
}

const Passage& Corpus::at(const std::string& id) const {
    const Passage* p = find(id);
    if (p == nullptr) throw ValidationError("passage id '" + id + "' not found in corpus");
    return *p;
}

std::vector<Query> load_queries(const fs::path& path) {
    std::vector<Query> out;
    std::unordered_set<std::string> seen;
    jsonl::read(path, [&](const json& j, std::size_t line) {
        for (const char* field : {"id", "text", "answers"}) {
            if (!j.contains(field)) {
                throw ParseError(path.string(), line, std::string("missing field '") + field + "'");
            }
        }
        Query q = j.get<Query>();
        if (q.text.empty()) throw ParseError(path.string(), line, "empty query text");
        if (q.answers.empty()) throw ParseError(path.string(), line, "empty answers list");
        if (!seen.insert(q.id).second) {
            throw ValidationError(path.string() + ":" + std::to_string(line) +
                                  ": duplicate query id '" + q.id + "'");
        }
        out.push_back(std::move(q));
    });
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) fields.push_back(field);
    return fields;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream is(line);
    std::string f;
    while (is >> f) fields.push_back(f);
    return fields;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace

Corpus load_corpus(const fs::path& path) {
    Corpus corpus;
    if (path.extension() == ".jsonl" || path.extension() == ".json") {
        jsonl::read(path, [&](const json& j, std::size_t line) {
            try {
                corpus.add(j.get<Passage>());
            } catch (const ValidationError& e) {
                throw ParseError(path.string(), line, e.what());
            }
        });
        return corpus;
    }

    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (line_no == 1 && !fields.empty() && fields[0] == "id") continue;  // DPR header
        if (fields.size() < 2) throw ParseError(path.string(), line_no, "expected id<TAB>text[<TAB>title]");
        Passage p{fields[0], std::nullopt, fields[1]};
        if (fields.size() >= 3 && !fields[2].empty()) p.title = fields[2];
        try {
            corpus.add(std::move(p));
        } catch (const ValidationError& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return corpus;
}

RetrievalRun load_run(const fs::path& path, int k) {
    if (k <= 0) throw ValidationError("run depth k must be positive");
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());

    struct Row {
        std::string docid;
        long rank;
        double score;
    };
    std::map<std::string, std::vector<Row>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto f = split_ws(line);
        if (f.empty()) continue;
        if (f.size() != 6) {
            throw ParseError(path.string(), line_no,
                             "malformed run line, expected 'qid Q0 docid rank score tag'");
        }
        Row row{f[2], 0, 0.0};
        if (!parse_number(f[3], row.rank) || !parse_number(f[4], row.score)) {
            throw ParseError(path.string(), line_no, "malformed rank or score");
        }
        auto& list = rows[f[0]];
        if (!list.empty()) {
            if (row.rank <= list.back().rank) {
                throw ParseError(path.string(), line_no, "non-monotone rank for query " + f[0]);
            }
            if (row.score > list.back().score) {
                throw ParseError(path.string(), line_no, "score increases with rank for query " + f[0]);
            }
        }
        for (const auto& r : list) {
            if (r.docid == row.docid) {
                throw ParseError(path.string(), line_no, "duplicate docid " + row.docid + " for query " + f[0]);
            }
        }
        list.push_back(std::move(row));
    }

    RetrievalRun run;
    run.k = k;
    for (auto& [qid, list] : rows) {
        auto& entries = run.by_query[qid];
        for (std::size_t i = 0; i < list.size() && i < static_cast<std::size_t>(k); ++i) {
            entries.push_back({list[i].docid, list[i].score});
        }
    }
    return run;
}

HumanQrels load_qrels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    HumanQrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto f = split_ws(line);
        if (f.empty()) continue;
        if (f.size() != 4) throw ParseError(path.string(), line_no, "malformed qrels line, expected 'qid 0 docid rel'");
        double rel = 0;
        if (!parse_number(f[3], rel)) throw ParseError(path.string(), line_no, "malformed relevance");
        if (rel > 0) qrels[f[0]].insert(f[2]);
    }
    return qrels;
}

void check_resolvable(const RetrievalRun& run, const HumanQrels* qrels, const Corpus& corpus) {
    for (const auto& [qid, entries] : run.by_query) {
        for (const auto& e : entries) {
            if (!corpus.find(e.passage_id)) {
                throw ValidationError("run passage '" + e.passage_id + "' for query " + qid + " not in corpus");
            }
        }
    }
    if (qrels == nullptr) return;
    for (const auto& [qid, ids] : *qrels) {
        for (const auto& id : ids) {
            if (!corpus.find(id)) {
                throw ValidationError("qrels passage '" + id + "' for query " + qid + " not in corpus");
            }
        }
    }
}

std::map<std::string, CandidateSet> assemble_candidates(const RetrievalRun& run,
                                                        const HumanQrels* qrels,
                                                        const Corpus& corpus,
                                                        CandidateSource mode) {
    if (mode == CandidateSource::union_with_human && qrels == nullptr) {
        throw ValidationError("union_with_human candidates require human qrels");
    }
    std::map<std::string, CandidateSet> out;
    for (const auto& [qid, entries] : run.by_query) {
        CandidateSet& set = out[qid];
        set.query_id = qid;
        set.source = mode;
        for (const auto& e : entries) set.passages.push_back(corpus.at(e.passage_id));
    }
    if (mode == CandidateSource::retrieval_topk) return out;

    for (const auto& [qid, ids] : *qrels) {
        CandidateSet& set = out[qid];
        set.query_id = qid;
        set.source = mode;
        std::unordered_set<std::string> present;
        for (const auto& p : set.passages) present.insert(p.id);
        // std::set iterates in id order
        for (const auto& id : ids) {
            if (present.insert(id).second) set.passages.push_back(corpus.at(id));
        }
    }
    return out;
}

}  // namespace utilbench
