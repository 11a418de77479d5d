#include "utilbench/fixture.hpp"

#include <random>
#include <sstream>

#include <fmt/format.h>

#include "utilbench/jsonl.hpp"

namespace utilbench {

using json = nlohmann::json;

namespace {

constexpr const char* kFiller[] = {
    "river",  "lantern", "copper", "meadow",  "harbor", "violet", "granite", "orchard", "signal", "timber",
    "falcon", "marble",  "willow", "canyon",  "ember",  "glacier", "quartz", "saddle",  "thicket", "beacon",
};

std::string letters(int i) {
    std::string s;
    s += static_cast<char>('a' + (i / 26) % 26);
    s += static_cast<char>('a' + i % 26);
    return s;
}

std::string code_name(int i) { return "zx" + letters(i) + "q"; }

enum class Reader { none, a, b };

struct Builder {
    explicit Builder(const FixtureOptions& o) : opt(o), rng(o.seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
    int between(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

    std::string filler(int words) {
        std::string s;
        for (int w = 0; w < words; ++w) {
            if (w) s += ' ';
            s += kFiller[between(0, static_cast<int>(std::size(kFiller)) - 1)];
        }
        return s;
    }

    Reader random_reader() {
        const double r = uniform();
        return r < 0.35 ? Reader::a : (r < 0.7 ? Reader::b : Reader::none);
    }

    void set_reader(const std::string& pid, Reader r) {
        fx.mock_a.readable_passages[pid] = r == Reader::a;
        fx.mock_b.readable_passages[pid] = r == Reader::b;
    }

    Passage make_passage(const std::string& pid, int qi, bool answer_bearing) {
        Passage p;
        p.id = pid;
        p.title = fmt::format("Item {}", qi);
        if (answer_bearing) {
            p.text = fmt::format("{}. The code name of item {} is {}. {}", filler(4), qi, code_name(qi), filler(3));
        } else {
            p.text = fmt::format("{}. Item {} is mentioned here without its code name. {}", filler(4), qi, filler(3));
        }
        return p;
    }

    const FixtureOptions& opt;
    std::mt19937_64 rng;
    Fixture fx;
};

}  // namespace

Fixture make_fixture(const FixtureOptions& options) {
    Builder b(options);
    Fixture& fx = b.fx;
    fx.run.k = options.n_candidates;

    for (int qi = 0; qi < options.n_queries; ++qi) {
        Query q;
        q.id = fmt::format("q{:03}", qi);
        q.text = fmt::format("What is the code name of item {}?", qi);
        q.answers = {code_name(qi)};
        q.dataset = "synthetic";

        // Knowledge: A and B never both know a query.
        enum class Knower { none, a, b } knower = Knower::none;
        if (qi == 1) {
            knower = Knower::a;
        } else if (qi == 2) {
            knower = Knower::b;
        } else if (qi > 2) {
            const double r = b.uniform();
            if (r < options.known_rate) {
                knower = Knower::a;
            } else if (r < 2 * options.known_rate) {
                knower = Knower::b;
            }
        }
        const std::string right = "I believe it is " + code_name(qi);
        if (knower == Knower::a) fx.mock_a.known_answers[q.id] = right;
        if (knower == Knower::b) fx.mock_b.known_answers[q.id] = right;
        if (knower != Knower::a && b.uniform() < options.wrong_known_rate) {
            fx.mock_a.known_answers[q.id] = "I believe it is something else";
        }
        if (knower != Knower::b && b.uniform() < options.wrong_known_rate) {
            fx.mock_b.known_answers[q.id] = "I believe it is something else";
        }

        // Retrieved candidates: a few answer-bearing positions.
        const int n_answer = qi == 0 ? std::max(2, b.between(2, options.max_answer_passages))
                                     : b.between(1, options.max_answer_passages);
        std::vector<int> positions(options.n_candidates);
        for (int j = 0; j < options.n_candidates; ++j) positions[j] = j;
        std::shuffle(positions.begin(), positions.end(), b.rng);
        std::vector<bool> bearing(options.n_candidates, false);
        for (int j = 0; j < n_answer && j < options.n_candidates; ++j) bearing[positions[j]] = true;

        std::vector<std::string> answer_pids;
        auto& ranked = fx.run.by_query[q.id];
        for (int j = 0; j < options.n_candidates; ++j) {
            const std::string pid = fmt::format("p{:03}_{:02}", qi, j);
            fx.passages.push_back(b.make_passage(pid, qi, bearing[j]));
            ranked.push_back({pid, 100.0 - j});
            if (bearing[j]) {
                answer_pids.push_back(pid);
                Reader r = b.random_reader();
                if (qi == 1 && r == Reader::a) r = Reader::none;
                if (qi == 2 && r == Reader::b) r = Reader::none;
                b.set_reader(pid, r);
            } else {
                Reader r = Reader::none;
                if (b.uniform() < options.distractor_readable_rate) r = b.uniform() < 0.5 ? Reader::a : Reader::b;
                b.set_reader(pid, r);
            }
        }
        if (qi == 0) {
            b.set_reader(answer_pids[0], Reader::a);
            b.set_reader(answer_pids[1], Reader::b);
        }

        // Human annotations: retrieved answer passages plus one passage the
        // retriever missed.
        auto& human = fx.qrels[q.id];
        human.insert(answer_pids[0]);
        if (qi == 0) human.insert(answer_pids[1]);
        const std::string missed = fmt::format("p{:03}_h", qi);
        const bool missed_bearing = qi == 0 || b.uniform() < 0.6;
        fx.passages.push_back(b.make_passage(missed, qi, missed_bearing));
        b.set_reader(missed, qi == 0 || !missed_bearing ? Reader::none : b.random_reader());
        if (qi == 1 && fx.mock_a.readable(missed)) b.set_reader(missed, Reader::none);
        if (qi == 2 && fx.mock_b.readable(missed)) b.set_reader(missed, Reader::none);
        human.insert(missed);

        fx.queries.push_back(std::move(q));
    }
    fx.both_unknown_query = "q000";
    fx.a_known_blind_query = "q001";
    fx.b_known_blind_query = "q002";
    return fx;
}

Corpus fixture_corpus(const Fixture& fixture) {
    Corpus c;
    for (const auto& p : fixture.passages) c.add(p);
    return c;
}

json fixture_config(const Fixture& fixture, const std::filesystem::path& output_dir,
                    const std::filesystem::path& cache_dir) {
    auto mock = [](const std::string& id, const MockKnowledgeSpec& spec) {
        return json{{"backend_id", id}, {"kind", "mock"}, {"model_name", id}, {"mock", spec}};
    };
    MockKnowledgeSpec reliant = fixture.mock_a;
    reliant.over_reliance = true;
    json methods = json::array();
    for (auto m : kAllMethods) methods.push_back(to_string(m));
    return json{{"schema_version", 1},
                {"data",
                 {{"queries", "queries.jsonl"}, {"corpus", "corpus.tsv"}, {"run", "run.trec"}, {"qrels", "qrels.txt"}}},
                {"backends", json::array({mock("mock_a", fixture.mock_a), mock("mock_b", fixture.mock_b),
                                          mock("mock_a_reliant", reliant)})},
                {"candidate_modes", json::array({"union_with_human"})},
                {"methods", methods},
                {"candidate_depth", fixture.run.k},
                {"metric_k", json::array({5})},
                {"output_dir", output_dir.string()},
                {"cache_dir", cache_dir.string()},
                {"concurrency", 8},
                {"prompts", {{"dir", nullptr}, {"known_rejection", false}}}};
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& dir) {
    jsonl::write_all(dir / "queries.jsonl", fixture.queries);

    std::ostringstream corpus;
    corpus << "id\ttext\ttitle\n";
    for (const auto& p : fixture.passages) corpus << p.id << '\t' << p.text << '\t' << p.title.value_or("") << '\n';
    jsonl::write_file(dir / "corpus.tsv", corpus.str());

    std::ostringstream run;
    for (const auto& [qid, entries] : fixture.run.by_query) {
        for (std::size_t r = 0; r < entries.size(); ++r) {
            run << qid << " Q0 " << entries[r].passage_id << ' ' << r + 1 << ' ' << fmt::format("{:.4f}", entries[r].score)
                << " fixture\n";
        }
    }
    jsonl::write_file(dir / "run.trec", run.str());

    std::ostringstream qrels;
    for (const auto& [qid, ids] : fixture.qrels) {
        for (const auto& id : ids) qrels << qid << " 0 " << id << " 1\n";
    }
    jsonl::write_file(dir / "qrels.txt", qrels.str());

    jsonl::write_file(dir / "config.json", fixture_config(fixture, "out", "cache").dump(2) + "\n");
}

}  // namespace utilbench
