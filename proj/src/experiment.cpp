#include "utilbench/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "utilbench/errors.hpp"
#include "utilbench/gateway/http_backend.hpp"
#include "utilbench/gateway/introspect_backend.hpp"
#include "utilbench/gold.hpp"
#include "utilbench/ingest.hpp"
#include "utilbench/judge.hpp"
#include "utilbench/jsonl.hpp"
#include "utilbench/metrics.hpp"
#include "utilbench/rag_eval.hpp"
#include "utilbench/report.hpp"

namespace utilbench {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const json& value, const char* field) {
    if (!value.is_string() || value.get<std::string>().empty()) {
        throw ValidationError(std::string("config field '") + field + "' must be a non-empty string");
    }
    fs::path p = value.get<std::string>();
    return p.is_absolute() ? p : base / p;
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    ExperimentConfig c;
    c.schema_version = field_or(j, "schema_version", 0);
    if (c.schema_version != 1) {
        throw ValidationError(fmt::format("unsupported config schema_version {} (expected 1)", c.schema_version));
    }

    if (!j.contains("data") || !j["data"].is_object()) throw ValidationError("config needs a 'data' object");
    const auto& data = j["data"];
    c.data.queries = resolve(base_dir, data.value("queries", json()), "data.queries");
    c.data.corpus = resolve(base_dir, data.value("corpus", json()), "data.corpus");
    c.data.run = resolve(base_dir, data.value("run", json()), "data.run");
    if (data.contains("qrels") && !data["qrels"].is_null()) c.data.qrels = resolve(base_dir, data["qrels"], "data.qrels");

    if (!j.contains("backends") || !j["backends"].is_array()) throw ValidationError("config needs a 'backends' array");
    for (const auto& b : j["backends"]) {
        if (b.contains("api_key")) {
            throw ValidationError("API keys do not belong in the config; name an environment variable in api_key_env");
        }
        BackendConfig bc;
        try {
            bc.descriptor = b.get<BackendDescriptor>();
            if (b.contains("mock") && !b["mock"].is_null()) bc.mock = b["mock"].get<MockKnowledgeSpec>();
        } catch (const json::exception& e) {
            throw ValidationError(std::string("backend entry: ") + e.what());
        }
        c.backends.push_back(std::move(bc));
    }

    if (j.contains("candidate_modes")) {
        c.candidate_modes.clear();
        for (const auto& m : j["candidate_modes"]) c.candidate_modes.push_back(candidate_source_from_string(m.get<std::string>()));
    }

    if (j.contains("methods")) {
        const auto& m = j["methods"];
        if (m.is_string() && m.get<std::string>() == "all") {
            c.methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
        } else if (m.is_array()) {
            for (const auto& name : m) {
                if (!name.is_string()) throw ValidationError("method names must be strings");
                c.methods.push_back(judgment_method_from_string(name.get<std::string>()));
            }
        } else {
            throw ValidationError("'methods' must be an array of names or \"all\"");
        }
    }

    c.candidate_depth = field_or(j, "candidate_depth", 20);
    c.metric_k = field_or(j, "metric_k", std::vector<int>{5});
    if (!j.contains("output_dir")) throw ValidationError("config needs 'output_dir'");
    c.output_dir = resolve(base_dir, j["output_dir"], "output_dir");
    if (j.contains("cache_dir") && !j["cache_dir"].is_null()) c.cache_dir = resolve(base_dir, j["cache_dir"], "cache_dir");
    c.concurrency = field_or(j, "concurrency", 8);
    if (j.contains("retry") && j["retry"].is_object()) {
        c.retry.max_attempts = field_or(j["retry"], "max_attempts", c.retry.max_attempts);
        c.retry.base_delay = std::chrono::milliseconds(
            field_or(j["retry"], "base_delay_ms", static_cast<long>(c.retry.base_delay.count())));
    }
    c.length_normalized_likelihood = field_or(j, "length_normalized_likelihood", false);
    if (j.contains("prompts") && j["prompts"].is_object()) {
        const auto& p = j["prompts"];
        if (p.contains("dir") && !p["dir"].is_null()) c.prompts_dir = resolve(base_dir, p["dir"], "prompts.dir");
        c.known_rejection = field_or(p, "known_rejection", false);
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    return from_json(j, fs::absolute(path).parent_path());
}

void ExperimentConfig::validate() const {
    auto require_file = [](const fs::path& p, const char* what) {
        if (!fs::is_regular_file(p)) throw ValidationError(std::string(what) + " file not found: " + p.string());
    };
    require_file(data.queries, "queries");
    require_file(data.corpus, "corpus");
    require_file(data.run, "run");
    if (data.qrels) require_file(*data.qrels, "qrels");
    if (prompts_dir && !fs::is_directory(*prompts_dir)) {
        throw ValidationError("prompt directory not found: " + prompts_dir->string());
    }

    if (backends.empty()) throw ValidationError("config lists no backends");
    if (methods.empty()) throw ValidationError("config lists no methods");
    if (candidate_modes.empty()) throw ValidationError("config lists no candidate modes");
    std::set<std::string> ids;
    for (const auto& b : backends) {
        if (!ids.insert(b.descriptor.backend_id).second) {
            throw ValidationError("duplicate backend id '" + b.descriptor.backend_id + "'");
        }
        if (b.descriptor.kind == BackendKind::mock && !b.mock) {
            throw ValidationError("mock backend '" + b.descriptor.backend_id + "' needs a 'mock' spec");
        }
        if (b.descriptor.kind != BackendKind::mock && !b.descriptor.endpoint) {
            throw ValidationError("backend '" + b.descriptor.backend_id + "' needs an endpoint");
        }
    }
    for (auto m : candidate_modes) {
        if (m == CandidateSource::union_with_human && !data.qrels) {
            throw ValidationError("union_with_human candidates need a qrels file");
        }
    }
    if (candidate_depth < 1) throw ValidationError("candidate_depth must be >= 1");
    if (metric_k.empty()) throw ValidationError("metric_k must list at least one cutoff");
    for (int k : metric_k) {
        if (k < 1) throw ValidationError("metric_k values must be >= 1");
    }
    if (concurrency < 1) throw ValidationError("concurrency must be >= 1");
    if (retry.max_attempts < 1) throw ValidationError("retry.max_attempts must be >= 1");
    if (retry.base_delay.count() < 0) throw ValidationError("retry.base_delay_ms must be >= 0");
}

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::ingest: return "ingest";
        case Stage::partition: return "partition";
        case Stage::gold: return "gold";
        case Stage::judge: return "judge";
        case Stage::eval_set: return "eval-set";
        case Stage::eval_rank: return "eval-rank";
        case Stage::eval_rag: return "eval-rag";
        case Stage::transfer: return "transfer";
        case Stage::overlap: return "overlap";
        case Stage::ppl: return "ppl";
        case Stage::report: return "report";
    }
    return "report";
}

Stage stage_from_string(std::string_view name) {
    for (auto s : kAllStages) {
        if (to_string(s) == name) return s;
    }
    throw ValidationError("unknown stage '" + std::string(name) + "'");
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
    switch (config.descriptor.kind) {
        case BackendKind::mock:
            if (!config.mock) throw ValidationError("mock backend '" + config.descriptor.backend_id + "' has no spec");
            return std::make_shared<MockBackend>(config.descriptor, *config.mock);
        case BackendKind::http_openai_compatible:
            return std::make_shared<OpenAiCompatibleBackend>(config.descriptor);
        case BackendKind::introspection:
            return std::make_shared<IntrospectionBackend>(config.descriptor);
    }
    throw ValidationError("unhandled backend kind");
}

namespace {

GatewayOptions gateway_options(const ExperimentConfig& c, const RunOptions& o) {
    GatewayOptions g;
    g.cache_dir = c.cache_dir;
    g.max_in_flight = c.concurrency;
    g.retry = c.retry;
    g.refresh = o.force;
    return g;
}

json source_json(const std::optional<CandidateSource>& s) { return s ? json(to_string(*s)) : json(nullptr); }

std::string opt_real(const json& v) { return v.is_number() ? format_real(v.get<double>()) : "-"; }

class Pipeline {
public:
    Pipeline(const ExperimentConfig& config, const RunOptions& options)
        : cfg_(config), opt_(options), gateway_(gateway_options(config, options)),
          templates_(config.prompts_dir ? TemplateSet::load(*config.prompts_dir, config.known_rejection)
                                        : TemplateSet::defaults(config.known_rejection)) {
        for (const auto& b : cfg_.backends) {
            gateway_.add_backend(make_backend(b));
            all_backends_.push_back(b.descriptor.backend_id);
        }
        if (opt_.backend_filter) {
            if (std::find(all_backends_.begin(), all_backends_.end(), *opt_.backend_filter) == all_backends_.end()) {
                throw ValidationError("--backend names an unknown backend '" + *opt_.backend_filter + "'");
            }
            selected_ = {*opt_.backend_filter};
        } else {
            selected_ = all_backends_;
        }
        load_data();
    }

    ReportBundle execute() {
        std::vector<Stage> stages;
        if (opt_.only) {
            stages.push_back(*opt_.only);
        } else {
            for (auto s : kAllStages) {
                stages.push_back(s);
                if (opt_.until && s == *opt_.until) break;
            }
        }
        bool dirty = false;
        for (auto s : stages) {
            if (opt_.resume && !dirty && complete(s)) {
                spdlog::info("stage {}: artifacts present, skipped", to_string(s));
                continue;
            }
            spdlog::info("stage {}: running", to_string(s));
            run_stage(s);
            bundle_.stages_run.emplace_back(to_string(s));
            dirty = true;
        }
        if (bundle_.report.is_null() && fs::exists(cfg_.output_dir / "report" / "report.json")) {
            std::ifstream in(cfg_.output_dir / "report" / "report.json");
            bundle_.report = json::parse(in);
        }
        bundle_.stats = gateway_.stats();
        return bundle_;
    }

private:
    // Data and candidates are rebuilt from the inputs on every invocation;
    // they are cheap and deterministic.
    void load_data() {
        queries_ = load_queries(cfg_.data.queries);
        for (const auto& q : queries_) query_by_id_[q.id] = &q;
        corpus_ = load_corpus(cfg_.data.corpus);
        run_ = load_run(cfg_.data.run, cfg_.candidate_depth);
        if (cfg_.data.qrels) qrels_ = load_qrels(*cfg_.data.qrels);
        const HumanQrels* qrels = qrels_ ? &*qrels_ : nullptr;
        check_resolvable(run_, qrels, corpus_);

        topk_ = assemble_candidates(run_, qrels, corpus_, CandidateSource::retrieval_topk);
        for (auto mode : cfg_.candidate_modes) {
            candidates_[mode] = assemble_candidates(run_, qrels, corpus_, mode);
            for (const auto& [qid, _] : candidates_[mode]) {
                if (!query_by_id_.count(qid)) throw ValidationError("run or qrels name unknown query '" + qid + "'");
            }
        }
    }

    fs::path artifact(std::string_view stage, const std::string& name) const {
        return cfg_.output_dir / std::string(stage) / (name + ".jsonl");
    }

    bool complete(Stage s) const {
        switch (s) {
            case Stage::ingest: return fs::exists(artifact("ingest", "candidates"));
            case Stage::report: return fs::exists(cfg_.output_dir / "report" / "report.json");
            default: break;
        }
        for (const auto& b : selected_) {
            if (!fs::exists(artifact(to_string(s), b))) return false;
            if (s == Stage::judge && !fs::exists(artifact("pseudo", b))) return false;
        }
        return true;
    }

    std::vector<json> read_artifact(std::string_view stage, const std::string& name) const {
        const auto path = artifact(stage, name);
        if (!fs::exists(path)) {
            throw ValidationError(fmt::format("missing artifact {}; run the {} stage first", path.string(), stage));
        }
        std::vector<json> out;
        jsonl::read(path, [&](const json& j, std::size_t) { out.push_back(j); });
        return out;
    }

    BackendHandle handle(const std::string& id) { return BackendHandle{gateway_, id, templates_}; }

    const Query& query(const std::string& id) const { return *query_by_id_.at(id); }

    void run_stage(Stage s) {
        switch (s) {
            case Stage::ingest: return stage_ingest();
            case Stage::report: return stage_report();
            default: break;
        }
        for (const auto& b : selected_) {
            switch (s) {
                case Stage::partition: stage_partition(b); break;
                case Stage::gold: stage_gold(b); break;
                case Stage::judge: stage_judge(b); break;
                case Stage::eval_set: stage_eval_set(b); break;
                case Stage::eval_rank: stage_eval_rank(b); break;
                case Stage::eval_rag: stage_eval_rag(b); break;
                case Stage::transfer: stage_transfer(b); break;
                case Stage::overlap: stage_overlap(b); break;
                case Stage::ppl: stage_ppl(b); break;
                default: break;
            }
        }
    }

    void stage_ingest() {
        std::vector<json> records;
        auto emit = [&](const std::map<std::string, CandidateSet>& sets) {
            for (const auto& [qid, cs] : sets) {
                records.push_back(json{{"query_id", qid}, {"candidate_source", to_string(cs.source)}, {"passage_ids", cs.ids()}});
            }
        };
        emit(topk_);
        for (auto mode : cfg_.candidate_modes) {
            if (mode != CandidateSource::retrieval_topk) emit(candidates_.at(mode));
        }
        jsonl::write(artifact("ingest", "candidates"), records);
        spdlog::info("ingest: {} queries, {} passages, {} candidate lists", queries_.size(), corpus_.size(),
                     records.size());
    }

    void stage_partition(const std::string& b) {
        auto labels = partition_known(handle(b), queries_);
        std::vector<json> records;
        for (const auto& [_, l] : labels) records.emplace_back(l);
        jsonl::write(artifact("partition", b), records);
    }

    std::map<std::string, KnownnessLabel> load_partition(const std::string& b) const {
        std::map<std::string, KnownnessLabel> out;
        for (const auto& j : read_artifact("partition", b)) {
            auto l = j.get<KnownnessLabel>();
            out.emplace(l.query_id, std::move(l));
        }
        return out;
    }

    void stage_gold(const std::string& b) {
        std::vector<json> records;
        auto llm = handle(b);
        for (auto mode : cfg_.candidate_modes) {
            const auto& sets = candidates_.at(mode);
            std::vector<const CandidateSet*> order;
            for (const auto& [_, cs] : sets) order.push_back(&cs);
            std::vector<GoldUtilitySet> golds(order.size());
            gateway_.parallel_for(order.size(), [&](std::size_t i) {
                golds[i] = build_gold_set(llm, query(order[i]->query_id), *order[i]);
            });
            for (const auto& g : golds) records.emplace_back(g);
        }
        jsonl::write(artifact("gold", b), records);
    }

    std::vector<GoldUtilitySet> load_gold(const std::string& b, CandidateSource mode) const {
        std::vector<GoldUtilitySet> out;
        for (const auto& j : read_artifact("gold", b)) {
            auto g = j.get<GoldUtilitySet>();
            if (g.candidate_source == mode) out.push_back(std::move(g));
        }
        return out;
    }

    void stage_judge(const std::string& b) {
        auto llm = handle(b);
        std::set<std::string> qids;
        for (const auto& [_, sets] : candidates_) {
            for (const auto& [qid, _2] : sets) qids.insert(qid);
        }
        const std::vector<std::string> ids(qids.begin(), qids.end());
        std::vector<std::string> pseudo(ids.size());
        gateway_.parallel_for(ids.size(), [&](std::size_t i) {
            auto it = topk_.find(ids[i]);
            const CandidateSet empty{ids[i], {}, CandidateSource::retrieval_topk};
            pseudo[i] = generate_pseudo_answer(llm, query(ids[i]), it == topk_.end() ? empty : it->second);
        });
        std::map<std::string, std::string> pseudo_by_id;
        std::vector<json> pseudo_records;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            pseudo_by_id[ids[i]] = pseudo[i];
            pseudo_records.push_back(json{{"query_id", ids[i]}, {"pseudo_answer", pseudo[i]}});
        }
        jsonl::write(artifact("pseudo", b), pseudo_records);

        JudgeOptions jopt;
        jopt.length_normalized_likelihood = cfg_.length_normalized_likelihood;
        std::vector<json> records;
        for (auto mode : cfg_.candidate_modes) {
            const auto& sets = candidates_.at(mode);
            std::vector<const CandidateSet*> order;
            for (const auto& [_, cs] : sets) order.push_back(&cs);
            for (auto method : cfg_.methods) {
                std::vector<JudgmentResult> results(order.size());
                gateway_.parallel_for(order.size(), [&](std::size_t i) {
                    const auto& qid = order[i]->query_id;
                    std::optional<std::string> pa;
                    if (uses_pseudo_answer(method)) pa = pseudo_by_id.at(qid);
                    results[i] = run_method(method, llm, query(qid), *order[i], pa, jopt);
                });
                for (const auto& r : results) records.emplace_back(r);
            }
        }
        jsonl::write(artifact("judge", b), records);
    }

    std::vector<JudgmentResult> load_judge(const std::string& b, CandidateSource mode, JudgmentMethod method) const {
        std::vector<JudgmentResult> out;
        for (const auto& j : read_artifact("judge", b)) {
            auto r = j.get<JudgmentResult>();
            if (r.candidate_source == mode && r.method == method) out.push_back(std::move(r));
        }
        return out;
    }

    void stage_eval_set(const std::string& b) {
        std::vector<json> records;
        for (auto mode : cfg_.candidate_modes) {
            const auto golds = load_gold(b, mode);
            for (auto method : cfg_.methods) {
                if (!is_selection_method(method)) continue;
                const auto results = load_judge(b, mode, method);
                records.push_back(json{{"candidate_source", to_string(mode)},
                                       {"method", to_string(method)},
                                       {"metrics", set_metrics(results, golds)}});
            }
        }
        jsonl::write(artifact("eval-set", b), records);
    }

    void stage_eval_rank(const std::string& b) {
        std::vector<json> records;
        for (auto mode : cfg_.candidate_modes) {
            const auto golds = load_gold(b, mode);
            for (auto method : cfg_.methods) {
                if (is_selection_method(method)) continue;
                const auto results = load_judge(b, mode, method);
                for (int k : cfg_.metric_k) {
                    records.push_back(json{{"candidate_source", to_string(mode)},
                                           {"method", to_string(method)},
                                           {"metrics", rank_metrics(results, golds, k)}});
                }
            }
        }
        jsonl::write(artifact("eval-rank", b), records);
    }

    static json rag_record(const std::string& condition, std::optional<CandidateSource> mode, const RagReport& r) {
        json j = r;
        j["condition"] = condition;
        j["candidate_source"] = source_json(mode);
        j["per_query"] = r.per_query;
        return j;
    }

    void stage_eval_rag(const std::string& b) {
        auto llm = handle(b);
        const auto known = load_partition(b);
        std::vector<json> records;

        records.push_back(rag_record("none", std::nullopt, eval_rag(llm, queries_, {}, known)));
        if (qrels_) {
            PassageSource human;
            for (const auto& [qid, ids] : *qrels_) {
                for (const auto& id : ids) human[qid].push_back(corpus_.at(id));
            }
            records.push_back(rag_record("human", std::nullopt, eval_rag(llm, queries_, human, known)));
        }

        const int top = cfg_.metric_k.front();
        for (auto mode : cfg_.candidate_modes) {
            const auto& sets = candidates_.at(mode);
            const auto golds = load_gold(b, mode);
            records.push_back(rag_record("candidates", mode, eval_rag(llm, queries_, candidate_passages(sets), known)));
            records.push_back(rag_record("gold", mode, eval_rag(llm, queries_, gold_passages(sets, golds), known)));

            PassageSource non_gold;
            for (const auto& g : golds) {
                auto& list = non_gold[g.query_id];
                for (const auto& p : sets.at(g.query_id).passages) {
                    if (!g.member_ids.count(p.id)) list.push_back(p);
                }
            }
            records.push_back(rag_record("non_gold", mode, eval_rag(llm, queries_, non_gold, known)));

            for (auto method : cfg_.methods) {
                PassageSource judged;
                for (const auto& r : load_judge(b, mode, method)) {
                    const auto& cs = sets.at(r.query_id);
                    auto& list = judged[r.query_id];
                    if (is_selection_method(method)) {
                        for (const auto& p : cs.passages) {
                            if (r.selected_ids.count(p.id)) list.push_back(p);
                        }
                    } else {
                        for (std::size_t i = 0; i < r.ranked_ids.size() && i < static_cast<std::size_t>(top); ++i) {
                            list.push_back(corpus_.at(r.ranked_ids[i]));
                        }
                    }
                }
                records.push_back(rag_record("method:" + std::string(to_string(method)), mode,
                                             eval_rag(llm, queries_, judged, known)));
            }
        }
        jsonl::write(artifact("eval-rag", b), records);
    }

    void stage_transfer(const std::string& b) {
        std::vector<json> records;
        const BackendHandle gens[] = {handle(b)};
        const std::map<std::string, std::map<std::string, KnownnessLabel>> known{{b, load_partition(b)}};
        for (auto mode : cfg_.candidate_modes) {
            std::map<std::string, std::vector<GoldUtilitySet>> golds;
            for (const auto& src : all_backends_) golds[src] = load_gold(src, mode);
            const auto t = transfer_matrix(gens, golds, queries_, candidates_.at(mode), known);
            for (const auto& src : t.gold_sources) {
                records.push_back(json{{"candidate_source", to_string(mode)},
                                       {"generator", b},
                                       {"gold_source", src},
                                       {"mean_has_answer", t.cells.at(b).at(src)}});
            }
        }
        jsonl::write(artifact("transfer", b), records);
    }

    void stage_overlap(const std::string& b) {
        std::vector<json> records;
        if (!qrels_) {
            spdlog::warn("overlap: no qrels configured; writing an empty artifact for {}", b);
        } else {
            for (auto mode : cfg_.candidate_modes) {
                const auto stats = overlap_stats({{b, load_gold(b, mode)}}, *qrels_).at(b);
                json j = stats;
                j["candidate_source"] = to_string(mode);
                records.push_back(std::move(j));
            }
        }
        jsonl::write(artifact("overlap", b), records);
    }

    void stage_ppl(const std::string& b) {
        std::vector<json> records;
        if (!qrels_) {
            spdlog::warn("ppl: no qrels configured; writing an empty artifact for {}", b);
        } else if (!gateway_.descriptor(b).has(Capability::score_continuation)) {
            spdlog::warn("ppl: backend {} cannot score continuations; skipped", b);
        } else {
            for (auto mode : cfg_.candidate_modes) {
                const auto groups = ppl_group_compare(gateway_, b, queries_, load_gold(b, mode), *qrels_, corpus_);
                json j = groups;
                j["candidate_source"] = to_string(mode);
                j["rows"] = groups.rows;
                records.push_back(std::move(j));
            }
        }
        jsonl::write(artifact("ppl", b), records);
    }

    // Collects every backend's artifacts for one stage; absent ones are noted.
    std::map<std::string, std::vector<json>> gather(std::string_view stage, std::vector<std::string>& missing) const {
        std::map<std::string, std::vector<json>> out;
        for (const auto& b : all_backends_) {
            if (!fs::exists(artifact(stage, b))) {
                missing.push_back(fmt::format("{}/{}", stage, b));
                continue;
            }
            out[b] = read_artifact(stage, b);
        }
        return out;
    }

    void stage_report() {
        std::vector<std::string> missing;
        const auto rag = gather("eval-rag", missing);
        const auto set = gather("eval-set", missing);
        const auto rank = gather("eval-rank", missing);
        const auto transfer = gather("transfer", missing);
        const auto overlap = gather("overlap", missing);
        const auto ppl = gather("ppl", missing);
        const auto partition = gather("partition", missing);
        const auto gold = gather("gold", missing);
        for (const auto& m : missing) spdlog::warn("report: artifact {} missing; section left out", m);

        json report{{"backends", all_backends_}, {"missing_artifacts", missing}};
        std::string text;

        TextTable summary{"Queries and gold sets", {"backend", "source", "queries", "known", "empty gold", "mean |G|"}, {}};
        for (const auto& [b, labels] : partition) {
            long known = 0;
            for (const auto& l : labels) known += l.at("known").get<bool>() ? 1 : 0;
            report["knownness"][b] = {{"n", labels.size()}, {"known", known}};
            auto g = gold.find(b);
            if (g == gold.end()) continue;
            for (auto mode : cfg_.candidate_modes) {
                long n = 0, empty = 0, members = 0;
                for (const auto& j : g->second) {
                    if (j.at("candidate_source").get<std::string>() != to_string(mode)) continue;
                    const auto size = static_cast<long>(j.at("member_ids").size());
                    ++n;
                    empty += size == 0 ? 1 : 0;
                    members += size;
                }
                const double mean = n ? static_cast<double>(members) / static_cast<double>(n) : 0.0;
                report["gold_sets"][b][std::string(to_string(mode))] = {{"n", n}, {"empty", empty}, {"mean_size", mean}};
                summary.rows.push_back({b, std::string(to_string(mode)), std::to_string(n), std::to_string(known),
                                        std::to_string(empty), format_real(mean, 2)});
            }
        }
        text += summary.render() + "\n";

        TextTable rag_table{"Answer generation, has_answer (%)",
                            {"backend", "source", "passages", "all", "known", "unknown", "n", "failed"}, {}};
        for (const auto& [b, records] : rag) {
            for (const auto& r : records) {
                json row = r;
                row.erase("per_query");
                report["rag"][b].push_back(row);
                rag_table.rows.push_back({b, r["candidate_source"].is_null() ? "-" : r["candidate_source"].get<std::string>(),
                                          r["condition"].get<std::string>(), format_percent(r["mean"].get<double>()),
                                          format_percent(r["mean_known"].get<double>()),
                                          format_percent(r["mean_unknown"].get<double>()),
                                          std::to_string(r["n"].get<int>()), std::to_string(r["n_failed"].get<int>())});
            }
        }
        text += rag_table.render() + "\n";

        TextTable set_table{"Utility selection", {"backend", "source", "method", "P", "R", "F1", "empty acc", "n", "n empty"}, {}};
        for (const auto& [b, records] : set) {
            for (const auto& r : records) {
                report["set"][b].push_back(r);
                const auto& m = r["metrics"];
                set_table.rows.push_back({b, r["candidate_source"].get<std::string>(), r["method"].get<std::string>(),
                                          format_percent(m["precision"].get<double>()),
                                          format_percent(m["recall"].get<double>()),
                                          format_percent(m["f1"].get<double>()),
                                          format_percent(m["empty_gold_accuracy"].get<double>()),
                                          std::to_string(m["n_nonempty"].get<int>()),
                                          std::to_string(m["n_empty"].get<int>())});
            }
        }
        text += set_table.render() + "\n";

        TextTable rank_table{"Utility ranking", {"backend", "source", "method", "k", "NDCG", "Recall", "n"}, {}};
        for (const auto& [b, records] : rank) {
            for (const auto& r : records) {
                report["rank"][b].push_back(r);
                const auto& m = r["metrics"];
                rank_table.rows.push_back({b, r["candidate_source"].get<std::string>(), r["method"].get<std::string>(),
                                           std::to_string(m["k"].get<int>()),
                                           format_percent(m["ndcg_at_k"].get<double>()),
                                           format_percent(m["recall_at_k"].get<double>()),
                                           std::to_string(m["n_evaluated"].get<int>())});
            }
        }
        text += rank_table.render() + "\n";

        for (auto mode : cfg_.candidate_modes) {
            const std::string src_name(to_string(mode));
            TextTable t{"Transfer, has_answer (%), rows generate, columns supply gold sets (" + src_name + ")",
                        {"generator"}, {}};
            for (const auto& b : all_backends_) t.headers.push_back(b);
            for (const auto& [gen, records] : transfer) {
                std::vector<std::string> row{gen};
                std::map<std::string, double> cells;
                for (const auto& r : records) {
                    if (r["candidate_source"].get<std::string>() != src_name) continue;
                    cells[r["gold_source"].get<std::string>()] = r["mean_has_answer"].get<double>();
                    report["transfer"][src_name][gen][r["gold_source"].get<std::string>()] = r["mean_has_answer"];
                }
                for (const auto& b : all_backends_) row.push_back(cells.count(b) ? format_percent(cells[b]) : "-");
                t.rows.push_back(std::move(row));
            }
            text += t.render() + "\n";
            jsonl::write_file(cfg_.output_dir / "report" / ("transfer." + src_name + ".csv"), t.to_csv());
        }

        TextTable overlap_table{"Overlap with human annotations (mean passages per query)",
                                {"backend", "source", "G and H", "H only", "G only", "queries"}, {}};
        for (const auto& [b, records] : overlap) {
            for (const auto& r : records) {
                report["overlap"][b].push_back(r);
                overlap_table.rows.push_back({b, r["candidate_source"].get<std::string>(),
                                              format_real(r["mean_intersection"].get<double>(), 3),
                                              format_real(r["mean_human_only"].get<double>(), 3),
                                              format_real(r["mean_gold_only"].get<double>(), 3),
                                              std::to_string(r["n_queries"].get<int>())});
            }
        }
        text += overlap_table.render() + "\n";
        jsonl::write_file(cfg_.output_dir / "report" / "overlap.csv", overlap_table.to_csv());

        TextTable ppl_table{"Perplexity of human passages",
                            {"backend", "source", "H in G", "H not in G", "joint H in G", "joint H not in G", "n in", "n out"},
                            {}};
        TextTable ppl_rows{"", {"backend", "source", "query_id", "passage_id", "in_gold", "ppl_passage", "ppl_joint"}, {}};
        for (const auto& [b, records] : ppl) {
            for (const auto& r : records) {
                json row = r;
                row.erase("rows");
                report["ppl"][b].push_back(row);
                const auto src = r["candidate_source"].get<std::string>();
                ppl_table.rows.push_back({b, src, opt_real(r["in_gold_passage"]), opt_real(r["out_gold_passage"]),
                                          opt_real(r["in_gold_joint"]), opt_real(r["out_gold_joint"]),
                                          std::to_string(r["n_in"].get<int>()), std::to_string(r["n_out"].get<int>())});
                for (const auto& p : r["rows"]) {
                    ppl_rows.rows.push_back({b, src, p["query_id"].get<std::string>(), p["passage_id"].get<std::string>(),
                                             p["in_gold"].get<bool>() ? "1" : "0",
                                             fmt::format("{:.9g}", p["ppl_passage"].get<double>()),
                                             fmt::format("{:.9g}", p["ppl_joint"].get<double>())});
                }
            }
        }
        text += ppl_table.render();
        jsonl::write_file(cfg_.output_dir / "report" / "ppl.csv", ppl_rows.to_csv());

        jsonl::write_file(cfg_.output_dir / "report" / "report.json", report.dump(2) + "\n");
        jsonl::write_file(cfg_.output_dir / "report" / "report.txt", text);
        bundle_.report = std::move(report);
        bundle_.text = std::move(text);
    }

    const ExperimentConfig& cfg_;
    const RunOptions& opt_;
    Gateway gateway_;
    TemplateSet templates_;
    std::vector<std::string> all_backends_;
    std::vector<std::string> selected_;

    std::vector<Query> queries_;
    std::map<std::string, const Query*> query_by_id_;
    Corpus corpus_;
    RetrievalRun run_;
    std::optional<HumanQrels> qrels_;
    std::map<std::string, CandidateSet> topk_;
    std::map<CandidateSource, std::map<std::string, CandidateSet>> candidates_;

    ReportBundle bundle_;
};

}  // namespace

ReportBundle run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    Pipeline pipeline(config, options);
    return pipeline.execute();
}

}  // namespace utilbench
