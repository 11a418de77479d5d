#include "utilbench/prompts.hpp"

#include <fstream>
#include <sstream>

#include "utilbench/errors.hpp"
#include "utilbench/gateway/response_cache.hpp"

namespace utilbench {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kAnswerNoPassage =
    "Answer the following question based on your internal knowledge.\n"
    "Question: {query}\n"
    "Answer:";

constexpr std::string_view kAnswerWithPassages =
    "Information:\n"
    "{passages}\n"
    "Answer the following question based on the given information or your internal knowledge.\n"
    "Question: {query}\n"
    "Answer:";

constexpr std::string_view kPointwise =
    "You are judging whether a passage has utility for you when answering a question. "
    "A passage has utility only if it gives you information you need to answer the question "
    "correctly and that you do not already have in your own knowledge.{known_rejection}\n\n"
    "Question: {query}\n"
    "{pseudo_answer}"
    "Passage: {passage}\n\n"
    "Does the passage have utility for you? Reply with \"Yes\" or \"No\" first.";

constexpr std::string_view kListwise =
    "You are selecting, from {count} passages, the ones that have utility for you when answering a "
    "question. A passage has utility only if it gives you information you need to answer the question "
    "correctly and that you do not already have in your own knowledge.{known_rejection}\n\n"
    "Question: {query}\n"
    "{pseudo_answer}"
    "Passages:\n{passages}\n\n"
    "Output only the identifiers of the passages with utility as a list, for example [1, 3]. "
    "Output [] if no passage has utility.";

constexpr std::string_view kRank =
    "You are ranking {count} passages by their utility for you when answering a question. "
    "A passage has utility only if it gives you information you need to answer the question "
    "correctly and that you do not already have in your own knowledge.{known_rejection}\n\n"
    "Question: {query}\n"
    "{pseudo_answer}"
    "Passages:\n{passages}\n\n"
    "Rank all passages in descending order of utility. Output only the identifiers, "
    "for example [2] > [1] > [3].";

constexpr std::string_view kPseudoAnswerPrefix = "Reference answer generated from the retrieved passages: ";

std::vector<std::string_view> required_placeholders(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::answer_no_passage: return {"{query}"};
        case TemplateKind::answer_with_passages: return {"{query}", "{passages}"};
        case TemplateKind::pointwise: return {"{query}", "{passage}", "{pseudo_answer}"};
        case TemplateKind::listwise:
        case TemplateKind::rank: return {"{query}", "{passages}", "{pseudo_answer}"};
    }
    return {};
}

bool is_judgment(TemplateKind kind) {
    return kind == TemplateKind::pointwise || kind == TemplateKind::listwise || kind == TemplateKind::rank;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

struct Substitution {
    std::string_view placeholder;
    std::string value;
};

// Single left-to-right pass, so substituted text is never re-scanned.
// Returns the rendered text and the output offset of each substitution.
std::string substitute(std::string_view body, const std::vector<Substitution>& subs,
                       std::map<std::string_view, std::size_t>& offsets) {
    std::string out;
    std::size_t i = 0;
    while (i < body.size()) {
        bool matched = false;
        if (body[i] == '{') {
            for (const auto& s : subs) {
                if (body.substr(i, s.placeholder.size()) == s.placeholder) {
                    offsets.emplace(s.placeholder, out.size());
                    out += s.value;
                    i += s.placeholder.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) out.push_back(body[i++]);
    }
    return out;
}

struct PassageBlock {
    std::string text;
    std::vector<AttentionSpan> spans;  // relative to the block
};

std::string passage_text(const Passage& p) {
    return p.title ? *p.title + ": " + p.text : p.text;
}

PassageBlock format_passages(std::span<const Passage> passages) {
    PassageBlock block;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0) block.text += '\n';
        block.text += '[' + std::to_string(i + 1) + "] ";
        const std::size_t begin = block.text.size();
        block.text += passage_text(passages[i]);
        block.spans.push_back({passages[i].id, {begin, block.text.size()}});
    }
    return block;
}

std::string pseudo_block(const std::optional<std::string>& pseudo) {
    if (!pseudo) return {};
    return std::string(kPseudoAnswerPrefix) + *pseudo + "\n";
}

RenderedPrompt render(const PromptTemplate& tmpl, const Query& query, std::span<const Passage> passages,
                      const std::optional<Passage>& single, const std::optional<std::string>& pseudo) {
    PassageBlock block = format_passages(passages);
    std::vector<Substitution> subs = {
        {"{query}", query.text},
        {"{passages}", block.text},
        {"{passage}", single ? passage_text(*single) : std::string{}},
        {"{pseudo_answer}", pseudo_block(pseudo)},
        {"{count}", std::to_string(passages.size())},
    };
    std::map<std::string_view, std::size_t> offsets;
    RenderedPrompt r;
    r.text = substitute(tmpl.body, subs, offsets);
    r.template_version = tmpl.version_tag();
    if (auto it = offsets.find("{passages}"); it != offsets.end()) {
        for (auto span : block.spans) {
            span.range.begin += it->second;
            span.range.end += it->second;
            r.passage_spans.push_back(std::move(span));
        }
    } else if (auto it2 = offsets.find("{passage}"); it2 != offsets.end() && single) {
        r.passage_spans.push_back({single->id, {it2->second, it2->second + passage_text(*single).size()}});
    }
    return r;
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::answer_no_passage: return "answer_no_passage";
        case TemplateKind::answer_with_passages: return "answer_with_passages";
        case TemplateKind::pointwise: return "pointwise";
        case TemplateKind::listwise: return "listwise";
        case TemplateKind::rank: return "rank";
    }
    return "answer_no_passage";
}

std::string_view default_template_body(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::answer_no_passage: return kAnswerNoPassage;
        case TemplateKind::answer_with_passages: return kAnswerWithPassages;
        case TemplateKind::pointwise: return kPointwise;
        case TemplateKind::listwise: return kListwise;
        case TemplateKind::rank: return kRank;
    }
    return kAnswerNoPassage;
}

std::string PromptTemplate::version_tag() const {
    return name + "@" + version + "#" + ResponseCache::hash_key(nlohmann::json(body)).substr(0, 12) +
           (known_rejection ? "+known_rejection" : "");
}

PromptTemplate make_template(TemplateKind kind, std::string version, std::string raw_body, bool known_rejection) {
    for (auto ph : required_placeholders(kind)) {
        if (raw_body.find(ph) == std::string::npos) {
            throw ValidationError("template " + std::string(to_string(kind)) + " lacks placeholder " + std::string(ph));
        }
    }
    const bool has_marker = raw_body.find("{known_rejection}") != std::string::npos;
    const bool apply = known_rejection && is_judgment(kind);
    if (apply && !has_marker) {
        throw ValidationError("template " + std::string(to_string(kind)) +
                              " has no {known_rejection} marker but known-rejection was requested");
    }
    std::string body = replace_all(std::move(raw_body), "{known_rejection}",
                                   apply ? " " + std::string(kKnownRejectionSentence) : std::string{});
    return PromptTemplate{std::string(to_string(kind)), std::move(version), std::move(body), apply};
}

TemplateSet TemplateSet::defaults(bool known_rejection) {
    TemplateSet set;
    set.known_rejection_ = known_rejection;
    for (auto kind : {TemplateKind::answer_no_passage, TemplateKind::answer_with_passages, TemplateKind::pointwise,
                      TemplateKind::listwise, TemplateKind::rank}) {
        set.templates_.emplace(kind, make_template(kind, "v1", std::string(default_template_body(kind)), known_rejection));
    }
    return set;
}

TemplateSet TemplateSet::load(const fs::path& dir, bool known_rejection) {
    TemplateSet set = defaults(known_rejection);
    if (!fs::is_directory(dir)) throw ValidationError("prompt directory " + dir.string() + " does not exist");
    for (auto kind : {TemplateKind::answer_no_passage, TemplateKind::answer_with_passages, TemplateKind::pointwise,
                      TemplateKind::listwise, TemplateKind::rank}) {
        const std::string prefix = std::string(to_string(kind)) + ".";
        std::optional<fs::path> found;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string fname = entry.path().filename().string();
            if (fname.rfind(prefix, 0) == 0 && entry.path().extension() == ".txt") {
                if (found) throw ValidationError("more than one template file for " + std::string(to_string(kind)));
                found = entry.path();
            }
        }
        if (!found) continue;
        const std::string stem = found->stem().string();  // name.version
        const std::string version = stem.substr(prefix.size());
        if (version.empty()) throw ValidationError("template file " + found->string() + " has no version");
        std::ifstream in(*found);
        std::stringstream buf;
        buf << in.rdbuf();
        std::string body = buf.str();
        while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
        set.templates_[kind] = make_template(kind, version, std::move(body), known_rejection);
    }
    return set;
}

RenderedPrompt render_answer(const TemplateSet& set, const Query& query, std::span<const Passage> passages) {
    if (passages.empty()) return render(set.get(TemplateKind::answer_no_passage), query, {}, std::nullopt, std::nullopt);
    return render(set.get(TemplateKind::answer_with_passages), query, passages, std::nullopt, std::nullopt);
}

RenderedPrompt render_pointwise(const TemplateSet& set, const Query& query, const Passage& passage,
                                const std::optional<std::string>& pseudo_answer) {
    return render(set.get(TemplateKind::pointwise), query, {}, passage, pseudo_answer);
}

RenderedPrompt render_listwise(const TemplateSet& set, const Query& query, std::span<const Passage> passages,
                               const std::optional<std::string>& pseudo_answer) {
    return render(set.get(TemplateKind::listwise), query, passages, std::nullopt, pseudo_answer);
}

RenderedPrompt render_rank(const TemplateSet& set, const Query& query, std::span<const Passage> passages,
                           const std::optional<std::string>& pseudo_answer) {
    return render(set.get(TemplateKind::rank), query, passages, std::nullopt, pseudo_answer);
}

}  // namespace utilbench
