#pragma once

// Brute-force reference for gold sets built with the mock backend. It applies
// the mock's answer rules directly, with its own ASCII-only normalizer, and
// never touches the gateway, prompts or caches.

#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "utilbench/gateway/mock_backend.hpp"
#include "utilbench/types.hpp"

namespace oracle {

inline std::string fold(const std::string& s) {
    std::string out;
    bool space = true;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            out += static_cast<char>(std::tolower(c));
            space = false;
        } else if (!space) {
            out += ' ';
            space = true;
        }
    }
    if (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

inline bool contains_answer(const std::string& text, const std::vector<std::string>& answers) {
    const std::string t = fold(text);
    for (const auto& a : answers) {
        const std::string n = fold(a);
        if (!n.empty() && t.find(n) != std::string::npos) return true;
    }
    return false;
}

inline bool readable(const utilbench::MockKnowledgeSpec& spec, const std::string& pid) {
    auto it = spec.readable_passages.find(pid);
    return it != spec.readable_passages.end() && it->second;
}

// Reply of the mock for the query with exactly these passage ids.
inline std::string reply(const utilbench::MockKnowledgeSpec& spec, const utilbench::Query& q,
                         const std::vector<utilbench::Passage>& passages) {
    for (const auto& p : passages) {
        if (!readable(spec, p.id)) continue;
        for (const auto& a : q.answers) {
            const std::string n = fold(a);
            if (!n.empty() && fold(p.text).find(n) != std::string::npos) return a;
        }
    }
    if (!passages.empty() && spec.over_reliance) return spec.unknown_reply;
    auto k = spec.known_answers.find(q.id);
    return k != spec.known_answers.end() ? k->second : spec.unknown_reply;
}

inline bool known(const utilbench::MockKnowledgeSpec& spec, const utilbench::Query& q) {
    return contains_answer(reply(spec, q, {}), q.answers);
}

inline std::set<std::string> gold(const utilbench::MockKnowledgeSpec& spec, const utilbench::Query& q,
                                  const utilbench::CandidateSet& candidates) {
    std::set<std::string> out;
    const bool base = known(spec, q);
    for (const auto& p : candidates.passages) {
        const bool with = contains_answer(reply(spec, q, {p}), q.answers);
        if (with && !base) out.insert(p.id);
    }
    return out;
}

}  // namespace oracle
