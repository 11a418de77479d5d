#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace utilbench {

// NFKC, lowercase, Unicode punctuation -> space, collapse whitespace, trim.
// Articles are kept; containment already absorbs surrounding words.
std::string normalize_text(std::string_view s);

// 1 iff the normalized form of any gold answer occurs in the normalized
// generation. Answers that normalize to "" never match.
int has_answer(std::string_view generated, std::span<const std::string> answers);

// Whitespace tokenization used by the mock backend for token accounting.
std::vector<std::string> whitespace_tokens(std::string_view s);

}  // namespace utilbench
