#include "utilbench/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <cctype>

namespace utilbench {

namespace {

const icu::Normalizer2& nfkc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFKC normalizer unavailable");
    }
    return *n;
}

icu::UnicodeString compat_normalize(const icu::UnicodeString& in) {
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString out = nfkc().normalize(in, status);
    if (U_FAILURE(status)) {
        return in;
    }
    return out;
}

bool is_space(UChar32 c) {
    return u_isUWhiteSpace(c) || c == 0x200B;
}

}  // namespace

std::string normalize_text(std::string_view s) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u = compat_normalize(u);
    u.toLower(icu::Locale::getRoot());
    // lowercasing can leave a non-NFKC sequence behind (e.g. final sigma forms)
    u = compat_normalize(u);

    icu::UnicodeString cleaned;
    bool pending_space = false;
    for (int32_t i = 0; i < u.length();) {
        UChar32 c = u.char32At(i);
        i += U16_LENGTH(c);
        if (u_ispunct(c) || is_space(c) || u_iscntrl(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !cleaned.isEmpty()) {
            cleaned.append(static_cast<UChar>(u' '));
        }
        pending_space = false;
        cleaned.append(c);
    }

    std::string out;
    cleaned.toUTF8String(out);
    return out;
}

int has_answer(std::string_view generated, std::span<const std::string> answers) {
    const std::string haystack = normalize_text(generated);
    for (const auto& answer : answers) {
        const std::string needle = normalize_text(answer);
        if (!needle.empty() && haystack.find(needle) != std::string::npos) {
            return 1;
        }
    }
    return 0;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) tokens.emplace_back(s.substr(start, i - start));
    }
    return tokens;
}

}  // namespace utilbench
