#include "kgc/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <stdexcept>

namespace kgc::text {
namespace {

icu::UnicodeString to_nfc_lower(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString out = nfc->normalize(u, status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
    out.toLower();
    return out;
}

bool is_punct_or_symbol(UChar32 c) {
    const auto mask = U_GET_GC_MASK(c);
    return (mask & (U_GC_P_MASK | U_GC_S_MASK)) != 0;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

template <typename F>
void for_each_code_point(const icu::UnicodeString& u, F&& f) {
    for (int32_t i = 0; i < u.length();) {
        const UChar32 c = u.char32At(i);
        f(c);
        i += U16_LENGTH(c);
    }
}

void append_utf8(std::string& out, UChar32 c) {
    icu::UnicodeString tmp(c);
    tmp.toUTF8String(out);
}

}  // namespace

std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

std::string nfc_lower(std::string_view s) {
    std::string out;
    to_nfc_lower(s).toUTF8String(out);
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for_each_code_point(to_nfc_lower(s), [&](UChar32 c) {
        if (is_space(c) || is_punct_or_symbol(c)) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            append_utf8(cur, c);
        }
    });
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::string normalize_option(std::string_view s) {
    std::vector<UChar32> cps;
    bool pending_space = false;
    for_each_code_point(to_nfc_lower(s), [&](UChar32 c) {
        if (is_space(c)) {
            pending_space = !cps.empty();
            return;
        }
        if (pending_space) cps.push_back(' ');
        pending_space = false;
        cps.push_back(c);
    });
    std::size_t b = 0, e = cps.size();
    while (b < e && (cps[b] == ' ' || u_ispunct(cps[b]))) ++b;
    while (e > b && (cps[e - 1] == ' ' || u_ispunct(cps[e - 1]))) --e;
    std::string out;
    for (std::size_t i = b; i < e; ++i) append_utf8(out, cps[i]);
    return out;
}

bool has_symbol_run(std::string_view s, std::size_t min_run) {
    std::size_t run = 0;
    bool hit = false;
    const icu::UnicodeString u =
        icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    for_each_code_point(u, [&](UChar32 c) {
        if (u_isalnum(c) || is_space(c)) {
            run = 0;
        } else if (++run >= min_run) {
            hit = true;
        }
    });
    return hit;
}

std::size_t whitespace_tokens(std::string_view s) {
    std::size_t n = 0;
    bool in_tok = false;
    for (unsigned char c : s) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (!ws && !in_tok) ++n;
        in_tok = !ws;
    }
    return n;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    return nfc_lower(haystack).find(nfc_lower(needle)) != std::string::npos;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) nl = s.size();
        std::string_view line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

}  // namespace kgc::text
