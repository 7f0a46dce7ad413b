#include "anchor_rag/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <cctype>
#include <sstream>

namespace anchor_rag::resources {
// Generated from core/resources/stopwords_en.txt at build time.
const char* stopwords_en();
}  // namespace anchor_rag::resources

namespace anchor_rag::text {

namespace {

bool is_word_byte(unsigned char c) {
    // ASCII letters/digits and all non-ASCII bytes count as word characters;
    // ASCII punctuation and whitespace are boundaries.
    if (c >= 0x80) return true;
    return std::isalnum(c) != 0;
}

std::string ascii_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) out.push_back(static_cast<char>(std::tolower(c)));
    return out;
}

}  // namespace

const StopwordList& StopwordList::shipped() {
    static const StopwordList list = StopwordList::from_text(resources::stopwords_en());
    return list;
}

StopwordList StopwordList::from_text(std::string_view text) {
    StopwordList list;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (!line.empty()) list.entries_.insert(ascii_lower(line));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return list;
}

std::string nfc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) return std::string(utf8);

    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    icu::UnicodeString out = norm->normalize(u, status);
    if (U_FAILURE(status)) return std::string(utf8);

    std::string result;
    out.toUTF8String(result);
    return result;
}

std::vector<Token> tokenize(std::string_view input, const StopwordList& stopwords) {
    std::string normalized_input = nfc(input);
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = normalized_input.size();
    int position = 0;
    while (i < n) {
        if (!is_word_byte(static_cast<unsigned char>(normalized_input[i]))) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < n && is_word_byte(static_cast<unsigned char>(normalized_input[i]))) ++i;
        Token tok;
        tok.surface = normalized_input.substr(begin, i - begin);
        tok.normalized = ascii_lower(tok.surface);
        tok.position = position++;
        tok.is_stopword = stopwords.contains(tok.normalized);
        tok.begin = begin;
        tok.end = i;
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::string normalize_answer(std::string_view input) {
    std::string lowered = ascii_lower(nfc(input));
    std::string stripped;
    stripped.reserve(lowered.size());
    for (unsigned char c : lowered) {
        if (c < 0x80 && std::ispunct(c)) continue;
        stripped.push_back(static_cast<char>(c));
    }
    std::istringstream words(stripped);
    std::string word;
    std::string out;
    while (words >> word) {
        if (word == "a" || word == "an" || word == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    return out;
}

std::vector<std::string> sentence_split(std::string_view input) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    const std::size_t n = input.size();
    auto flush = [&](std::size_t end) {
        std::string_view frag = input.substr(start, end - start);
        while (!frag.empty() && std::isspace(static_cast<unsigned char>(frag.front()))) frag.remove_prefix(1);
        while (!frag.empty() && std::isspace(static_cast<unsigned char>(frag.back()))) frag.remove_suffix(1);
        if (!frag.empty()) sentences.emplace_back(frag);
        start = end;
    };
    for (std::size_t i = 0; i < n; ++i) {
        char c = input[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == n || std::isspace(static_cast<unsigned char>(input[i + 1])))) {
            flush(i + 1);
        }
    }
    flush(n);
    return sentences;
}

}  // namespace anchor_rag::text
