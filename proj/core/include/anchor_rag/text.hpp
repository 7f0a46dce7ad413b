#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace anchor_rag::text {

/// One word-level token. `begin`/`end` are byte offsets into the NFC-normalized
/// input, so callers can slice the original text (chunking relies on this).
struct Token {
    std::string surface;
    std::string normalized;  // lowercased; never empty for an emitted token
    int position = 0;        // contiguous from 0 within one sequence
    bool is_stopword = false;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Versioned stopword set. The shipped list is compiled into the library from
/// core/resources/stopwords_en.txt (one lowercase word per line).
class StopwordList {
public:
    static const StopwordList& shipped();
    static StopwordList from_text(std::string_view text);

    bool contains(const std::string& normalized) const { return entries_.count(normalized) > 0; }
    std::size_t size() const { return entries_.size(); }

private:
    std::unordered_set<std::string> entries_;
};

/// NFC-normalize a UTF-8 string (ICU). Invalid UTF-8 is passed through as-is.
std::string nfc(std::string_view utf8);

/// Split into word tokens on whitespace and punctuation boundaries.
/// Punctuation-only fragments are dropped; positions are assigned in order.
/// Empty input yields an empty sequence.
std::vector<Token> tokenize(std::string_view input, const StopwordList& stopwords = StopwordList::shipped());

/// Canonical answer form: lowercase, punctuation characters removed, the
/// articles a/an/the dropped as whole tokens, whitespace collapsed.
std::string normalize_answer(std::string_view input);

/// Split on sentence-final . ! ? followed by whitespace or end of input.
/// Fragments are preserved verbatim, including internal punctuation.
std::vector<std::string> sentence_split(std::string_view input);

}  // namespace anchor_rag::text
