#include "anchor_rag/text.hpp"

#include <string>
#include <vector>

#include "anchor_rag/common.hpp"

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

namespace ar = anchor_rag;
using ar::text::tokenize;

namespace {

std::vector<std::string> normalized_of(const std::vector<ar::text::Token>& toks) {
    std::vector<std::string> out;
    for (const auto& t : toks) out.push_back(t.normalized);
    return out;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += " ";
        out += w;
    }
    return out;
}

}  // namespace

TEST_CASE("empty input yields no tokens") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("   \t\n").empty());
    CHECK(tokenize("?!...").empty());
}

TEST_CASE("basic sentence: surfaces, positions, stopword flags") {
    const auto toks = tokenize("The apple fell.");
    REQUIRE(toks.size() == 3);

    CHECK(toks[0].surface == "The");
    CHECK(toks[0].normalized == "the");
    CHECK(toks[0].position == 0);
    CHECK(toks[0].is_stopword);

    CHECK(toks[1].normalized == "apple");
    CHECK(toks[1].position == 1);
    CHECK_FALSE(toks[1].is_stopword);

    CHECK(toks[2].normalized == "fell");
    CHECK(toks[2].position == 2);
    CHECK_FALSE(toks[2].is_stopword);
}

TEST_CASE("punctuation is dropped and case folded") {
    const auto toks = tokenize("Who founded Apple Inc.?");
    REQUIRE(toks.size() == 4);
    CHECK(normalized_of(toks) == std::vector<std::string>{"who", "founded", "apple", "inc"});
    CHECK(toks[0].is_stopword);
    CHECK_FALSE(toks[1].is_stopword);
    CHECK_FALSE(toks[2].is_stopword);
    CHECK_FALSE(toks[3].is_stopword);
}

TEST_CASE("byte spans slice the nfc input back to the surface") {
    const std::string input = "The apple fell. Who founded Apple Inc.?";
    const std::string canonical = ar::text::nfc(input);
    for (const auto& tok : tokenize(input)) {
        REQUIRE(tok.begin <= tok.end);
        REQUIRE(tok.end <= canonical.size());
        CHECK(canonical.substr(tok.begin, tok.end - tok.begin) == tok.surface);
    }
}

TEST_CASE("positions are contiguous from zero") {
    const auto toks = tokenize("one, two; three -- four!");
    REQUIRE(toks.size() == 4);
    for (std::size_t i = 0; i < toks.size(); ++i) CHECK(toks[i].position == static_cast<int>(i));
}

TEST_CASE("composed and decomposed accents tokenize identically") {
    const std::string composed = "caf\xC3\xA9 culture";          // U+00E9
    const std::string decomposed = "cafe\xCC\x81 culture";       // e + U+0301
    const auto a = tokenize(composed);
    const auto b = tokenize(decomposed);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].surface == b[i].surface);
        CHECK(a[i].normalized == b[i].normalized);
    }
}

TEST_CASE("no token normalizes to the empty string") {
    const std::vector<std::string> inputs = {
        "a.b.c", "rock'n'roll", "x--y", "1,000,000", "hello...world", "??punct!!",
    };
    for (const auto& input : inputs) {
        for (const auto& tok : tokenize(input)) CHECK_FALSE(tok.normalized.empty());
    }
}

TEST_CASE("stopword flag agrees with the shipped list") {
    const auto& stopwords = ar::text::StopwordList::shipped();
    for (const auto& tok : tokenize("The quick brown fox jumps over the lazy dog")) {
        CHECK(tok.is_stopword == stopwords.contains(tok.normalized));
    }
}

TEST_CASE("custom stopword list overrides the shipped one") {
    const auto custom = ar::text::StopwordList::from_text("fox\ndog\n");
    CHECK(custom.size() == 2);
    CHECK(custom.contains("fox"));
    CHECK_FALSE(custom.contains("the"));

    const auto toks = tokenize("the fox", custom);
    REQUIRE(toks.size() == 2);
    CHECK_FALSE(toks[0].is_stopword);  // "the" is not in the custom list
    CHECK(toks[1].is_stopword);
}

TEST_CASE("tokenize is stable under retokenizing its normalized output") {
    const std::vector<std::string> inputs = {
        "The apple fell.",
        "Who founded Apple Inc.?",
        "Rock'n'roll, 1,000 miles -- onward!",
        "MIXED case WORDS with   extra\tspace",
    };
    for (const auto& input : inputs) {
        const auto first = normalized_of(tokenize(input));
        const auto second = normalized_of(tokenize(join(first)));
        CHECK(first == second);
    }
}

TEST_CASE("normalize_answer strips articles, punctuation, and case") {
    CHECK(ar::text::normalize_answer("The Eiffel Tower") == "eiffel tower");
    CHECK(ar::text::normalize_answer("Paris.") == "paris");
    CHECK(ar::text::normalize_answer("A  an the") == "");
    CHECK(ar::text::normalize_answer("") == "");
}

TEST_CASE("normalize_answer is idempotent") {
    const std::vector<std::string> inputs = {
        "The Eiffel Tower", "Paris.", "A  an the", "An Apple a Day", "  spaced   out  ", "42, roughly",
    };
    for (const auto& input : inputs) {
        const auto once = ar::text::normalize_answer(input);
        CHECK(ar::text::normalize_answer(once) == once);
    }
}

TEST_CASE("sentence_split on terminal punctuation") {
    CHECK(ar::text::sentence_split("A. B? C!") == std::vector<std::string>{"A.", "B?", "C!"});
    CHECK(ar::text::sentence_split("").empty());
    CHECK(ar::text::sentence_split("No terminal punctuation") ==
          std::vector<std::string>{"No terminal punctuation"});
}

TEST_CASE("sentence_split keeps sentence-internal tokens together") {
    const auto parts = ar::text::sentence_split("Alpha beta gamma. Delta epsilon!");
    REQUIRE(parts.size() == 2);
    CHECK(tokenize(parts[0]).size() == 3);
    CHECK(tokenize(parts[1]).size() == 2);
}
