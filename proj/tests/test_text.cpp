#include <doctest.h>

#include "cliniqa/text.hpp"

using namespace cliniqa::text;

TEST_SUITE("text") {

TEST_CASE("alnum_tokens lowercases and splits on punctuation") {
    CHECK(alnum_tokens("Dr. Smith-Jones, 34-mm graft!") ==
          std::vector<std::string>{"dr", "smith", "jones", "34", "mm", "graft"});
    CHECK(alnum_tokens("") == std::vector<std::string>{});
    CHECK(alnum_tokens("...") == std::vector<std::string>{});
}

TEST_CASE("whitespace_tokens and word_count agree") {
    CHECK(whitespace_tokens("  a\tb  c\n") == std::vector<std::string>{"a", "b", "c"});
    CHECK(word_count("  a\tb  c\n") == 3);
    CHECK(word_count("") == 0);
    CHECK(word_count("one") == 1);
}

TEST_CASE("trim") {
    CHECK(trim("  x  ") == "x");
    CHECK(trim("\t\n") == "");
    CHECK(trim("x") == "x");
}

TEST_CASE("split_sentences") {
    CHECK(split_sentences("One. Two! Three?") ==
          std::vector<std::string>{"One", "Two", "Three"});
    CHECK(split_sentences("No terminator") == std::vector<std::string>{"No terminator"});
    CHECK(split_sentences("Ends with period.") ==
          std::vector<std::string>{"Ends with period"});
    // a period not followed by whitespace does not split (decimals, versions)
    CHECK(split_sentences("Wound is 0.5cm deep. Packed daily.") ==
          std::vector<std::string>{"Wound is 0.5cm deep", "Packed daily"});
    CHECK(split_sentences("   ") == std::vector<std::string>{});
}

TEST_CASE("join") {
    CHECK(join({"a", "b", "c"}, " ") == "a b c");
    CHECK(join({"a"}, ", ") == "a");
    CHECK(join({}, " ") == "");
}

TEST_CASE("levenshtein basics") {
    CHECK(levenshtein("", "") == 0);
    CHECK(levenshtein("abc", "") == 3);
    CHECK(levenshtein("", "ab") == 2);
    CHECK(levenshtein("kitten", "sitting") == 3);
    CHECK(levenshtein("same", "same") == 0);
}

} // TEST_SUITE
