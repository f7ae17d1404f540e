#pragma once

#include <string>
#include <vector>

namespace cliniqa {

struct ScoredSentence {
    int sentence_id = 0;
    double score = 0.0;

    bool operator==(const ScoredSentence&) const = default;
};

/// All sentences of one case ordered by descending query similarity,
/// ties broken by ascending sentence id. Input to every truncation strategy.
struct RankedList {
    std::string case_id;
    std::vector<ScoredSentence> entries;

    bool is_sorted() const;
};

} // namespace cliniqa
