#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "cliniqa/corpus.hpp"
#include "cliniqa/embedding.hpp"
#include "cliniqa/error.hpp"

namespace cliniqa {

class AttributionError : public Error {
public:
    using Error::Error;
};

/// Unbalanced or malformed citation block.
class CitationSyntaxError : public Error {
public:
    CitationSyntaxError(const std::string& msg, std::size_t offset)
        : Error(msg + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Answer text with no surviving citation; triggers the generation retry loop.
class NoAttributionError : public Error {
public:
    NoAttributionError() : Error("no valid attribution") {}
};

struct Citation {
    std::size_t answer_sentence_index = 0; // 0-based
    std::set<int> cited_ids;               // non-empty

    bool operator==(const Citation&) const = default;
};

/// Parsed answer: sentence texts with citation markup stripped, plus the
/// citations that survived validation (at least one).
struct Answer {
    std::vector<std::string> sentences;
    std::vector<Citation> citations;

    std::set<int> cited_union() const;
    std::string full_text() const; // sentences joined with single spaces

    bool operator==(const Answer&) const = default;
};

/// Parses LLM output with inline citation blocks "|id, id|" placed before or
/// after sentence terminators. Ids outside valid_ids are dropped; blocks
/// emptied by the drop lose their citation entry. Throws CitationSyntaxError
/// on unbalanced or malformed blocks and NoAttributionError when no citation
/// survives.
Answer parse_citations(const std::string& raw, const std::set<int>& valid_ids);

/// Inverse of parse_citations: "sentence |1, 3|." with ids ascending.
/// parse_citations(render_citations(a), ids) == a for well-formed answers.
std::string render_citations(const Answer& answer);

/// Mean of ROUGE-L F1, BLEU (orders 1-4, add-one smoothing on orders >= 2),
/// and a unigram METEOR variant. Directional: a is the hypothesis, b the
/// reference.
double lexical_sim(const std::string& a, const std::string& b);

/// Harmonic mean of unigram precision/recall weighted 1:9, no stemming or
/// synonym matching.
double meteor_lite(const std::string& hypothesis, const std::string& reference);

/// 1 - levenshtein(a, b) / max(|a|, |b|) over lowercased strings.
double fuzzy_sim(const std::string& a, const std::string& b);

/// max(0, cosine(embed(a), embed(b))).
double semantic_sim(const std::string& a, const std::string& b, EmbeddingProvider& provider);

struct SimilarityWeights {
    double lexical = 0.0;
    double fuzzy = 0.0;
    double semantic = 0.0;

    bool valid() const; // each in [0,1], sum within 1e-9 of 1
    bool operator==(const SimilarityWeights&) const = default;
};

struct AttributionConfig {
    SimilarityWeights weights;
    double threshold = 0.5; // in (0,1)
};

/// weights.lexical * lexical_sim + weights.fuzzy * fuzzy_sim +
/// weights.semantic * semantic_sim. Throws on invalid weights.
double combined_score(const std::string& answer_sentence, const std::string& evidence_sentence,
                      const SimilarityWeights& weights, EmbeddingProvider& provider);

/// Post-generation attribution: cites every retrieved sentence whose
/// combined score exceeds the threshold; answer sentences with no score
/// above it receive no citation entry. Throws on an empty retrieved list.
std::vector<Citation> attribute_post_generation(
    const std::vector<std::string>& answer_sentences,
    const std::vector<std::pair<int, std::string>>& retrieved,
    const AttributionConfig& config, EmbeddingProvider& provider);

/// All (w1, w2, w3) multiples of step summing to 1; include_zero controls
/// whether triples with a zero component are enumerated (66 triples at step
/// 0.1 with zeros, 36 without).
std::vector<SimilarityWeights> enumerate_weight_triples(double step, bool include_zero = true);

struct GridSearchRow {
    SimilarityWeights weights;
    double threshold = 0.0;
    double strict_precision = 0.0;
    double strict_f1 = 0.0;
    double relevance = 0.0;
    double overall = 0.0;
};

/// Evaluates every weight-triple x threshold configuration of post-generation
/// attribution on pre-generated answers (one sentence list per case, aligned
/// with cases). Attribution candidates are all sentences of each case.
/// Returns rows sorted by overall score descending (ties by ascending
/// weights, then threshold).
std::vector<GridSearchRow> grid_search(const std::vector<CaseStudy>& cases,
                                       const std::vector<std::vector<std::string>>& answer_sentences,
                                       EmbeddingProvider& provider, double weight_step = 0.1,
                                       std::vector<double> thresholds = {},
                                       std::size_t jobs = 1, bool include_zero_weights = true);

std::string grid_to_csv(const std::vector<GridSearchRow>& rows);

} // namespace cliniqa
