#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cliniqa/attribution.hpp"
#include "cliniqa/corpus.hpp"
#include "cliniqa/embedding.hpp"
#include "cliniqa/error.hpp"
#include "cliniqa/truncation.hpp"

namespace cliniqa {

class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Strict scores against essential labels only; lenient against essential
/// plus supplementary.
enum class Variant { Strict, Lenient };

std::string_view to_string(Variant variant);

/// Gold sentence ids of a case under a variant.
std::set<int> gold_ids(const CaseStudy& cs, Variant variant);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const Prf&) const = default;
};

/// P = |cited ∩ gold| / |cited| (0 when cited is empty), R = |cited ∩ gold| /
/// |gold|, F1 = harmonic mean (0 when both are 0). Throws on empty gold.
Prf prf(const std::set<int>& cited, const std::set<int>& gold);

struct CaseScore {
    std::string case_id;
    Prf strict, lenient;
    bool strict_scored = false;  // false when the strict gold set is empty
    bool lenient_scored = false;
};

/// Macro-averaged factuality under both variants. Cases whose gold set is
/// empty under a variant are skipped for that variant (undefined recall).
struct FactualityReport {
    Prf strict, lenient;
    std::vector<CaseScore> per_case;
    std::size_t strict_skipped = 0;
    std::size_t lenient_skipped = 0;
};

/// Scores per-case cited id sets against gold labels (cited_per_case aligned
/// with cases).
FactualityReport factuality_from_ids(const std::vector<CaseStudy>& cases,
                                     const std::vector<std::set<int>>& cited_per_case);

/// Cited ids = union of each answer's citation blocks.
FactualityReport factuality(const std::vector<CaseStudy>& cases,
                            const std::vector<Answer>& answers);

/// Same arithmetic with kept ids in place of cited ids; evaluates a retrieval
/// strategy directly.
FactualityReport retrieval_eval(const std::vector<CaseStudy>& cases,
                                const std::vector<TruncationResult>& truncations);

/// BLEU, orders 1-4 with uniform weights, add-one smoothing on orders >= 2,
/// and a brevity penalty against the closest reference length.
double bleu(const std::string& hypothesis, const std::vector<std::string>& references);

/// F1 over the longest common subsequence of tokens.
double rouge_l(const std::string& hypothesis, const std::string& reference);

/// Edit-based text generation metric: per n-gram order 1-4, F1 of kept and
/// added n-grams plus precision of deleted ones, averaged across orders and
/// components.
double sari(const std::string& source, const std::string& hypothesis,
            const std::vector<std::string>& references);

struct RelevanceReport {
    double bleu = 0.0;
    double rouge = 0.0;
    double sari = 0.0;
    double semantic = 0.0;
    double mean = 0.0;
    std::map<std::string, double> external; // plug-in scorers, excluded from mean
};

/// Compares an answer against the case's essential sentences (concatenated in
/// id order): BLEU, ROUGE-L, SARI (source = patient+clinician query), and
/// embedding cosine. Throws when the case has no essential sentence.
RelevanceReport relevance(const std::string& answer_text, const CaseStudy& cs,
                          EmbeddingProvider& provider);

/// Component-wise macro average (external scores averaged where present).
RelevanceReport average_relevance(const std::vector<RelevanceReport>& reports);

struct PipelineScore {
    FactualityReport factuality;
    RelevanceReport relevance;
    double overall = 0.0; // (strict F1 + relevance mean) / 2
};

PipelineScore overall_score(FactualityReport factuality, RelevanceReport relevance);

/// Optional external relevance scorer (e.g. a hosted model):
/// POST {"candidate": str, "reference": str} -> {"score": float}.
class ExternalScorer {
public:
    explicit ExternalScorer(std::string url, std::string bearer_token = "");
    ~ExternalScorer();

    double score(const std::string& candidate, const std::string& reference);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string url_;
};

} // namespace cliniqa
