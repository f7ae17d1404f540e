#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cliniqa/corpus.hpp"
#include "cliniqa/error.hpp"
#include "cliniqa/ranked_list.hpp"

namespace cliniqa {

class TruncationError : public Error {
public:
    using Error::Error;
};

class GpdFitError : public Error {
public:
    using Error::Error;
};

using DiagnosticValue = std::variant<double, std::string>;
using Diagnostics = std::map<std::string, DiagnosticValue>;

/// Outcome of truncating one ranked list. kept_ids is exactly the first
/// cut_index sentence ids of the input ordering.
struct TruncationResult {
    std::vector<int> kept_ids;
    std::size_t cut_index = 0;
    std::string strategy_name;
    Diagnostics diagnostics;
};

/// Generalized Pareto parameters fitted to excesses over a threshold.
struct GpdParams {
    double shape = 0.0;     // xi
    double scale = 1.0;     // sigma, > 0
    double threshold = 0.0; // u
    std::size_t n_tail = 0; // excesses used in the fit
};

/// Keeps the first min(k, length) entries. Throws on k == 0.
TruncationResult fixed_k(const RankedList& list, std::size_t k);

/// Second-stage scorer contract: (query, sentence text, retrieval score) ->
/// new score. Only the pass-through implementation ships.
class Reranker {
public:
    virtual ~Reranker() = default;
    virtual double rescore(const std::string& query, const std::string& sentence_text,
                           double retrieval_score) const = 0;
};

class PassThroughReranker final : public Reranker {
public:
    double rescore(const std::string&, const std::string&, double retrieval_score) const override {
        return retrieval_score;
    }
};

/// Takes the first min(k, length) entries, rescores them through the
/// reranker, re-sorts (descending, ties by ascending id), keeps the first n.
/// Requires n <= k.
TruncationResult rerank_then_cut(const RankedList& list, const CaseStudy& cs,
                                 const std::string& query, const Reranker& reranker,
                                 std::size_t k, std::size_t n);

/// Cuts at the first divergence from the straight line through the first and
/// last score. A score counts as divergent when it falls more than
/// jump_tolerance * (s_first - s_last) below the line. Keeps everything for
/// n <= 2, equal endpoints, or when no divergence exists.
TruncationResult autocut(const RankedList& list, double jump_tolerance = 0.1);

/// Cuts before the first consecutive score drop larger than mean + 2 stddev
/// of all drops (population stddev). Parameter-free; keeps everything when
/// no drop qualifies or n <= 2.
TruncationResult autocut_star(const RankedList& list);

/// Knee detection: normalizes ranks and scores to [0,1], cuts after the
/// point with maximal perpendicular distance to the chord from the first to
/// the last point (ties toward the smaller index). Keeps everything for
/// n <= 2 or constant scores.
TruncationResult elbow(const RankedList& list);

/// Fits GPD shape and scale to positive excesses by probability-weighted
/// moments, refined by profile maximum likelihood when that converges to a
/// better interior optimum. Throws GpdFitError on fewer than 2 excesses or
/// degenerate (all-identical) input. The threshold field is left at 0.
GpdParams gpd_fit(std::span<const double> excesses);

/// P(X > x) for an excess x >= 0: (1 + shape*x/scale)^(-1/shape), with the
/// exponential limit for |shape| < 1e-9 and 0 beyond the support when
/// shape < 0.
double gpd_survival(double excess, const GpdParams& params);

/// Score-threshold truncation via extreme value theory: threshold u = median
/// score, GPD fitted to the excesses above u, and each entry's tail
/// probability p = (n_tail/n) * gpd_survival(s - u). Keeps the longest
/// prefix with s > u and p < alpha, at least 1 entry. Falls back to elbow()
/// when fewer than 4 scores exceed u or the fit fails (recorded in
/// diagnostics).
TruncationResult surprise(const RankedList& list, double alpha = 0.05);

/// Strategy selected from a spec string: "fixed:<k>", "rerank:<k>:<n>",
/// "autocut", "autocut-star", "elbow", "surprise[:alpha]".
class TruncationStrategy {
public:
    static TruncationStrategy parse(const std::string& spec);

    const std::string& name() const { return name_; }
    TruncationResult apply(const RankedList& list, const CaseStudy& cs,
                           const std::string& query) const;

private:
    std::string name_;
    std::function<TruncationResult(const RankedList&, const CaseStudy&, const std::string&)> fn_;
};

} // namespace cliniqa
