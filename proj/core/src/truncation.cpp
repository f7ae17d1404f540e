#include "cliniqa/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>

namespace cliniqa {

namespace {

void require_valid(const RankedList& list, const char* op) {
    if (list.entries.empty())
        throw TruncationError(std::string(op) + ": empty ranked list");
    if (!list.is_sorted())
        throw TruncationError(std::string(op) + ": ranked list is not sorted");
    for (const auto& e : list.entries)
        if (!std::isfinite(e.score))
            throw TruncationError(std::string(op) + ": non-finite score");
}

TruncationResult make_result(const RankedList& list, std::size_t cut, std::string name,
                             Diagnostics diag) {
    TruncationResult r;
    r.cut_index = std::min(cut, list.entries.size());
    r.kept_ids.reserve(r.cut_index);
    for (std::size_t i = 0; i < r.cut_index; ++i)
        r.kept_ids.push_back(list.entries[i].sentence_id);
    r.strategy_name = std::move(name);
    r.diagnostics = std::move(diag);
    return r;
}

double median_score(const RankedList& list) {
    std::vector<double> s;
    s.reserve(list.entries.size());
    for (const auto& e : list.entries) s.push_back(e.score);
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    if (n % 2 == 1) return s[n / 2];
    return 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

std::size_t parse_positive(std::string_view token, const std::string& spec) {
    std::size_t value = 0;
    const auto* begin = token.data();
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || value == 0)
        throw TruncationError("invalid strategy parameter in \"" + spec + "\"");
    return value;
}

double parse_alpha(std::string_view token, const std::string& spec) {
    try {
        const double a = std::stod(std::string(token));
        if (a > 0.0 && a < 1.0) return a;
    } catch (const std::exception&) {
    }
    throw TruncationError("invalid alpha in \"" + spec + "\"");
}

} // namespace

TruncationResult fixed_k(const RankedList& list, std::size_t k) {
    require_valid(list, "fixed_k");
    if (k == 0) throw TruncationError("fixed_k: k must be >= 1");
    Diagnostics diag{{"k", static_cast<double>(k)}};
    return make_result(list, k, "fixed", std::move(diag));
}

TruncationResult rerank_then_cut(const RankedList& list, const CaseStudy& cs,
                                 const std::string& query, const Reranker& reranker,
                                 std::size_t k, std::size_t n) {
    require_valid(list, "rerank_then_cut");
    if (k == 0 || n == 0) throw TruncationError("rerank_then_cut: k and n must be >= 1");
    if (n > k) throw TruncationError("rerank_then_cut: n must not exceed k");

    const std::size_t take = std::min(k, list.entries.size());
    std::vector<ScoredSentence> rescored;
    rescored.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const auto& e = list.entries[i];
        const NoteSentence* s = cs.find_sentence(e.sentence_id);
        if (!s)
            throw TruncationError("rerank_then_cut: sentence " + std::to_string(e.sentence_id) +
                                  " not in case \"" + cs.case_id + "\"");
        rescored.push_back({e.sentence_id, reranker.rescore(query, s->text, e.score)});
    }
    std::sort(rescored.begin(), rescored.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.sentence_id < b.sentence_id;
    });

    RankedList reranked{list.case_id, std::move(rescored)};
    auto result = make_result(reranked, n, "rerank",
                              Diagnostics{{"k", static_cast<double>(k)},
                                          {"n", static_cast<double>(n)}});
    return result;
}

TruncationResult autocut(const RankedList& list, double jump_tolerance) {
    require_valid(list, "autocut");
    if (!(jump_tolerance > 0.0)) throw TruncationError("autocut: tolerance must be positive");
    const auto& e = list.entries;
    const std::size_t n = e.size();
    Diagnostics diag{{"jump_tolerance", jump_tolerance}};
    const double first = e.front().score;
    const double last = e.back().score;
    if (n <= 2 || first == last) {
        diag["divergence_index"] = std::string("none");
        return make_result(list, n, "autocut", std::move(diag));
    }
    const double slope = (last - first) / static_cast<double>(n - 1);
    const double allowance = jump_tolerance * (first - last);
    for (std::size_t i = 1; i < n; ++i) {
        const double line = first + slope * static_cast<double>(i);
        if (e[i].score < line - allowance) {
            diag["divergence_index"] = static_cast<double>(i + 1); // 1-based
            return make_result(list, i, "autocut", std::move(diag));
        }
    }
    diag["divergence_index"] = std::string("none");
    return make_result(list, n, "autocut", std::move(diag));
}

TruncationResult autocut_star(const RankedList& list) {
    require_valid(list, "autocut_star");
    const auto& e = list.entries;
    const std::size_t n = e.size();
    Diagnostics diag;
    if (n <= 2) {
        diag["drop_index"] = std::string("none");
        return make_result(list, n, "autocut-star", std::move(diag));
    }
    std::vector<double> drops(n - 1);
    double mean = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        drops[i - 1] = e[i - 1].score - e[i].score;
        mean += drops[i - 1];
    }
    mean /= static_cast<double>(drops.size());
    double var = 0.0;
    for (double d : drops) var += (d - mean) * (d - mean);
    var /= static_cast<double>(drops.size());
    const double stddev = std::sqrt(var);
    diag["drop_mean"] = mean;
    diag["drop_stddev"] = stddev;

    const double cutoff = mean + 2.0 * stddev;
    for (std::size_t i = 0; i < drops.size(); ++i) {
        if (drops[i] > cutoff) {
            diag["drop_index"] = static_cast<double>(i + 2); // drop into 1-based entry i+2
            return make_result(list, i + 1, "autocut-star", std::move(diag));
        }
    }
    diag["drop_index"] = std::string("none");
    return make_result(list, n, "autocut-star", std::move(diag));
}

TruncationResult elbow(const RankedList& list) {
    require_valid(list, "elbow");
    const auto& e = list.entries;
    const std::size_t n = e.size();
    Diagnostics diag;
    const double smax = e.front().score;
    const double smin = e.back().score;
    if (n <= 2 || smax == smin) {
        diag["degenerate"] = std::string(n <= 2 ? "short-list" : "constant-scores");
        return make_result(list, n, "elbow", std::move(diag));
    }
    // After normalization the chord always runs (0,1) -> (1,0), so the
    // perpendicular distance of (x, y) is |x + y - 1| / sqrt(2).
    std::size_t best = 0;
    double best_dev = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n - 1);
        const double y = (e[i].score - smin) / (smax - smin);
        const double dev = std::abs(x + y - 1.0);
        if (dev > best_dev) {
            best_dev = dev;
            best = i;
        }
    }
    diag["elbow_index"] = static_cast<double>(best + 1); // 1-based
    diag["max_distance"] = best_dev / std::sqrt(2.0);
    return make_result(list, best + 1, "elbow", std::move(diag));
}

TruncationResult surprise(const RankedList& list, double alpha) {
    require_valid(list, "surprise");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw TruncationError("surprise: alpha must be in (0,1)");

    const auto& e = list.entries;
    const std::size_t n = e.size();
    const double u = median_score(list);

    std::vector<double> excesses;
    for (const auto& s : e)
        if (s.score > u) excesses.push_back(s.score - u);

    auto fall_back = [&](const std::string& reason) {
        TruncationResult r = elbow(list);
        r.strategy_name = "surprise";
        r.diagnostics["fallback"] = std::string("elbow");
        r.diagnostics["fallback_reason"] = reason;
        r.diagnostics["alpha"] = alpha;
        r.diagnostics["u"] = u;
        return r;
    };

    if (excesses.size() < 4) return fall_back("fewer than 4 scores above threshold");

    GpdParams params;
    try {
        params = gpd_fit(excesses);
    } catch (const GpdFitError& err) {
        return fall_back(err.what());
    }
    params.threshold = u;

    // Tail probability of a score s above u under the peaks-over-threshold
    // model: P(S > s) = P(S > u) * P(X > s - u | X > 0), with P(S > u)
    // estimated by the exceedance fraction.
    const double tail_fraction =
        static_cast<double>(excesses.size()) / static_cast<double>(n);
    std::size_t cut = 0;
    while (cut < n) {
        const double s = e[cut].score;
        if (!(s > u)) break;
        const double p = tail_fraction * gpd_survival(s - u, params);
        if (!(p < alpha)) break;
        ++cut;
    }
    cut = std::max<std::size_t>(cut, 1);

    Diagnostics diag{
        {"xi", params.shape},     {"sigma", params.scale},
        {"u", u},                 {"alpha", alpha},
        {"n_tail", static_cast<double>(params.n_tail)},
        {"tail_fraction", tail_fraction},
    };
    return make_result(list, cut, "surprise", std::move(diag));
}

TruncationStrategy TruncationStrategy::parse(const std::string& spec) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = spec.find(':', start);
        parts.push_back(spec.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }

    TruncationStrategy s;
    s.name_ = spec;
    const std::string& head = parts.front();
    if (head == "fixed" && parts.size() == 2) {
        const std::size_t k = parse_positive(parts[1], spec);
        s.fn_ = [k](const RankedList& list, const CaseStudy&, const std::string&) {
            return fixed_k(list, k);
        };
    } else if (head == "rerank" && parts.size() == 3) {
        const std::size_t k = parse_positive(parts[1], spec);
        const std::size_t n = parse_positive(parts[2], spec);
        if (n > k) throw TruncationError("invalid strategy \"" + spec + "\": n must not exceed k");
        s.fn_ = [k, n](const RankedList& list, const CaseStudy& cs, const std::string& query) {
            const PassThroughReranker reranker;
            return rerank_then_cut(list, cs, query, reranker, k, n);
        };
    } else if (head == "autocut" && parts.size() == 1) {
        s.fn_ = [](const RankedList& list, const CaseStudy&, const std::string&) {
            return autocut(list);
        };
    } else if (head == "autocut-star" && parts.size() == 1) {
        s.fn_ = [](const RankedList& list, const CaseStudy&, const std::string&) {
            return autocut_star(list);
        };
    } else if (head == "elbow" && parts.size() == 1) {
        s.fn_ = [](const RankedList& list, const CaseStudy&, const std::string&) {
            return elbow(list);
        };
    } else if (head == "surprise" && parts.size() <= 2) {
        const double alpha = parts.size() == 2 ? parse_alpha(parts[1], spec) : 0.05;
        s.fn_ = [alpha](const RankedList& list, const CaseStudy&, const std::string&) {
            return surprise(list, alpha);
        };
    } else {
        throw TruncationError("unknown strategy \"" + spec + "\"");
    }
    return s;
}

TruncationResult TruncationStrategy::apply(const RankedList& list, const CaseStudy& cs,
                                           const std::string& query) const {
    return fn_(list, cs, query);
}

} // namespace cliniqa
