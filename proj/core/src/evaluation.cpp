#include "cliniqa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cliniqa/text.hpp"
#include "http_url.hpp"

namespace cliniqa {

using json = nlohmann::json;

namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::string, double>;

std::string ngram_at(const Tokens& tokens, std::size_t i, std::size_t n) {
    std::string g = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
        g.push_back('\x1f');
        g += tokens[i + k];
    }
    return g;
}

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() >= n)
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) counts[ngram_at(tokens, i, n)] += 1.0;
    return counts;
}

double sum_counts(const NgramCounts& c) {
    double s = 0;
    for (const auto& [g, v] : c) s += v;
    return s;
}

NgramCounts intersect(const NgramCounts& a, const NgramCounts& b) {
    NgramCounts out;
    for (const auto& [g, v] : a) {
        const auto it = b.find(g);
        if (it != b.end()) {
            const double m = std::min(v, it->second);
            if (m > 0) out[g] = m;
        }
    }
    return out;
}

NgramCounts subtract(const NgramCounts& a, const NgramCounts& b) {
    NgramCounts out;
    for (const auto& [g, v] : a) {
        const auto it = b.find(g);
        const double d = v - (it == b.end() ? 0.0 : it->second);
        if (d > 0) out[g] = d;
    }
    return out;
}

double f1(double p, double r) { return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0; }

// Per-order SARI components following the original fractional-count
// formulation: keep and add are F1 scores, deletion is precision only.
struct SariParts {
    double keep, del, add;
};

SariParts sari_order(const NgramCounts& sg, const NgramCounts& cg,
                     const std::vector<NgramCounts>& refs) {
    const auto numref = static_cast<double>(refs.size());
    NgramCounts rgram;
    for (const auto& rg : refs)
        for (const auto& [g, v] : rg) rgram[g] += v;
    NgramCounts s_rep, c_rep;
    for (const auto& [g, v] : sg) s_rep[g] = v * numref;
    for (const auto& [g, v] : cg) c_rep[g] = v * numref;

    // keep
    const NgramCounts keep = intersect(s_rep, c_rep);
    const NgramCounts keep_good = intersect(keep, rgram);
    const NgramCounts keep_all = intersect(s_rep, rgram);
    double t1 = 0;
    double t2 = 0;
    for (const auto& [g, v] : keep_good) {
        t1 += v / keep.at(g);
        t2 += v;
    }
    const double kp = keep.empty() ? 1.0 : t1 / static_cast<double>(keep.size());
    const double kr = keep_all.empty() ? 1.0 : t2 / sum_counts(keep_all);
    const double keep_score = (kp > 0 || kr > 0) ? 2 * kp * kr / (kp + kr) : 0.0;

    // deletion (precision only)
    const NgramCounts del = subtract(s_rep, c_rep);
    const NgramCounts del_good = subtract(del, rgram);
    double t3 = 0;
    for (const auto& [g, v] : del_good) t3 += v / del.at(g);
    const double del_score = del.empty() ? 1.0 : t3 / static_cast<double>(del.size());

    // addition (distinct n-grams)
    double add_cand = 0, add_good = 0, add_all = 0;
    for (const auto& [g, v] : cg)
        if (!sg.count(g)) {
            add_cand += 1;
            if (rgram.count(g)) add_good += 1;
        }
    for (const auto& [g, v] : rgram)
        if (!sg.count(g)) add_all += 1;
    const double ap = add_cand > 0 ? add_good / add_cand : 1.0;
    const double ar = add_all > 0 ? add_good / add_all : 1.0;
    const double add_score = (ap > 0 || ar > 0) ? 2 * ap * ar / (ap + ar) : 0.0;

    return {keep_score, del_score, add_score};
}

} // namespace

std::string_view to_string(Variant variant) {
    return variant == Variant::Strict ? "strict" : "lenient";
}

std::set<int> gold_ids(const CaseStudy& cs, Variant variant) {
    std::set<int> out;
    for (const auto& s : cs.sentences) {
        if (s.label == RelevanceLabel::Essential ||
            (variant == Variant::Lenient && s.label == RelevanceLabel::Supplementary))
            out.insert(s.id);
    }
    return out;
}

Prf prf(const std::set<int>& cited, const std::set<int>& gold) {
    if (gold.empty()) throw EvaluationError("prf: empty gold set (undefined recall)");
    std::size_t hit = 0;
    for (int id : cited) hit += gold.count(id);
    Prf r;
    r.precision = cited.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(cited.size());
    r.recall = static_cast<double>(hit) / static_cast<double>(gold.size());
    r.f1 = f1(r.precision, r.recall);
    return r;
}

FactualityReport factuality_from_ids(const std::vector<CaseStudy>& cases,
                                     const std::vector<std::set<int>>& cited_per_case) {
    if (cases.size() != cited_per_case.size())
        throw EvaluationError("factuality: cited sets not aligned with cases");
    FactualityReport report;
    double sp = 0, sr = 0, sf = 0, lp = 0, lr = 0, lf = 0;
    std::size_t sn = 0, ln = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        CaseScore cscore;
        cscore.case_id = cases[i].case_id;
        const auto strict_gold = gold_ids(cases[i], Variant::Strict);
        const auto lenient_gold = gold_ids(cases[i], Variant::Lenient);
        if (strict_gold.empty()) {
            ++report.strict_skipped;
        } else {
            cscore.strict = prf(cited_per_case[i], strict_gold);
            cscore.strict_scored = true;
            sp += cscore.strict.precision;
            sr += cscore.strict.recall;
            sf += cscore.strict.f1;
            ++sn;
        }
        if (lenient_gold.empty()) {
            ++report.lenient_skipped;
        } else {
            cscore.lenient = prf(cited_per_case[i], lenient_gold);
            cscore.lenient_scored = true;
            lp += cscore.lenient.precision;
            lr += cscore.lenient.recall;
            lf += cscore.lenient.f1;
            ++ln;
        }
        report.per_case.push_back(std::move(cscore));
    }
    if (sn > 0) report.strict = {sp / sn, sr / sn, sf / sn};
    if (ln > 0) report.lenient = {lp / ln, lr / ln, lf / ln};
    return report;
}

FactualityReport factuality(const std::vector<CaseStudy>& cases,
                            const std::vector<Answer>& answers) {
    std::vector<std::set<int>> cited;
    cited.reserve(answers.size());
    for (const auto& a : answers) cited.push_back(a.cited_union());
    return factuality_from_ids(cases, cited);
}

FactualityReport retrieval_eval(const std::vector<CaseStudy>& cases,
                                const std::vector<TruncationResult>& truncations) {
    std::vector<std::set<int>> kept;
    kept.reserve(truncations.size());
    for (const auto& t : truncations) kept.emplace_back(t.kept_ids.begin(), t.kept_ids.end());
    return factuality_from_ids(cases, kept);
}

double bleu(const std::string& hypothesis, const std::vector<std::string>& references) {
    const Tokens h = text::alnum_tokens(hypothesis);
    if (h.empty() || references.empty()) return 0.0;
    std::vector<Tokens> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(text::alnum_tokens(r));

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const NgramCounts hg = count_ngrams(h, n);
        NgramCounts max_ref;
        for (const auto& r : refs)
            for (const auto& [g, v] : count_ngrams(r, n)) max_ref[g] = std::max(max_ref[g], v);
        double match = 0;
        for (const auto& [g, v] : hg) {
            const auto it = max_ref.find(g);
            if (it != max_ref.end()) match += std::min(v, it->second);
        }
        const double total = sum_counts(hg);
        double p;
        if (n == 1) {
            if (match == 0) return 0.0;
            p = match / total;
        } else {
            p = (match + 1.0) / (total + 1.0);
        }
        log_sum += std::log(p);
    }

    const auto c = static_cast<double>(h.size());
    double best_len = static_cast<double>(refs.front().size());
    for (const auto& r : refs) {
        const auto len = static_cast<double>(r.size());
        if (std::abs(len - c) < std::abs(best_len - c) ||
            (std::abs(len - c) == std::abs(best_len - c) && len < best_len))
            best_len = len;
    }
    const double bp = c > best_len ? 1.0 : std::exp(1.0 - best_len / c);
    return bp * std::exp(log_sum / 4.0);
}

double rouge_l(const std::string& hypothesis, const std::string& reference) {
    const Tokens h = text::alnum_tokens(hypothesis);
    const Tokens r = text::alnum_tokens(reference);
    if (h.empty() || r.empty()) return 0.0;
    std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
    for (std::size_t i = 1; i <= h.size(); ++i) {
        for (std::size_t j = 1; j <= r.size(); ++j) {
            cur[j] = h[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const auto lcs = static_cast<double>(prev[r.size()]);
    if (lcs == 0) return 0.0;
    return f1(lcs / static_cast<double>(h.size()), lcs / static_cast<double>(r.size()));
}

double sari(const std::string& source, const std::string& hypothesis,
            const std::vector<std::string>& references) {
    if (references.empty()) throw EvaluationError("sari: needs at least one reference");
    const Tokens s = text::alnum_tokens(source);
    const Tokens c = text::alnum_tokens(hypothesis);
    std::vector<Tokens> rs;
    rs.reserve(references.size());
    for (const auto& r : references) rs.push_back(text::alnum_tokens(r));

    double keep = 0, del = 0, add = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<NgramCounts> ref_counts;
        ref_counts.reserve(rs.size());
        for (const auto& r : rs) ref_counts.push_back(count_ngrams(r, n));
        const SariParts parts = sari_order(count_ngrams(s, n), count_ngrams(c, n), ref_counts);
        keep += parts.keep / 4.0;
        del += parts.del / 4.0;
        add += parts.add / 4.0;
    }
    return (keep + del + add) / 3.0;
}

RelevanceReport relevance(const std::string& answer_text, const CaseStudy& cs,
                          EmbeddingProvider& provider) {
    std::vector<std::string> essentials;
    for (const auto& s : cs.sentences)
        if (s.label == RelevanceLabel::Essential) essentials.push_back(s.text);
    if (essentials.empty())
        throw EvaluationError("relevance: case \"" + cs.case_id + "\" has no essential sentence");
    const std::string reference = text::join(essentials, " ");

    RelevanceReport r;
    if (!text::trim(answer_text).empty()) {
        r.bleu = bleu(answer_text, {reference});
        r.rouge = rouge_l(answer_text, reference);
        r.sari = sari(build_query(cs, QueryMode::Both), answer_text, {reference});
        r.semantic = std::max(0.0, cosine(provider.embed(answer_text), provider.embed(reference)));
    }
    r.mean = (r.bleu + r.rouge + r.sari + r.semantic) / 4.0;
    return r;
}

RelevanceReport average_relevance(const std::vector<RelevanceReport>& reports) {
    RelevanceReport out;
    if (reports.empty()) return out;
    std::map<std::string, std::pair<double, std::size_t>> ext;
    for (const auto& r : reports) {
        out.bleu += r.bleu;
        out.rouge += r.rouge;
        out.sari += r.sari;
        out.semantic += r.semantic;
        for (const auto& [name, v] : r.external) {
            ext[name].first += v;
            ext[name].second += 1;
        }
    }
    const auto n = static_cast<double>(reports.size());
    out.bleu /= n;
    out.rouge /= n;
    out.sari /= n;
    out.semantic /= n;
    out.mean = (out.bleu + out.rouge + out.sari + out.semantic) / 4.0;
    for (const auto& [name, acc] : ext)
        out.external[name] = acc.first / static_cast<double>(acc.second);
    return out;
}

PipelineScore overall_score(FactualityReport factuality, RelevanceReport relevance) {
    PipelineScore s;
    s.overall = (factuality.strict.f1 + relevance.mean) / 2.0;
    s.factuality = std::move(factuality);
    s.relevance = std::move(relevance);
    return s;
}

struct ExternalScorer::Impl {
    httplib::Client client;
    std::string path;
    std::mutex mu;

    Impl(const std::string& base, std::string p) : client(base), path(std::move(p)) {
        client.set_read_timeout(60, 0);
    }
};

ExternalScorer::ExternalScorer(std::string url, std::string bearer_token) : url_(std::move(url)) {
    auto [base, path] = detail::split_http_url<EvaluationError>(url_);
    impl_ = std::make_unique<Impl>(base, path);
    if (!bearer_token.empty())
        impl_->client.set_default_headers({{"Authorization", "Bearer " + bearer_token}});
}

ExternalScorer::~ExternalScorer() = default;

double ExternalScorer::score(const std::string& candidate, const std::string& reference) {
    json body{{"candidate", candidate}, {"reference", reference}};
    httplib::Result res;
    {
        std::lock_guard lock(impl_->mu);
        res = impl_->client.Post(impl_->path, body.dump(), "application/json");
    }
    if (!res) throw EvaluationError("external scorer unreachable: " + url_);
    if (res->status != 200)
        throw EvaluationError("external scorer returned status " + std::to_string(res->status));
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("score") || !reply["score"].is_number())
        throw EvaluationError("external scorer returned malformed body");
    return reply["score"].get<double>();
}

} // namespace cliniqa
