#include "cliniqa/attribution.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "cliniqa/evaluation.hpp"
#include "cliniqa/parallel.hpp"
#include "cliniqa/text.hpp"

namespace cliniqa {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// Content between the bars: id (, id)* with optional spaces. Returns all ids,
// valid or not; the caller filters.
std::vector<int> parse_block_ids(std::string_view content, std::size_t open_offset) {
    std::vector<int> ids;
    std::size_t i = 0;
    const auto skip_spaces = [&] { while (i < content.size() && is_space(content[i])) ++i; };
    skip_spaces();
    while (true) {
        if (i >= content.size() || !is_digit(content[i]))
            throw CitationSyntaxError("malformed citation block", open_offset);
        long value = 0;
        while (i < content.size() && is_digit(content[i])) {
            value = value * 10 + (content[i] - '0');
            if (value > 1'000'000) throw CitationSyntaxError("citation id out of range", open_offset);
            ++i;
        }
        ids.push_back(static_cast<int>(value));
        skip_spaces();
        if (i >= content.size()) break;
        if (content[i] != ',') throw CitationSyntaxError("malformed citation block", open_offset);
        ++i;
        skip_spaces();
    }
    return ids;
}

} // namespace

std::set<int> Answer::cited_union() const {
    std::set<int> out;
    for (const auto& c : citations) out.insert(c.cited_ids.begin(), c.cited_ids.end());
    return out;
}

std::string Answer::full_text() const { return text::join(sentences, " "); }

Answer parse_citations(const std::string& raw, const std::set<int>& valid_ids) {
    std::vector<std::pair<std::string, std::set<int>>> sents;
    std::string cur;
    std::set<int> pending;

    const auto finalize = [&] {
        std::string t = text::trim(cur);
        cur.clear();
        if (!t.empty()) {
            sents.emplace_back(std::move(t), std::move(pending));
            pending.clear();
        } else if (!pending.empty() && !sents.empty()) {
            sents.back().second.insert(pending.begin(), pending.end());
            pending.clear();
        }
        // a leading block with no sentence yet stays pending
    };

    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c == '|') {
            const auto close = raw.find('|', i + 1);
            if (close == std::string::npos)
                throw CitationSyntaxError("unbalanced citation block", i);
            const auto ids = parse_block_ids(
                std::string_view(raw).substr(i + 1, close - i - 1), i);
            std::set<int> kept;
            for (int id : ids)
                if (valid_ids.count(id)) kept.insert(id);
            if (text::trim(cur).empty() && !sents.empty()) {
                // block after the terminator: attach to the previous sentence
                sents.back().second.insert(kept.begin(), kept.end());
            } else {
                pending.insert(kept.begin(), kept.end());
            }
            i = close;
        } else if (is_terminator(c) &&
                   (i + 1 == raw.size() || is_space(raw[i + 1]) || raw[i + 1] == '|')) {
            finalize();
        } else {
            cur.push_back(c);
        }
    }
    finalize();

    Answer answer;
    for (std::size_t i = 0; i < sents.size(); ++i) {
        answer.sentences.push_back(std::move(sents[i].first));
        if (!sents[i].second.empty())
            answer.citations.push_back({i, std::move(sents[i].second)});
    }
    if (answer.sentences.empty()) throw NoAttributionError();
    if (answer.citations.empty()) throw NoAttributionError();
    return answer;
}

std::string render_citations(const Answer& answer) {
    std::string out;
    for (std::size_t i = 0; i < answer.sentences.size(); ++i) {
        if (i) out += " ";
        out += answer.sentences[i];
        for (const auto& c : answer.citations) {
            if (c.answer_sentence_index != i) continue;
            if (c.cited_ids.empty())
                throw AttributionError("render_citations: empty citation set");
            out += " |";
            bool first = true;
            for (int id : c.cited_ids) {
                if (!first) out += ", ";
                out += std::to_string(id);
                first = false;
            }
            out += "|";
        }
        out += ".";
    }
    return out;
}

double meteor_lite(const std::string& hypothesis, const std::string& reference) {
    const auto h = text::alnum_tokens(hypothesis);
    const auto r = text::alnum_tokens(reference);
    if (h.empty() || r.empty()) return 0.0;
    std::map<std::string, int> ref_counts;
    for (const auto& t : r) ++ref_counts[t];
    int matches = 0;
    for (const auto& t : h) {
        const auto it = ref_counts.find(t);
        if (it != ref_counts.end() && it->second > 0) {
            ++matches;
            --it->second;
        }
    }
    if (matches == 0) return 0.0;
    const double p = static_cast<double>(matches) / static_cast<double>(h.size());
    const double rc = static_cast<double>(matches) / static_cast<double>(r.size());
    return 10.0 * p * rc / (rc + 9.0 * p);
}

double lexical_sim(const std::string& a, const std::string& b) {
    return (rouge_l(a, b) + bleu(a, {b}) + meteor_lite(a, b)) / 3.0;
}

double fuzzy_sim(const std::string& a, const std::string& b) {
    if (a.empty() && b.empty()) return 1.0;
    const std::string la = text::to_lower(a);
    const std::string lb = text::to_lower(b);
    const std::size_t longest = std::max(la.size(), lb.size());
    const std::size_t dist = text::levenshtein(la, lb);
    return 1.0 - static_cast<double>(dist) / static_cast<double>(longest);
}

double semantic_sim(const std::string& a, const std::string& b, EmbeddingProvider& provider) {
    const double c = cosine(provider.embed(a), provider.embed(b));
    return std::max(0.0, c);
}

bool SimilarityWeights::valid() const {
    const auto in_unit = [](double w) { return w >= 0.0 && w <= 1.0; };
    if (!in_unit(lexical) || !in_unit(fuzzy) || !in_unit(semantic)) return false;
    return std::abs(lexical + fuzzy + semantic - 1.0) <= 1e-9;
}

double combined_score(const std::string& answer_sentence, const std::string& evidence_sentence,
                      const SimilarityWeights& weights, EmbeddingProvider& provider) {
    if (!weights.valid()) throw AttributionError("similarity weights must sum to 1");
    double score = 0.0;
    if (weights.lexical > 0.0) score += weights.lexical * lexical_sim(answer_sentence, evidence_sentence);
    if (weights.fuzzy > 0.0) score += weights.fuzzy * fuzzy_sim(answer_sentence, evidence_sentence);
    if (weights.semantic > 0.0)
        score += weights.semantic * semantic_sim(answer_sentence, evidence_sentence, provider);
    return score;
}

std::vector<Citation> attribute_post_generation(
    const std::vector<std::string>& answer_sentences,
    const std::vector<std::pair<int, std::string>>& retrieved,
    const AttributionConfig& config, EmbeddingProvider& provider) {
    if (retrieved.empty()) throw AttributionError("attribute_post_generation: empty retrieved list");
    if (!config.weights.valid()) throw AttributionError("similarity weights must sum to 1");
    std::vector<Citation> out;
    for (std::size_t i = 0; i < answer_sentences.size(); ++i) {
        std::set<int> ids;
        for (const auto& [id, sentence_text] : retrieved) {
            const double score =
                combined_score(answer_sentences[i], sentence_text, config.weights, provider);
            if (score > config.threshold) ids.insert(id);
        }
        if (!ids.empty()) out.push_back({i, std::move(ids)});
    }
    return out;
}

std::vector<SimilarityWeights> enumerate_weight_triples(double step, bool include_zero) {
    if (!(step > 0.0) || step > 1.0)
        throw AttributionError("weight step must be in (0, 1]");
    const auto m = static_cast<long>(std::lround(1.0 / step));
    if (std::abs(1.0 / step - static_cast<double>(m)) > 1e-9)
        throw AttributionError("weight step must divide 1 evenly");
    std::vector<SimilarityWeights> out;
    const long lo = include_zero ? 0 : 1;
    for (long i = lo; i <= m; ++i) {
        for (long j = lo; j <= m - i; ++j) {
            const long k = m - i - j;
            if (k < lo) continue;
            out.push_back({static_cast<double>(i) / static_cast<double>(m),
                           static_cast<double>(j) / static_cast<double>(m),
                           static_cast<double>(k) / static_cast<double>(m)});
        }
    }
    return out;
}

std::vector<GridSearchRow> grid_search(const std::vector<CaseStudy>& cases,
                                       const std::vector<std::vector<std::string>>& answer_sentences,
                                       EmbeddingProvider& provider, double weight_step,
                                       std::vector<double> thresholds, std::size_t jobs,
                                       bool include_zero_weights) {
    if (cases.size() != answer_sentences.size())
        throw AttributionError("grid_search: answers not aligned with cases");
    if (thresholds.empty())
        for (int t = 1; t <= 9; ++t) thresholds.push_back(t / 10.0);

    // Component scores do not depend on the configuration: compute the
    // (lexical, fuzzy, semantic) triple per answer-sentence/evidence pair
    // once, then sweep configurations over cached values.
    struct PairScores {
        int sentence_id;
        double lexical, fuzzy, semantic;
    };
    struct CaseTable {
        std::vector<std::vector<PairScores>> per_answer_sentence;
        double relevance_mean = 0.0;
        bool relevance_scored = false;
    };
    std::vector<CaseTable> tables(cases.size());
    parallel_for(cases.size(), jobs, [&](std::size_t ci) {
        const CaseStudy& cs = cases[ci];
        CaseTable& table = tables[ci];
        table.per_answer_sentence.resize(answer_sentences[ci].size());
        for (std::size_t ai = 0; ai < answer_sentences[ci].size(); ++ai) {
            const std::string& answer = answer_sentences[ci][ai];
            for (const auto& s : cs.sentences) {
                table.per_answer_sentence[ai].push_back(
                    {s.id, lexical_sim(answer, s.text), fuzzy_sim(answer, s.text),
                     semantic_sim(answer, s.text, provider)});
            }
        }
        if (!gold_ids(cs, Variant::Strict).empty()) {
            table.relevance_mean =
                relevance(text::join(answer_sentences[ci], " "), cs, provider).mean;
            table.relevance_scored = true;
        }
    });

    double relevance_mean = 0.0;
    std::size_t scored = 0;
    for (const auto& t : tables) {
        if (t.relevance_scored) {
            relevance_mean += t.relevance_mean;
            ++scored;
        }
    }
    if (scored > 0) relevance_mean /= static_cast<double>(scored);

    const auto triples = enumerate_weight_triples(weight_step, include_zero_weights);
    std::vector<GridSearchRow> rows(triples.size() * thresholds.size());
    parallel_for(rows.size(), jobs, [&](std::size_t idx) {
        const SimilarityWeights& w = triples[idx / thresholds.size()];
        const double threshold = thresholds[idx % thresholds.size()];

        std::vector<std::set<int>> cited(cases.size());
        for (std::size_t ci = 0; ci < cases.size(); ++ci) {
            for (const auto& pairs : tables[ci].per_answer_sentence) {
                for (const auto& p : pairs) {
                    const double score =
                        w.lexical * p.lexical + w.fuzzy * p.fuzzy + w.semantic * p.semantic;
                    if (score > threshold) cited[ci].insert(p.sentence_id);
                }
            }
        }
        const FactualityReport report = factuality_from_ids(cases, cited);
        GridSearchRow& row = rows[idx];
        row.weights = w;
        row.threshold = threshold;
        row.strict_precision = report.strict.precision;
        row.strict_f1 = report.strict.f1;
        row.relevance = relevance_mean;
        row.overall = (report.strict.f1 + relevance_mean) / 2.0;
    });

    std::stable_sort(rows.begin(), rows.end(), [](const GridSearchRow& a, const GridSearchRow& b) {
        if (a.overall != b.overall) return a.overall > b.overall;
        if (a.weights.lexical != b.weights.lexical) return a.weights.lexical < b.weights.lexical;
        if (a.weights.fuzzy != b.weights.fuzzy) return a.weights.fuzzy < b.weights.fuzzy;
        if (a.weights.semantic != b.weights.semantic) return a.weights.semantic < b.weights.semantic;
        return a.threshold < b.threshold;
    });
    return rows;
}

std::string grid_to_csv(const std::vector<GridSearchRow>& rows) {
    std::string out = "w1,w2,w3,T,strictP,strictF1,relevance,overall\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%.2f,%.2f,%.4f,%.4f,%.4f,%.4f\n",
                      r.weights.lexical, r.weights.fuzzy, r.weights.semantic, r.threshold,
                      r.strict_precision, r.strict_f1, r.relevance, r.overall);
        out += buf;
    }
    return out;
}

} // namespace cliniqa
