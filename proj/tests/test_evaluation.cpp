#include <doctest.h>

#include <random>

#include "cliniqa/evaluation.hpp"
#include "cliniqa/generation.hpp"
#include "cliniqa/text.hpp"
#include "cliniqa/truncation.hpp"
#include "test_util.hpp"

using namespace cliniqa;

namespace {

CaseStudy labeled_case(const std::string& id, std::vector<RelevanceLabel> labels) {
    CaseStudy cs;
    cs.case_id = id;
    cs.patient_question = "why";
    cs.clinician_question = "what";
    for (std::size_t i = 0; i < labels.size(); ++i)
        cs.sentences.push_back({static_cast<int>(i + 1),
                                "sentence " + id + " " + std::to_string(i + 1), labels[i]});
    return cs;
}

constexpr auto E = RelevanceLabel::Essential;
constexpr auto S = RelevanceLabel::Supplementary;
constexpr auto N = RelevanceLabel::NotRelevant;

} // namespace

TEST_SUITE("evaluation") {

TEST_CASE("gold sets per variant") {
    const CaseStudy cs = labeled_case("v", {E, S, N, E});
    CHECK(gold_ids(cs, Variant::Strict) == std::set<int>{1, 4});
    CHECK(gold_ids(cs, Variant::Lenient) == std::set<int>{1, 2, 4});
}

TEST_CASE("factuality against citations") {
    const std::vector<CaseStudy> cases{labeled_case("a", {E, E, N}),
                                       labeled_case("b", {E, N, S})};
    SUBCASE("citing exactly the essentials is perfect under strict") {
        const FactualityReport r = factuality_from_ids(cases, {{1, 2}, {1}});
        CHECK(r.strict.precision == doctest::Approx(1.0));
        CHECK(r.strict.recall == doctest::Approx(1.0));
        CHECK(r.strict.f1 == doctest::Approx(1.0));
        CHECK(r.lenient.recall < 1.0); // case b misses its supplementary sentence
    }
    SUBCASE("macro averaging over per-case F1") {
        // case a perfect, case b total miss -> macro F1 0.5
        const FactualityReport r = factuality_from_ids(cases, {{1, 2}, {2}});
        CHECK(r.strict.f1 == doctest::Approx(0.5));
    }
    SUBCASE("citing everything fixes recall at 1 with precision the label fraction") {
        const FactualityReport r = factuality_from_ids(cases, {{1, 2, 3}, {1, 2, 3}});
        CHECK(r.strict.recall == doctest::Approx(1.0));
        CHECK(r.strict.precision == doctest::Approx((2.0 / 3.0 + 1.0 / 3.0) / 2.0));
        CHECK(r.lenient.recall == doctest::Approx(1.0));
    }
}

TEST_CASE("strict-lenient dominance on random citations") {
    std::mt19937 rng(55);
    std::uniform_int_distribution<int> label(0, 2), size(0, 6), id(1, 6);
    for (int round = 0; round < 300; ++round) {
        std::vector<RelevanceLabel> labels;
        bool has_essential = false;
        for (int i = 0; i < 6; ++i) {
            const RelevanceLabel l = label(rng) == 0 ? E : (label(rng) == 1 ? S : N);
            has_essential |= l == E;
            labels.push_back(l);
        }
        if (!has_essential) labels[0] = E;
        const CaseStudy cs = labeled_case("r", labels);
        std::set<int> cited;
        for (int i = 0, n = size(rng); i < n; ++i) cited.insert(id(rng));

        const auto strict_gold = gold_ids(cs, Variant::Strict);
        const auto lenient_gold = gold_ids(cs, Variant::Lenient);
        for (int g : strict_gold) CHECK(lenient_gold.count(g) == 1); // lenient ⊇ strict

        const Prf strict = prf(cited, strict_gold);
        const Prf lenient = prf(cited, lenient_gold);
        CHECK(lenient.precision >= strict.precision - 1e-12);
    }
}

TEST_CASE("report values equal the mean of per-case values") {
    std::mt19937 rng(71);
    std::uniform_int_distribution<int> size(0, 5), id(1, 5);
    std::vector<CaseStudy> cases;
    std::vector<std::set<int>> cited;
    for (int c = 0; c < 7; ++c) {
        cases.push_back(labeled_case("m" + std::to_string(c), {E, S, N, E, N}));
        std::set<int> ids;
        for (int i = 0, n = size(rng); i < n; ++i) ids.insert(id(rng));
        cited.push_back(std::move(ids));
    }
    const FactualityReport r = factuality_from_ids(cases, cited);
    double p = 0, rec = 0, f = 0;
    std::size_t n = 0;
    for (const auto& cs : r.per_case) {
        if (!cs.strict_scored) continue;
        p += cs.strict.precision;
        rec += cs.strict.recall;
        f += cs.strict.f1;
        ++n;
    }
    REQUIRE(n > 0);
    CHECK(r.strict.precision == doctest::Approx(p / static_cast<double>(n)));
    CHECK(r.strict.recall == doctest::Approx(rec / static_cast<double>(n)));
    CHECK(r.strict.f1 == doctest::Approx(f / static_cast<double>(n)));
}

TEST_CASE("cases without gold labels are skipped with a count") {
    const std::vector<CaseStudy> cases{labeled_case("a", {E, N}),
                                       labeled_case("b", {N, N})};
    const FactualityReport r = factuality_from_ids(cases, {{1}, {1}});
    CHECK(r.strict_skipped == 1);
    CHECK(r.strict.f1 == doctest::Approx(1.0)); // only case a scored
}

TEST_CASE("retrieval_eval matches factuality arithmetic on kept ids") {
    const std::vector<CaseStudy> cases{labeled_case("a", {E, E, N, S}),
                                       labeled_case("b", {E, N, N, N}),
                                       labeled_case("c", {E, S, E, N})};
    std::vector<TruncationResult> truncations(3);
    truncations[0].kept_ids = {1, 2, 3, 4};
    truncations[0].cut_index = 4;
    truncations[1].kept_ids = {1, 2, 3, 4};
    truncations[1].cut_index = 4;
    truncations[2].kept_ids = {1, 2, 3, 4};
    truncations[2].cut_index = 4;

    SUBCASE("keeping everything gives recall 1 under both variants") {
        const FactualityReport r = retrieval_eval(cases, truncations);
        CHECK(r.strict.recall == doctest::Approx(1.0));
        CHECK(r.lenient.recall == doctest::Approx(1.0));
    }
    SUBCASE("keeping exactly the essential ids is strict-perfect") {
        truncations[0].kept_ids = {1, 2};
        truncations[1].kept_ids = {1};
        truncations[2].kept_ids = {1, 3};
        const FactualityReport r = retrieval_eval(cases, truncations);
        CHECK(r.strict.precision == doctest::Approx(1.0));
        CHECK(r.strict.recall == doctest::Approx(1.0));
        CHECK(r.strict.f1 == doctest::Approx(1.0));
    }
    SUBCASE("macro averages match hand-rolled per-case computation") {
        truncations[0].kept_ids = {1, 3};       // strict: P 1/2, R 1/2, F 1/2
        truncations[1].kept_ids = {2, 3};       // strict: P 0, R 0, F 0
        truncations[2].kept_ids = {1, 2, 3, 4}; // strict: P 1/2, R 1, F 2/3
        const FactualityReport r = retrieval_eval(cases, truncations);
        CHECK(r.strict.precision == doctest::Approx((0.5 + 0.0 + 0.5) / 3.0));
        CHECK(r.strict.recall == doctest::Approx((0.5 + 0.0 + 1.0) / 3.0));
        CHECK(r.strict.f1 == doctest::Approx((0.5 + 0.0 + 2.0 / 3.0) / 3.0));
    }
}

TEST_CASE("retrieval_eval over elbow cuts equals a brute-force macro average") {
    const std::vector<CaseStudy> cases{labeled_case("a", {E, E, N, S, N}),
                                       labeled_case("b", {E, N, S, N, N}),
                                       labeled_case("c", {E, S, E, N, N})};
    const std::vector<std::vector<double>> score_sets{
        {0.95, 0.90, 0.30, 0.28, 0.25},
        {0.80, 0.40, 0.38, 0.36, 0.34},
        {0.90, 0.88, 0.86, 0.20, 0.18},
    };
    std::vector<TruncationResult> cuts;
    for (const auto& scores : score_sets) cuts.push_back(elbow(testutil::make_list(scores)));

    const FactualityReport report = retrieval_eval(cases, cuts);

    double p = 0, r = 0, f = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto gold = gold_ids(cases[i], Variant::Strict);
        std::size_t hits = 0;
        for (int id : cuts[i].kept_ids) hits += gold.count(id);
        const double ps = static_cast<double>(hits) / static_cast<double>(cuts[i].kept_ids.size());
        const double rs = static_cast<double>(hits) / static_cast<double>(gold.size());
        p += ps;
        r += rs;
        f += (ps + rs) > 0 ? 2 * ps * rs / (ps + rs) : 0.0;
    }
    CHECK(report.strict.precision == doctest::Approx(p / 3.0).epsilon(1e-12));
    CHECK(report.strict.recall == doctest::Approx(r / 3.0).epsilon(1e-12));
    CHECK(report.strict.f1 == doctest::Approx(f / 3.0).epsilon(1e-12));
}

TEST_CASE("relevance") {
    testutil::HashProvider provider;
    CaseStudy cs = labeled_case("rel", {E, E, N});
    cs.sentences[0].text = "the aneurysm ruptured suddenly";
    cs.sentences[1].text = "an emergent graft repair followed";
    cs.sentences[2].text = "he watched television";

    SUBCASE("answer equal to the concatenated essentials maxes the lexical metrics") {
        const std::string answer = "the aneurysm ruptured suddenly an emergent graft repair followed";
        const RelevanceReport r = relevance(answer, cs, provider);
        CHECK(r.bleu == doctest::Approx(1.0));
        CHECK(r.rouge == doctest::Approx(1.0));
        CHECK(r.semantic == doctest::Approx(1.0));
        CHECK(r.mean == doctest::Approx((r.bleu + r.rouge + r.sari + r.semantic) / 4.0));
    }
    SUBCASE("disjoint answers score near zero on lexical components") {
        const RelevanceReport r = relevance("totally unrelated words", cs, provider);
        CHECK(r.bleu == doctest::Approx(0.0));
        CHECK(r.rouge == doctest::Approx(0.0));
    }
    SUBCASE("empty answers score zero without touching the provider") {
        const RelevanceReport r = relevance("   ", cs, provider);
        CHECK(r.mean == doctest::Approx(0.0));
    }
    SUBCASE("a case without essentials is an error") {
        const CaseStudy bare = labeled_case("none", {N, N});
        CHECK_THROWS_AS(relevance("text", bare, provider), EvaluationError);
    }
}

TEST_CASE("overall score arithmetic") {
    FactualityReport fact;
    fact.strict.f1 = 0.37;
    RelevanceReport rel;
    rel.mean = 0.35;
    const PipelineScore score = overall_score(fact, rel);
    CHECK(score.overall == doctest::Approx(0.36));
    // rounded to two decimals as reported
    CHECK(std::round(score.overall * 100.0) / 100.0 == doctest::Approx(0.36));

    FactualityReport zero;
    RelevanceReport zero_rel;
    CHECK(overall_score(zero, zero_rel).overall == doctest::Approx(0.0));

    FactualityReport one;
    one.strict.f1 = 1.0;
    RelevanceReport half;
    half.mean = 0.5;
    CHECK(overall_score(one, half).overall == doctest::Approx(0.75));
}

TEST_CASE("echo client end to end: cited ids equal kept ids at any fixed k") {
    // with the echo mock, strict precision is exactly |kept ∩ essential| / |kept|
    auto provider = FileBackedProvider::load(testutil::fixture("e2e_embeddings.jsonl"));
    const Dataset ds = load_dataset(testutil::fixture("e2e_case.json"));
    const CaseStudy& cs = ds.cases[0];
    const VectorIndex index = VectorIndex::build(ds.cases, provider);
    const Embedding query_vec = provider.embed(build_query(cs, QueryMode::Both));
    const RankedList ranked = rank_sentences(cs, query_vec, index);

    EchoClient echo;
    PromptSpec spec;
    const auto strict_gold = gold_ids(cs, Variant::Strict);
    for (std::size_t k = 1; k <= cs.sentences.size(); ++k) {
        const TruncationResult cut = fixed_k(ranked, k);
        Evidence evidence;
        for (int id : cut.kept_ids) evidence.emplace_back(id, cs.find_sentence(id)->text);
        const GenerationResult r = generate_valid(echo, spec, cs, evidence, /*word_limit=*/200);
        REQUIRE(r.answer.has_value());
        const std::set<int> cited = r.answer->cited_union();
        CHECK(cited == std::set<int>(cut.kept_ids.begin(), cut.kept_ids.end()));

        std::size_t hits = 0;
        for (int id : cut.kept_ids) hits += strict_gold.count(id);
        const Prf p = prf(cited, strict_gold);
        CHECK(p.precision ==
              doctest::Approx(static_cast<double>(hits) / static_cast<double>(k)));
    }
}

TEST_CASE("average_relevance recomputes the mean from components") {
    RelevanceReport a{0.2, 0.4, 0.6, 0.8, 0.5, {}};
    RelevanceReport b{0.4, 0.6, 0.8, 1.0, 0.7, {}};
    const RelevanceReport avg = average_relevance({a, b});
    CHECK(avg.bleu == doctest::Approx(0.3));
    CHECK(avg.rouge == doctest::Approx(0.5));
    CHECK(avg.sari == doctest::Approx(0.7));
    CHECK(avg.semantic == doctest::Approx(0.9));
    CHECK(avg.mean == doctest::Approx((0.3 + 0.5 + 0.7 + 0.9) / 4.0));
}

} // TEST_SUITE
