#include <doctest.h>

#include <random>

#include "cliniqa/corpus.hpp"
#include "test_util.hpp"

using namespace cliniqa;

namespace {

std::string minimal_case(const std::string& sentences_json, const std::string& split = "dev") {
    return R"({"split": ")" + split + R"(", "cases": [{
        "case_id": "c1",
        "patient_question": "Why the operation?",
        "clinician_question": "Why was surgery indicated?",
        "sentences": )" + sentences_json + "}]}";
}

} // namespace

TEST_SUITE("corpus") {

TEST_CASE("loads the bundled example case") {
    const Dataset ds = load_dataset(testutil::fixture("example_case.json"));
    REQUIRE(ds.cases.size() == 1);
    const CaseStudy& cs = ds.cases[0];
    CHECK(cs.sentences.size() == 9);
    CHECK(cs.sentences.front().id == 1);
    CHECK(cs.sentences.front().text.starts_with("He was transferred to the hospital"));
    CHECK(cs.sentences.back().id == 9);
    CHECK(cs.sentences.back().text == "Packed with dry gauze and covered with DSD.");
    CHECK(cs.sentences[0].label == RelevanceLabel::Essential);
    CHECK(cs.sentences[2].label == RelevanceLabel::Supplementary);
    CHECK(cs.sentences[8].label == RelevanceLabel::NotRelevant);
}

TEST_CASE("empty case list loads as empty") {
    const Dataset ds = parse_dataset(R"({"split": "dev", "cases": []})");
    CHECK(ds.cases.empty());
}

TEST_CASE("non-contiguous sentence ids are rejected") {
    const auto text = minimal_case(
        R"([{"id": 1, "text": "a", "label": "essential"},
            {"id": 3, "text": "b", "label": "essential"}])");
    CHECK_THROWS_WITH_AS(parse_dataset(text),
                         doctest::Contains("non-contiguous sentence ids"), CorpusError);
}

TEST_CASE("duplicate case ids are rejected") {
    const std::string one = R"({"case_id": "c1", "patient_question": "p",
        "clinician_question": "c",
        "sentences": [{"id": 1, "text": "a", "label": "essential"}]})";
    const std::string text = R"({"split": "dev", "cases": [)" + one + "," + one + "]}";
    CHECK_THROWS_WITH_AS(parse_dataset(text), doctest::Contains("duplicate case_id"), CorpusError);
}

TEST_CASE("unknown label strings are rejected with the case id") {
    const auto text = minimal_case(R"([{"id": 1, "text": "a", "label": "critical"}])");
    CHECK_THROWS_WITH_AS(parse_dataset(text), doctest::Contains("unknown label"), CorpusError);
    CHECK_THROWS_WITH_AS(parse_dataset(text), doctest::Contains("c1"), CorpusError);
}

TEST_CASE("unlabeled sentences are only allowed in the test split") {
    const auto dev = minimal_case(R"([{"id": 1, "text": "a", "label": null}])", "dev");
    CHECK_THROWS_AS(parse_dataset(dev), CorpusError);

    const auto test = minimal_case(R"([{"id": 1, "text": "a", "label": null}])", "test");
    const Dataset ds = parse_dataset(test);
    CHECK(ds.cases[0].sentences[0].label == RelevanceLabel::Unlabeled);
}

TEST_CASE("malformed json is rejected") {
    CHECK_THROWS_AS(parse_dataset("not json"), CorpusError);
    CHECK_THROWS_AS(parse_dataset(R"({"split": "dev"})"), CorpusError);
    CHECK_THROWS_AS(parse_dataset(R"({"split": "staging", "cases": []})"), CorpusError);
}

TEST_CASE("build_query modes") {
    const Dataset ds = load_dataset(testutil::fixture("example_case.json"));
    const CaseStudy& cs = ds.cases[0];
    CHECK(build_query(cs, QueryMode::ClinicianOnly) ==
          "Why did they perform the emergency salvage repair on him?");
    CHECK(build_query(cs, QueryMode::PatientOnly) == cs.patient_question);
    CHECK(build_query(cs, QueryMode::Both) ==
          cs.patient_question + "\n" + cs.clinician_question);

    CaseStudy twin = cs;
    twin.patient_question = twin.clinician_question;
    const std::string q = build_query(twin, QueryMode::Both);
    CHECK(q == twin.clinician_question + "\n" + twin.clinician_question);
}

TEST_CASE("corpus_stats summarizes counts and token lengths") {
    SUBCASE("single case") {
        const Dataset ds = load_dataset(testutil::fixture("example_case.json"));
        const StatsReport report = corpus_stats(ds.cases);
        CHECK(report.sentence_counts.min == 9);
        CHECK(report.sentence_counts.max == 9);
        CHECK(report.sentence_counts.mean == doctest::Approx(9));
    }
    SUBCASE("two cases with counts 4 and 10") {
        Dataset ds;
        for (int n : {4, 10}) {
            CaseStudy cs;
            cs.case_id = "c" + std::to_string(n);
            cs.patient_question = "p";
            cs.clinician_question = "c";
            for (int i = 1; i <= n; ++i)
                cs.sentences.push_back({i, "one two three", RelevanceLabel::NotRelevant});
            ds.cases.push_back(std::move(cs));
        }
        const StatsReport report = corpus_stats(ds.cases);
        CHECK(report.sentence_counts.mean == doctest::Approx(7.0));
        CHECK(report.sentence_counts.median == doctest::Approx(7.0));
        CHECK(report.sentence_lengths.mean == doctest::Approx(3.0));
    }
    SUBCASE("dev-shaped fixture has a 54-sentence outlier") {
        const Dataset ds = load_dataset(testutil::fixture("dev_small.json"));
        const StatsReport report = corpus_stats(ds.cases);
        CHECK(report.sentence_counts.max == 54);
        const std::string csv = stats_to_csv(report);
        CHECK(csv.find("dev-02,54") != std::string::npos);
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(corpus_stats({}), CorpusError);
    }
}

TEST_CASE("load-serialize-load is the identity") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> n_cases(1, 5), n_sents(1, 8), n_words(1, 6);
    const std::vector<std::string> words{"pain", "chest", "repair", "scan", "fluid", "graft"};
    const RelevanceLabel labels[] = {RelevanceLabel::Essential, RelevanceLabel::Supplementary,
                                     RelevanceLabel::NotRelevant};
    for (int round = 0; round < 20; ++round) {
        Dataset ds;
        const int cases = n_cases(rng);
        for (int c = 0; c < cases; ++c) {
            CaseStudy cs;
            cs.case_id = "case-" + std::to_string(c);
            cs.patient_question = "why " + words[static_cast<std::size_t>(rng() % words.size())];
            cs.clinician_question = "what " + words[static_cast<std::size_t>(rng() % words.size())];
            const int sents = n_sents(rng);
            for (int i = 1; i <= sents; ++i) {
                std::string sentence_text;
                const int w = n_words(rng);
                for (int k = 0; k < w; ++k) {
                    if (k) sentence_text += " ";
                    sentence_text += words[static_cast<std::size_t>(rng() % words.size())];
                }
                cs.sentences.push_back({i, sentence_text, labels[rng() % 3]});
            }
            ds.cases.push_back(std::move(cs));
        }
        const Dataset reloaded = parse_dataset(serialize_dataset(ds));
        CHECK(reloaded == ds);

        // every sentence reachable by (case_id, sentence_id)
        for (const auto& cs : ds.cases) {
            const CaseStudy* found = reloaded.find_case(cs.case_id);
            REQUIRE(found != nullptr);
            for (const auto& s : cs.sentences) {
                const NoteSentence* sent = found->find_sentence(s.id);
                REQUIRE(sent != nullptr);
                CHECK(sent->text == s.text);
            }
        }
    }
}

} // TEST_SUITE

