#include <doctest.h>

#include "cliniqa/generation.hpp"
#include "test_util.hpp"

using namespace cliniqa;

namespace {

CaseStudy example_case() {
    CaseStudy cs;
    cs.case_id = "g1";
    cs.patient_question = "why did they operate on my father";
    cs.clinician_question = "Why was emergent repair indicated?";
    cs.sentences = {
        {1, "He was transferred for emergent repair of a ruptured aneurysm",
         RelevanceLabel::Essential},
        {2, "He was intubated", RelevanceLabel::Essential},
        {3, "He was discharged home", RelevanceLabel::NotRelevant},
    };
    return cs;
}

Evidence evidence_of(const CaseStudy& cs, std::initializer_list<int> ids) {
    Evidence e;
    for (int id : ids) e.emplace_back(id, cs.find_sentence(id)->text);
    return e;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (auto pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + 1))
        ++count;
    return count;
}

} // namespace

TEST_SUITE("generation") {

TEST_CASE("build_prompt structure") {
    const CaseStudy cs = example_case();
    const Evidence evidence = evidence_of(cs, {1, 2});

    for (const auto approach : {AttributionApproach::PostRetrieval,
                                AttributionApproach::PostGeneration}) {
        for (const auto shots : {Shots::Zero, Shots::One}) {
            PromptSpec spec;
            spec.approach = approach;
            spec.shots = shots;
            const std::string prompt = build_prompt(spec, cs, evidence);

            // the three sections appear exactly once each and in order
            for (const char* marker :
                 {"[Clinical Note Begin]", "[Clinical Note End]",
                  "[Patient Narrative Context Begin]", "[Patient Narrative Context End]",
                  "[Clinician Question Begin]", "[Clinician Question End]"})
                CHECK(count_occurrences(prompt, marker) == 1);
            CHECK(prompt.find("[Clinical Note Begin]") <
                  prompt.find("[Patient Narrative Context Begin]"));
            CHECK(prompt.find("[Patient Narrative Context Begin]") <
                  prompt.find("[Clinician Question Begin]"));

            // evidence keeps original note numbering
            CHECK(prompt.find("1: He was transferred") != std::string::npos);
            CHECK(prompt.find("2: He was intubated") != std::string::npos);
            CHECK(prompt.find(cs.patient_question) != std::string::npos);
            CHECK(prompt.find(cs.clinician_question) != std::string::npos);
        }
    }
}

TEST_CASE("one-shot post-retrieval prompt carries the cited exemplar") {
    PromptSpec spec;
    spec.approach = AttributionApproach::PostRetrieval;
    spec.shots = Shots::One;
    const std::string prompt = build_prompt(spec, example_case(), evidence_of(example_case(), {1}));
    CHECK(prompt.find("His aortic aneurysm was caused by the rupture") != std::string::npos);
    CHECK(prompt.find("|1|") != std::string::npos);
}

TEST_CASE("post-generation prompts have no citation instructions") {
    for (const auto shots : {Shots::Zero, Shots::One}) {
        PromptSpec spec;
        spec.approach = AttributionApproach::PostGeneration;
        spec.shots = shots;
        const std::string prompt =
            build_prompt(spec, example_case(), evidence_of(example_case(), {1}));
        CHECK(prompt.find("|id|") == std::string::npos);
        CHECK(prompt.find("Mandatory Citation") == std::string::npos);
    }
}

TEST_CASE("one-shot post-generation exemplar answer is citation-free") {
    PromptSpec spec;
    spec.approach = AttributionApproach::PostGeneration;
    spec.shots = Shots::One;
    const std::string prompt =
        build_prompt(spec, example_case(), evidence_of(example_case(), {1}));
    CHECK(prompt.find("His aortic aneurysm was caused by the rupture") != std::string::npos);
    CHECK(prompt.find("|1|") == std::string::npos);
    CHECK(prompt.find("|2|") == std::string::npos);
}

TEST_CASE("build_prompt is deterministic and validates input") {
    PromptSpec spec;
    const CaseStudy cs = example_case();
    const Evidence evidence = evidence_of(cs, {1});
    CHECK(build_prompt(spec, cs, evidence) == build_prompt(spec, cs, evidence));
    CHECK_THROWS_AS(build_prompt(spec, cs, {}), GenerationError);

    PromptSpec bad = spec;
    bad.max_tokens = 0;
    CHECK_THROWS_AS(build_prompt(bad, cs, evidence), GenerationError);
    bad.max_tokens = 5000;
    CHECK_THROWS_AS(build_prompt(bad, cs, evidence), GenerationError);
    bad = spec;
    bad.temperature = -1.0;
    CHECK_THROWS_AS(bad.validate(), GenerationError);
}

TEST_CASE("echo client replays the note section with citations") {
    const CaseStudy cs = example_case();
    PromptSpec spec;
    const Evidence evidence{{2, "He was intubated"}};
    EchoClient echo;
    const std::string out = echo.complete({build_prompt(spec, cs, evidence), 200, 0.001});
    CHECK(out == "He was intubated |2|.");

    const Answer parsed = parse_citations(out, {2});
    CHECK(parsed.cited_union() == std::set<int>{2});
}

TEST_CASE("echo output parses back to exactly the evidence ids") {
    const CaseStudy cs = example_case();
    PromptSpec spec;
    const Evidence evidence = evidence_of(cs, {1, 2, 3});
    EchoClient echo;
    const std::string out = echo.complete({build_prompt(spec, cs, evidence), 200, 0.001});
    const Answer parsed = parse_citations(out, {1, 2, 3});
    CHECK(parsed.cited_union() == std::set<int>{1, 2, 3});
    CHECK(parsed.sentences.size() == 3);
}

TEST_CASE("generate_valid returns the first valid attempt") {
    const CaseStudy cs = example_case();
    PromptSpec spec;
    const Evidence evidence = evidence_of(cs, {1, 2});

    SUBCASE("valid on the first attempt") {
        EchoClient echo;
        const GenerationResult r = generate_valid(echo, spec, cs, evidence);
        REQUIRE(r.attempts.size() == 1);
        CHECK(r.attempts[0].validity == Validity::Valid);
        REQUIRE(r.answer.has_value());
        CHECK(r.answer->cited_union() == std::set<int>{1, 2});
    }
    SUBCASE("two invalid then one valid gives three attempts") {
        ScriptedClient scripted({"no citation one", "no citation two", "All repaired |1|."});
        const GenerationResult r = generate_valid(scripted, spec, cs, evidence);
        REQUIRE(r.attempts.size() == 3);
        CHECK(r.attempts[0].validity == Validity::NoCitation);
        CHECK(r.attempts[1].validity == Validity::NoCitation);
        CHECK(r.attempts[2].validity == Validity::Valid);
        CHECK(r.sentences == std::vector<std::string>{"All repaired"});
    }
    SUBCASE("five invalid attempts fail with the full log") {
        ScriptedClient scripted({"a", "b", "c", "d", "e", "never reached"});
        try {
            generate_valid(scripted, spec, cs, evidence);
            FAIL("expected GenerationFailure");
        } catch (const GenerationFailure& f) {
            REQUIRE(f.attempts.size() == 5);
            for (int i = 0; i < 5; ++i) {
                CHECK(f.attempts[static_cast<std::size_t>(i)].attempt_number == i + 1);
                CHECK(f.attempts[static_cast<std::size_t>(i)].validity == Validity::NoCitation);
            }
        }
    }
    SUBCASE("over-long answers are rejected as TooLong") {
        std::string longtext = "Cited |1|.";
        for (int i = 0; i < 80; ++i) longtext += " word";
        ScriptedClient scripted({longtext, "Short and cited |1|."});
        const GenerationResult r = generate_valid(scripted, spec, cs, evidence);
        REQUIRE(r.attempts.size() == 2);
        CHECK(r.attempts[0].validity == Validity::TooLong);
        CHECK(r.attempts[1].validity == Validity::Valid);
    }
    SUBCASE("unbalanced citation markup is a parse error") {
        ScriptedClient scripted({"Broken |1 citation.", "Fixed |1|."});
        const GenerationResult r = generate_valid(scripted, spec, cs, evidence);
        REQUIRE(r.attempts.size() == 2);
        CHECK(r.attempts[0].validity == Validity::ParseError);
    }
}

TEST_CASE("generate_valid in post-generation mode") {
    const CaseStudy cs = example_case();
    PromptSpec spec;
    spec.approach = AttributionApproach::PostGeneration;
    const Evidence evidence = evidence_of(cs, {1, 2});

    SUBCASE("plain text is valid and split into sentences") {
        ScriptedClient scripted({"He needed repair. He recovered."});
        const GenerationResult r = generate_valid(scripted, spec, cs, evidence);
        CHECK(!r.answer.has_value());
        CHECK(r.sentences == std::vector<std::string>{"He needed repair", "He recovered"});
    }
    SUBCASE("empty output is invalid") {
        ScriptedClient scripted({"   ", "Better."});
        const GenerationResult r = generate_valid(scripted, spec, cs, evidence);
        REQUIRE(r.attempts.size() == 2);
        CHECK(r.attempts[0].validity == Validity::ParseError);
    }
}

TEST_CASE("scripted client errors when exhausted") {
    ScriptedClient scripted({"only one"});
    scripted.complete({"p", 10, 0.0});
    CHECK_THROWS_AS(scripted.complete({"p", 10, 0.0}), GenerationError);
}

} // TEST_SUITE
