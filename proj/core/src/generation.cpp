#include "cliniqa/generation.hpp"

#include <cctype>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cliniqa/text.hpp"
#include "http_url.hpp"

namespace cliniqa {

using json = nlohmann::json;

namespace {

constexpr std::string_view kAnswerRules =
    "You are a clinical response generation system responsible for producing answers to "
    "health-related questions using the provided clinical note excerpts. Your answer MUST be:\n"
    "- **Accurate and Factual:** Grounded STRICTLY in the provided clinical note excerpts ONLY.\n"
    "- **Neutral and Objective:** DO NOT INCLUDE PERSONAL OPINIONS, NOTES, IRRELEVANT, OR "
    "UNRELATED comments.\n"
    "- **Concise and Relevant:** INCLUDE only clinically supported statements using the exact "
    "terminology found in the provided clinical notes. Do not add any additional interpretations "
    "or synonyms.\n"
    "- **Third-Person Perspective:** Do not address the reader directly.\n";

constexpr std::string_view kCitationRules =
    "- **Citation:** Each statement must be supported by a NUMBERED CLINICAL NOTE SENTENCE from "
    "the Clinical Note Excerpts ONLY. The citation must be placed strictly AT THE END of the "
    "sentence. DO NOT insert citations within the sentence or phrase. When citing a single "
    "source, cite it as |id|. When a statement is supported by multiple sources, combine their "
    "IDs within a single pair of vertical bars (e.g., |id, id, id|) with IDs separated by commas "
    "and no extra vertical bars.\n"
    "- **Mandatory Citation Inclusion:** AT LEAST ONE SENTENCE in your answer MUST include a "
    "citation from the provided clinical notes.\n";

constexpr std::string_view kInputsAndTask =
    "**Inputs:**\n"
    "1. **Clinical Note Excerpts:** Retrieved sentences from the patient's clinical record, "
    "numbered.\n"
    "2. **Patient Narrative Context:** Additional context from the patient's perspective.\n"
    "3. **Clinician Question:** The primary question requiring an answer.\n"
    "\n"
    "**Your Task:**\n"
    "Generate a response based strictly on the provided input. Follow the structured format "
    "exactly, use only the exact terms from the clinical note excerpts, and ensure all citations "
    "are formatted consistently.\n";

constexpr std::string_view kExemplarQuestion =
    "If the clinician asks, \"Why did they perform the emergency salvage repair on him?\", and "
    "the note states:\n"
    "1: He was transferred to the hospital on 2025-1-20 for emergent repair of his ruptured "
    "thoracoabdominal aortic aneurysm.\n"
    "2: He was immediately taken to the operating room where he underwent an emergent salvage "
    "repair of ruptured thoracoabdominal aortic aneurysm with a 34-mm Dacron tube graft using "
    "deep hypothermic circulatory arrest.\n"
    "Then the response should be:\n";

constexpr std::string_view kExemplarCitedAnswer =
    "His aortic aneurysm was caused by the rupture of a thoracoabdominal aortic aneurysm, which "
    "required emergent surgical intervention |1|. He underwent a complex salvage repair using a "
    "34-mm Dacron tube graft and deep hypothermic circulatory arrest to address the rupture "
    "|2|.\n";

constexpr std::string_view kExemplarPlainAnswer =
    "His aortic aneurysm was caused by the rupture of a thoracoabdominal aortic aneurysm, which "
    "required emergent surgical intervention. He underwent a complex salvage repair using a "
    "34-mm Dacron tube graft and deep hypothermic circulatory arrest to address the rupture.\n";

constexpr std::string_view kNoteBegin = "[Clinical Note Begin]";
constexpr std::string_view kNoteEnd = "[Clinical Note End]";

std::string strip_trailing_terminator(std::string s) {
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' ||
                          std::isspace(static_cast<unsigned char>(s.back()))))
        s.pop_back();
    return s;
}

} // namespace

std::string_view to_string(AttributionApproach approach) {
    return approach == AttributionApproach::PostRetrieval ? "post-retrieval" : "post-generation";
}

std::string_view to_string(Shots shots) { return shots == Shots::Zero ? "zero" : "one"; }

std::string_view to_string(Validity validity) {
    switch (validity) {
        case Validity::Valid: return "valid";
        case Validity::NoCitation: return "no-citation";
        case Validity::ParseError: return "parse-error";
        case Validity::TooLong: return "too-long";
    }
    return "parse-error";
}

void PromptSpec::validate() const {
    if (max_tokens < 1 || max_tokens > 4096)
        throw GenerationError("max_tokens must be in [1, 4096]");
    if (temperature < 0.0) throw GenerationError("temperature must be >= 0");
}

std::string build_prompt(const PromptSpec& spec, const CaseStudy& cs, const Evidence& evidence) {
    spec.validate();
    if (evidence.empty()) throw GenerationError("build_prompt: empty evidence");

    std::string prompt(kAnswerRules);
    if (spec.approach == AttributionApproach::PostRetrieval) prompt += kCitationRules;
    prompt += "\n";
    prompt += kInputsAndTask;
    if (spec.shots == Shots::One) {
        prompt += "\n**Example:**\n";
        prompt += kExemplarQuestion;
        prompt += spec.approach == AttributionApproach::PostRetrieval ? kExemplarCitedAnswer
                                                                      : kExemplarPlainAnswer;
    }

    prompt += "\n";
    prompt += kNoteBegin;
    prompt += "\n";
    for (const auto& [id, sentence_text] : evidence) {
        prompt += std::to_string(id);
        prompt += ": ";
        prompt += sentence_text;
        prompt += "\n";
    }
    prompt += kNoteEnd;
    prompt += "\n\n[Patient Narrative Context Begin]\n";
    prompt += cs.patient_question;
    prompt += "\n[Patient Narrative Context End]\n\n[Clinician Question Begin]\n";
    prompt += cs.clinician_question;
    prompt += "\n[Clinician Question End]\n\nProvide your structured answer below:\n";
    return prompt;
}

struct HttpLlmClient::Impl {
    httplib::Client client;
    std::string path;
    std::mutex mu;

    Impl(const std::string& base, std::string p) : client(base), path(std::move(p)) {
        client.set_read_timeout(300, 0);
        client.set_connection_timeout(10, 0);
    }
};

HttpLlmClient::HttpLlmClient(std::string url, std::string bearer_token, std::string model)
    : url_(std::move(url)), model_(std::move(model)) {
    auto [base, path] = detail::split_http_url<GenerationError>(url_);
    impl_ = std::make_unique<Impl>(base, path);
    if (!bearer_token.empty())
        impl_->client.set_default_headers({{"Authorization", "Bearer " + bearer_token}});
}

HttpLlmClient::~HttpLlmClient() = default;

std::string HttpLlmClient::complete(const LlmRequest& request) {
    json body{{"model", model_},
              {"prompt", request.prompt},
              {"max_tokens", request.max_tokens},
              {"temperature", request.temperature}};
    httplib::Result res;
    {
        std::lock_guard lock(impl_->mu);
        res = impl_->client.Post(impl_->path, body.dump(), "application/json");
    }
    if (!res) throw GenerationError("llm endpoint unreachable: " + url_);
    if (res->status != 200)
        throw GenerationError("llm endpoint returned status " + std::to_string(res->status));
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("text") || !reply["text"].is_string())
        throw GenerationError("llm endpoint returned malformed body");
    return reply["text"].get<std::string>();
}

std::string EchoClient::complete(const LlmRequest& request) {
    const auto begin = request.prompt.find(kNoteBegin);
    const auto end = request.prompt.find(kNoteEnd);
    if (begin == std::string::npos || end == std::string::npos || end <= begin)
        throw GenerationError("echo client: prompt has no clinical note section");
    const std::string note =
        request.prompt.substr(begin + kNoteBegin.size(), end - begin - kNoteBegin.size());

    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start < note.size()) {
        auto eol = note.find('\n', start);
        if (eol == std::string::npos) eol = note.size();
        const std::string line = text::trim(note.substr(start, eol - start));
        start = eol + 1;
        if (line.empty()) continue;
        const auto colon = line.find(": ");
        if (colon == std::string::npos) continue;
        const std::string id = line.substr(0, colon);
        const std::string sentence = strip_trailing_terminator(line.substr(colon + 2));
        parts.push_back(sentence + " |" + id + "|.");
    }
    if (parts.empty()) throw GenerationError("echo client: empty clinical note section");
    return text::join(parts, " ");
}

std::string ScriptedClient::complete(const LlmRequest&) {
    if (next_ >= responses_.size()) throw GenerationError("scripted client: script exhausted");
    return responses_[next_++];
}

GenerationResult generate_valid(LlmClient& client, const PromptSpec& spec, const CaseStudy& cs,
                                const Evidence& evidence, std::size_t word_limit) {
    spec.validate();
    if (evidence.empty()) throw GenerationError("generate_valid: empty evidence");

    std::set<int> valid_ids;
    for (const auto& [id, sentence_text] : evidence) valid_ids.insert(id);

    const LlmRequest request{build_prompt(spec, cs, evidence), spec.max_tokens, spec.temperature};
    std::vector<GenerationAttempt> attempts;
    for (int attempt = 1; attempt <= kMaxGenerationAttempts; ++attempt) {
        GenerationAttempt log;
        log.attempt_number = attempt;
        log.raw_output = client.complete(request);

        if (spec.approach == AttributionApproach::PostRetrieval) {
            try {
                Answer answer = parse_citations(log.raw_output, valid_ids);
                if (text::word_count(answer.full_text()) > word_limit) {
                    log.validity = Validity::TooLong;
                } else {
                    log.validity = Validity::Valid;
                    GenerationResult result;
                    result.sentences = answer.sentences;
                    result.raw_output = log.raw_output;
                    result.answer = std::move(answer);
                    attempts.push_back(std::move(log));
                    result.attempts = std::move(attempts);
                    return result;
                }
            } catch (const NoAttributionError&) {
                log.validity = Validity::NoCitation;
            } catch (const CitationSyntaxError&) {
                log.validity = Validity::ParseError;
            }
        } else {
            const std::string trimmed = text::trim(log.raw_output);
            if (trimmed.empty()) {
                log.validity = Validity::ParseError;
            } else if (text::word_count(trimmed) > word_limit) {
                log.validity = Validity::TooLong;
            } else {
                log.validity = Validity::Valid;
                GenerationResult result;
                result.sentences = text::split_sentences(trimmed);
                result.raw_output = log.raw_output;
                attempts.push_back(std::move(log));
                result.attempts = std::move(attempts);
                return result;
            }
        }
        attempts.push_back(std::move(log));
    }
    throw GenerationFailure("no valid output after " + std::to_string(kMaxGenerationAttempts) +
                                " attempts for case \"" + cs.case_id + "\"",
                            std::move(attempts));
}

} // namespace cliniqa
