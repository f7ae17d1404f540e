#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cliniqa/attribution.hpp"
#include "cliniqa/corpus.hpp"
#include "cliniqa/error.hpp"

namespace cliniqa {

class GenerationError : public Error {
public:
    using Error::Error;
};

enum class AttributionApproach { PostRetrieval, PostGeneration };
enum class Shots { Zero, One };

std::string_view to_string(AttributionApproach approach);
std::string_view to_string(Shots shots);

struct PromptSpec {
    AttributionApproach approach = AttributionApproach::PostRetrieval;
    Shots shots = Shots::One;
    int max_tokens = 200;       // [1, 4096]
    double temperature = 0.001; // >= 0

    void validate() const; // throws GenerationError
};

/// Evidence handed to the generator: original sentence ids with their texts,
/// in retrieval order.
using Evidence = std::vector<std::pair<int, std::string>>;

/// Instantiates the prompt template for the spec: answer rules (citation
/// rules only for post-retrieval), input/task description, the optional
/// one-shot exemplar, then the note / patient narrative / clinician question
/// sections. Evidence sentences keep their original note numbering.
std::string build_prompt(const PromptSpec& spec, const CaseStudy& cs, const Evidence& evidence);

enum class Validity { Valid, NoCitation, ParseError, TooLong };

std::string_view to_string(Validity validity);

struct GenerationAttempt {
    int attempt_number = 0; // 1-based
    std::string raw_output;
    Validity validity = Validity::Valid;
};

struct LlmRequest {
    std::string prompt;
    int max_tokens = 200;
    double temperature = 0.001;
};

/// Single text-in/text-out completion contract.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const LlmRequest& request) = 0;
};

/// POST {"model", "prompt", "max_tokens", "temperature"} -> {"text"}.
/// A bearer token (LLM_API_TOKEN) is attached when non-empty.
class HttpLlmClient final : public LlmClient {
public:
    HttpLlmClient(std::string url, std::string bearer_token, std::string model);
    ~HttpLlmClient() override;

    std::string complete(const LlmRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string url_;
    std::string model_;
};

/// Replays the note section of the prompt: every "id: text" line comes back
/// as "text |id|." — a deterministic offline stand-in for an endpoint.
class EchoClient final : public LlmClient {
public:
    std::string complete(const LlmRequest& request) override;
};

/// Replays a fixed response sequence; throws when the script is exhausted.
class ScriptedClient final : public LlmClient {
public:
    explicit ScriptedClient(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}

    std::string complete(const LlmRequest& request) override;

private:
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
};

struct GenerationResult {
    std::optional<Answer> answer;       // set for post-retrieval
    std::vector<std::string> sentences; // answer sentences in both modes
    std::string raw_output;             // the accepted response
    std::vector<GenerationAttempt> attempts;
};

/// All five attempts were invalid; carries the attempt log.
class GenerationFailure : public Error {
public:
    GenerationFailure(const std::string& msg, std::vector<GenerationAttempt> attempts)
        : Error(msg), attempts(std::move(attempts)) {}

    std::vector<GenerationAttempt> attempts;
};

inline constexpr int kMaxGenerationAttempts = 5;

/// Prompts the endpoint up to five times and returns the first valid output.
/// Post-retrieval outputs must parse with at least one citation and stay
/// within the word limit; post-generation outputs must be non-empty and
/// within the limit. Throws GenerationFailure after five invalid attempts.
GenerationResult generate_valid(LlmClient& client, const PromptSpec& spec, const CaseStudy& cs,
                                const Evidence& evidence, std::size_t word_limit = 75);

} // namespace cliniqa
