#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "meoh/evolution.hpp"
#include "meoh/heuristic.hpp"
#include "meoh/problem.hpp"
#include "meoh/rng.hpp"

namespace meoh::operators {

class ArityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parents an operator consumes: 0 for Init, `crossover` for E1/E2, 1 otherwise.
std::size_t parent_slots(Operator kind, std::size_t crossover = 5);

/// Builds the prompt for one operator call. E1/E2 require exactly `crossover`
/// parents. M3 carries only the input/output part of the requirements.
std::string render_prompt(Operator kind, const TaskText& task, std::span<const Heuristic* const> parents,
                          std::size_t crossover = 5);

struct Response {
    std::string description;
    std::string code;
};

/// A reply that cannot become a candidate. category(): missing_description,
/// missing_code_block or empty_code.
class ResponseError : public evolution::GenerationFailure {
public:
    using GenerationFailure::GenerationFailure;
};

class MissingDescription : public ResponseError {
public:
    explicit MissingDescription(const std::string& what) : ResponseError("missing_description", what) {}
};

class MissingCodeBlock : public ResponseError {
public:
    explicit MissingCodeBlock(const std::string& what) : ResponseError("missing_code_block", what) {}
};

class EmptyCode : public ResponseError {
public:
    explicit EmptyCode(const std::string& what) : ResponseError("empty_code", what) {}
};

/// Description is the text between the first "<start>" and the next "<end>";
/// code is the body of the first ``` fence (an info string on the opening line
/// is dropped). Both trimmed.
Response parse_response(std::string_view text);

struct EndpointConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-3.5-turbo";
    std::string api_key_env = "OPENAI_API_KEY";
    double temperature = 1.0;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    std::chrono::milliseconds backoff_initial{1'000};
    std::chrono::milliseconds backoff_max{30'000};
};

class TransportError : public evolution::GenerationFailure {
public:
    explicit TransportError(const std::string& what) : GenerationFailure("transport_error", what) {}
};

class RateLimited : public evolution::GenerationFailure {
public:
    explicit RateLimited(const std::string& what) : GenerationFailure("rate_limited", what) {}
};

class MalformedResponse : public evolution::GenerationFailure {
public:
    explicit MalformedResponse(const std::string& what) : GenerationFailure("malformed_response", what) {}
};

/// Missing or rejected credentials. Not a per-candidate failure: it aborts a run.
class AuthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Completion {
    std::string text;
    int retry_count = 0;
};

/// One chat-completion request. Transport failures, 5xx and 429 are retried
/// with exponential backoff up to cfg.max_retries times.
Completion llm_generate(const EndpointConfig& cfg, std::string_view prompt);

/// Same, with the key passed directly instead of read from the environment.
Completion llm_generate(const EndpointConfig& cfg, std::string_view prompt, const std::string& api_key);

/// Offline stand-in for a model reply. `task` is "bpp" or "tsp". About
/// `malformed_rate` of replies are broken on purpose.
std::string mock_generate(Rng& rng, Operator kind, std::span<const Heuristic* const> parents, std::string_view task,
                          double malformed_rate = 0.1);

class EndpointSource : public evolution::OffspringSource {
public:
    EndpointSource(EndpointConfig cfg, std::size_t crossover);
    evolution::GeneratedText generate(const evolution::OffspringRequest& request,
                                      const ProblemEnvironment& env) override;

private:
    EndpointConfig cfg_;
    std::string key_;
    std::size_t crossover_;
};

class MockSource : public evolution::OffspringSource {
public:
    explicit MockSource(double malformed_rate = 0.1) : malformed_rate_(malformed_rate) {}
    evolution::GeneratedText generate(const evolution::OffspringRequest& request,
                                      const ProblemEnvironment& env) override;

private:
    double malformed_rate_;
};

}  // namespace meoh::operators
