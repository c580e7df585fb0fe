#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "meoh/dsl/errors.hpp"
#include "meoh/dsl/signature.hpp"
#include "meoh/dsl/syntax_tree.hpp"
#include "meoh/pareto.hpp"

namespace meoh {

enum class ObjectiveMode { WallTime, StepCost };

std::string_view objective_mode_name(ObjectiveMode mode);
ObjectiveMode parse_objective_mode(std::string_view text);

/// A candidate heuristic failed while being evaluated. `category` is one of
/// the dsl error category names or "output_shape_error".
class HeuristicFailure : public std::runtime_error {
public:
    HeuristicFailure(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

class OutputShapeError : public HeuristicFailure {
public:
    explicit OutputShapeError(const std::string& what) : HeuristicFailure("output_shape_error", what) {}
};

/// Prompt-facing text for a task: what the heuristic does and how it must
/// be written. `io_description` is the input/output part of the code
/// requirements only.
struct TaskText {
    std::string description;
    std::string code_requirements;
    std::string io_description;
};

struct Evaluation {
    pareto::ObjectiveVector objectives;
    std::uint64_t steps = 0;
};

/// Binds a task signature, an instance set, and objective measurement.
class ProblemEnvironment {
public:
    virtual ~ProblemEnvironment() = default;

    virtual std::string_view name() const = 0;
    virtual const dsl::TaskSignature& signature() const = 0;
    virtual const TaskText& text() const = 0;

    /// Throws HeuristicFailure. Must be safe to call concurrently in StepCost mode.
    virtual Evaluation evaluate(const dsl::SyntaxTree& heuristic, ObjectiveMode mode) const = 0;
};

/// Converts a dsl error into the equivalent HeuristicFailure.
[[noreturn]] void rethrow_as_failure(const dsl::DslError& e);

}  // namespace meoh
