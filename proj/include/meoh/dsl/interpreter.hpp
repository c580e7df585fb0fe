#pragma once

#include <cstdint>
#include <span>

#include "meoh/dsl/errors.hpp"
#include "meoh/dsl/syntax_tree.hpp"
#include "meoh/dsl/value.hpp"

namespace meoh::dsl {

struct ExecLimits {
    std::uint64_t max_steps = 2'000'000;
    std::uint64_t max_loop_total = 1'000'000;
};

struct ExecResult {
    Value value;
    std::uint64_t steps_used = 0;
};

/// Runs a validated program on positional arguments.
///
/// One step is charged per statement executed and per expression node
/// evaluated. Division by zero, log of a non-positive value, zero raised to
/// a negative power, and any non-finite intermediate raise NumericError.
ExecResult execute(const SyntaxTree& program, std::span<const Value> args,
                   const ExecLimits& limits = {});

}  // namespace meoh::dsl
