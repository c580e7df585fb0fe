#pragma once

#include <string>
#include <vector>

#include "meoh/dsl/syntax_tree.hpp"
#include "meoh/dsl/value.hpp"

namespace meoh::dsl {

struct TaskParam {
    std::string name;
    Shape shape;
};

struct TaskSignature {
    std::string function_name;
    std::vector<TaskParam> params;
    Shape result_shape = Shape::Vector;
};

/// Checks parameter count and names, function name, builtin names and
/// arities, and that every control path ends in a return. Throws
/// SignatureError naming the first mismatch.
void validate_signature(const SyntaxTree& tree, const TaskSignature& sig);

}  // namespace meoh::dsl
