#pragma once

#include <string>
#include <string_view>

#include "meoh/dsl/errors.hpp"
#include "meoh/dsl/syntax_tree.hpp"

namespace meoh::dsl {

/// Parses one heuristic program. Throws ParseError on any input outside the
/// grammar, including empty or whitespace-only text.
SyntaxTree parse(std::string_view source);

/// Renders a tree back to source. parse(to_source(t)) == t for every tree the
/// parser can produce; the output is also the canonical text used to detect
/// duplicate heuristics.
std::string to_source(const SyntaxTree& tree);

}  // namespace meoh::dsl
