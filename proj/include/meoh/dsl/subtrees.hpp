#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "meoh/dsl/syntax_tree.hpp"

namespace meoh::dsl {

/// Multiset of canonical subtree keys, one entry per node.
struct SubtreeCounts {
    std::unordered_map<std::string, std::uint32_t> counts;
    std::size_t total = 0;
};

/// Canonical serialization of the subtree rooted at `tree`:
/// Kind(lexeme) followed by [child,child,...] when the node has children.
std::string canonical_key(const SyntaxTree& tree);

SubtreeCounts count_subtrees(const SyntaxTree& tree);

}  // namespace meoh::dsl
