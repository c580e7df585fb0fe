#include "meoh/dsl/subtrees.hpp"

namespace meoh::dsl {
namespace {

std::string key_and_count(const SyntaxTree& node, SubtreeCounts* into) {
    std::string key(kind_name(node.kind));
    key += '(';
    key += node.lexeme;
    key += ')';
    if (!node.children.empty()) {
        key += '[';
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            if (i > 0) key += ',';
            key += key_and_count(node.children[i], into);
        }
        key += ']';
    }
    if (into) {
        ++into->counts[key];
        ++into->total;
    }
    return key;
}

}  // namespace

std::string canonical_key(const SyntaxTree& tree) { return key_and_count(tree, nullptr); }

SubtreeCounts count_subtrees(const SyntaxTree& tree) {
    SubtreeCounts out;
    key_and_count(tree, &out);
    return out;
}

}  // namespace meoh::dsl
