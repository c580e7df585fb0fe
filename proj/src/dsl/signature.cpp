#include "meoh/dsl/signature.hpp"

#include "builtins.hpp"
#include "meoh/dsl/errors.hpp"

namespace meoh::dsl {
namespace {

bool always_returns(const SyntaxTree& stmt);

bool block_returns(const std::vector<SyntaxTree>& stmts, std::size_t first = 0) {
    for (std::size_t i = first; i < stmts.size(); ++i) {
        if (always_returns(stmts[i])) return true;
    }
    return false;
}

// A for-loop may run zero times, so it never guarantees a return.
bool always_returns(const SyntaxTree& stmt) {
    switch (stmt.kind) {
        case NodeKind::Return: return true;
        case NodeKind::If:
            return stmt.children.size() == 3 && block_returns(stmt.children[1].children) &&
                   block_returns(stmt.children[2].children);
        default: return false;
    }
}

void check_calls(const SyntaxTree& node) {
    if (node.kind == NodeKind::Call) {
        auto info = detail::lookup_builtin(node.lexeme);
        if (!info) throw SignatureError("unknown function '" + node.lexeme + "'");
        const int n = static_cast<int>(node.children.size());
        if (n < info->min_args || n > info->max_args) {
            throw SignatureError("function '" + node.lexeme + "' called with " + std::to_string(n) +
                                 " arguments");
        }
    }
    for (const auto& c : node.children) check_calls(c);
}

}  // namespace

void validate_signature(const SyntaxTree& tree, const TaskSignature& sig) {
    if (tree.kind != NodeKind::Program) throw SignatureError("not a program");
    const auto params = program_params(tree);
    if (params.size() != sig.params.size()) {
        throw SignatureError("expected " + std::to_string(sig.params.size()) + " parameters, found " +
                             std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i] != sig.params[i].name) {
            throw SignatureError("parameter " + std::to_string(i + 1) + " must be named '" +
                                 sig.params[i].name + "', found '" + params[i] + "'");
        }
    }
    if (tree.lexeme != sig.function_name) {
        throw SignatureError("function must be named '" + sig.function_name + "', found '" +
                             tree.lexeme + "'");
    }
    check_calls(tree);
    if (!block_returns(tree.children, params.size())) {
        throw SignatureError("not every control path ends in a return");
    }
}

}  // namespace meoh::dsl
