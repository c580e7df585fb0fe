#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace meoh::dsl {

enum class NodeKind : std::uint8_t {
    Program,      // lexeme: function name; children: Param..., statements...
    Param,        // lexeme: parameter name
    Block,        // children: statements (body of for / if / else)
    Let,          // lexeme: name; children: [value]
    Assign,       // lexeme: name; children: [value]
    IndexAssign,  // lexeme: name; children: [index..., value]
    For,          // lexeme: loop variable; children: [lo, hi, Block]
    If,           // children: [cond, Block, optional else Block]
    Return,       // children: [value]
    Binary,       // lexeme: operator; children: [lhs, rhs]
    Unary,        // lexeme: "-" or "!"; children: [operand]
    Call,         // lexeme: builtin name; children: args
    Index,        // lexeme: indexed variable; children: indices
    Ident,        // lexeme: name
    NumLit,       // lexeme: literal text as written
};

std::string_view kind_name(NodeKind kind);
bool is_statement(NodeKind kind);
bool is_expression(NodeKind kind);

/// Labeled ordered tree. Immutable once produced by the parser; compared
/// structurally.
struct SyntaxTree {
    NodeKind kind = NodeKind::NumLit;
    std::string lexeme;
    std::vector<SyntaxTree> children;

    SyntaxTree() = default;
    SyntaxTree(NodeKind k, std::string lex, std::vector<SyntaxTree> kids = {})
        : kind(k), lexeme(std::move(lex)), children(std::move(kids)) {}

    std::size_t node_count() const;
    bool is_leaf() const { return children.empty(); }

    friend bool operator==(const SyntaxTree&, const SyntaxTree&) = default;
};

/// Parameters of a Program node, in declaration order.
std::vector<std::string> program_params(const SyntaxTree& program);

}  // namespace meoh::dsl
