#include "meoh/dsl/syntax_tree.hpp"

#include <cmath>

#include "meoh/dsl/errors.hpp"
#include "meoh/dsl/value.hpp"

namespace meoh::dsl {

std::string_view kind_name(NodeKind kind) {
    switch (kind) {
        case NodeKind::Program: return "Program";
        case NodeKind::Param: return "Param";
        case NodeKind::Block: return "Block";
        case NodeKind::Let: return "Let";
        case NodeKind::Assign: return "Assign";
        case NodeKind::IndexAssign: return "IndexAssign";
        case NodeKind::For: return "For";
        case NodeKind::If: return "If";
        case NodeKind::Return: return "Return";
        case NodeKind::Binary: return "Binary";
        case NodeKind::Unary: return "Unary";
        case NodeKind::Call: return "Call";
        case NodeKind::Index: return "Index";
        case NodeKind::Ident: return "Ident";
        case NodeKind::NumLit: return "NumLit";
    }
    return "?";
}

bool is_statement(NodeKind kind) {
    switch (kind) {
        case NodeKind::Let:
        case NodeKind::Assign:
        case NodeKind::IndexAssign:
        case NodeKind::For:
        case NodeKind::If:
        case NodeKind::Return: return true;
        default: return false;
    }
}

bool is_expression(NodeKind kind) {
    switch (kind) {
        case NodeKind::Binary:
        case NodeKind::Unary:
        case NodeKind::Call:
        case NodeKind::Index:
        case NodeKind::Ident:
        case NodeKind::NumLit: return true;
        default: return false;
    }
}

std::size_t SyntaxTree::node_count() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.node_count();
    return n;
}

std::vector<std::string> program_params(const SyntaxTree& program) {
    std::vector<std::string> names;
    for (const auto& c : program.children) {
        if (c.kind == NodeKind::Param) names.push_back(c.lexeme);
    }
    return names;
}

std::string_view shape_name(Shape s) {
    switch (s) {
        case Shape::Scalar: return "scalar";
        case Shape::Vector: return "vector";
        case Shape::Matrix: return "matrix";
    }
    return "?";
}

bool all_finite(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return std::isfinite(*d);
    const auto& elems = std::holds_alternative<Vector>(v) ? std::get<Vector>(v)
                                                          : std::get<Matrix>(v).data();
    for (double x : elems) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse_error";
        case ErrorKind::Signature: return "signature_error";
        case ErrorKind::StepBudget: return "step_budget_exceeded";
        case ErrorKind::Numeric: return "numeric_error";
        case ErrorKind::Shape: return "shape_error";
        case ErrorKind::Type: return "type_error";
    }
    return "?";
}

namespace {
std::string parse_message(int line, int column, const std::string& found,
                          const std::vector<std::string>& expected) {
    std::string msg = "line " + std::to_string(line) + ", column " + std::to_string(column) +
                      ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i > 0) msg += i + 1 == expected.size() ? " or " : ", ";
        msg += expected[i];
    }
    msg += ", found " + found;
    return msg;
}
}  // namespace

ParseError::ParseError(int line, int column, std::string found, std::vector<std::string> expected)
    : DslError(ErrorKind::Parse, parse_message(line, column, found, expected)),
      line_(line),
      column_(column),
      found_(std::move(found)),
      expected_(std::move(expected)) {}

}  // namespace meoh::dsl
