#include "meoh/dsl/parser.hpp"

#include <array>
#include <cctype>
#include <string>
#include <vector>

namespace meoh::dsl {
namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind;
    std::string text;
    int line;
    int column;
};

constexpr std::array<std::string_view, 7> kKeywords = {"fn", "let", "for", "in", "if", "else", "return"};

bool is_keyword(std::string_view s) {
    for (auto k : kKeywords) {
        if (k == s) return true;
    }
    return false;
}

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::End: return "end of input";
        case Tok::Number: return "number '" + t.text + "'";
        case Tok::Ident: return (is_keyword(t.text) ? "keyword '" : "identifier '") + t.text + "'";
        case Tok::Punct: return "'" + t.text + "'";
    }
    return "?";
}

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1;
    int col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto digit = [&](std::size_t at) {
        return at < src.size() && std::isdigit(static_cast<unsigned char>(src[at]));
    };

    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        const int tl = line;
        const int tc = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), tl, tc});
            advance(j - i);
            continue;
        }
        if (digit(i)) {
            std::size_t j = i;
            while (digit(j)) ++j;
            // A '.' is a decimal point only when a digit follows; "0..n" is a range.
            if (j < src.size() && src[j] == '.' && digit(j + 1)) {
                ++j;
                while (digit(j)) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (digit(k)) {
                    while (digit(k)) ++k;
                    j = k;
                }
            }
            out.push_back({Tok::Number, std::string(src.substr(i, j - i)), tl, tc});
            advance(j - i);
            continue;
        }
        static constexpr std::array<std::string_view, 7> two = {"..", "<=", ">=", "==", "!=", "&&", "||"};
        bool matched = false;
        if (i + 1 < src.size()) {
            for (auto op : two) {
                if (src.substr(i, 2) == op) {
                    out.push_back({Tok::Punct, std::string(op), tl, tc});
                    advance(2);
                    matched = true;
                    break;
                }
            }
        }
        if (matched) continue;
        static constexpr std::string_view single = "(){}[],;=+-*/%^<>!";
        if (single.find(c) != std::string_view::npos) {
            out.push_back({Tok::Punct, std::string(1, c), tl, tc});
            advance(1);
            continue;
        }
        throw ParseError(tl, tc, "character '" + std::string(1, c) + "'", {"token"});
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    SyntaxTree program() {
        expect_keyword("fn");
        SyntaxTree prog(NodeKind::Program, expect_ident("function name"));
        expect("(");
        prog.children.emplace_back(NodeKind::Param, expect_ident("parameter name"));
        while (!peek_is(")")) {
            if (!peek_is(",")) fail({"','", "')'"});
            next();
            prog.children.emplace_back(NodeKind::Param, expect_ident("parameter name"));
        }
        expect(")");
        expect("{");
        if (peek_is("}")) fail({"statement"});
        while (!peek_is("}")) prog.children.push_back(statement());
        expect("}");
        if (peek().kind != Tok::End) fail({"end of input"});
        return prog;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        const std::size_t at = pos_ + ahead;
        return at < toks_.size() ? toks_[at] : toks_.back();
    }
    Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    bool peek_is(std::string_view punct) const {
        return peek().kind == Tok::Punct && peek().text == punct;
    }
    bool peek_keyword(std::string_view kw) const {
        return peek().kind == Tok::Ident && peek().text == kw;
    }

    [[noreturn]] void fail(std::vector<std::string> expected) const {
        const Token& t = peek();
        throw ParseError(t.line, t.column, describe(t), std::move(expected));
    }

    void expect(std::string_view punct) {
        if (!peek_is(punct)) fail({"'" + std::string(punct) + "'"});
        next();
    }
    void expect_keyword(std::string_view kw) {
        if (!peek_keyword(kw)) fail({"'" + std::string(kw) + "'"});
        next();
    }
    std::string expect_ident(const char* what) {
        if (peek().kind != Tok::Ident || is_keyword(peek().text)) fail({what});
        return next().text;
    }

    SyntaxTree block() {
        expect("{");
        SyntaxTree b(NodeKind::Block, "");
        while (!peek_is("}")) {
            if (peek().kind == Tok::End) fail({"statement", "'}'"});
            b.children.push_back(statement());
        }
        expect("}");
        return b;
    }

    SyntaxTree statement() {
        if (peek_keyword("let")) {
            next();
            SyntaxTree s(NodeKind::Let, expect_ident("variable name"));
            expect("=");
            s.children.push_back(expr());
            expect(";");
            return s;
        }
        if (peek_keyword("for")) {
            next();
            SyntaxTree s(NodeKind::For, expect_ident("loop variable"));
            expect_keyword("in");
            s.children.push_back(expr());
            expect("..");
            s.children.push_back(expr());
            s.children.push_back(block());
            return s;
        }
        if (peek_keyword("if")) {
            next();
            SyntaxTree s(NodeKind::If, "");
            s.children.push_back(expr());
            s.children.push_back(block());
            if (peek_keyword("else")) {
                next();
                s.children.push_back(block());
            }
            return s;
        }
        if (peek_keyword("return")) {
            next();
            SyntaxTree s(NodeKind::Return, "");
            s.children.push_back(expr());
            expect(";");
            return s;
        }
        if (peek().kind == Tok::Ident && !is_keyword(peek().text)) {
            std::string name = next().text;
            if (peek_is("=")) {
                next();
                SyntaxTree s(NodeKind::Assign, std::move(name));
                s.children.push_back(expr());
                expect(";");
                return s;
            }
            if (peek_is("[")) {
                SyntaxTree s(NodeKind::IndexAssign, std::move(name));
                index_list(s);
                expect("=");
                s.children.push_back(expr());
                expect(";");
                return s;
            }
            fail({"'='", "'['"});
        }
        fail({"'let'", "'for'", "'if'", "'return'", "identifier"});
    }

    void index_list(SyntaxTree& into) {
        expect("[");
        into.children.push_back(expr());
        while (peek_is(",")) {
            next();
            into.children.push_back(expr());
        }
        expect("]");
    }

    SyntaxTree binary(SyntaxTree lhs, std::string op, SyntaxTree rhs) {
        SyntaxTree n(NodeKind::Binary, std::move(op));
        n.children.push_back(std::move(lhs));
        n.children.push_back(std::move(rhs));
        return n;
    }

    SyntaxTree expr() { return or_expr(); }

    SyntaxTree or_expr() {
        SyntaxTree lhs = and_expr();
        while (peek_is("||")) {
            next();
            lhs = binary(std::move(lhs), "||", and_expr());
        }
        return lhs;
    }
    SyntaxTree and_expr() {
        SyntaxTree lhs = cmp_expr();
        while (peek_is("&&")) {
            next();
            lhs = binary(std::move(lhs), "&&", cmp_expr());
        }
        return lhs;
    }
    SyntaxTree cmp_expr() {
        SyntaxTree lhs = add_expr();
        while (peek_is("<") || peek_is("<=") || peek_is(">") || peek_is(">=") || peek_is("==") ||
               peek_is("!=")) {
            std::string op = next().text;
            lhs = binary(std::move(lhs), std::move(op), add_expr());
        }
        return lhs;
    }
    SyntaxTree add_expr() {
        SyntaxTree lhs = mul_expr();
        while (peek_is("+") || peek_is("-")) {
            std::string op = next().text;
            lhs = binary(std::move(lhs), std::move(op), mul_expr());
        }
        return lhs;
    }
    SyntaxTree mul_expr() {
        SyntaxTree lhs = pow_expr();
        while (peek_is("*") || peek_is("/") || peek_is("%")) {
            std::string op = next().text;
            lhs = binary(std::move(lhs), std::move(op), pow_expr());
        }
        return lhs;
    }
    // Right associative; unary binds tighter than '^'.
    SyntaxTree pow_expr() {
        SyntaxTree base = unary_expr();
        if (peek_is("^")) {
            next();
            return binary(std::move(base), "^", pow_expr());
        }
        return base;
    }
    SyntaxTree unary_expr() {
        if (peek_is("-") || peek_is("!")) {
            SyntaxTree n(NodeKind::Unary, next().text);
            n.children.push_back(unary_expr());
            return n;
        }
        return primary();
    }
    SyntaxTree primary() {
        const Token& t = peek();
        if (t.kind == Tok::Number) return SyntaxTree(NodeKind::NumLit, next().text);
        if (t.kind == Tok::Ident && !is_keyword(t.text)) {
            std::string name = next().text;
            if (peek_is("(")) {
                next();
                SyntaxTree call(NodeKind::Call, std::move(name));
                if (!peek_is(")")) {
                    call.children.push_back(expr());
                    while (peek_is(",")) {
                        next();
                        call.children.push_back(expr());
                    }
                }
                expect(")");
                return call;
            }
            if (peek_is("[")) {
                SyntaxTree idx(NodeKind::Index, std::move(name));
                index_list(idx);
                return idx;
            }
            return SyntaxTree(NodeKind::Ident, std::move(name));
        }
        if (peek_is("(")) {
            next();
            SyntaxTree inner = expr();
            expect(")");
            return inner;
        }
        fail({"identifier", "number", "'('", "'-'", "'!'"});
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// Printer ------------------------------------------------------------------

int precedence(const SyntaxTree& e) {
    if (e.kind == NodeKind::Unary) return 7;
    if (e.kind != NodeKind::Binary) return 8;
    const std::string& op = e.lexeme;
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "+" || op == "-") return 4;
    if (op == "*" || op == "/" || op == "%") return 5;
    if (op == "^") return 6;
    return 3;
}

void print_expr(const SyntaxTree& e, std::string& out);

void print_operand(const SyntaxTree& e, bool parens, std::string& out) {
    if (parens) out += '(';
    print_expr(e, out);
    if (parens) out += ')';
}

void print_list(const std::vector<SyntaxTree>& items, std::size_t count, std::string& out) {
    for (std::size_t i = 0; i < count; ++i) {
        if (i > 0) out += ", ";
        print_expr(items[i], out);
    }
}

void print_expr(const SyntaxTree& e, std::string& out) {
    switch (e.kind) {
        case NodeKind::NumLit:
        case NodeKind::Ident: out += e.lexeme; return;
        case NodeKind::Call:
            out += e.lexeme;
            out += '(';
            print_list(e.children, e.children.size(), out);
            out += ')';
            return;
        case NodeKind::Index:
            out += e.lexeme;
            out += '[';
            print_list(e.children, e.children.size(), out);
            out += ']';
            return;
        case NodeKind::Unary:
            out += e.lexeme;
            print_operand(e.children[0], precedence(e.children[0]) < 7, out);
            return;
        case NodeKind::Binary: {
            const int p = precedence(e);
            const bool right_assoc = e.lexeme == "^";
            const int pl = precedence(e.children[0]);
            const int pr = precedence(e.children[1]);
            print_operand(e.children[0], pl < p || (pl == p && right_assoc), out);
            out += ' ';
            out += e.lexeme;
            out += ' ';
            print_operand(e.children[1], pr < p || (pr == p && !right_assoc), out);
            return;
        }
        default: out += "<?>"; return;
    }
}

void print_stmt(const SyntaxTree& s, int depth, std::string& out);

void print_block(const SyntaxTree& b, int depth, std::string& out) {
    out += "{\n";
    for (const auto& s : b.children) print_stmt(s, depth + 1, out);
    out.append(static_cast<std::size_t>(depth) * 4, ' ');
    out += '}';
}

void print_stmt(const SyntaxTree& s, int depth, std::string& out) {
    out.append(static_cast<std::size_t>(depth) * 4, ' ');
    switch (s.kind) {
        case NodeKind::Let:
            out += "let " + s.lexeme + " = ";
            print_expr(s.children[0], out);
            out += ";\n";
            return;
        case NodeKind::Assign:
            out += s.lexeme + " = ";
            print_expr(s.children[0], out);
            out += ";\n";
            return;
        case NodeKind::IndexAssign:
            out += s.lexeme + "[";
            print_list(s.children, s.children.size() - 1, out);
            out += "] = ";
            print_expr(s.children.back(), out);
            out += ";\n";
            return;
        case NodeKind::For:
            out += "for " + s.lexeme + " in ";
            print_expr(s.children[0], out);
            out += "..";
            print_expr(s.children[1], out);
            out += ' ';
            print_block(s.children[2], depth, out);
            out += '\n';
            return;
        case NodeKind::If:
            out += "if ";
            print_expr(s.children[0], out);
            out += ' ';
            print_block(s.children[1], depth, out);
            if (s.children.size() > 2) {
                out += " else ";
                print_block(s.children[2], depth, out);
            }
            out += '\n';
            return;
        case NodeKind::Return:
            out += "return ";
            print_expr(s.children[0], out);
            out += ";\n";
            return;
        default: out += "<?>\n"; return;
    }
}

}  // namespace

SyntaxTree parse(std::string_view source) {
    Parser p(tokenize(source));
    return p.program();
}

std::string to_source(const SyntaxTree& tree) {
    std::string out;
    if (tree.kind != NodeKind::Program) {
        if (is_expression(tree.kind)) {
            print_expr(tree, out);
        } else if (tree.kind == NodeKind::Block) {
            print_block(tree, 0, out);
        } else {
            print_stmt(tree, 0, out);
        }
        return out;
    }
    out += "fn " + tree.lexeme + "(";
    bool first = true;
    for (const auto& c : tree.children) {
        if (c.kind != NodeKind::Param) continue;
        if (!first) out += ", ";
        out += c.lexeme;
        first = false;
    }
    out += ") {\n";
    for (const auto& c : tree.children) {
        if (c.kind != NodeKind::Param) print_stmt(c, 1, out);
    }
    out += "}\n";
    return out;
}

}  // namespace meoh::dsl
