#include "meoh/dsl/interpreter.hpp"

#include <array>
#include <cmath>
#include <string>
#include <unordered_map>

#include "builtins.hpp"

namespace meoh::dsl {

namespace detail {

std::optional<BuiltinInfo> lookup_builtin(std::string_view name) {
    static const std::unordered_map<std::string_view, BuiltinInfo> table = {
        {"abs", {Builtin::Abs, 1, 1}},     {"sqrt", {Builtin::Sqrt, 1, 1}},
        {"log", {Builtin::Log, 1, 1}},     {"exp", {Builtin::Exp, 1, 1}},
        {"tanh", {Builtin::Tanh, 1, 1}},   {"floor", {Builtin::Floor, 1, 1}},
        {"ceil", {Builtin::Ceil, 1, 1}},   {"min", {Builtin::Min, 2, 2}},
        {"max", {Builtin::Max, 2, 2}},     {"pow", {Builtin::Pow, 2, 2}},
        {"sum", {Builtin::Sum, 1, 1}},     {"mean", {Builtin::Mean, 1, 1}},
        {"maxv", {Builtin::MaxV, 1, 1}},   {"minv", {Builtin::MinV, 1, 1}},
        {"len", {Builtin::Len, 1, 1}},     {"rows", {Builtin::Rows, 1, 1}},
        {"cols", {Builtin::Cols, 1, 1}},   {"zeros", {Builtin::Zeros, 1, 2}},
        {"copy", {Builtin::Copy, 1, 1}},
    };
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

}  // namespace detail

namespace {

using detail::Builtin;

constexpr std::size_t kMaxElements = std::size_t{1} << 24;

double checked(double r, const char* op) {
    if (!std::isfinite(r)) throw NumericError(std::string("non-finite result in '") + op + "'");
    return r;
}

double power(double x, double y) {
    if (x == 0.0 && y < 0.0) throw NumericError("zero raised to a negative power");
    return std::pow(x, y);
}

// Flat view over the elements of a Value; scalars broadcast with stride 0.
struct Elements {
    const double* data;
    std::size_t count;
    std::size_t stride;
};

Elements elements(const Value& v) {
    switch (shape_of(v)) {
        case Shape::Scalar: return {&std::get<double>(v), 1, 0};
        case Shape::Vector: {
            const auto& vec = std::get<Vector>(v);
            return {vec.data(), vec.size(), 1};
        }
        case Shape::Matrix: {
            const auto& m = std::get<Matrix>(v);
            return {m.data().data(), m.size(), 1};
        }
    }
    return {nullptr, 0, 0};
}

std::string dims(const Value& v) {
    switch (shape_of(v)) {
        case Shape::Scalar: return "scalar";
        case Shape::Vector: return "vector[" + std::to_string(std::get<Vector>(v).size()) + "]";
        case Shape::Matrix: {
            const auto& m = std::get<Matrix>(v);
            return "matrix[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
        }
    }
    return "?";
}

template <class F>
Value elementwise(const Value& a, const Value& b, const char* op, F f) {
    const Shape sa = shape_of(a);
    const Shape sb = shape_of(b);
    if (sa == Shape::Scalar && sb == Shape::Scalar) {
        return checked(f(std::get<double>(a), std::get<double>(b)), op);
    }
    const bool ok = sa == Shape::Scalar || sb == Shape::Scalar ||
                    (sa == Shape::Vector && sb == Shape::Vector &&
                     std::get<Vector>(a).size() == std::get<Vector>(b).size()) ||
                    (sa == Shape::Matrix && sb == Shape::Matrix &&
                     std::get<Matrix>(a).rows() == std::get<Matrix>(b).rows() &&
                     std::get<Matrix>(a).cols() == std::get<Matrix>(b).cols());
    if (!ok) {
        throw ShapeError(std::string("operator '") + op + "' on " + dims(a) + " and " + dims(b));
    }
    const Value& shaped = sa == Shape::Scalar ? b : a;
    Value out = shaped;
    Elements ea = elements(a);
    Elements eb = elements(b);
    auto& dst = shape_of(out) == Shape::Vector ? std::get<Vector>(out) : std::get<Matrix>(out).data();
    const std::size_t n = dst.size();
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] = checked(f(ea.data[i * ea.stride], eb.data[i * eb.stride]), op);
    }
    return out;
}

template <class F>
Value map_values(Value v, const char* op, F f) {
    if (auto* d = std::get_if<double>(&v)) return checked(f(*d), op);
    auto& dst = shape_of(v) == Shape::Vector ? std::get<Vector>(v) : std::get<Matrix>(v).data();
    for (double& x : dst) x = checked(f(x), op);
    return v;
}

bool truthy(double x) { return x != 0.0; }

double as_scalar(const Value& v, const char* what) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw TypeError(std::string(what) + " must be a scalar, got " + dims(v));
}

std::size_t to_index(double x, std::size_t n) {
    const double f = std::floor(x);
    if (f < 0.0 || f >= static_cast<double>(n)) {
        throw ShapeError("index " + std::to_string(x) + " out of bounds for length " + std::to_string(n));
    }
    return static_cast<std::size_t>(f);
}

std::size_t to_size(double x) {
    const double f = std::floor(x);
    if (f < 0.0 || f > static_cast<double>(kMaxElements)) {
        throw ShapeError("invalid size " + std::to_string(x));
    }
    return static_cast<std::size_t>(f);
}

class Machine {
public:
    explicit Machine(const ExecLimits& limits) : limits_(limits) {}

    ExecResult run(const SyntaxTree& program, std::span<const Value> args) {
        const auto params = program_params(program);
        if (params.size() != args.size()) {
            throw TypeError("expected " + std::to_string(params.size()) + " arguments, got " +
                            std::to_string(args.size()));
        }
        vars_.reserve(params.size() + 8);
        for (std::size_t i = 0; i < params.size(); ++i) vars_.push_back({params[i], args[i]});
        Value ret;
        for (std::size_t i = params.size(); i < program.children.size(); ++i) {
            if (exec(program.children[i], ret)) return {std::move(ret), steps_};
        }
        throw TypeError("function finished without a return");
    }

private:
    struct Var {
        std::string name;
        Value value;
    };

    void charge() {
        if (steps_ >= limits_.max_steps) {
            throw StepBudgetExceeded("step budget of " + std::to_string(limits_.max_steps) + " exhausted");
        }
        ++steps_;
    }

    Var* find(const std::string& name) {
        for (auto& v : vars_) {
            if (v.name == name) return &v;
        }
        return nullptr;
    }

    Var& lookup(const std::string& name) {
        if (Var* v = find(name)) return *v;
        throw TypeError("undefined variable '" + name + "'");
    }

    void define(const std::string& name, Value value) {
        if (Var* v = find(name)) {
            v->value = std::move(value);
        } else {
            vars_.push_back({name, std::move(value)});
        }
    }

    bool exec_block(const SyntaxTree& block, Value& ret) {
        for (const auto& s : block.children) {
            if (exec(s, ret)) return true;
        }
        return false;
    }

    bool exec(const SyntaxTree& s, Value& ret) {
        charge();
        switch (s.kind) {
            case NodeKind::Let: define(s.lexeme, eval(s.children[0])); return false;
            case NodeKind::Assign: {
                Value v = eval(s.children[0]);
                lookup(s.lexeme).value = std::move(v);
                return false;
            }
            case NodeKind::IndexAssign: index_assign(s); return false;
            case NodeKind::Return: ret = eval(s.children[0]); return true;
            case NodeKind::If: {
                Value scratch;
                const double c = as_scalar(eval_ref(s.children[0], scratch), "if condition");
                if (truthy(c)) return exec_block(s.children[1], ret);
                if (s.children.size() > 2) return exec_block(s.children[2], ret);
                return false;
            }
            case NodeKind::For: return exec_for(s, ret);
            default: throw TypeError("unexpected node in statement position");
        }
    }

    bool exec_for(const SyntaxTree& s, Value& ret) {
        Value scratch;
        const double lo = as_scalar(eval_ref(s.children[0], scratch), "loop bound");
        const double hi = as_scalar(eval_ref(s.children[1], scratch), "loop bound");
        define(s.lexeme, lo);
        for (double i = lo; i < hi; i += 1.0) {
            if (++loop_total_ > limits_.max_loop_total) {
                throw StepBudgetExceeded("loop iteration budget of " +
                                         std::to_string(limits_.max_loop_total) + " exhausted");
            }
            lookup(s.lexeme).value = i;
            if (exec_block(s.children[2], ret)) return true;
        }
        return false;
    }

    void index_assign(const SyntaxTree& s) {
        const std::size_t nidx = s.children.size() - 1;
        std::array<double, 2> idx{};
        if (nidx > 2) throw TypeError("too many indices for '" + s.lexeme + "'");
        Value scratch;
        for (std::size_t k = 0; k < nidx; ++k) idx[k] = as_scalar(eval_ref(s.children[k], scratch), "index");
        Value v = eval(s.children.back());
        Var& target = lookup(s.lexeme);
        switch (shape_of(target.value)) {
            case Shape::Scalar: throw TypeError("cannot index scalar '" + s.lexeme + "'");
            case Shape::Vector: {
                auto& vec = std::get<Vector>(target.value);
                if (nidx != 1) throw TypeError("vector '" + s.lexeme + "' takes one index");
                vec[to_index(idx[0], vec.size())] = as_scalar(v, "assigned element");
                return;
            }
            case Shape::Matrix: {
                auto& m = std::get<Matrix>(target.value);
                const std::size_t r = to_index(idx[0], m.rows());
                if (nidx == 2) {
                    m(r, to_index(idx[1], m.cols())) = as_scalar(v, "assigned element");
                    return;
                }
                const auto* row = std::get_if<Vector>(&v);
                if (!row) throw TypeError("row assignment needs a vector, got " + dims(v));
                if (row->size() != m.cols()) {
                    throw ShapeError("row of length " + std::to_string(row->size()) + " assigned into " +
                                     dims(target.value));
                }
                std::copy(row->begin(), row->end(), m.row(r).begin());
                return;
            }
        }
    }

    // Variables are read in place; everything else materializes into scratch.
    const Value& eval_ref(const SyntaxTree& e, Value& scratch) {
        if (e.kind == NodeKind::Ident) {
            charge();
            return lookup(e.lexeme).value;
        }
        scratch = eval(e);
        return scratch;
    }

    Value eval(const SyntaxTree& e) {
        switch (e.kind) {
            case NodeKind::NumLit: charge(); return std::strtod(e.lexeme.c_str(), nullptr);
            case NodeKind::Ident: charge(); return lookup(e.lexeme).value;
            case NodeKind::Unary: {
                charge();
                Value v = eval(e.children[0]);
                if (e.lexeme == "-") return map_values(std::move(v), "-", [](double x) { return -x; });
                return map_values(std::move(v), "!", [](double x) { return truthy(x) ? 0.0 : 1.0; });
            }
            case NodeKind::Binary: return eval_binary(e);
            case NodeKind::Index: return eval_index(e);
            case NodeKind::Call: return eval_call(e);
            default: throw TypeError("unexpected node in expression position");
        }
    }

    Value eval_binary(const SyntaxTree& e) {
        charge();
        const std::string& op = e.lexeme;
        Value sl;
        const Value& lhs = eval_ref(e.children[0], sl);
        if ((op == "&&" || op == "||") && shape_of(lhs) == Shape::Scalar) {
            const bool l = truthy(std::get<double>(lhs));
            if (op == "&&" && !l) return 0.0;
            if (op == "||" && l) return 1.0;
        }
        Value sr;
        const Value& rhs = eval_ref(e.children[1], sr);
        switch (op[0]) {
            case '+': return elementwise(lhs, rhs, "+", [](double x, double y) { return x + y; });
            case '-': return elementwise(lhs, rhs, "-", [](double x, double y) { return x - y; });
            case '*': return elementwise(lhs, rhs, "*", [](double x, double y) { return x * y; });
            case '/':
                return elementwise(lhs, rhs, "/", [](double x, double y) {
                    if (y == 0.0) throw NumericError("division by zero");
                    return x / y;
                });
            case '%':
                return elementwise(lhs, rhs, "%", [](double x, double y) {
                    if (y == 0.0) throw NumericError("modulo by zero");
                    return std::fmod(x, y);
                });
            case '^': return elementwise(lhs, rhs, "^", power);
            case '&':
                return elementwise(lhs, rhs, "&&", [](double x, double y) { return truthy(x) && truthy(y) ? 1.0 : 0.0; });
            case '|':
                return elementwise(lhs, rhs, "||", [](double x, double y) { return truthy(x) || truthy(y) ? 1.0 : 0.0; });
            default: break;
        }
        if (op == "<") return elementwise(lhs, rhs, "<", [](double x, double y) { return x < y ? 1.0 : 0.0; });
        if (op == "<=") return elementwise(lhs, rhs, "<=", [](double x, double y) { return x <= y ? 1.0 : 0.0; });
        if (op == ">") return elementwise(lhs, rhs, ">", [](double x, double y) { return x > y ? 1.0 : 0.0; });
        if (op == ">=") return elementwise(lhs, rhs, ">=", [](double x, double y) { return x >= y ? 1.0 : 0.0; });
        if (op == "==") return elementwise(lhs, rhs, "==", [](double x, double y) { return x == y ? 1.0 : 0.0; });
        if (op == "!=") return elementwise(lhs, rhs, "!=", [](double x, double y) { return x != y ? 1.0 : 0.0; });
        throw TypeError("unknown operator '" + op + "'");
    }

    Value eval_index(const SyntaxTree& e) {
        charge();
        const std::size_t nidx = e.children.size();
        if (nidx > 2) throw TypeError("too many indices for '" + e.lexeme + "'");
        std::array<double, 2> idx{};
        Value scratch;
        for (std::size_t k = 0; k < nidx; ++k) idx[k] = as_scalar(eval_ref(e.children[k], scratch), "index");
        const Value& target = lookup(e.lexeme).value;
        switch (shape_of(target)) {
            case Shape::Scalar: throw TypeError("cannot index scalar '" + e.lexeme + "'");
            case Shape::Vector: {
                const auto& vec = std::get<Vector>(target);
                if (nidx != 1) throw TypeError("vector '" + e.lexeme + "' takes one index");
                return vec[to_index(idx[0], vec.size())];
            }
            case Shape::Matrix: {
                const auto& m = std::get<Matrix>(target);
                const std::size_t r = to_index(idx[0], m.rows());
                if (nidx == 2) return m(r, to_index(idx[1], m.cols()));
                auto row = m.row(r);
                return Vector(row.begin(), row.end());
            }
        }
        return 0.0;
    }

    Value eval_call(const SyntaxTree& e) {
        charge();
        const auto info = detail::lookup_builtin(e.lexeme);
        if (!info) throw TypeError("unknown function '" + e.lexeme + "'");
        const int n = static_cast<int>(e.children.size());
        if (n < info->min_args || n > info->max_args) {
            throw TypeError("function '" + e.lexeme + "' called with " + std::to_string(n) + " arguments");
        }
        std::array<Value, 2> scratch;
        std::array<const Value*, 2> arg{};
        for (int k = 0; k < n; ++k) arg[k] = &eval_ref(e.children[k], scratch[k]);
        const Value& a = *arg[0];

        switch (info->id) {
            case Builtin::Abs: return map_values(a, "abs", [](double x) { return std::fabs(x); });
            case Builtin::Sqrt:
                return map_values(a, "sqrt", [](double x) {
                    if (x < 0.0) throw NumericError("sqrt of a negative value");
                    return std::sqrt(x);
                });
            case Builtin::Log:
                return map_values(a, "log", [](double x) {
                    if (x <= 0.0) throw NumericError("log of a non-positive value");
                    return std::log(x);
                });
            case Builtin::Exp: return map_values(a, "exp", [](double x) { return std::exp(x); });
            case Builtin::Tanh: return map_values(a, "tanh", [](double x) { return std::tanh(x); });
            case Builtin::Floor: return map_values(a, "floor", [](double x) { return std::floor(x); });
            case Builtin::Ceil: return map_values(a, "ceil", [](double x) { return std::ceil(x); });
            case Builtin::Min:
                return elementwise(a, *arg[1], "min", [](double x, double y) { return y < x ? y : x; });
            case Builtin::Max:
                return elementwise(a, *arg[1], "max", [](double x, double y) { return y > x ? y : x; });
            case Builtin::Pow: return elementwise(a, *arg[1], "pow", power);
            case Builtin::Sum:
            case Builtin::Mean:
            case Builtin::MaxV:
            case Builtin::MinV: return reduce(info->id, a);
            case Builtin::Len:
                if (const auto* v = std::get_if<Vector>(&a)) return static_cast<double>(v->size());
                if (const auto* m = std::get_if<Matrix>(&a)) return static_cast<double>(m->rows());
                throw TypeError("len of a scalar");
            case Builtin::Rows:
                if (const auto* m = std::get_if<Matrix>(&a)) return static_cast<double>(m->rows());
                throw TypeError("rows needs a matrix, got " + dims(a));
            case Builtin::Cols:
                if (const auto* m = std::get_if<Matrix>(&a)) return static_cast<double>(m->cols());
                throw TypeError("cols needs a matrix, got " + dims(a));
            case Builtin::Zeros: {
                const std::size_t r = to_size(as_scalar(a, "zeros size"));
                if (n == 1) return Vector(r, 0.0);
                const std::size_t c = to_size(as_scalar(*arg[1], "zeros size"));
                if (r != 0 && c > kMaxElements / r) throw ShapeError("zeros size too large");
                return Matrix(r, c, 0.0);
            }
            case Builtin::Copy: return a;
        }
        throw TypeError("unhandled function '" + e.lexeme + "'");
    }

    static Value reduce(Builtin id, const Value& a) {
        const Elements el = elements(a);
        if (el.count == 0) {
            if (id == Builtin::Sum) return 0.0;
            throw ShapeError("reduction over an empty value");
        }
        double acc = el.data[0];
        for (std::size_t i = 1; i < el.count; ++i) {
            const double x = el.data[i * el.stride];
            switch (id) {
                case Builtin::MaxV: acc = x > acc ? x : acc; break;
                case Builtin::MinV: acc = x < acc ? x : acc; break;
                default: acc += x; break;
            }
        }
        if (id == Builtin::Mean) acc /= static_cast<double>(el.count);
        return checked(acc, "reduction");
    }

    const ExecLimits& limits_;
    std::vector<Var> vars_;
    std::uint64_t steps_ = 0;
    std::uint64_t loop_total_ = 0;
};

}  // namespace

ExecResult execute(const SyntaxTree& program, std::span<const Value> args, const ExecLimits& limits) {
    Machine m(limits);
    return m.run(program, args);
}

}  // namespace meoh::dsl
