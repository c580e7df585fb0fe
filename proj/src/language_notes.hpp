#pragma once

namespace meoh::detail {

// Appended to every task's code requirements so a model writes the heuristic
// language instead of a general-purpose one.
inline constexpr const char* kLanguageNotes =
    "Write the function in the following heuristic language. A program is "
    "`fn name(p1, p2, ...) { statements }`. Statements: `let x = e;`, `x = e;`, "
    "`v[i] = e;`, `m[i, j] = e;`, `for i in a..b { ... }` (b exclusive), "
    "`if c { ... } else { ... }`, `return e;`. Values are scalars, vectors and matrices. "
    "Arithmetic + - * / % ^ and comparisons < <= > >= == != apply elementwise with scalars "
    "broadcast; && || ! are logical operators. Builtins: abs, sqrt, log, exp, tanh, floor, "
    "ceil, min(a, b), max(a, b), pow(a, b) (elementwise); sum, mean, maxv, minv (reductions "
    "to a scalar); len, rows, cols, zeros(n), zeros(r, c), copy. Comments start with #. "
    "Division by zero, log of a non-positive value and non-finite results abort the heuristic.";

}  // namespace meoh::detail
