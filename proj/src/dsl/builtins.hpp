#pragma once

#include <optional>
#include <string_view>

namespace meoh::dsl::detail {

enum class Builtin {
    Abs, Sqrt, Log, Exp, Tanh, Floor, Ceil,
    Min, Max, Pow,
    Sum, Mean, MaxV, MinV,
    Len, Rows, Cols, Zeros, Copy,
};

struct BuiltinInfo {
    Builtin id;
    int min_args;
    int max_args;
};

std::optional<BuiltinInfo> lookup_builtin(std::string_view name);

}  // namespace meoh::dsl::detail
