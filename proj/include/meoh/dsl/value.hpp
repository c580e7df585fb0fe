#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "meoh/matrix.hpp"

namespace meoh::dsl {

enum class Shape { Scalar, Vector, Matrix };

using Vector = std::vector<double>;
using Value = std::variant<double, Vector, Matrix>;

inline Shape shape_of(const Value& v) { return static_cast<Shape>(v.index()); }
std::string_view shape_name(Shape s);

/// True when every element is finite.
bool all_finite(const Value& v);

}  // namespace meoh::dsl
