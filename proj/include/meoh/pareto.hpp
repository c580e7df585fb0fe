#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace meoh::pareto {

/// Minimization objectives. Here: (mean optimality gap, running cost).
using ObjectiveVector = std::vector<double>;

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EmptySet : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct NormalizationBounds {
    ObjectiveVector ideal;
    ObjectiveVector nadir;
};

inline constexpr double kDegenerateAxis = 1e-12;
inline constexpr double kDefaultReference = 1.1;

/// a dominates b: no worse everywhere and strictly better somewhere.
bool dominates(std::span<const double> a, std::span<const double> b);

/// Indices (ascending) of members not dominated by any other member.
/// Equal vectors do not dominate each other, so duplicates all survive.
std::vector<std::size_t> nondominated_filter(std::span<const ObjectiveVector> set);

/// Componentwise min/max over a non-empty set.
NormalizationBounds compute_bounds(std::span<const ObjectiveVector> set);

/// (f - ideal) / (nadir - ideal) per axis; degenerate axes map to 0.
ObjectiveVector normalize(std::span<const double> f, const NormalizationBounds& bounds);

std::vector<ObjectiveVector> normalize_all(std::span<const ObjectiveVector> set,
                                           const NormalizationBounds& bounds);

/// Exact two-objective hypervolume against `ref` (default (1.1, 1.1)).
/// Points are clipped to the reference box, so anything beyond it adds 0.
double hypervolume(std::span<const ObjectiveVector> points,
                   std::span<const double> ref = {});

/// Mean over the reference set of the distance to the nearest approximation point.
double igd(std::span<const ObjectiveVector> approx, std::span<const ObjectiveVector> reference);

}  // namespace meoh::pareto
