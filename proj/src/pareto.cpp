#include "meoh/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace meoh::pareto {

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("dominates: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + " objectives");
    }
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

std::vector<std::size_t> nondominated_filter(std::span<const ObjectiveVector> set) {
    // Any dominator of p sorts lexicographically before p, and a dominated
    // dominator is itself beaten by a front member, so comparing each point
    // against the front built so far is enough.
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return set[a] < set[b]; });
    std::vector<std::size_t> front;
    for (std::size_t idx : order) {
        const bool beaten = std::any_of(front.begin(), front.end(),
                                        [&](std::size_t f) { return dominates(set[f], set[idx]); });
        if (!beaten) front.push_back(idx);
    }
    std::sort(front.begin(), front.end());
    return front;
}

NormalizationBounds compute_bounds(std::span<const ObjectiveVector> set) {
    if (set.empty()) throw EmptySet("compute_bounds on an empty set");
    NormalizationBounds b{set[0], set[0]};
    for (const auto& v : set) {
        if (v.size() != b.ideal.size()) throw DimensionMismatch("compute_bounds: ragged objective vectors");
        for (std::size_t i = 0; i < v.size(); ++i) {
            b.ideal[i] = std::min(b.ideal[i], v[i]);
            b.nadir[i] = std::max(b.nadir[i], v[i]);
        }
    }
    return b;
}

ObjectiveVector normalize(std::span<const double> f, const NormalizationBounds& bounds) {
    if (f.size() != bounds.ideal.size() || f.size() != bounds.nadir.size()) {
        throw DimensionMismatch("normalize: bounds do not match objective count");
    }
    ObjectiveVector out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double range = bounds.nadir[i] - bounds.ideal[i];
        out[i] = range < kDegenerateAxis ? 0.0 : (f[i] - bounds.ideal[i]) / range;
    }
    return out;
}

std::vector<ObjectiveVector> normalize_all(std::span<const ObjectiveVector> set,
                                           const NormalizationBounds& bounds) {
    std::vector<ObjectiveVector> out;
    out.reserve(set.size());
    for (const auto& v : set) out.push_back(normalize(v, bounds));
    return out;
}

double hypervolume(std::span<const ObjectiveVector> points, std::span<const double> ref) {
    const double rx = ref.empty() ? kDefaultReference : ref[0];
    const double ry = ref.empty() ? kDefaultReference : ref[1];
    if (!ref.empty() && ref.size() != 2) throw DimensionMismatch("hypervolume: reference must be 2-D");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(points.size());
    for (const auto& p : points) {
        if (p.size() != 2) throw DimensionMismatch("hypervolume supports two objectives only");
        pts.emplace_back(std::clamp(p[0], 0.0, rx), std::clamp(p[1], 0.0, ry));
    }
    std::sort(pts.begin(), pts.end());
    // Sweep along the first objective; each point that lowers the running
    // minimum of the second objective adds a slab out to the reference.
    double area = 0.0;
    double best_y = ry;
    for (const auto& [x, y] : pts) {
        if (y < best_y) {
            area += (rx - x) * (best_y - y);
            best_y = y;
        }
    }
    return area;
}

double igd(std::span<const ObjectiveVector> approx, std::span<const ObjectiveVector> reference) {
    if (approx.empty() || reference.empty()) throw EmptySet("igd needs non-empty sets");
    double total = 0.0;
    for (const auto& p : reference) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : approx) {
            if (q.size() != p.size()) throw DimensionMismatch("igd: objective count differs");
            double d2 = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) d2 += (p[i] - q[i]) * (p[i] - q[i]);
            best = std::min(best, d2);
        }
        total += std::sqrt(best);
    }
    return total / static_cast<double>(reference.size());
}

}  // namespace meoh::pareto
