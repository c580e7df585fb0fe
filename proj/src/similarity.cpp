#include "meoh/similarity.hpp"

#include <algorithm>

namespace meoh::similarity {

double ast_similarity(const dsl::SubtreeCounts& a, const dsl::SubtreeCounts& b) {
    if (b.total == 0) return 0.0;
    std::size_t matched = 0;
    // Iterate the smaller map; min() is symmetric in its arguments.
    const auto& small = a.counts.size() <= b.counts.size() ? a.counts : b.counts;
    const auto& large = a.counts.size() <= b.counts.size() ? b.counts : a.counts;
    for (const auto& [key, n] : small) {
        auto it = large.find(key);
        if (it != large.end()) matched += std::min(n, it->second);
    }
    return static_cast<double>(matched) / static_cast<double>(b.total);
}

double ast_similarity(const dsl::SyntaxTree& a, const dsl::SyntaxTree& b) {
    return ast_similarity(dsl::count_subtrees(a), dsl::count_subtrees(b));
}

Matrix dissimilarity_matrix(std::span<const dsl::SubtreeCounts* const> profiles) {
    const auto n = static_cast<long>(profiles.size());
    Matrix s(profiles.size(), profiles.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) {
            if (i != j) s(i, j) = -ast_similarity(*profiles[i], *profiles[j]);
        }
    }
    return s;
}

Matrix dissimilarity_matrix_serial(std::span<const dsl::SubtreeCounts* const> profiles) {
    const std::size_t n = profiles.size();
    Matrix s(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) s(i, j) = -ast_similarity(*profiles[i], *profiles[j]);
        }
    }
    return s;
}

Matrix dissimilarity_matrix(std::span<const dsl::SyntaxTree> trees) {
    std::vector<dsl::SubtreeCounts> counts;
    counts.reserve(trees.size());
    for (const auto& t : trees) counts.push_back(dsl::count_subtrees(t));
    std::vector<const dsl::SubtreeCounts*> ptrs;
    for (const auto& c : counts) ptrs.push_back(&c);
    return dissimilarity_matrix(ptrs);
}

}  // namespace meoh::similarity
