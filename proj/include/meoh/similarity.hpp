#pragma once

#include <span>
#include <vector>

#include "meoh/dsl/subtrees.hpp"
#include "meoh/dsl/syntax_tree.hpp"
#include "meoh/matrix.hpp"

namespace meoh::similarity {

/// Clipped subtree matching: sum over keys s of min(count_a(s), count_b(s)),
/// divided by the number of subtrees of b. Directional: Sim(a, b) != Sim(b, a)
/// in general.
double ast_similarity(const dsl::SubtreeCounts& a, const dsl::SubtreeCounts& b);
double ast_similarity(const dsl::SyntaxTree& a, const dsl::SyntaxTree& b);

/// Entry (i, j) = -Sim(i, j) for i != j, zero on the diagonal.
/// Rows are filled in parallel; the result does not depend on scheduling.
Matrix dissimilarity_matrix(std::span<const dsl::SubtreeCounts* const> profiles);

/// Single-threaded reference for dissimilarity_matrix.
Matrix dissimilarity_matrix_serial(std::span<const dsl::SubtreeCounts* const> profiles);

Matrix dissimilarity_matrix(std::span<const dsl::SyntaxTree> trees);

}  // namespace meoh::similarity
