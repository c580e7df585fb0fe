#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "meoh/dsl/subtrees.hpp"
#include "meoh/dsl/syntax_tree.hpp"
#include "meoh/pareto.hpp"

namespace meoh {

enum class Operator { Init, E1, E2, M1, M2, M3 };

std::string_view operator_name(Operator op);
Operator parse_operator(std::string_view text);  // throws std::invalid_argument

struct Heuristic {
    std::uint64_t id = 0;
    std::string description;
    std::string source;
    dsl::SyntaxTree tree;
    pareto::ObjectiveVector objectives;
    int generation = 0;
    Operator op = Operator::Init;
    std::vector<std::uint64_t> parent_ids;
    mutable std::shared_ptr<const dsl::SubtreeCounts> profile;

    /// Memoized subtree multiset; computed on first use if absent (not thread-safe
    /// until filled).
    const dsl::SubtreeCounts& subtrees() const;
};

/// Fills tree-derived caches. The tree must already be set.
Heuristic make_heuristic(std::uint64_t id, std::string description, std::string source, dsl::SyntaxTree tree,
                         pareto::ObjectiveVector objectives, int generation = 0, Operator op = Operator::Init,
                         std::vector<std::uint64_t> parent_ids = {});

using Population = std::vector<Heuristic>;

}  // namespace meoh
