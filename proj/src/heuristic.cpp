#include "meoh/heuristic.hpp"

#include <array>
#include <stdexcept>

namespace meoh {

namespace {

constexpr std::array<std::string_view, 6> kOperatorNames = {"init", "e1", "e2", "m1", "m2", "m3"};

}  // namespace

std::string_view operator_name(Operator op) { return kOperatorNames[static_cast<std::size_t>(op)]; }

Operator parse_operator(std::string_view text) {
    for (std::size_t k = 0; k < kOperatorNames.size(); ++k) {
        if (kOperatorNames[k] == text) return static_cast<Operator>(k);
    }
    throw std::invalid_argument("unknown operator '" + std::string(text) + "'");
}

const dsl::SubtreeCounts& Heuristic::subtrees() const {
    if (!profile) {
        profile = std::make_shared<const dsl::SubtreeCounts>(dsl::count_subtrees(tree));
    }
    return *profile;
}

Heuristic make_heuristic(std::uint64_t id, std::string description, std::string source, dsl::SyntaxTree tree,
                         pareto::ObjectiveVector objectives, int generation, Operator op,
                         std::vector<std::uint64_t> parent_ids) {
    Heuristic h;
    h.id = id;
    h.description = std::move(description);
    h.source = std::move(source);
    h.tree = std::move(tree);
    h.objectives = std::move(objectives);
    h.generation = generation;
    h.op = op;
    h.parent_ids = std::move(parent_ids);
    h.profile = std::make_shared<const dsl::SubtreeCounts>(dsl::count_subtrees(h.tree));
    return h;
}

}  // namespace meoh
