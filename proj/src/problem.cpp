#include "meoh/problem.hpp"

#include <stdexcept>

namespace meoh {

std::string_view objective_mode_name(ObjectiveMode mode) {
    return mode == ObjectiveMode::WallTime ? "walltime" : "stepcost";
}

ObjectiveMode parse_objective_mode(std::string_view text) {
    if (text == "walltime") return ObjectiveMode::WallTime;
    if (text == "stepcost") return ObjectiveMode::StepCost;
    throw std::invalid_argument("unknown objective mode '" + std::string(text) + "'");
}

void rethrow_as_failure(const dsl::DslError& e) {
    throw HeuristicFailure(std::string(dsl::error_kind_name(e.kind())), e.what());
}

}  // namespace meoh
