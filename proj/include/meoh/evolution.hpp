#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "meoh/heuristic.hpp"
#include "meoh/matrix.hpp"
#include "meoh/problem.hpp"
#include "meoh/rng.hpp"

namespace meoh::evolution {

using Mask = DenseMatrix<std::uint8_t>;

/// D(i, j) = 1 iff objectives[i] dominates objectives[j].
Mask dominance_mask(std::span<const pareto::ObjectiveVector> objectives);
Mask dominance_mask_serial(std::span<const pareto::ObjectiveVector> objectives);
Mask dominance_mask(std::span<const Heuristic> pop);

struct DdScores {
    std::vector<double> v;   // column sums of S * D, all <= 0
    std::vector<double> pi;  // softmax(v)
};

std::vector<double> softmax(std::span<const double> v);

DdScores dd_scores(const Mask& d, const Matrix& s);
DdScores dd_scores(std::span<const Heuristic> pop);

/// Draws d distinct indices, each step proportional to the remaining pi.
std::vector<std::size_t> select_parents(std::span<const double> pi, std::size_t d, Rng& rng);

/// Keeps the N members with the largest v. Ties: smaller objective vector
/// (lexicographic), then smaller id. Output is in that order.
Population manage_population(Population pop, std::size_t n);

/// Non-dominated sorting with crowding-distance truncation of the last front.
Population manage_nsga2(Population pop, std::size_t n);

/// One member per weight vector, each minimizing max_i w_i * f'_i over objectives
/// normalized to the population's own bounds. Weights are served in order and a
/// member already taken goes to the next best.
Population manage_moead_like(Population pop, std::size_t n, std::span<const std::vector<double>> weights);

/// Evenly spread two-objective weights: (k/(n-1), 1 - k/(n-1)).
std::vector<std::vector<double>> uniform_weights(std::size_t n);

/// Keeps the N best by the first objective only.
Population manage_single_objective(Population pop, std::size_t n);

enum class Management { MEoH, NSGA2, MOEAD, SingleObjective };
std::string_view management_name(Management m);
Management parse_management(std::string_view text);

Population manage(Management m, Population pop, std::size_t n);

// --- run loop ---------------------------------------------------------------

struct OffspringRequest {
    Operator op = Operator::Init;
    std::vector<const Heuristic*> parents;
    int generation = 0;
    int slot = 0;
    std::uint64_t seed = 0;  // per-slot stream, independent of thread order
};

/// Thrown by a source when no response could be produced. `category` goes to
/// the archive. Fatal errors (bad credentials) should use a different type.
class GenerationFailure : public std::runtime_error {
public:
    GenerationFailure(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

struct GeneratedText {
    std::string text;
    int retries = 0;
};

class OffspringSource {
public:
    virtual ~OffspringSource() = default;
    virtual GeneratedText generate(const OffspringRequest& request, const ProblemEnvironment& env) = 0;
};

struct ArchiveRecord {
    std::uint64_t id = 0;
    int generation = 0;
    int slot = 0;
    Operator op = Operator::Init;
    std::vector<std::uint64_t> parent_ids;
    std::string description;
    std::string source;
    bool admitted = false;
    std::string failure_category;  // empty iff admitted
    std::string failure_message;
    pareto::ObjectiveVector objectives;
    std::uint64_t eval_steps = 0;
    double eval_seconds = 0.0;
    int retries = 0;
    std::string timestamp;
};

struct GenerationSnapshot {
    int generation = 0;
    std::vector<std::uint64_t> ids;  // population after management, in kept order
    std::vector<double> scores;      // dd-scores over that population
};

struct RunArchive {
    std::vector<ArchiveRecord> records;
    std::vector<GenerationSnapshot> generations;

    const ArchiveRecord* find(std::uint64_t id) const;
};

/// Carries the attempts made so far so callers can persist them.
class InitializationExhausted : public std::runtime_error {
public:
    InitializationExhausted(const std::string& what, RunArchive archive)
        : std::runtime_error(what), archive_(std::move(archive)) {}
    const RunArchive& archive() const { return archive_; }

private:
    RunArchive archive_;
};

struct RunConfig {
    std::size_t population_size = 20;
    int generations = 20;
    std::size_t parents = 5;
    std::uint64_t seed = 0;
    Management management = Management::MEoH;
    ObjectiveMode objective_mode = ObjectiveMode::StepCost;
    std::size_t init_max_attempts = 0;  // 0: 4 * population_size
    std::vector<Operator> schedule = {Operator::E1, Operator::E2, Operator::M1, Operator::M2, Operator::M3};
    /// Select every parent of a generation from the population as it stood at
    /// the start of the generation; offspring are then evaluated in parallel.
    bool freeze_pool = false;
    std::function<void(const GenerationSnapshot&, const RunArchive&)> on_generation;
};

struct RunResult {
    Population population;
    RunArchive archive;
};

RunResult run_meoh(const RunConfig& config, OffspringSource& source, const ProblemEnvironment& env);

}  // namespace meoh::evolution
