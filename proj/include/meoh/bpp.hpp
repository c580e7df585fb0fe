#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "meoh/dsl/interpreter.hpp"
#include "meoh/problem.hpp"

namespace meoh::bpp {

struct Instance {
    int capacity = 100;
    std::vector<int> items;
};

struct WeibullParams {
    double shape = 3.0;
    double scale = 45.0;
};

/// How bins that were never touched are treated.
enum class UnusedBinRule {
    NotCounted,  // untouched bins stay selectable; only touched bins count as used
    Excluded,    // untouched bins are hidden from the heuristic; one opens only when nothing fits
};

struct SimResult {
    long bins_used = 0;
    std::uint64_t total_steps = 0;
};

struct Report {
    long bins_used = 0;
    long lower_bound = 0;
    double gap = 0.0;
    std::uint64_t steps = 0;
};

/// Items are ceil of Weibull(shape, scale) draws clamped to [1, capacity].
Instance generate_weibull_instance(std::size_t n, int capacity, std::uint64_t seed,
                                   WeibullParams params = {});

/// ceil(sum(items) / capacity).
long lower_bound(const Instance& inst);

const dsl::TaskSignature& signature();
const TaskText& task_text();

/// Online greedy packing: each arriving item goes to the feasible bin with the
/// highest heuristic score (lowest index on ties).
SimResult simulate_online(const Instance& inst, const dsl::SyntaxTree& heuristic,
                          const dsl::ExecLimits& limits = {},
                          UnusedBinRule rule = UnusedBinRule::NotCounted);

struct EvalOptions {
    dsl::ExecLimits limits;
    UnusedBinRule rule = UnusedBinRule::NotCounted;
    ObjectiveMode mode = ObjectiveMode::StepCost;
};

/// Objective 1: mean gap over instances. Objective 2: total interpreter steps
/// (StepCost) or the median of three timed runs in seconds (WallTime).
/// Instances are simulated in parallel in StepCost mode.
Evaluation evaluate_bpp(const dsl::SyntaxTree& heuristic, std::span<const Instance> instances,
                        const EvalOptions& options, std::vector<Report>* reports = nullptr);

/// Single-threaded reference for evaluate_bpp.
Evaluation evaluate_bpp_serial(const dsl::SyntaxTree& heuristic, std::span<const Instance> instances,
                               const EvalOptions& options, std::vector<Report>* reports = nullptr);

/// Text format: "capacity n" then one item per line.
Instance read_instance(std::istream& in);
void write_instance(std::ostream& out, const Instance& inst);
Instance load_instance(const std::filesystem::path& path);
void save_instance(const std::filesystem::path& path, const Instance& inst);

class Environment : public ProblemEnvironment {
public:
    Environment(std::vector<Instance> instances, EvalOptions options);

    std::string_view name() const override { return "bpp"; }
    const dsl::TaskSignature& signature() const override { return bpp::signature(); }
    const TaskText& text() const override { return task_text(); }
    Evaluation evaluate(const dsl::SyntaxTree& heuristic, ObjectiveMode mode) const override;

    const std::vector<Instance>& instances() const { return instances_; }
    const EvalOptions& options() const { return options_; }

private:
    std::vector<Instance> instances_;
    EvalOptions options_;
};

}  // namespace meoh::bpp
