#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "meoh/dsl/interpreter.hpp"
#include "meoh/matrix.hpp"
#include "meoh/problem.hpp"

namespace meoh::tsp {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Instance {
    std::string name;
    std::vector<Point> coords;  // may be empty for matrix-only instances
    Matrix distance;            // symmetric, zero diagonal

    std::size_t size() const { return distance.rows(); }
};

/// A permutation of 0..n-1, read cyclically.
using Tour = std::vector<int>;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedEdgeWeightType : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TooLarge : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class DistanceRounding { None, Nearest };

/// Euclidean instance; Nearest applies the TSPLIB EUC_2D rule nint(d).
Instance from_coords(std::string name, std::vector<Point> coords,
                     DistanceRounding rounding = DistanceRounding::None);

/// Coordinates i.i.d. uniform on the unit square.
Instance generate_uniform_instance(std::size_t n, std::uint64_t seed);

/// TSPLIB subset: NAME, TYPE, DIMENSION, EDGE_WEIGHT_TYPE EUC_2D, NODE_COORD_SECTION, EOF.
Instance parse_tsplib(std::istream& in);
Instance load_tsplib(const std::filesystem::path& path);

/// "name length" per line.
std::vector<std::pair<std::string, double>> load_reference_lengths(const std::filesystem::path& path);

double tour_length(std::span<const int> tour, const Matrix& m);
bool is_permutation(std::span<const int> tour, std::size_t n);

/// Greedy construction; ties go to the lowest node index.
Tour nearest_neighbor_tour(const Matrix& m, int start);
Tour nearest_neighbor_tour(const Instance& inst, int start);

/// Best-improvement descent over swap and relocate moves until no move
/// strictly shortens the tour under `m`.
Tour local_search(Tour tour, const Matrix& m);

/// Held-Karp; n <= 13.
std::pair<Tour, double> exact_solve_small(const Instance& inst);
inline constexpr std::size_t kExactMaxNodes = 13;

/// Multi-start 2-opt + or-opt. Used to produce reference lengths for
/// generated instances too large for exact_solve_small.
std::pair<Tour, double> reference_solve(const Instance& inst, int restarts = 8, std::uint64_t seed = 0);

const dsl::TaskSignature& signature();
const TaskText& task_text();

struct GlsConfig {
    int max_iters = 1000;
    std::chrono::duration<double> time_budget{60.0};
    dsl::ExecLimits limits;
    /// Perturbation descent restarts from a nearest-neighbor tour built on the
    /// updated matrix instead of continuing from the current tour.
    bool restart_from_nn = false;
};

struct GlsResult {
    Tour best;
    double best_length = 0.0;
    std::uint64_t total_steps = 0;
    int iterations = 0;
    std::vector<double> best_trajectory;  // best_length after each iteration
    DenseMatrix<double> edge_n_used;
};

/// Guided local search where the heuristic rewrites the distance matrix used
/// by the perturbation descent. The best tour is always scored on the true
/// distances.
GlsResult gls_solve(const Instance& inst, const dsl::SyntaxTree& heuristic, const GlsConfig& config);

struct EvalOptions {
    GlsConfig gls;
    ObjectiveMode mode = ObjectiveMode::StepCost;
};

struct Report {
    double best_length = 0.0;
    double reference = 0.0;
    double gap = 0.0;
    std::uint64_t steps = 0;
};

/// Objective 1: mean relative gap to the reference lengths. Objective 2: total
/// interpreter steps or median-of-three seconds. Instances run in parallel in
/// StepCost mode.
Evaluation evaluate_tsp(const dsl::SyntaxTree& heuristic, std::span<const Instance> instances,
                        std::span<const double> reference_lengths, const EvalOptions& options,
                        std::vector<Report>* reports = nullptr);

Evaluation evaluate_tsp_serial(const dsl::SyntaxTree& heuristic, std::span<const Instance> instances,
                               std::span<const double> reference_lengths, const EvalOptions& options,
                               std::vector<Report>* reports = nullptr);

class Environment : public ProblemEnvironment {
public:
    Environment(std::vector<Instance> instances, std::vector<double> reference_lengths, EvalOptions options);

    std::string_view name() const override { return "tsp"; }
    const dsl::TaskSignature& signature() const override { return tsp::signature(); }
    const TaskText& text() const override { return task_text(); }
    Evaluation evaluate(const dsl::SyntaxTree& heuristic, ObjectiveMode mode) const override;

    const std::vector<Instance>& instances() const { return instances_; }
    const EvalOptions& options() const { return options_; }
    const std::vector<double>& reference_lengths() const { return references_; }

private:
    std::vector<Instance> instances_;
    std::vector<double> references_;
    EvalOptions options_;
};

}  // namespace meoh::tsp
