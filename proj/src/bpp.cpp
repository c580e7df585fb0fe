#include "meoh/bpp.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "language_notes.hpp"
#include "meoh/rng.hpp"

namespace meoh::bpp {

Instance generate_weibull_instance(std::size_t n, int capacity, std::uint64_t seed, WeibullParams params) {
    if (n == 0 || capacity < 1) throw std::invalid_argument("weibull instance needs n >= 1 and capacity >= 1");
    Rng rng(seed);
    Instance inst;
    inst.capacity = capacity;
    inst.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Inverse CDF: scale * (-ln(1 - U))^(1 / shape).
        const double x = params.scale * std::pow(-std::log1p(-rng.uniform()), 1.0 / params.shape);
        const double clamped = std::clamp(std::ceil(x), 1.0, static_cast<double>(capacity));
        inst.items.push_back(static_cast<int>(clamped));
    }
    return inst;
}

long lower_bound(const Instance& inst) {
    long long total = 0;
    for (int item : inst.items) total += item;
    return static_cast<long>((total + inst.capacity - 1) / inst.capacity);
}

const dsl::TaskSignature& signature() {
    static const dsl::TaskSignature sig{
        "score", {{"item", dsl::Shape::Scalar}, {"bins", dsl::Shape::Vector}}, dsl::Shape::Vector};
    return sig;
}

const TaskText& task_text() {
    static const TaskText text{
        "I need help designing a novel score function that scoring a set of bins to assign an item. "
        "In each step, the item will be assigned to the bin with the maximum score. If the rest "
        "capacity of a bin equals the maximum capacity, it will not be used. The final goal is to "
        "minimize the number of used bins.",
        std::string("Implement it as a function named \"score\". This function should accept 2 inputs: "
                    "[\"item\", \"bins\"]. The function should return 1 output: [\"scores\"]. ") +
            "\"item\" and \"bins\" are the size of current item and the rest capacities of feasible "
            "bins, which are larger than the item size. The output named \"scores\" is the scores for "
            "the bins for assignment. Note that \"item\" is a scalar, \"bins\" is a vector, and "
            "\"scores\" should be a vector with one entry per bin. Avoid utilizing the random "
            "component, and it is crucial to maintain self-consistency. " +
            detail::kLanguageNotes,
        "\"item\" and \"bins\" are the size of current item and the rest capacities of feasible bins. "
        "\"item\" is a scalar, \"bins\" is a vector, and the returned \"scores\" is a vector with one "
        "entry per bin."};
    return text;
}

namespace {

std::size_t argmax_scores(const dsl::Value& result, std::size_t expected) {
    const auto* scores = std::get_if<dsl::Vector>(&result);
    if (!scores) {
        throw OutputShapeError("score must return a vector, got a " +
                               std::string(dsl::shape_name(dsl::shape_of(result))));
    }
    if (scores->size() != expected) {
        throw OutputShapeError("score returned " + std::to_string(scores->size()) + " values for " +
                               std::to_string(expected) + " bins");
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k < scores->size(); ++k) {
        const double s = (*scores)[k];
        if (!std::isfinite(s)) throw OutputShapeError("score returned a non-finite value");
        if (s > (*scores)[best]) best = k;
    }
    return best;
}

}  // namespace

SimResult simulate_online(const Instance& inst, const dsl::SyntaxTree& heuristic,
                          const dsl::ExecLimits& limits, UnusedBinRule rule) {
    const int cap = inst.capacity;
    std::vector<int> remaining(inst.items.size(), cap);
    std::vector<std::size_t> feasible;
    std::vector<dsl::Value> args(2);
    args[1] = dsl::Vector{};
    SimResult out;
    std::size_t next_fresh = 0;  // first never-touched bin under the Excluded rule

    feasible.reserve(remaining.size());
    try {
        for (int item : inst.items) {
            if (item < 1 || item > cap) throw std::invalid_argument("item size outside [1, capacity]");
            feasible.clear();
            auto& bins = std::get<dsl::Vector>(args[1]);
            bins.clear();
            for (std::size_t b = 0; b < remaining.size(); ++b) {
                if (remaining[b] < item) continue;
                if (rule == UnusedBinRule::Excluded && remaining[b] == cap) continue;
                feasible.push_back(b);
                bins.push_back(remaining[b]);
            }
            std::size_t chosen;
            if (feasible.empty()) {
                // Only reachable under Excluded: nothing open fits, so open a fresh bin.
                chosen = next_fresh;
            } else {
                args[0] = static_cast<double>(item);
                dsl::ExecResult r = dsl::execute(heuristic, args, limits);
                out.total_steps += r.steps_used;
                chosen = feasible[argmax_scores(r.value, feasible.size())];
            }
            if (remaining[chosen] == cap) next_fresh = std::max(next_fresh, chosen + 1);
            remaining[chosen] -= item;
            if (remaining[chosen] < 0) throw std::logic_error("bin capacity exceeded");
        }
    } catch (const dsl::DslError& e) {
        rethrow_as_failure(e);
    }
    out.bins_used = static_cast<long>(std::count_if(remaining.begin(), remaining.end(),
                                                    [cap](int r) { return r < cap; }));
    return out;
}

namespace {

Report report_for(const Instance& inst, const SimResult& sim) {
    Report r;
    r.bins_used = sim.bins_used;
    r.lower_bound = lower_bound(inst);
    r.gap = static_cast<double>(r.bins_used - r.lower_bound) / static_cast<double>(r.lower_bound);
    r.steps = sim.total_steps;
    return r;
}

Evaluation aggregate(const std::vector<Report>& reports) {
    Evaluation ev;
    double gap = 0.0;
    for (const auto& r : reports) {
        gap += r.gap;
        ev.steps += r.steps;
    }
    ev.objectives = {gap / static_cast<double>(reports.size()), static_cast<double>(ev.steps)};
    return ev;
}

std::vector<Report> run_serial(const dsl::SyntaxTree& h, std::span<const Instance> instances,
                               const EvalOptions& opt) {
    std::vector<Report> reports;
    reports.reserve(instances.size());
    for (const auto& inst : instances) {
        reports.push_back(report_for(inst, simulate_online(inst, h, opt.limits, opt.rule)));
    }
    return reports;
}

double timed_median(const dsl::SyntaxTree& h, std::span<const Instance> instances, const EvalOptions& opt,
                    std::vector<Report>& first) {
    std::array<double, 3> secs{};
    for (std::size_t rep = 0; rep < secs.size(); ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        auto reports = run_serial(h, instances, opt);
        secs[rep] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (rep == 0) first = std::move(reports);
    }
    std::sort(secs.begin(), secs.end());
    return secs[1];
}

void require_instances(std::span<const Instance> instances) {
    if (instances.empty()) throw std::invalid_argument("evaluate_bpp needs at least one instance");
}

}  // namespace

Evaluation evaluate_bpp_serial(const dsl::SyntaxTree& heuristic, std::span<const Instance> instances,
                               const EvalOptions& options, std::vector<Report>* reports) {
    require_instances(instances);
    std::vector<Report> rs;
    double seconds = 0.0;
    if (options.mode == ObjectiveMode::WallTime) {
        seconds = timed_median(heuristic, instances, options, rs);
    } else {
        rs = run_serial(heuristic, instances, options);
    }
    Evaluation ev = aggregate(rs);
    if (options.mode == ObjectiveMode::WallTime) ev.objectives[1] = seconds;
    if (reports) *reports = std::move(rs);
    return ev;
}

Evaluation evaluate_bpp(const dsl::SyntaxTree& heuristic, std::span<const Instance> instances,
                        const EvalOptions& options, std::vector<Report>* reports) {
    // Timed repeats must not share the machine with sibling evaluations.
    if (options.mode == ObjectiveMode::WallTime) {
        return evaluate_bpp_serial(heuristic, instances, options, reports);
    }
    require_instances(instances);
    const auto n = static_cast<long>(instances.size());
    std::vector<Report> rs(instances.size());
    std::vector<std::exception_ptr> errors(instances.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        try {
            rs[i] = report_for(instances[i], simulate_online(instances[i], heuristic, options.limits, options.rule));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    Evaluation ev = aggregate(rs);
    if (reports) *reports = std::move(rs);
    return ev;
}

Instance read_instance(std::istream& in) {
    Instance inst;
    std::size_t n = 0;
    if (!(in >> inst.capacity >> n)) throw std::runtime_error("bpp instance: missing 'capacity n' header");
    if (inst.capacity < 1 || n == 0) throw std::runtime_error("bpp instance: invalid header");
    inst.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        int item = 0;
        if (!(in >> item)) throw std::runtime_error("bpp instance: expected " + std::to_string(n) + " items");
        if (item < 1 || item > inst.capacity) {
            throw std::runtime_error("bpp instance: item " + std::to_string(i + 1) + " outside [1, capacity]");
        }
        inst.items.push_back(item);
    }
    return inst;
}

void write_instance(std::ostream& out, const Instance& inst) {
    out << inst.capacity << ' ' << inst.items.size() << '\n';
    for (int item : inst.items) out << item << '\n';
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_instance(in);
}

void save_instance(const std::filesystem::path& path, const Instance& inst) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_instance(out, inst);
}

Environment::Environment(std::vector<Instance> instances, EvalOptions options)
    : instances_(std::move(instances)), options_(options) {
    require_instances(instances_);
}

Evaluation Environment::evaluate(const dsl::SyntaxTree& heuristic, ObjectiveMode mode) const {
    EvalOptions opt = options_;
    opt.mode = mode;
    return evaluate_bpp(heuristic, instances_, opt);
}

}  // namespace meoh::bpp
