#include "meoh/evolution.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <unordered_set>

#include "meoh/dsl/parser.hpp"
#include "meoh/dsl/signature.hpp"
#include "meoh/operators.hpp"
#include "meoh/similarity.hpp"

namespace meoh::evolution {

Mask dominance_mask(std::span<const pareto::ObjectiveVector> objectives) {
    const auto n = static_cast<long>(objectives.size());
    Mask d(objectives.size(), objectives.size(), 0);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) {
            if (i != j && pareto::dominates(objectives[i], objectives[j])) d(i, j) = 1;
        }
    }
    return d;
}

Mask dominance_mask_serial(std::span<const pareto::ObjectiveVector> objectives) {
    const std::size_t n = objectives.size();
    Mask d(n, n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && pareto::dominates(objectives[i], objectives[j])) d(i, j) = 1;
        }
    }
    return d;
}

namespace {

std::vector<pareto::ObjectiveVector> objectives_of(std::span<const Heuristic> pop) {
    std::vector<pareto::ObjectiveVector> out;
    out.reserve(pop.size());
    for (const auto& h : pop) out.push_back(h.objectives);
    return out;
}

std::vector<const dsl::SubtreeCounts*> profiles_of(std::span<const Heuristic> pop) {
    std::vector<const dsl::SubtreeCounts*> out;
    out.reserve(pop.size());
    for (const auto& h : pop) out.push_back(&h.subtrees());
    return out;
}

// Total order used wherever a ranking would otherwise tie.
bool tie_less(const Heuristic& a, const Heuristic& b) {
    if (a.objectives != b.objectives) {
        return std::lexicographical_compare(a.objectives.begin(), a.objectives.end(), b.objectives.begin(),
                                            b.objectives.end());
    }
    return a.id < b.id;
}

Population take(Population& pop, const std::vector<std::size_t>& order, std::size_t n) {
    Population out;
    out.reserve(std::min(n, order.size()));
    for (std::size_t k = 0; k < order.size() && k < n; ++k) out.push_back(std::move(pop[order[k]]));
    return out;
}

}  // namespace

Mask dominance_mask(std::span<const Heuristic> pop) { return dominance_mask(objectives_of(pop)); }

std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> out(v.size());
    if (v.empty()) return out;
    const double top = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        out[k] = std::exp(v[k] - top);
        total += out[k];
    }
    for (double& p : out) p /= total;
    return out;
}

DdScores dd_scores(const Mask& d, const Matrix& s) {
    const std::size_t n = d.rows();
    DdScores out;
    out.v.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (d(i, j)) col += s(i, j);
        }
        out.v[j] = col;
    }
    out.pi = softmax(out.v);
    return out;
}

DdScores dd_scores(std::span<const Heuristic> pop) {
    const Matrix s = similarity::dissimilarity_matrix(profiles_of(pop));
    return dd_scores(dominance_mask(pop), s);
}

std::vector<std::size_t> select_parents(std::span<const double> pi, std::size_t d, Rng& rng) {
    if (d > pi.size()) throw std::invalid_argument("cannot select more parents than members");
    std::vector<std::size_t> remaining(pi.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<std::size_t> chosen;
    chosen.reserve(d);
    for (std::size_t k = 0; k < d; ++k) {
        double total = 0.0;
        for (std::size_t idx : remaining) total += pi[idx];
        const double u = rng.uniform() * total;
        std::size_t pick = remaining.size() - 1;
        double acc = 0.0;
        for (std::size_t r = 0; r < remaining.size(); ++r) {
            acc += pi[remaining[r]];
            if (u < acc) {
                pick = r;
                break;
            }
        }
        chosen.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return chosen;
}

Population manage_population(Population pop, std::size_t n) {
    const DdScores scores = dd_scores(pop);
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores.v[a] != scores.v[b]) return scores.v[a] > scores.v[b];
        return tie_less(pop[a], pop[b]);
    });
    return take(pop, order, n);
}

Population manage_nsga2(Population pop, std::size_t n) {
    const std::size_t size = pop.size();
    const Mask d = dominance_mask(pop);

    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> dominated_by(size, 0);
    for (std::size_t j = 0; j < size; ++j) {
        for (std::size_t i = 0; i < size; ++i) dominated_by[j] += d(i, j);
    }
    std::vector<std::size_t> current;
    for (std::size_t j = 0; j < size; ++j) {
        if (dominated_by[j] == 0) current.push_back(j);
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : current) {
            for (std::size_t j = 0; j < size; ++j) {
                if (d(i, j) && --dominated_by[j] == 0) next.push_back(j);
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }

    std::vector<double> crowd(size, 0.0);
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t m = size ? pop[0].objectives.size() : 0;
    for (const auto& front : fronts) {
        for (std::size_t axis = 0; axis < m; ++axis) {
            std::vector<std::size_t> by = front;
            std::sort(by.begin(), by.end(), [&](std::size_t a, std::size_t b) {
                if (pop[a].objectives[axis] != pop[b].objectives[axis]) {
                    return pop[a].objectives[axis] < pop[b].objectives[axis];
                }
                return pop[a].id < pop[b].id;
            });
            crowd[by.front()] = inf;
            crowd[by.back()] = inf;
            const double range = pop[by.back()].objectives[axis] - pop[by.front()].objectives[axis];
            if (range <= 0.0) continue;
            for (std::size_t k = 1; k + 1 < by.size(); ++k) {
                crowd[by[k]] += (pop[by[k + 1]].objectives[axis] - pop[by[k - 1]].objectives[axis]) / range;
            }
        }
    }

    std::vector<std::size_t> order;
    order.reserve(size);
    for (auto front : fronts) {
        std::sort(front.begin(), front.end(), [&](std::size_t a, std::size_t b) {
            if (crowd[a] != crowd[b]) return crowd[a] > crowd[b];
            return tie_less(pop[a], pop[b]);
        });
        order.insert(order.end(), front.begin(), front.end());
    }
    return take(pop, order, n);
}

Population manage_moead_like(Population pop, std::size_t n, std::span<const std::vector<double>> weights) {
    if (weights.size() != n) throw std::invalid_argument("need one weight vector per kept member");
    if (pop.empty()) return pop;
    const auto raw = objectives_of(pop);
    const auto bounds = pareto::compute_bounds(raw);
    const auto norm = pareto::normalize_all(raw, bounds);

    std::vector<bool> taken(pop.size(), false);
    std::vector<std::size_t> order;
    for (const auto& w : weights) {
        if (w.size() != norm[0].size()) throw pareto::DimensionMismatch("weight dimension differs from objectives");
        std::optional<std::size_t> best;
        double best_g = 0.0;
        for (std::size_t k = 0; k < pop.size(); ++k) {
            if (taken[k]) continue;
            double g = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) g = std::max(g, w[i] * std::abs(norm[k][i]));
            if (!best || g < best_g || (g == best_g && tie_less(pop[k], pop[*best]))) {
                best = k;
                best_g = g;
            }
        }
        if (!best) break;
        taken[*best] = true;
        order.push_back(*best);
    }
    return take(pop, order, n);
}

std::vector<std::vector<double>> uniform_weights(std::size_t n) {
    std::vector<std::vector<double>> w;
    if (n == 1) return {{1.0, 0.0}};
    for (std::size_t k = 0; k < n; ++k) {
        const double a = static_cast<double>(k) / static_cast<double>(n - 1);
        w.push_back({a, 1.0 - a});
    }
    return w;
}

Population manage_single_objective(Population pop, std::size_t n) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pop[a].objectives[0] != pop[b].objectives[0]) return pop[a].objectives[0] < pop[b].objectives[0];
        return tie_less(pop[a], pop[b]);
    });
    return take(pop, order, n);
}

namespace {

constexpr std::array<std::string_view, 4> kManagementNames = {"meoh", "nsga2", "moead", "single"};

}  // namespace

std::string_view management_name(Management m) { return kManagementNames[static_cast<std::size_t>(m)]; }

Management parse_management(std::string_view text) {
    for (std::size_t k = 0; k < kManagementNames.size(); ++k) {
        if (kManagementNames[k] == text) return static_cast<Management>(k);
    }
    throw std::invalid_argument("unknown management strategy '" + std::string(text) + "'");
}

Population manage(Management m, Population pop, std::size_t n) {
    switch (m) {
        case Management::MEoH: return manage_population(std::move(pop), n);
        case Management::NSGA2: return manage_nsga2(std::move(pop), n);
        case Management::MOEAD: {
            const std::size_t keep = std::min(n, pop.size());
            return manage_moead_like(std::move(pop), keep, uniform_weights(keep));
        }
        case Management::SingleObjective: return manage_single_objective(std::move(pop), n);
    }
    throw std::logic_error("unhandled management strategy");
}

const ArchiveRecord* RunArchive::find(std::uint64_t id) const {
    auto it = std::lower_bound(records.begin(), records.end(), id,
                               [](const ArchiveRecord& r, std::uint64_t x) { return r.id < x; });
    return it != records.end() && it->id == id ? &*it : nullptr;
}

// --- run loop ---------------------------------------------------------------

namespace {

struct Candidate {
    ArchiveRecord record;
    std::optional<dsl::SyntaxTree> tree;  // set while the candidate is still alive
    std::string canonical;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Loop {
public:
    Loop(const RunConfig& cfg, OffspringSource& source, const ProblemEnvironment& env)
        : cfg_(cfg), source_(source), env_(env) {}

    RunResult run();

private:
    std::uint64_t stream(int generation, int slot, int which) const {
        return derive_seed(cfg_.seed, (static_cast<std::uint64_t>(generation) << 32) |
                                          (static_cast<std::uint64_t>(slot) << 2) | static_cast<std::uint64_t>(which));
    }

    OffspringRequest request_for(Operator op, const Population& pool, const DdScores& scores, int generation,
                                 int slot) const;
    Candidate prepare(const OffspringRequest& req, const std::unordered_set<std::string>& seen);
    void evaluate(Candidate& c) const;
    void finish(Candidate& c, Population* pool, std::unordered_set<std::string>* seen, int generation);
    void snapshot(const Population& pop, int generation);

    const RunConfig& cfg_;
    OffspringSource& source_;
    const ProblemEnvironment& env_;
    RunArchive archive_;
    std::uint64_t next_id_ = 1;
    std::uint64_t clock_ = 0;
};

OffspringRequest Loop::request_for(Operator op, const Population& pool, const DdScores& scores, int generation,
                                   int slot) const {
    OffspringRequest req;
    req.op = op;
    req.generation = generation;
    req.slot = slot;
    req.seed = stream(generation, slot, 1);
    if (op == Operator::Init) return req;
    Rng rng(stream(generation, slot, 0));
    const std::size_t k = std::min(cfg_.parents, pool.size());
    const auto drawn = select_parents(scores.pi, k, rng);
    if (op == Operator::E1 || op == Operator::E2) {
        for (std::size_t idx : drawn) req.parents.push_back(&pool[idx]);
    } else {
        std::size_t best = drawn.front();
        for (std::size_t idx : drawn) {
            if (scores.pi[idx] > scores.pi[best]) best = idx;
        }
        req.parents.push_back(&pool[best]);
    }
    return req;
}

Candidate Loop::prepare(const OffspringRequest& req, const std::unordered_set<std::string>& seen) {
    Candidate c;
    auto& r = c.record;
    r.id = next_id_++;
    r.generation = req.generation;
    r.slot = req.slot;
    r.op = req.op;
    for (const auto* p : req.parents) r.parent_ids.push_back(p->id);
    try {
        GeneratedText out = source_.generate(req, env_);
        r.retries = out.retries;
        operators::Response resp = operators::parse_response(out.text);
        r.description = std::move(resp.description);
        r.source = std::move(resp.code);
        dsl::SyntaxTree tree = dsl::parse(r.source);
        dsl::validate_signature(tree, env_.signature());
        c.canonical = dsl::to_source(tree);
        if (seen.count(c.canonical)) {
            r.failure_category = "duplicate";
            r.failure_message = "same canonical source as a current member";
            return c;
        }
        c.tree = std::move(tree);
    } catch (const GenerationFailure& e) {
        r.failure_category = e.category();
        r.failure_message = e.what();
    } catch (const dsl::DslError& e) {
        r.failure_category = std::string(dsl::error_kind_name(e.kind()));
        r.failure_message = e.what();
    }
    return c;
}

void Loop::evaluate(Candidate& c) const {
    if (!c.tree) return;
    auto& r = c.record;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        Evaluation ev = env_.evaluate(*c.tree, cfg_.objective_mode);
        r.objectives = std::move(ev.objectives);
        r.eval_steps = ev.steps;
        bool finite = true;
        for (double x : r.objectives) finite = finite && std::isfinite(x);
        if (!finite) throw HeuristicFailure("numeric_error", "non-finite objective");
        r.admitted = true;
    } catch (const HeuristicFailure& e) {
        r.objectives.clear();
        r.failure_category = e.category();
        r.failure_message = e.what();
        c.tree.reset();
    }
    if (cfg_.objective_mode == ObjectiveMode::WallTime) {
        r.eval_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
}

void Loop::finish(Candidate& c, Population* pool, std::unordered_set<std::string>* seen, int generation) {
    auto& r = c.record;
    r.timestamp = cfg_.objective_mode == ObjectiveMode::StepCost ? std::to_string(++clock_) : utc_now();
    if (r.admitted && pool) {
        pool->push_back(make_heuristic(r.id, r.description, r.source, std::move(*c.tree), r.objectives, generation,
                                       r.op, r.parent_ids));
        seen->insert(c.canonical);
    }
    archive_.records.push_back(std::move(r));
}

void Loop::snapshot(const Population& pop, int generation) {
    GenerationSnapshot snap;
    snap.generation = generation;
    for (const auto& h : pop) snap.ids.push_back(h.id);
    snap.scores = dd_scores(pop).v;
    archive_.generations.push_back(std::move(snap));
    if (cfg_.on_generation) cfg_.on_generation(archive_.generations.back(), archive_);
}

RunResult Loop::run() {
    if (cfg_.population_size < 1 || cfg_.parents < 1 || cfg_.parents > cfg_.population_size) {
        throw std::invalid_argument("run config needs population_size >= parents >= 1");
    }
    if (cfg_.generations < 1) throw std::invalid_argument("run config needs generations >= 1");
    if (cfg_.schedule.empty()) throw std::invalid_argument("operator schedule is empty");

    const std::size_t n = cfg_.population_size;
    Population pop;
    std::unordered_set<std::string> seen;

    const std::size_t attempts = cfg_.init_max_attempts ? cfg_.init_max_attempts : 4 * n;
    const DdScores none;
    for (std::size_t a = 0; a < attempts && pop.size() < n; ++a) {
        Candidate c = prepare(request_for(Operator::Init, pop, none, 0, static_cast<int>(a)), seen);
        evaluate(c);
        finish(c, &pop, &seen, 0);
    }
    if (pop.size() < 2) {
        throw InitializationExhausted("only " + std::to_string(pop.size()) + " valid heuristics after " +
                                          std::to_string(attempts) + " initialization attempts",
                                      archive_);
    }
    snapshot(pop, 0);

    for (int g = 1; g <= cfg_.generations; ++g) {
        Population pool = pop;
        if (!cfg_.freeze_pool) {
            for (std::size_t s = 0; s < n; ++s) {
                const Operator op = cfg_.schedule[s % cfg_.schedule.size()];
                const DdScores scores = dd_scores(pool);
                Candidate c = prepare(request_for(op, pool, scores, g, static_cast<int>(s)), seen);
                evaluate(c);
                finish(c, &pool, &seen, g);
            }
        } else {
            const DdScores scores = dd_scores(pop);
            std::vector<Candidate> batch;
            std::unordered_set<std::string> pending = seen;
            for (std::size_t s = 0; s < n; ++s) {
                const Operator op = cfg_.schedule[s % cfg_.schedule.size()];
                batch.push_back(prepare(request_for(op, pop, scores, g, static_cast<int>(s)), pending));
                if (batch.back().tree) pending.insert(batch.back().canonical);
            }
            if (cfg_.objective_mode == ObjectiveMode::StepCost) {
                const auto count = static_cast<long>(batch.size());
                std::vector<std::exception_ptr> errors(batch.size());
#pragma omp parallel for schedule(dynamic)
                for (long k = 0; k < count; ++k) {
                    try {
                        evaluate(batch[k]);
                    } catch (...) {
                        errors[k] = std::current_exception();
                    }
                }
                for (const auto& e : errors) {
                    if (e) std::rethrow_exception(e);
                }
            } else {
                for (auto& c : batch) evaluate(c);
            }
            for (auto& c : batch) finish(c, &pool, &seen, g);
        }
        pop = manage(cfg_.management, std::move(pool), n);
        seen.clear();
        for (const auto& h : pop) seen.insert(dsl::to_source(h.tree));
        snapshot(pop, g);
    }
    return {std::move(pop), std::move(archive_)};
}

}  // namespace

RunResult run_meoh(const RunConfig& config, OffspringSource& source, const ProblemEnvironment& env) {
    return Loop(config, source, env).run();
}

}  // namespace meoh::evolution
