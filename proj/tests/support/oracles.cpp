#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "meoh/dsl/parser.hpp"

namespace oracle {

using meoh::dsl::SyntaxTree;

bool dominates(const Vec& a, const Vec& b) {
    bool strictly = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strictly = true;
    }
    return strictly;
}

std::vector<std::size_t> nondominated(const std::vector<Vec>& set) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < set.size(); ++j) {
        bool beaten = false;
        for (std::size_t i = 0; i < set.size(); ++i) beaten = beaten || dominates(set[i], set[j]);
        if (!beaten) out.push_back(j);
    }
    return out;
}

std::vector<std::vector<int>> dominance(const std::vector<Vec>& set) {
    std::vector<std::vector<int>> d(set.size(), std::vector<int>(set.size(), 0));
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (std::size_t j = 0; j < set.size(); ++j) d[i][j] = dominates(set[i], set[j]) ? 1 : 0;
    }
    return d;
}

std::vector<const SyntaxTree*> nodes(const SyntaxTree& t) {
    std::vector<const SyntaxTree*> out{&t};
    for (const auto& c : t.children) {
        auto sub = nodes(c);
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

std::size_t occurrences(const SyntaxTree& sub, const SyntaxTree& in) {
    std::size_t k = 0;
    for (const SyntaxTree* n : nodes(in)) k += (*n == sub);
    return k;
}

std::size_t clipped_matches(const SyntaxTree& a, const SyntaxTree& b) {
    const auto nb = nodes(b);
    std::size_t total = 0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
        bool seen = false;
        for (std::size_t e = 0; e < k && !seen; ++e) seen = (*nb[e] == *nb[k]);
        if (seen) continue;
        total += std::min(occurrences(*nb[k], a), occurrences(*nb[k], b));
    }
    return total;
}

double similarity(const SyntaxTree& a, const SyntaxTree& b) {
    return static_cast<double>(clipped_matches(a, b)) / static_cast<double>(nodes(b).size());
}

Vec dd_scores(const std::vector<Vec>& objectives, const std::vector<SyntaxTree>& trees) {
    const std::size_t n = objectives.size();
    Vec v(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i != j && dominates(objectives[i], objectives[j])) acc += -similarity(trees[i], trees[j]);
        }
        v[j] = acc;
    }
    return v;
}

Vec dd_scores(const std::vector<std::vector<int>>& dom, const meoh::Matrix& s) {
    const std::size_t n = dom.size();
    Vec v(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (dom[i][j]) acc += s(i, j);
        }
        v[j] = acc;
    }
    return v;
}

double hv_monte_carlo(const std::vector<Vec>& points, double ref, std::size_t samples, std::uint64_t seed) {
    meoh::Rng rng(seed);
    std::size_t hit = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = rng.uniform() * ref;
        const double y = rng.uniform() * ref;
        for (const auto& p : points) {
            if (p[0] <= x && p[1] <= y) {
                ++hit;
                break;
            }
        }
    }
    return static_cast<double>(hit) / static_cast<double>(samples) * ref * ref;
}

double igd(const std::vector<Vec>& approx, const std::vector<Vec>& reference) {
    double total = 0.0;
    for (const auto& p : reference) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : approx) {
            double sq = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) sq += (p[i] - q[i]) * (p[i] - q[i]);
            best = std::min(best, std::sqrt(sq));
        }
        total += best;
    }
    return total / static_cast<double>(reference.size());
}

bool tie_less(const meoh::Heuristic& a, const meoh::Heuristic& b) {
    for (std::size_t i = 0; i < a.objectives.size(); ++i) {
        if (a.objectives[i] < b.objectives[i]) return true;
        if (a.objectives[i] > b.objectives[i]) return false;
    }
    return a.id < b.id;
}

std::vector<std::uint64_t> manage_top_n(const meoh::Population& pop, std::size_t n) {
    std::vector<Vec> objs;
    std::vector<SyntaxTree> trees;
    for (const auto& h : pop) {
        objs.push_back(h.objectives);
        trees.push_back(h.tree);
    }
    const Vec v = dd_scores(objs, trees);
    std::vector<std::size_t> idx(pop.size());
    std::iota(idx.begin(), idx.end(), 0);
    // selection by repeated maximum rather than a sort
    std::vector<std::uint64_t> kept;
    std::vector<bool> used(pop.size(), false);
    for (std::size_t r = 0; r < n && r < pop.size(); ++r) {
        std::size_t best = pop.size();
        for (std::size_t k = 0; k < pop.size(); ++k) {
            if (used[k]) continue;
            if (best == pop.size() || v[k] > v[best] || (v[k] == v[best] && tie_less(pop[k], pop[best]))) best = k;
        }
        used[best] = true;
        kept.push_back(pop[best].id);
    }
    return kept;
}

std::vector<std::uint64_t> nsga2(const meoh::Population& pop, std::size_t n) {
    const std::size_t size = pop.size();
    std::vector<bool> placed(size, false);
    std::vector<std::vector<std::size_t>> fronts;
    std::size_t remaining = size;
    while (remaining > 0) {
        std::vector<std::size_t> front;
        for (std::size_t j = 0; j < size; ++j) {
            if (placed[j]) continue;
            bool beaten = false;
            for (std::size_t i = 0; i < size; ++i) {
                if (!placed[i] && dominates(pop[i].objectives, pop[j].objectives)) beaten = true;
            }
            if (!beaten) front.push_back(j);
        }
        for (std::size_t j : front) placed[j] = true;
        remaining -= front.size();
        fronts.push_back(front);
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> crowd(size, 0.0);
    const std::size_t m = size ? pop[0].objectives.size() : 0;
    for (const auto& front : fronts) {
        for (std::size_t axis = 0; axis < m; ++axis) {
            std::vector<std::size_t> s = front;
            // insertion sort by (value, id)
            for (std::size_t a = 1; a < s.size(); ++a) {
                for (std::size_t b = a; b > 0; --b) {
                    const auto& x = pop[s[b - 1]];
                    const auto& y = pop[s[b]];
                    const bool swap = x.objectives[axis] > y.objectives[axis] ||
                                      (x.objectives[axis] == y.objectives[axis] && x.id > y.id);
                    if (!swap) break;
                    std::swap(s[b - 1], s[b]);
                }
            }
            const double lo = pop[s.front()].objectives[axis];
            const double hi = pop[s.back()].objectives[axis];
            crowd[s.front()] = inf;
            crowd[s.back()] = inf;
            if (hi - lo <= 0.0) continue;
            for (std::size_t k = 1; k + 1 < s.size(); ++k) {
                crowd[s[k]] += (pop[s[k + 1]].objectives[axis] - pop[s[k - 1]].objectives[axis]) / (hi - lo);
            }
        }
    }

    std::vector<std::uint64_t> kept;
    for (const auto& front : fronts) {
        std::vector<bool> used(size, false);
        for (std::size_t r = 0; r < front.size() && kept.size() < n; ++r) {
            std::size_t best = size;
            for (std::size_t k : front) {
                if (used[k]) continue;
                if (best == size || crowd[k] > crowd[best] ||
                    (crowd[k] == crowd[best] && tie_less(pop[k], pop[best]))) {
                    best = k;
                }
            }
            used[best] = true;
            kept.push_back(pop[best].id);
        }
    }
    return kept;
}

std::vector<std::uint64_t> moead_exhaustive(const meoh::Population& pop, const std::vector<Vec>& weights) {
    const std::size_t size = pop.size();
    const std::size_t m = pop[0].objectives.size();
    Vec lo(m, std::numeric_limits<double>::infinity());
    Vec hi(m, -std::numeric_limits<double>::infinity());
    for (const auto& h : pop) {
        for (std::size_t i = 0; i < m; ++i) {
            lo[i] = std::min(lo[i], h.objectives[i]);
            hi[i] = std::max(hi[i], h.objectives[i]);
        }
    }
    auto g = [&](std::size_t k, const Vec& w) {
        double worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double f = hi[i] - lo[i] < 1e-12 ? 0.0 : (pop[k].objectives[i] - lo[i]) / (hi[i] - lo[i]);
            worst = std::max(worst, w[i] * std::abs(f));
        }
        return worst;
    };
    // member k is better than member l at slot s
    auto better = [&](std::size_t k, std::size_t l, std::size_t s) {
        const double gk = g(k, weights[s]);
        const double gl = g(l, weights[s]);
        if (gk != gl) return gk < gl;
        return tie_less(pop[k], pop[l]);
    };

    const std::size_t slots = std::min(weights.size(), size);
    std::vector<std::size_t> best;
    std::vector<std::size_t> current;
    std::vector<bool> used(size, false);
    std::function<void()> search = [&] {
        if (current.size() == slots) {
            bool improves = best.empty();
            for (std::size_t s = 0; s < slots && !improves; ++s) {
                if (current[s] == best[s]) continue;
                improves = better(current[s], best[s], s);
                break;
            }
            if (improves) best = current;
            return;
        }
        for (std::size_t k = 0; k < size; ++k) {
            if (used[k]) continue;
            used[k] = true;
            current.push_back(k);
            search();
            current.pop_back();
            used[k] = false;
        }
    };
    search();
    std::vector<std::uint64_t> ids;
    for (std::size_t k : best) ids.push_back(pop[k].id);
    return ids;
}

long best_fit_bins(const std::vector<int>& items, int capacity) {
    std::vector<int> room;
    for (int item : items) {
        std::size_t pick = room.size();
        for (std::size_t b = 0; b < room.size(); ++b) {
            if (room[b] >= item && (pick == room.size() || room[b] < room[pick])) pick = b;
        }
        if (pick == room.size()) room.push_back(capacity);
        room[pick] -= item;
    }
    return static_cast<long>(room.size());
}

long ceil_div_sum(const std::vector<int>& items, int capacity) {
    unsigned __int128 total = 0;
    for (int x : items) total += static_cast<unsigned>(x);
    const unsigned __int128 c = static_cast<unsigned>(capacity);
    return static_cast<long>((total + c - 1) / c);
}

double tour_length(const std::vector<int>& tour, const meoh::Matrix& m) {
    double len = 0.0;
    for (std::size_t k = 0; k < tour.size(); ++k) len += m(tour[k], tour[(k + 1) % tour.size()]);
    return len;
}

double brute_force_optimum(const meoh::Matrix& m) {
    std::vector<int> rest(m.rows() - 1);
    std::iota(rest.begin(), rest.end(), 1);
    double best = std::numeric_limits<double>::infinity();
    do {
        std::vector<int> tour{0};
        tour.insert(tour.end(), rest.begin(), rest.end());
        best = std::min(best, tour_length(tour, m));
    } while (std::next_permutation(rest.begin(), rest.end()));
    return best;
}

bool is_swap_relocate_optimum(const std::vector<int>& tour, const meoh::Matrix& m, double eps) {
    const double base = tour_length(tour, m);
    const std::size_t n = tour.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            auto t = tour;
            std::swap(t[i], t[j]);
            if (tour_length(t, m) < base - eps) return false;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            auto t = tour;
            const int node = t[i];
            t.erase(t.begin() + static_cast<long>(i));
            t.insert(t.begin() + static_cast<long>(j), node);
            if (tour_length(t, m) < base - eps) return false;
        }
    }
    return true;
}

namespace {

const std::vector<std::string> kUnary = {"abs", "sqrt", "log", "exp", "tanh", "floor", "ceil",
                                         "sum", "mean", "maxv", "minv", "len"};
const std::vector<std::string> kBinaryCalls = {"min", "max", "pow"};
const std::vector<std::string> kOps = {"+", "-", "*", "/", "%", "^", "<", "<=", ">", ">=", "==", "!=", "&&", "||"};

std::string number(meoh::Rng& rng) {
    if (rng.chance(0.5)) return std::to_string(rng.below(20));
    return std::to_string(rng.below(10)) + "." + std::to_string(rng.below(100));
}

std::string expression(meoh::Rng& rng, const std::vector<std::string>& vars, int depth) {
    if (depth <= 0 || rng.chance(0.25)) {
        return rng.chance(0.5) ? vars[rng.below(vars.size())] : number(rng);
    }
    switch (rng.below(6)) {
        case 0:
        case 1: {
            std::string text = expression(rng, vars, depth - 1) + " " + kOps[rng.below(kOps.size())] + " " +
                               expression(rng, vars, depth - 1);
            return rng.chance(0.4) ? "(" + text + ")" : text;
        }
        case 2: return (rng.chance(0.7) ? "-" : "!") + expression(rng, vars, depth - 1);
        case 3: return kUnary[rng.below(kUnary.size())] + "(" + expression(rng, vars, depth - 1) + ")";
        case 4:
            return kBinaryCalls[rng.below(kBinaryCalls.size())] + "(" + expression(rng, vars, depth - 1) + ", " +
                   expression(rng, vars, depth - 1) + ")";
        default: {
            std::string text = vars[rng.below(vars.size())] + "[" + expression(rng, vars, depth - 1);
            if (rng.chance(0.3)) text += ", " + expression(rng, vars, depth - 1);
            return text + "]";
        }
    }
}

void statements(meoh::Rng& rng, std::vector<std::string>& vars, int count, int depth, int indent, std::string& out,
                int& fresh) {
    const std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    for (int s = 0; s < count; ++s) {
        switch (rng.below(depth > 1 ? 6 : 4)) {
            case 0:
            case 1: {
                const std::string name = "v" + std::to_string(fresh++);
                out += pad + "let " + name + " = " + expression(rng, vars, depth) + ";\n";
                vars.push_back(name);
                break;
            }
            case 2: out += pad + vars[rng.below(vars.size())] + " = " + expression(rng, vars, depth) + ";\n"; break;
            case 3:
                out += pad + vars[rng.below(vars.size())] + "[" + expression(rng, vars, 1) + "] = " +
                       expression(rng, vars, depth) + ";\n";
                break;
            case 4: {
                const std::string var = "i" + std::to_string(fresh++);
                out += pad + "for " + var + " in " + expression(rng, vars, 1) + ".." + expression(rng, vars, 1) +
                       " {\n";
                auto inner = vars;
                inner.push_back(var);
                statements(rng, inner, 1 + static_cast<int>(rng.below(2)), depth - 1, indent + 1, out, fresh);
                out += pad + "}\n";
                break;
            }
            default: {
                out += pad + "if " + expression(rng, vars, 2) + " {\n";
                auto inner = vars;
                statements(rng, inner, 1, depth - 1, indent + 1, out, fresh);
                if (rng.chance(0.5)) out += pad + "    return " + expression(rng, inner, 1) + ";\n";
                out += pad + "}";
                if (rng.chance(0.5)) {
                    out += " else {\n";
                    auto other = vars;
                    statements(rng, other, 1, depth - 1, indent + 1, out, fresh);
                    out += pad + "}";
                }
                out += "\n";
                break;
            }
        }
    }
}

}  // namespace

std::string random_program(meoh::Rng& rng, const std::vector<std::string>& params, int max_statements, int max_depth) {
    std::string out = "fn score(";
    for (std::size_t k = 0; k < params.size(); ++k) out += (k ? ", " : "") + params[k];
    out += ") {\n";
    std::vector<std::string> vars = params;
    int fresh = 0;
    statements(rng, vars, static_cast<int>(rng.below(static_cast<std::uint64_t>(max_statements) + 1)), max_depth, 1,
               out, fresh);
    out += "    return " + expression(rng, vars, max_depth) + ";\n}\n";
    return out;
}

std::vector<Vec> random_objectives(meoh::Rng& rng, std::size_t n, std::size_t m, int grid) {
    std::vector<Vec> out(n, Vec(m));
    for (auto& v : out) {
        for (auto& x : v) x = static_cast<double>(rng.below(static_cast<std::uint64_t>(grid))) / grid;
    }
    return out;
}

meoh::Population random_population(meoh::Rng& rng, std::size_t n, std::uint64_t first_id) {
    meoh::Population pop;
    const auto objs = random_objectives(rng, n, 2, 8);
    for (std::size_t k = 0; k < n; ++k) {
        const std::string src = random_program(rng, {"item", "bins"}, 2, 2);
        pop.push_back(meoh::make_heuristic(first_id + k, "h" + std::to_string(k), src, meoh::dsl::parse(src), objs[k]));
    }
    return pop;
}

}  // namespace oracle
