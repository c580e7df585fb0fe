#include "meoh/tsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

#include "language_notes.hpp"
#include "meoh/rng.hpp"

namespace meoh::tsp {

Instance from_coords(std::string name, std::vector<Point> coords, DistanceRounding rounding) {
    const std::size_t n = coords.size();
    if (n < 3) throw std::invalid_argument("a TSP instance needs at least 3 nodes");
    Instance inst{std::move(name), std::move(coords), Matrix(n, n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = std::hypot(inst.coords[i].x - inst.coords[j].x, inst.coords[i].y - inst.coords[j].y);
            if (rounding == DistanceRounding::Nearest) d = std::floor(d + 0.5);
            inst.distance(i, j) = d;
            inst.distance(j, i) = d;
        }
    }
    return inst;
}

Instance generate_uniform_instance(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> coords(n);
    for (auto& p : coords) {
        p.x = rng.uniform();
        p.y = rng.uniform();
    }
    return from_coords("uniform" + std::to_string(n) + "_s" + std::to_string(seed), std::move(coords));
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void format_error(int line_no, const std::string& line, const std::string& why) {
    throw FormatError("line " + std::to_string(line_no) + " ('" + line + "'): " + why);
}

}  // namespace

Instance parse_tsplib(std::istream& in) {
    std::string name;
    std::size_t dimension = 0;
    bool have_type = false;
    std::string line;
    int line_no = 0;
    bool in_coords = false;
    std::vector<Point> coords;
    std::vector<bool> seen;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t == "EOF") break;
        if (in_coords) {
            std::istringstream fields(t);
            long id = 0;
            Point p;
            if (!(fields >> id >> p.x >> p.y)) format_error(line_no, t, "expected 'id x y'");
            if (id < 1 || static_cast<std::size_t>(id) > dimension) format_error(line_no, t, "node id out of range");
            if (seen[id - 1]) format_error(line_no, t, "duplicate node id");
            seen[id - 1] = true;
            coords[id - 1] = p;
            continue;
        }
        if (t == "NODE_COORD_SECTION") {
            if (!have_type) format_error(line_no, t, "EDGE_WEIGHT_TYPE must precede the coordinates");
            if (dimension < 3) format_error(line_no, t, "DIMENSION must be given and at least 3");
            coords.assign(dimension, Point{});
            seen.assign(dimension, false);
            in_coords = true;
            continue;
        }
        const auto colon = t.find(':');
        if (colon == std::string::npos) format_error(line_no, t, "expected 'KEY : VALUE'");
        const std::string key = trim(t.substr(0, colon));
        const std::string value = trim(t.substr(colon + 1));
        if (key == "NAME") {
            name = value;
        } else if (key == "TYPE") {
            if (value != "TSP") format_error(line_no, t, "only TYPE TSP is supported");
        } else if (key == "DIMENSION") {
            try {
                dimension = std::stoul(value);
            } catch (const std::exception&) {
                format_error(line_no, t, "DIMENSION is not an integer");
            }
        } else if (key == "EDGE_WEIGHT_TYPE") {
            if (value != "EUC_2D") throw UnsupportedEdgeWeightType("edge weight type " + value + " is not supported");
            have_type = true;
        } else if (key.ends_with("_SECTION")) {
            format_error(line_no, t, "unsupported section");
        }
        // COMMENT and other descriptive keys are ignored.
    }
    if (!in_coords) throw FormatError("missing NODE_COORD_SECTION");
    for (std::size_t i = 0; i < dimension; ++i) {
        if (!seen[i]) throw FormatError("node " + std::to_string(i + 1) + " has no coordinates");
    }
    return from_coords(name, std::move(coords), DistanceRounding::Nearest);
}

Instance load_tsplib(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    Instance inst = parse_tsplib(in);
    if (inst.name.empty()) inst.name = path.stem().string();
    return inst;
}

std::vector<std::pair<std::string, double>> load_reference_lengths(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::pair<std::string, double>> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream fields(t);
        std::string name;
        double length = 0.0;
        if (!(fields >> name >> length) || length <= 0.0) format_error(line_no, t, "expected 'name length'");
        out.emplace_back(name, length);
    }
    return out;
}

double tour_length(std::span<const int> tour, const Matrix& m) {
    double total = 0.0;
    const std::size_t n = tour.size();
    for (std::size_t k = 0; k < n; ++k) total += m(tour[k], tour[(k + 1) % n]);
    return total;
}

bool is_permutation(std::span<const int> tour, std::size_t n) {
    if (tour.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (int v : tour) {
        if (v < 0 || static_cast<std::size_t>(v) >= n || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

Tour nearest_neighbor_tour(const Matrix& m, int start) {
    const std::size_t n = m.rows();
    if (start < 0 || static_cast<std::size_t>(start) >= n) throw std::out_of_range("start node out of range");
    std::vector<bool> visited(n, false);
    Tour tour;
    tour.reserve(n);
    int cur = start;
    visited[cur] = true;
    tour.push_back(cur);
    for (std::size_t step = 1; step < n; ++step) {
        int best = -1;
        for (std::size_t j = 0; j < n; ++j) {
            if (visited[j]) continue;
            if (best < 0 || m(cur, j) < m(cur, best)) best = static_cast<int>(j);
        }
        visited[best] = true;
        tour.push_back(best);
        cur = best;
    }
    return tour;
}

Tour nearest_neighbor_tour(const Instance& inst, int start) { return nearest_neighbor_tour(inst.distance, start); }

namespace {

constexpr double kImprovement = 1e-10;

// Cost change from exchanging the nodes at positions i < j.
double swap_delta(const Tour& t, const Matrix& m, int i, int j) {
    const int n = static_cast<int>(t.size());
    std::array<int, 4> edges = {(i - 1 + n) % n, i, (j - 1 + n) % n, j};
    auto node_at = [&](int k) { return k == i ? t[j] : (k == j ? t[i] : t[k]); };
    double delta = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (std::find(edges.begin(), edges.begin() + e, edges[e]) != edges.begin() + e) continue;
        const int p = edges[e];
        const int q = (p + 1) % n;
        delta += m(node_at(p), node_at(q)) - m(t[p], t[q]);
    }
    return delta;
}

// Cost change from moving the node at position i so it lands at position j.
// Moving the first node to the end (or back) only rotates the cycle.
double relocate_delta(const Tour& t, const Matrix& m, int i, int j) {
    const int n = static_cast<int>(t.size());
    if ((i == 0 && j == n - 1) || (j == 0 && i == n - 1)) return 0.0;
    const int a = t[i];
    if (i < j) {
        const int p = t[(i - 1 + n) % n];
        const int q = t[i + 1];
        const int r = t[j];
        const int s = t[(j + 1) % n];
        return m(p, q) + m(r, a) + m(a, s) - m(p, a) - m(a, q) - m(r, s);
    }
    const int p = t[i - 1];
    const int q = t[(i + 1) % n];
    const int r = t[(j - 1 + n) % n];
    const int s = t[j];
    return m(r, a) + m(a, s) + m(p, q) - m(r, s) - m(p, a) - m(a, q);
}

void apply_relocate(Tour& t, int i, int j) {
    if (i < j) {
        std::rotate(t.begin() + i, t.begin() + i + 1, t.begin() + j + 1);
    } else {
        std::rotate(t.begin() + j, t.begin() + i, t.begin() + i + 1);
    }
}

}  // namespace

Tour local_search(Tour tour, const Matrix& m) {
    const int n = static_cast<int>(tour.size());
    if (n < 3) return tour;
    enum class Kind { None, Swap, Relocate };
    for (;;) {
        Kind kind = Kind::None;
        int bi = 0;
        int bj = 0;
        double best = -kImprovement;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double d = swap_delta(tour, m, i, j);
                if (d < best) {
                    best = d;
                    kind = Kind::Swap;
                    bi = i;
                    bj = j;
                }
            }
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const double d = relocate_delta(tour, m, i, j);
                if (d < best) {
                    best = d;
                    kind = Kind::Relocate;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (kind == Kind::None) return tour;
        if (kind == Kind::Swap) {
            std::swap(tour[bi], tour[bj]);
        } else {
            apply_relocate(tour, bi, bj);
        }
    }
}

std::pair<Tour, double> exact_solve_small(const Instance& inst) {
    const std::size_t n = inst.size();
    if (n > kExactMaxNodes) throw TooLarge("exact solver supports at most 13 nodes, got " + std::to_string(n));
    if (n < 3) throw std::invalid_argument("a TSP instance needs at least 3 nodes");
    const Matrix& d = inst.distance;
    // Subsets over nodes 1..n-1; node 0 is the fixed start.
    const std::size_t m = n - 1;
    const std::size_t full = (std::size_t{1} << m) - 1;
    constexpr double inf = std::numeric_limits<double>::infinity();
    DenseMatrix<double> dp(full + 1, m, inf);
    DenseMatrix<int> parent(full + 1, m, -1);
    for (std::size_t k = 0; k < m; ++k) dp(std::size_t{1} << k, k) = d(0, k + 1);
    for (std::size_t mask = 1; mask <= full; ++mask) {
        for (std::size_t last = 0; last < m; ++last) {
            if (!(mask & (std::size_t{1} << last))) continue;
            const double base = dp(mask, last);
            if (base == inf) continue;
            for (std::size_t nxt = 0; nxt < m; ++nxt) {
                if (mask & (std::size_t{1} << nxt)) continue;
                const std::size_t nm = mask | (std::size_t{1} << nxt);
                const double cand = base + d(last + 1, nxt + 1);
                if (cand < dp(nm, nxt)) {
                    dp(nm, nxt) = cand;
                    parent(nm, nxt) = static_cast<int>(last);
                }
            }
        }
    }
    double best = inf;
    int last = -1;
    for (std::size_t k = 0; k < m; ++k) {
        const double cand = dp(full, k) + d(k + 1, 0);
        if (cand < best) {
            best = cand;
            last = static_cast<int>(k);
        }
    }
    Tour tour;
    std::size_t mask = full;
    while (last >= 0) {
        tour.push_back(last + 1);
        const int prev = parent(mask, last);
        mask &= ~(std::size_t{1} << last);
        last = prev;
    }
    tour.push_back(0);
    std::reverse(tour.begin(), tour.end());
    return {tour, best};
}

namespace {

bool two_opt_pass(Tour& t, const Matrix& m) {
    const int n = static_cast<int>(t.size());
    bool improved = false;
    for (int i = 0; i < n - 1; ++i) {
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            const int a = t[i], b = t[i + 1], c = t[j], e = t[(j + 1) % n];
            const double delta = m(a, c) + m(b, e) - m(a, b) - m(c, e);
            if (delta < -kImprovement) {
                std::reverse(t.begin() + i + 1, t.begin() + j + 1);
                improved = true;
            }
        }
    }
    return improved;
}

bool or_opt_pass(Tour& t, const Matrix& m) {
    const int n = static_cast<int>(t.size());
    for (int len = 1; len <= 3; ++len) {
        if (n < len + 3) break;
        for (int i = 0; i + len <= n; ++i) {
            const int p = t[(i - 1 + n) % n];
            const int s0 = t[i];
            const int sl = t[i + len - 1];
            const int q = t[(i + len) % n];
            const double removed = m(p, s0) + m(sl, q) - m(p, q);
            for (int k = 0; k < n; ++k) {
                // Edge (t[k], t[k+1]) must lie outside the segment and its two boundary edges.
                const int rel = (k - (i - 1) + n) % n;
                if (rel <= len) continue;
                const int u = t[k];
                const int v = t[(k + 1) % n];
                const double fwd = m(u, s0) + m(sl, v) - m(u, v);
                const double rev = m(u, sl) + m(s0, v) - m(u, v);
                const bool reversed = rev < fwd;
                if (std::min(fwd, rev) - removed < -kImprovement) {
                    Tour seg(t.begin() + i, t.begin() + i + len);
                    if (reversed) std::reverse(seg.begin(), seg.end());
                    Tour rest;
                    rest.reserve(n);
                    for (int x = 0; x < n; ++x) {
                        if (x < i || x >= i + len) rest.push_back(t[x]);
                    }
                    const auto at = std::find(rest.begin(), rest.end(), u);
                    rest.insert(at + 1, seg.begin(), seg.end());
                    t = std::move(rest);
                    return true;
                }
            }
        }
    }
    return false;
}

}  // namespace

std::pair<Tour, double> reference_solve(const Instance& inst, int restarts, std::uint64_t seed) {
    const Matrix& m = inst.distance;
    const int n = static_cast<int>(inst.size());
    Rng rng(seed);
    Tour best;
    double best_len = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        Tour t;
        if (r == 0) {
            t = nearest_neighbor_tour(m, 0);
        } else {
            t.resize(n);
            std::iota(t.begin(), t.end(), 0);
            for (int k = n - 1; k > 0; --k) std::swap(t[k], t[rng.below(k + 1)]);
        }
        while (two_opt_pass(t, m) || or_opt_pass(t, m)) {
        }
        const double len = tour_length(t, m);
        if (len < best_len) {
            best_len = len;
            best = t;
        }
    }
    return {best, best_len};
}

const dsl::TaskSignature& signature() {
    static const dsl::TaskSignature sig{"update_edge_distance",
                                        {{"edge_distance", dsl::Shape::Matrix},
                                         {"local_opt_tour", dsl::Shape::Vector},
                                         {"edge_n_used", dsl::Shape::Matrix}},
                                        dsl::Shape::Matrix};
    return sig;
}

const TaskText& task_text() {
    static const std::string io =
        "\"local_opt_tour\" includes the local optimal tour of IDs, \"edge_distance\" and "
        "\"edge_n_used\" are matrixes, \"edge_n_used\" includes the number of each edge used during "
        "permutation. \"local_opt_tour\" is a vector of 0-based node IDs; \"edge_distance\", "
        "\"edge_n_used\" and the returned matrix are n x n matrices.";
    static const TaskText text{
        "Given an edge distance matrix and a local optimal route, please help me design a strategy to "
        "update the distance matrix to avoid being trapped in the local optimum with the final goal of "
        "finding a tour with minimized distance. You should create a heuristic for me to update the edge "
        "distance matrix.",
        "Implement it as a function named \"update_edge_distance\". This function should accept 3 inputs: "
        "[\"edge_distance\", \"local_opt_tour\", \"edge_n_used\"]. The function should return 1 output: "
        "[\"updated_edge_distance\"]. " +
            io + " " + detail::kLanguageNotes,
        io};
    return text;
}

GlsResult gls_solve(const Instance& inst, const dsl::SyntaxTree& heuristic, const GlsConfig& config) {
    const std::size_t n = inst.size();
    const Matrix& truth = inst.distance;
    const auto t0 = std::chrono::steady_clock::now();

    GlsResult out;
    out.edge_n_used = Matrix(n, n, 0.0);
    Tour current = nearest_neighbor_tour(truth, 0);
    out.best = current;
    out.best_length = tour_length(current, truth);

    std::vector<dsl::Value> args(3);
    try {
        for (int it = 0; it < config.max_iters; ++it) {
            current = local_search(std::move(current), truth);
            const double len = tour_length(current, truth);
            if (len < out.best_length) {
                out.best_length = len;
                out.best = current;
            }
            for (std::size_t k = 0; k < n; ++k) {
                const int a = current[k];
                const int b = current[(k + 1) % n];
                out.edge_n_used(a, b) += 1.0;
                out.edge_n_used(b, a) += 1.0;
            }
            args[0] = truth;
            args[1] = dsl::Vector(current.begin(), current.end());
            args[2] = out.edge_n_used;
            dsl::ExecResult r = dsl::execute(heuristic, args, config.limits);
            out.total_steps += r.steps_used;
            const auto* working = std::get_if<Matrix>(&r.value);
            if (!working || working->rows() != n || working->cols() != n) {
                throw OutputShapeError("update_edge_distance must return an " + std::to_string(n) + "x" +
                                       std::to_string(n) + " matrix");
            }
            if (!dsl::all_finite(r.value)) throw OutputShapeError("updated matrix has non-finite entries");
            current = config.restart_from_nn ? nearest_neighbor_tour(*working, current[0])
                                             : local_search(std::move(current), *working);
            ++out.iterations;
            out.best_trajectory.push_back(out.best_length);
            if (std::chrono::steady_clock::now() - t0 >= config.time_budget) break;
        }
    } catch (const dsl::DslError& e) {
        rethrow_as_failure(e);
    }
    return out;
}

namespace {

void check_inputs(std::span<const Instance> instances, std::span<const double> refs) {
    if (instances.empty()) throw std::invalid_argument("evaluate_tsp needs at least one instance");
    if (instances.size() != refs.size()) throw std::invalid_argument("one reference length per instance");
    for (double r : refs) {
        if (!(r > 0.0)) throw std::invalid_argument("reference lengths must be positive");
    }
}

Report report_for(const GlsResult& g, double ref) {
    return {g.best_length, ref, (g.best_length - ref) / ref, g.total_steps};
}

Evaluation aggregate(const std::vector<Report>& rs) {
    Evaluation ev;
    double gap = 0.0;
    for (const auto& r : rs) {
        gap += r.gap;
        ev.steps += r.steps;
    }
    ev.objectives = {gap / static_cast<double>(rs.size()), static_cast<double>(ev.steps)};
    return ev;
}

std::vector<Report> run_serial(const dsl::SyntaxTree& h, std::span<const Instance> instances,
                               std::span<const double> refs, const GlsConfig& gls) {
    std::vector<Report> rs;
    rs.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) rs.push_back(report_for(gls_solve(instances[i], h, gls), refs[i]));
    return rs;
}

}  // namespace

Evaluation evaluate_tsp_serial(const dsl::SyntaxTree& heuristic, std::span<const Instance> instances,
                               std::span<const double> reference_lengths, const EvalOptions& options,
                               std::vector<Report>* reports) {
    check_inputs(instances, reference_lengths);
    std::vector<Report> rs;
    std::array<double, 3> secs{};
    const std::size_t repeats = options.mode == ObjectiveMode::WallTime ? secs.size() : 1;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        auto current = run_serial(heuristic, instances, reference_lengths, options.gls);
        secs[rep] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (rep == 0) rs = std::move(current);
    }
    Evaluation ev = aggregate(rs);
    if (options.mode == ObjectiveMode::WallTime) {
        std::sort(secs.begin(), secs.end());
        ev.objectives[1] = secs[1];
    }
    if (reports) *reports = std::move(rs);
    return ev;
}

Evaluation evaluate_tsp(const dsl::SyntaxTree& heuristic, std::span<const Instance> instances,
                        std::span<const double> reference_lengths, const EvalOptions& options,
                        std::vector<Report>* reports) {
    if (options.mode == ObjectiveMode::WallTime) {
        return evaluate_tsp_serial(heuristic, instances, reference_lengths, options, reports);
    }
    check_inputs(instances, reference_lengths);
    const auto n = static_cast<long>(instances.size());
    std::vector<Report> rs(instances.size());
    std::vector<std::exception_ptr> errors(instances.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        try {
            rs[i] = report_for(gls_solve(instances[i], heuristic, options.gls), reference_lengths[i]);
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

Environment::Environment(std::vector<Instance> instances, std::vector<double> reference_lengths,
                         EvalOptions options)
    : instances_(std::move(instances)), references_(std::move(reference_lengths)), options_(options) {
    check_inputs(instances_, references_);
}

Evaluation Environment::evaluate(const dsl::SyntaxTree& heuristic, ObjectiveMode mode) const {
    EvalOptions opt = options_;
    opt.mode = mode;
    return evaluate_tsp(heuristic, instances_, references_, opt);
}

}  // namespace meoh::tsp
