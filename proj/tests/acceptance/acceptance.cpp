// One line per acceptance criterion; exit status is the number of failures.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <unistd.h>

#include "meoh/bpp.hpp"
#include "meoh/dsl/parser.hpp"
#include "meoh/dsl/signature.hpp"
#include "meoh/evolution.hpp"
#include "meoh/operators.hpp"
#include "meoh/pareto.hpp"
#include "meoh/runner.hpp"
#include "meoh/similarity.hpp"
#include "meoh/tsp.hpp"
#include "oracles.hpp"
#include "stub_server.hpp"

using namespace meoh;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects the first few mismatches so a failing line says why.
struct Check {
    bool ok = true;
    std::string why;
    void expect(bool cond, const std::string& what) {
        if (cond) return;
        if (ok) why = what;
        ok = false;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fmt(double x) {
    char b[64];
    std::snprintf(b, sizeof b, "%.6g", x);
    return b;
}

std::vector<std::uint64_t> ids(const Population& pop) {
    std::vector<std::uint64_t> out;
    for (const auto& h : pop) out.push_back(h.id);
    return out;
}

Population random_members(Rng& rng, std::size_t n, std::size_t m) {
    const auto objs = oracle::random_objectives(rng, n, m, 5);
    Population pop;
    for (std::size_t k = 0; k < n; ++k) {
        const std::string src = oracle::random_program(rng, {"item", "bins"}, 3, 3);
        pop.push_back(make_heuristic(k + 1, "", src, dsl::parse(src), objs[k]));
    }
    return pop;
}

Outcome dominance_filtering() {
    Rng rng(101);
    Check c;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(20);
        const std::size_t m = 2 + rng.below(2);
        const Population pop = random_members(rng, n, m);
        std::vector<pareto::ObjectiveVector> objs;
        std::vector<dsl::SyntaxTree> trees;
        for (const auto& h : pop) {
            objs.push_back(h.objectives);
            trees.push_back(h.tree);
        }
        c.expect(pareto::nondominated_filter(objs) == oracle::nondominated(objs), "filter differs");
        const auto mask = evolution::dominance_mask(objs);
        const auto dom = oracle::dominance(objs);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) c.expect(mask(i, j) == dom[i][j], "mask differs");
        }
        c.expect(evolution::dd_scores(pop).v == oracle::dd_scores(objs, trees), "dd scores differ");
    }
    return {c.ok, c.ok ? "200 populations, all exact" : c.why};
}

std::vector<dsl::SyntaxTree> fixture_trees() {
    std::vector<fs::path> files;
    for (const auto& dir : {fs::path(MEOH_FIXTURES), fs::path(MEOH_FIXTURES) / "sim"}) {
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.path().extension() == ".dsl") files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<dsl::SyntaxTree> out;
    for (const auto& f : files) out.push_back(dsl::parse(slurp(f)));
    return out;
}

Outcome ast_similarity() {
    Rng rng(202);
    Check c;
    std::vector<dsl::SyntaxTree> random;
    for (int k = 0; k < 100; ++k) {
        random.push_back(dsl::parse(oracle::random_program(rng, {"item", "bins"}, 4, 3)));
        c.expect(similarity::ast_similarity(random.back(), random.back()) == 1.0, "Sim(t, t) != 1");
    }
    for (const auto& a : random) {
        for (const auto& b : random) {
            const double s = similarity::ast_similarity(a, b);
            c.expect(s >= 0.0 && s <= 1.0, "Sim outside [0, 1]");
        }
    }
    std::vector<dsl::SyntaxTree> small;
    for (auto& t : fixture_trees()) {
        if (t.node_count() <= 30) small.push_back(std::move(t));
    }
    c.expect(small.size() >= 8, "fixture set too small");
    for (const auto& a : small) {
        for (const auto& b : small) {
            c.expect(similarity::ast_similarity(a, b) == oracle::similarity(a, b), "fixture pair differs from oracle");
        }
    }
    return {c.ok, c.ok ? std::to_string(small.size()) + " fixtures, " + std::to_string(small.size() * small.size()) +
                             " ordered pairs exact"
                       : c.why};
}

Outcome hv_exactness() {
    Check c;
    using V = std::vector<pareto::ObjectiveVector>;
    c.expect(std::abs(pareto::hypervolume(V{{0.5, 0.5}}) - 0.36) <= 1e-12, "HV{(0.5, 0.5)}");
    c.expect(std::abs(pareto::hypervolume(V{{0.0, 0.0}}) - 1.21) <= 1e-12, "HV{(0, 0)}");
    Rng rng(303);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        V pts;
        const std::size_t n = 1 + rng.below(10);
        for (std::size_t k = 0; k < n; ++k) pts.push_back({rng.uniform(), rng.uniform()});
        const double err = std::abs(pareto::hypervolume(pts) - oracle::hv_monte_carlo(pts, 1.1, 10'000'000, 3000 + trial));
        worst = std::max(worst, err);
        c.expect(err <= 1e-3, "HV differs from Monte-Carlo by " + fmt(err));
    }
    double igd_worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        V a, r;
        const auto na = 1 + rng.below(20), nr = 1 + rng.below(20);
        for (std::uint64_t k = 0; k < na; ++k) a.push_back({rng.uniform(), rng.uniform()});
        for (std::uint64_t k = 0; k < nr; ++k) r.push_back({rng.uniform(), rng.uniform()});
        c.expect(pareto::igd(a, a) == 0.0, "IGD(P, P) != 0");
        const double e = std::abs(pareto::igd(a, r) - oracle::igd(a, r));
        igd_worst = std::max(igd_worst, e);
        c.expect(e <= 1e-12, "IGD differs from oracle");
    }
    return {c.ok, c.ok ? "worst MC error " + fmt(worst) + ", worst IGD error " + fmt(igd_worst) : c.why};
}

Outcome management() {
    Rng rng(404);
    Check c;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + rng.below(9);
        const Population pop = oracle::random_population(rng, n + 1 + rng.below(n));
        const Population kept = evolution::manage_population(pop, n);
        c.expect(kept.size() == n, "wrong size");
        c.expect(ids(kept) == oracle::manage_top_n(pop, n), "differs from top-N oracle");
        // kept order reflects v over the enlarged population, so compare membership
        const auto again = ids(evolution::manage_population(kept, n));
        const auto once = ids(kept);
        c.expect(std::set<std::uint64_t>(again.begin(), again.end()) == std::set<std::uint64_t>(once.begin(), once.end()),
                 "not idempotent");
        std::vector<pareto::ObjectiveVector> objs;
        for (const auto& h : pop) objs.push_back(h.objectives);
        const auto front = oracle::nondominated(objs);
        if (front.size() <= n) {
            const auto k = ids(kept);
            const std::set<std::uint64_t> kept_set(k.begin(), k.end());
            for (auto f : front) c.expect(kept_set.count(pop[f].id) == 1, "dropped a non-dominated member");
        }
        c.expect(ids(evolution::manage_nsga2(pop, n)) == oracle::nsga2(pop, n), "NSGA-II differs from oracle");
    }
    return {c.ok, c.ok ? "500 populations" : c.why};
}

Outcome monotone_invariance() {
    Rng rng(505);
    Check c;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(19);
        Population pop = random_members(rng, n, 2 + rng.below(2));
        for (auto& h : pop) {
            for (auto& x : h.objectives) x -= 0.5;  // include negative values
        }
        const auto before = evolution::dd_scores(pop).v;
        const std::size_t axis = rng.below(pop[0].objectives.size());
        for (auto& h : pop) h.objectives[axis] = std::pow(h.objectives[axis], 3.0);
        const auto after = evolution::dd_scores(pop).v;
        c.expect(std::memcmp(before.data(), after.data(), before.size() * sizeof(double)) == 0, "v changed");
    }
    return {c.ok, c.ok ? "100 trials bitwise equal" : c.why};
}

Outcome bpp_simulator() {
    Check c;
    const auto h = dsl::parse(slurp(fs::path(MEOH_FIXTURES) / "bpp_tightest_fit.dsl"));
    std::vector<bpp::Instance> inst;
    for (std::uint64_t s = 0; s < 5; ++s) inst.push_back(bpp::generate_weibull_instance(5000, 100, s));
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<bpp::Report> reports;
    const auto ev = bpp::evaluate_bpp(h, inst, {}, &reports);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t k = 0; k < inst.size(); ++k) {
        c.expect(reports[k].bins_used == oracle::best_fit_bins(inst[k].items, 100),
                 "instance " + std::to_string(k) + " differs from best fit");
        c.expect(bpp::lower_bound(inst[k]) == oracle::ceil_div_sum(inst[k].items, 100), "lower bound differs");
    }
    const double gap = ev.objectives[0];
    c.expect(gap >= 0.0 && gap <= 0.05, "mean gap " + fmt(gap) + " outside [0, 0.05]");
    c.expect(secs < 10.0, "evaluation took " + fmt(secs) + " s");
    return {c.ok, c.ok ? "mean gap " + fmt(gap) + ", evaluation " + fmt(secs) + " s" : c.why};
}

Outcome tsp_quality() {
    Check c;
    const auto h = dsl::parse(slurp(fs::path(MEOH_FIXTURES) / "tsp_gls_penalty.dsl"));
    const auto berlin = tsp::load_tsplib(fs::path(MEOH_SOURCE_DIR) / "data/tsp/berlin52.tsp");
    tsp::GlsConfig cfg;
    cfg.max_iters = 1000;
    cfg.time_budget = std::chrono::duration<double>(60.0);
    const auto r = tsp::gls_solve(berlin, h, cfg);
    const double gap = (r.best_length - 7542.0) / 7542.0;
    c.expect(gap <= 0.02, "berlin52 gap " + fmt(gap));
    int matched = 0;
    for (std::uint64_t s = 0; s < 4; ++s) {
        const auto inst = tsp::generate_uniform_instance(10, 7000 + s);
        const double opt = tsp::exact_solve_small(inst).second;
        const double best = tsp::gls_solve(inst, h, cfg).best_length;
        c.expect(best >= opt - 1e-9, "GLS beat Held-Karp");
        matched += std::abs(best - opt) <= 1e-9;
    }
    c.expect(matched >= 3, "matched the optimum on " + std::to_string(matched) + " of 4");
    return {c.ok, c.ok ? "berlin52 length " + fmt(r.best_length) + " (gap " + fmt(gap) + "), optimum matched on " +
                             std::to_string(matched) + " of 4"
                       : c.why};
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
    args.insert(args.begin(), "meoh");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int code = runner::cli_main(static_cast<int>(argv.size()), argv.data(), o, e);
    if (out) *out = o.str() + e.str();
    return code;
}

Outcome end_to_end() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / ("meoh_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    const std::vector<std::string> base = {"run", "--preset", "bpp-small", "--seed", "7", "--objective", "stepcost"};
    auto with_out = [&](const std::string& sub) {
        auto a = base;
        a.insert(a.end(), {"--out-dir", (dir / sub).string()});
        return a;
    };
    std::string log;
    c.expect(cli(with_out("a"), &log) == 0, "first run failed: " + log);
    c.expect(cli(with_out("b"), &log) == 0, "second run failed: " + log);
    const std::string arc_a = slurp(dir / "a" / "archive.jsonl");
    c.expect(!arc_a.empty() && arc_a == slurp(dir / "b" / "archive.jsonl"), "archives differ");

    const auto file = runner::load_archive(dir / "a" / "archive.jsonl");
    c.expect(file.archive.generations.size() == 21, "expected 21 snapshots");
    c.expect(file.header["config"]["run"]["population_size"] == 10, "population size is not 10");
    const auto rows = runner::compute_metrics(file.archive);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        c.expect(rows[k].archive_hv >= rows[k - 1].archive_hv, "archive HV decreased at row " + std::to_string(k));
    }
    std::set<pareto::ObjectiveVector> front;
    std::vector<pareto::ObjectiveVector> last;
    for (auto id : file.archive.generations.back().ids) last.push_back(file.archive.find(id)->objectives);
    for (auto k : pareto::nondominated_filter(last)) front.insert(last[k]);
    c.expect(front.size() >= 2, "final front has " + std::to_string(front.size()) + " distinct vectors");

    c.expect(cli({"metrics", (dir / "a" / "archive.jsonl").string(), "--out-dir", (dir / "r").string()}) == 0,
             "metrics failed");
    c.expect(cli({"heatmap", (dir / "a" / "archive.jsonl").string(), "--out-dir", (dir / "r").string()}) == 0,
             "heatmap failed");
    c.expect(slurp(dir / "r" / "metrics.csv") == slurp(fs::path(MEOH_GOLDEN) / "metrics.csv"),
             "metrics.csv differs from the golden file");
    c.expect(slurp(dir / "r" / "heatmap.csv") == slurp(fs::path(MEOH_GOLDEN) / "heatmap.csv"),
             "heatmap.csv differs from the golden file");
    fs::remove_all(dir);
    return {c.ok, c.ok ? "byte-identical archives, final front of " + std::to_string(front.size()) +
                             ", golden reports match"
                       : c.why};
}

Outcome prompt_protocol() {
    using namespace operators;
    Check c;
    // parents are the mock's own initial replies for each task
    std::map<std::string, Population> parents;
    for (const std::string task : {"bpp", "tsp"}) {
        for (std::uint64_t k = 0; k < 5; ++k) {
            Rng rng(900 + k);
            const Response r = parse_response(mock_generate(rng, Operator::Init, {}, task, 0.0));
            parents[task].push_back(make_heuristic(k + 1, r.description, r.code, dsl::parse(r.code), {0.1, 1.0}));
        }
    }
    const Operator ops[] = {Operator::Init, Operator::E1, Operator::E2, Operator::M1, Operator::M2, Operator::M3};
    std::size_t well_formed = 0;
    for (std::size_t k = 0; k < 1000; ++k) {
        const std::string task = k % 2 ? "bpp" : "tsp";
        const Operator op = ops[k % 6];
        const TaskText& text = task == "bpp" ? bpp::task_text() : tsp::task_text();
        const auto& sig = task == "bpp" ? bpp::signature() : tsp::signature();
        std::vector<const Heuristic*> ps;
        for (std::size_t p = 0; p < parent_slots(op); ++p) ps.push_back(&parents[task][p]);
        Rng rng(derive_seed(9, k));
        const std::string reply = mock_generate(rng, op, ps, task);
        Response r;
        dsl::SyntaxTree tree;
        try {
            r = parse_response(reply);
            tree = dsl::parse(r.code);
            dsl::validate_signature(tree, sig);
        } catch (const std::exception&) {
            continue;  // classified malformed
        }
        ++well_formed;
        // the accepted child, rendered back as a parent, survives verbatim and reparses to the same tree
        const Heuristic child = make_heuristic(1000 + k, r.description, r.code, tree, {0.1, 1.0});
        const Heuristic* one[] = {&child};
        const std::string prompt = render_prompt(Operator::M1, text, one);
        c.expect(prompt.find(r.code) != std::string::npos, "code missing from the rendered prompt");
        c.expect(prompt.find(r.description) != std::string::npos, "description missing from the rendered prompt");
        const std::string fenced = "<start>" + r.description + "<end>\n```\n" + r.code + "\n```";
        const Response again = parse_response(fenced);
        c.expect(again.code == r.code && again.description == r.description, "response round trip");
        c.expect(dsl::parse(dsl::to_source(tree)) == tree, "tree round trip");
    }
    c.expect(well_formed >= 800, "only " + std::to_string(well_formed) + " well-formed emissions");

    const auto& bp = parents["bpp"];
    std::vector<const Heuristic*> five;
    for (const auto& h : bp) five.push_back(&h);
    const std::pair<Operator, const char*> anchors[] = {{Operator::E1, "totally different form"},
                                                        {Operator::E2, "common backbone idea"},
                                                        {Operator::M1, "a modified version"},
                                                        {Operator::M2, "identify the main algorithm parameters"},
                                                        {Operator::M3, "simplify the components"}};
    for (const auto& [op, anchor] : anchors) {
        std::vector<const Heuristic*> ps(five.begin(), five.begin() + parent_slots(op));
        c.expect(render_prompt(op, bpp::task_text(), ps).find(anchor) != std::string::npos,
                 std::string("missing anchor: ") + anchor);
    }

    {
        stub::StubServer echo([](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            res.set_content(stub::completion("echo: " + body["messages"][0]["content"].get<std::string>()),
                            "application/json");
        });
        c.expect(llm_generate(echo.config(), "ping", "k").text == "echo: ping", "echo transcript");
    }
    {
        std::atomic<int> calls{0};
        stub::StubServer flaky([&](const httplib::Request&, httplib::Response& res) {
            if (calls++ < 2) {
                res.status = 500;
                return;
            }
            res.set_content(stub::completion("ok"), "application/json");
        });
        const auto got = llm_generate(flaky.config(), "p", "k");
        c.expect(got.text == "ok" && got.retry_count == 2, "retry-then-success transcript");
    }
    {
        stub::StubServer broken([](const httplib::Request&, httplib::Response& res) {
            res.set_content("not json", "text/plain");
        });
        bool raised = false;
        try {
            llm_generate(broken.config(), "p", "k");
        } catch (const MalformedResponse&) {
            raised = true;
        }
        c.expect(raised, "malformed-body transcript");
    }
    return {c.ok, c.ok ? std::to_string(well_formed) + " of 1000 well-formed and round-tripped, anchors present, "
                                                       "stub transcripts pass"
                       : c.why};
}

struct Criterion {
    int number;
    double limit_seconds;  // 0: no runtime bound
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, 5.0, dominance_filtering}, {2, 10.0, ast_similarity}, {3, 0.0, hv_exactness},
        {4, 0.0, management},          {5, 0.0, monotone_invariance}, {6, 0.0, bpp_simulator},
        {7, 90.0, tsp_quality},        {8, 60.0, end_to_end},     {9, 0.0, prompt_protocol},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (cr.limit_seconds > 0.0 && secs >= cr.limit_seconds) {
            o.pass = false;
            o.detail += "; over the " + fmt(cr.limit_seconds) + " s limit";
        }
        failures += !o.pass;
        std::printf("criterion %d: %s (%s; %.2f s)\n", cr.number, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures;
}
