#include <doctest.h>

#include <cmath>
#include <set>

#include "meoh/bpp.hpp"
#include "meoh/dsl/parser.hpp"
#include "meoh/evolution.hpp"
#include "meoh/operators.hpp"
#include "meoh/similarity.hpp"
#include "oracles.hpp"

using namespace meoh;
using namespace meoh::evolution;

namespace {

Heuristic member(std::uint64_t id, const std::string& body, pareto::ObjectiveVector obj) {
    const std::string src = "fn score(item, bins) { " + body + " }";
    return make_heuristic(id, "", src, dsl::parse(src), std::move(obj));
}

std::vector<std::uint64_t> ids(const Population& pop) {
    std::vector<std::uint64_t> out;
    for (const auto& h : pop) out.push_back(h.id);
    return out;
}

std::set<std::uint64_t> id_set(const Population& pop) {
    const auto v = ids(pop);
    return {v.begin(), v.end()};
}

bpp::Environment small_bpp() {
    std::vector<bpp::Instance> inst;
    for (std::uint64_t s = 0; s < 2; ++s) inst.push_back(bpp::generate_weibull_instance(60, 100, s));
    return bpp::Environment(std::move(inst), {});
}

class ScriptedSource : public OffspringSource {
public:
    explicit ScriptedSource(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    GeneratedText generate(const OffspringRequest&, const ProblemEnvironment&) override {
        const std::string r = replies_[next_ % replies_.size()];
        ++next_;
        return {r, 0};
    }
    std::size_t calls() const { return next_; }

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

std::string reply(const std::string& desc, const std::string& body) {
    return "<start>" + desc + "<end>\n```\nfn score(item, bins) {\n    " + body + "\n}\n```\n";
}

}  // namespace

TEST_CASE("dominance mask") {
    const std::vector<pareto::ObjectiveVector> incomparable{{1, 2}, {2, 1}};
    CHECK(dominance_mask(incomparable) == Mask(2, 2, 0));
    const std::vector<pareto::ObjectiveVector> chain{{1, 1}, {2, 2}};
    const Mask d = dominance_mask(chain);
    CHECK(d(0, 1) == 1);
    CHECK(d(1, 0) == 0);
    CHECK(d(0, 0) == 0);
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto set = oracle::random_objectives(rng, 15, 2, 5);
        const Mask m = dominance_mask(set);
        CHECK(m == dominance_mask_serial(set));
        const auto o = oracle::dominance(set);
        for (std::size_t i = 0; i < set.size(); ++i) {
            for (std::size_t j = 0; j < set.size(); ++j) REQUIRE(m(i, j) == o[i][j]);
        }
    }
}

TEST_CASE("dd_scores on hand-built populations") {
    Population pop = {member(1, "return item - bins;", {0.1, 10}), member(2, "return item - bins * 2;", {0.5, 20})};
    const DdScores s = dd_scores(pop);
    CHECK(s.v[0] == 0.0);
    CHECK(s.v[1] == -similarity::ast_similarity(pop[0].tree, pop[1].tree));

    Population twins = {member(1, "return item - bins;", {0.1, 10}), member(2, "return item - bins;", {0.2, 10})};
    const DdScores t = dd_scores(twins);
    CHECK(t.v[1] == -1.0);
    CHECK(std::abs(t.pi[0] + t.pi[1] - 1.0) < 1e-12);
    CHECK(t.pi[0] > t.pi[1]);
}

TEST_CASE("dd_scores equals the masked column-sum oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Population pop = oracle::random_population(rng, 10);
        std::vector<pareto::ObjectiveVector> objs;
        std::vector<dsl::SyntaxTree> trees;
        for (const auto& h : pop) {
            objs.push_back(h.objectives);
            trees.push_back(h.tree);
        }
        const DdScores s = dd_scores(pop);
        const auto v = oracle::dd_scores(objs, trees);
        double total = 0.0;
        for (std::size_t j = 0; j < pop.size(); ++j) {
            REQUIRE(s.v[j] == v[j]);
            CHECK(s.v[j] <= 0.0);
            CHECK(s.pi[j] > 0.0);
            total += s.pi[j];
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("softmax is shift invariant and stable") {
    const std::vector<double> v{-1000, -1001, -1002};
    const auto p = softmax(v);
    CHECK(std::abs(p[0] + p[1] + p[2] - 1.0) < 1e-12);
    CHECK(p[0] / p[1] == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("select_parents frequencies") {
    SUBCASE("uniform scores give uniform draws") {
        const std::size_t n = 10, d = 3, trials = 100'000;
        const std::vector<double> pi(n, 1.0 / n);
        Rng rng(5);
        std::vector<int> hits(n, 0);
        for (std::size_t t = 0; t < trials; ++t) {
            const auto pick = select_parents(pi, d, rng);
            REQUIRE(std::set<std::size_t>(pick.begin(), pick.end()).size() == d);
            for (auto k : pick) ++hits[k];
        }
        const double p = static_cast<double>(d) / n;
        const double sigma = std::sqrt(trials * p * (1 - p));
        for (int h : hits) CHECK(std::abs(h - trials * p) < 3 * sigma + 1);
    }
    SUBCASE("one dominant member") {
        std::vector<double> v(8, -10.0);
        v[3] = 0.0;
        const auto pi = softmax(v);
        Rng rng(6);
        int hit = 0;
        for (int t = 0; t < 10'000; ++t) hit += select_parents(pi, 1, rng)[0] == 3;
        CHECK(hit >= 9900);
    }
    SUBCASE("d equal to the population returns everyone") {
        const std::vector<double> pi{0.1, 0.2, 0.3, 0.4};
        Rng rng(7);
        auto pick = select_parents(pi, 4, rng);
        std::sort(pick.begin(), pick.end());
        CHECK(pick == std::vector<std::size_t>{0, 1, 2, 3});
        CHECK_THROWS_AS(select_parents(pi, 5, rng), std::invalid_argument);
    }
}

TEST_CASE("manage_population removes the dominated clone") {
    Population pop = {member(1, "return item - bins;", {0.1, 10}), member(2, "return bins * 3;", {0.2, 5}),
                      member(3, "return item - bins;", {0.3, 12})};
    const Population kept = manage_population(pop, 2);
    CHECK(id_set(kept) == std::set<std::uint64_t>{1, 2});
}

TEST_CASE("manage_population properties on random populations") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(8);
        const Population pop = oracle::random_population(rng, 2 * n);
        const Population kept = manage_population(pop, n);
        REQUIRE(kept.size() == n);
        CHECK(ids(kept) == oracle::manage_top_n(pop, n));
        CHECK(id_set(manage_population(kept, n)) == id_set(kept));

        std::vector<pareto::ObjectiveVector> objs;
        for (const auto& h : pop) objs.push_back(h.objectives);
        const auto front = oracle::nondominated(objs);
        if (front.size() <= n) {
            for (auto k : front) CHECK(id_set(kept).count(pop[k].id) == 1);
        }
    }
}

TEST_CASE("manage_nsga2") {
    Population pop = {member(1, "return bins;", {1, 3}), member(2, "return -bins;", {2, 2}),
                      member(3, "return item;", {3, 1}), member(4, "return item - bins;", {2.1, 2.1})};
    CHECK(id_set(manage_nsga2(pop, 3)) == std::set<std::uint64_t>{1, 2, 3});
    Population all = {pop[0], pop[1], pop[2]};
    CHECK(id_set(manage_nsga2(all, 3)) == std::set<std::uint64_t>{1, 2, 3});

    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(8);
        const Population random = oracle::random_population(rng, 2 * n);
        CHECK(ids(manage_nsga2(random, n)) == oracle::nsga2(random, n));
    }
}

TEST_CASE("manage_moead_like") {
    Population pop = {member(1, "return bins;", {0, 1}), member(2, "return -bins;", {1, 0}),
                      member(3, "return item;", {0.6, 0.6})};
    const std::vector<std::vector<double>> w1{{1, 0}};
    CHECK(ids(manage_moead_like(pop, 1, w1)) == std::vector<std::uint64_t>{1});
    const std::vector<std::vector<double>> w2{{1, 0}, {0, 1}};
    CHECK(id_set(manage_moead_like(pop, 2, w2)) == std::set<std::uint64_t>{1, 2});
    CHECK_THROWS_AS(manage_moead_like(pop, 2, w1), std::invalid_argument);

    Rng rng(10);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng.below(4);
        const Population random = oracle::random_population(rng, n + rng.below(5));
        const auto w = uniform_weights(n);
        CHECK(ids(manage_moead_like(random, n, w)) == oracle::moead_exhaustive(random, w));
    }
}

TEST_CASE("single-objective management and dispatch") {
    Population pop = {member(1, "return bins;", {0.3, 1}), member(2, "return -bins;", {0.1, 9}),
                      member(3, "return item;", {0.2, 0})};
    CHECK(ids(manage_single_objective(pop, 2)) == std::vector<std::uint64_t>{2, 3});
    CHECK(ids(manage(Management::SingleObjective, pop, 2)) == std::vector<std::uint64_t>{2, 3});
    CHECK(parse_management("nsga2") == Management::NSGA2);
    CHECK(management_name(Management::MOEAD) == "moead");
    CHECK_THROWS_AS(parse_management("spea2"), std::invalid_argument);
}

TEST_CASE("run_meoh with the mock source is deterministic") {
    const auto env = small_bpp();
    RunConfig cfg;
    cfg.population_size = 4;
    cfg.generations = 2;
    cfg.parents = 2;
    cfg.seed = 17;
    operators::MockSource a(0.1), b(0.1);
    const RunResult r1 = run_meoh(cfg, a, env);
    const RunResult r2 = run_meoh(cfg, b, env);
    REQUIRE(r1.archive.records.size() == r2.archive.records.size());
    for (std::size_t k = 0; k < r1.archive.records.size(); ++k) {
        const auto& x = r1.archive.records[k];
        const auto& y = r2.archive.records[k];
        CHECK(x.id == y.id);
        CHECK(x.source == y.source);
        CHECK(x.objectives == y.objectives);
        CHECK(x.failure_category == y.failure_category);
        CHECK(x.timestamp == y.timestamp);
    }
    CHECK(ids(r1.population) == ids(r2.population));
    CHECK(r1.archive.generations.size() == 3);
    CHECK(r1.population.size() <= 4);

    std::uint64_t last = 0;
    for (const auto& rec : r1.archive.records) {
        CHECK(rec.id > last);
        last = rec.id;
        CHECK(rec.admitted == rec.failure_category.empty());
        if (rec.admitted) CHECK(rec.objectives.size() == 2);
    }
}

TEST_CASE("frozen selection pool is deterministic too") {
    const auto env = small_bpp();
    RunConfig cfg;
    cfg.population_size = 5;
    cfg.generations = 2;
    cfg.parents = 3;
    cfg.seed = 3;
    cfg.freeze_pool = true;
    operators::MockSource a, b;
    const auto r1 = run_meoh(cfg, a, env);
    const auto r2 = run_meoh(cfg, b, env);
    REQUIRE(r1.archive.records.size() == r2.archive.records.size());
    for (std::size_t k = 0; k < r1.archive.records.size(); ++k) {
        CHECK(r1.archive.records[k].source == r2.archive.records[k].source);
    }
}

TEST_CASE("an always-broken source exhausts initialization") {
    const auto env = small_bpp();
    RunConfig cfg;
    cfg.population_size = 4;
    cfg.parents = 2;
    ScriptedSource broken({"no sentinels and no code"});
    try {
        run_meoh(cfg, broken, env);
        FAIL("expected InitializationExhausted");
    } catch (const InitializationExhausted& e) {
        CHECK(broken.calls() == 16);  // default budget 4N
        CHECK(e.archive().records.size() == 16);
        for (const auto& r : e.archive().records) CHECK(r.failure_category == "missing_description");
    }
}

TEST_CASE("duplicates and failures are archived with categories") {
    const auto env = small_bpp();
    RunConfig cfg;
    cfg.population_size = 3;
    cfg.generations = 1;
    cfg.parents = 2;
    ScriptedSource src({reply("a", "return item - bins;"), reply("b", "return item - bins;"),
                        reply("c", "return bins / 0;"), reply("d", "return bins;"),
                        reply("e", "return -bins;"), reply("f", "return (bins;")});
    const RunResult r = run_meoh(cfg, src, env);
    std::vector<std::string> cats;
    for (const auto& rec : r.archive.records) cats.push_back(rec.failure_category);
    REQUIRE(cats.size() >= 6);
    CHECK(cats[0].empty());
    CHECK(cats[1] == "duplicate");
    CHECK(cats[2] == "numeric_error");
    CHECK(cats[3].empty());
    CHECK(cats[4].empty());
    CHECK(cats[5] == "parse_error");
}
