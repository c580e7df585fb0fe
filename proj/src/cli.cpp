#include <CLI11.hpp>
#include <omp.h>

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "meoh/dsl/parser.hpp"
#include "meoh/dsl/signature.hpp"
#include "meoh/runner.hpp"

namespace meoh::runner {

namespace {

struct Common {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::string objective;
    std::string out_dir;
};

Config resolve_config(const Common& c) {
    Config cfg;
    if (!c.config_path.empty()) {
        if (!std::filesystem::exists(c.config_path)) throw ConfigError("config file not found: " + c.config_path);
        cfg = load_config(c.config_path);
    } else {
        cfg = preset_config(c.preset.empty() ? "bpp" : c.preset);
    }
    if (c.seed) cfg.run.seed = *c.seed;
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    if (!c.mode.empty()) cfg.mode = c.mode;
    if (!c.objective.empty()) {
        try {
            cfg.run.objective_mode = parse_objective_mode(c.objective);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    return cfg;
}

void emit(const std::string& text, const std::string& out_dir, const std::string& file, std::ostream& out) {
    if (out_dir.empty()) {
        out << text;
        return;
    }
    std::filesystem::create_directories(out_dir);
    write_file_atomic(std::filesystem::path(out_dir) / file, text);
}

int do_run(const Common& c, std::ostream& out, std::ostream& err) {
    Config cfg = resolve_config(c);
    const std::filesystem::path dir = c.out_dir.empty() ? "." : c.out_dir;
    std::filesystem::create_directories(dir);
    const auto archive_path = dir / "archive.jsonl";

    auto env = make_environment(cfg);
    nlohmann::json header = {{"format", "meoh-archive/1"},
                             {"run_id", run_id(cfg)},
                             {"problem", cfg.problem.kind},
                             {"config", config_to_json(cfg)}};
    auto persist = [&](const evolution::RunArchive& archive) {
        std::ostringstream buf;
        write_archive(buf, header, archive);
        write_file_atomic(archive_path, buf.str());
    };

    std::unique_ptr<evolution::OffspringSource> source;
    if (cfg.mode == "endpoint") {
        source = std::make_unique<operators::EndpointSource>(cfg.llm, cfg.run.parents);
    } else {
        source = std::make_unique<operators::MockSource>(cfg.mock_malformed_rate);
    }

    evolution::RunConfig rc = cfg.run;
    rc.on_generation = [&](const evolution::GenerationSnapshot& snap, const evolution::RunArchive& archive) {
        std::size_t admitted = 0;
        std::size_t attempted = 0;
        for (const auto& r : archive.records) {
            if (r.generation != snap.generation) continue;
            ++attempted;
            admitted += r.admitted;
        }
        std::vector<pareto::ObjectiveVector> pop;
        for (auto id : snap.ids) pop.push_back(archive.find(id)->objectives);
        out << "generation " << snap.generation << ": admitted " << admitted << "/" << attempted << ", population "
            << snap.ids.size() << ", front " << pareto::nondominated_filter(pop).size() << ", archive hv "
            << format_double(archive_front_hv(archive)) << std::endl;
        persist(archive);
    };

    try {
        auto result = evolution::run_meoh(rc, *source, *env);
        persist(result.archive);
        write_file_atomic(dir / "metrics.csv", metrics_csv(compute_metrics(result.archive)));
    } catch (const evolution::InitializationExhausted& e) {
        persist(e.archive());
        err << "error: " << e.what() << "\n";
        return 2;
    }
    out << "wrote " << archive_path.string() << " and " << (dir / "metrics.csv").string() << "\n";
    return 0;
}

int do_eval(const Common& c, const std::string& heuristic_path, std::ostream& out, std::ostream& err) {
    Config cfg = resolve_config(c);
    std::ifstream in(heuristic_path);
    if (!in) throw ConfigError("cannot read heuristic file " + heuristic_path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto env = make_environment(cfg);
    dsl::SyntaxTree tree;
    try {
        tree = dsl::parse(buf.str());
        dsl::validate_signature(tree, env->signature());
    } catch (const dsl::DslError& e) {
        err << "error [" << dsl::error_kind_name(e.kind()) << "]: " << heuristic_path << ": " << e.what() << "\n";
        return 1;
    }
    try {
        if (const auto* b = dynamic_cast<const bpp::Environment*>(env.get())) {
            std::vector<bpp::Report> reports;
            auto opt = b->options();
            opt.mode = cfg.run.objective_mode;
            const auto ev = bpp::evaluate_bpp(tree, b->instances(), opt, &reports);
            out << "instance,items,bins_used,lower_bound,gap,steps\n";
            for (std::size_t k = 0; k < reports.size(); ++k) {
                const auto& r = reports[k];
                out << k << "," << b->instances()[k].items.size() << "," << r.bins_used << "," << r.lower_bound << ","
                    << format_double(r.gap) << "," << r.steps << "\n";
            }
            out << "mean_gap," << format_double(ev.objectives[0]) << "\ncost," << format_double(ev.objectives[1])
                << "\n";
        } else if (const auto* t = dynamic_cast<const tsp::Environment*>(env.get())) {
            std::vector<tsp::Report> reports;
            auto opt = t->options();
            opt.mode = cfg.run.objective_mode;
            const auto ev = tsp::evaluate_tsp(tree, t->instances(), t->reference_lengths(), opt, &reports);
            out << "instance,best_length,reference,gap,steps\n";
            for (std::size_t k = 0; k < reports.size(); ++k) {
                const auto& r = reports[k];
                out << csv_escape(t->instances()[k].name) << "," << format_double(r.best_length) << ","
                    << format_double(r.reference) << "," << format_double(r.gap) << "," << r.steps << "\n";
            }
            out << "mean_gap," << format_double(ev.objectives[0]) << "\ncost," << format_double(ev.objectives[1])
                << "\n";
        }
    } catch (const HeuristicFailure& e) {
        err << "error [" << e.category() << "]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-objective heuristic evolution"};
    app.require_subcommand(1);

    Common common;
    std::string archive_path;
    std::string heuristic_path;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "Config file");
        sub->add_option("--preset", common.preset, "Built-in preset when no config is given");
        sub->add_option("--seed", common.seed, "Override the run seed");
        sub->add_option("--objective", common.objective, "walltime or stepcost")
            ->check(CLI::IsMember({"walltime", "stepcost"}));
    };

    auto* run = app.add_subcommand("run", "Run an evolution");
    add_config(run);
    run->add_option("--mode", common.mode, "endpoint or mock")->check(CLI::IsMember({"endpoint", "mock"}));
    run->add_option("--out-dir", common.out_dir, "Directory for archive.jsonl and metrics.csv");

    auto* eval = app.add_subcommand("eval", "Evaluate one heuristic file");
    add_config(eval);
    eval->add_option("heuristic", heuristic_path, "Heuristic source file")->required();

    auto* metrics = app.add_subcommand("metrics", "Per-generation HV/IGD from an archive");
    auto* heatmap = app.add_subcommand("heatmap", "Dominance-dissimilarity score grid");
    auto* front = app.add_subcommand("export-front", "Non-dominated members of the final population");
    for (auto* sub : {metrics, heatmap, front}) {
        sub->add_option("archive", archive_path, "Archive file")->required();
        sub->add_option("--out-dir", common.out_dir, "Write a CSV file here instead of stdout");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return do_run(common, out, err);
        if (eval->parsed()) return do_eval(common, heuristic_path, out, err);
        const auto file = load_archive(archive_path);
        if (metrics->parsed()) {
            emit(metrics_csv(compute_metrics(file.archive)), common.out_dir, "metrics.csv", out);
        } else if (heatmap->parsed()) {
            std::size_t slots = 0;
            if (file.header.contains("config")) {
                slots = file.header["config"]["run"].value("population_size", std::size_t{0});
            }
            emit(heatmap_csv(file.archive, slots), common.out_dir, "heatmap.csv", out);
        } else {
            emit(front_csv(file.archive), common.out_dir, "front.csv", out);
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const CorruptArchive& e) {
        err << "corrupt archive: " << e.what() << "\n";
    } catch (const operators::AuthError& e) {
        err << "auth error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return 1;
}

}  // namespace meoh::runner
