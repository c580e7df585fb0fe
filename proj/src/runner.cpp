#include "meoh/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <system_error>

#include "meoh/pareto.hpp"

#ifndef MEOH_DATA_ROOT
#define MEOH_DATA_ROOT "."
#endif

namespace meoh::runner {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// Drops a trailing comment, ignoring # inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        if (line[k] == '\\' && quoted) {
            ++k;
        } else if (line[k] == '"') {
            quoted = !quoted;
        } else if (line[k] == '#' && !quoted) {
            return line.substr(0, k);
        }
    }
    return line;
}

}  // namespace

ConfigTable parse_config_table(std::string_view text) {
    ConfigTable table;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + "empty section name");
            table[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        if (section.empty()) throw ConfigError(where + "key outside of any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(where + "expected 'key = value'");
        if (value.front() == '"' && (value.size() < 2 || value.back() != '"')) {
            throw ConfigError(where + "unterminated string");
        }
        if (!table[section].emplace(key, value).second) {
            throw ConfigError(where + "duplicate key '" + key + "' in [" + section + "]");
        }
    }
    return table;
}

namespace {

class Reader {
public:
    Reader(const ConfigTable& t, std::string section) : table_(t), section_(std::move(section)) {}

    bool has(const std::string& key) const {
        auto s = table_.find(section_);
        return s != table_.end() && s->second.count(key);
    }

    std::string string(const std::string& key) const {
        const std::string& v = raw(key);
        if (v.size() < 2 || v.front() != '"' || v.back() != '"') fail(key, "expected a quoted string");
        std::string out;
        for (std::size_t k = 1; k + 1 < v.size(); ++k) {
            if (v[k] == '\\' && k + 2 < v.size()) {
                const char c = v[++k];
                out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
            } else {
                out += v[k];
            }
        }
        return out;
    }

    long long integer(const std::string& key) const {
        const std::string& v = raw(key);
        std::size_t used = 0;
        long long x = 0;
        try {
            x = std::stoll(v, &used);
        } catch (const std::exception&) {
            fail(key, "expected an integer");
        }
        if (used != v.size()) fail(key, "expected an integer");
        return x;
    }

    double number(const std::string& key) const {
        const std::string& v = raw(key);
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            fail(key, "expected a number");
        }
        if (used != v.size() || !std::isfinite(x)) fail(key, "expected a number");
        return x;
    }

    bool boolean(const std::string& key) const {
        const std::string& v = raw(key);
        if (v == "true") return true;
        if (v == "false") return false;
        fail(key, "expected true or false");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        throw ConfigError("[" + section_ + "] " + key + ": " + why);
    }

private:
    const std::string& raw(const std::string& key) const { return table_.at(section_).at(key); }

    const ConfigTable& table_;
    std::string section_;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"run",
         {"population_size", "generations", "parents", "seed", "management", "objective", "init_max_attempts",
          "freeze_pool", "schedule", "mode", "mock_malformed_rate", "threads"}},
        {"problem",
         {"preset", "instances", "instance_seed", "instance_files", "items", "capacity", "weibull_shape",
          "weibull_scale", "unused_bin_rule", "nodes", "unit_square", "references", "reference_restarts", "max_iters",
          "time_budget", "restart_from_nn"}},
        {"llm",
         {"base_url", "model", "api_key_env", "temperature", "timeout", "max_retries", "backoff_initial",
          "backoff_max"}},
        {"dsl_limits", {"max_steps", "max_loop_total"}},
    };
    return keys;
}

std::chrono::milliseconds seconds_to_ms(double s) {
    return std::chrono::milliseconds(static_cast<long long>(std::llround(s * 1000.0)));
}

void validate(const Config& c) {
    const auto& r = c.run;
    if (r.parents < 1 || r.population_size < r.parents) throw ConfigError("[run] needs population_size >= parents >= 1");
    if (r.generations < 1) throw ConfigError("[run] generations must be >= 1");
    if (r.schedule.empty()) throw ConfigError("[run] schedule is empty");
    if (c.mode != "mock" && c.mode != "endpoint") throw ConfigError("[run] mode must be \"mock\" or \"endpoint\"");
    if (c.mock_malformed_rate < 0.0 || c.mock_malformed_rate > 1.0) {
        throw ConfigError("[run] mock_malformed_rate must be in [0, 1]");
    }
    const auto& p = c.problem;
    if (p.kind != "bpp" && p.kind != "tsp") throw ConfigError("[problem] unknown problem kind '" + p.kind + "'");
    if (p.instances < 1 && p.instance_files.empty()) throw ConfigError("[problem] instances must be >= 1");
    if (p.kind == "bpp" && (p.items < 1 || p.capacity < 1)) throw ConfigError("[problem] items and capacity must be >= 1");
    if (p.kind == "tsp" && p.nodes < 3) throw ConfigError("[problem] nodes must be >= 3");
    if (p.max_iters < 1 || p.time_budget <= 0.0) throw ConfigError("[problem] max_iters and time_budget must be positive");
    if (c.limits.max_steps == 0 || c.limits.max_loop_total == 0) throw ConfigError("[dsl_limits] limits must be > 0");
    if (c.llm.max_retries < 0) throw ConfigError("[llm] max_retries must be >= 0");
}

}  // namespace

std::vector<std::string> preset_names() { return {"bpp", "bpp-small", "tsp", "tsp-berlin52", "tsp-unit-square"}; }

Config preset_config(std::string_view name) {
    Config c;
    c.preset = std::string(name);
    c.base_dir = MEOH_DATA_ROOT;
    if (name == "bpp" || name == "bpp-small") {
        c.run.population_size = 20;
        c.problem.kind = "bpp";
        c.problem.instances = 5;
        c.problem.items = name == "bpp" ? 5000 : 1000;
        c.problem.capacity = 100;
        if (name == "bpp-small") c.run.population_size = 10;
    } else if (name == "tsp" || name == "tsp-berlin52" || name == "tsp-unit-square") {
        c.run.population_size = 10;
        c.problem.kind = "tsp";
        c.problem.instances = 64;
        c.problem.nodes = 100;
        if (name == "tsp-berlin52") {
            c.problem.instance_files = {"data/tsp/berlin52.tsp"};
            c.problem.references = "data/tsp/references.txt";
        } else if (name == "tsp-unit-square") {
            c.problem.unit_square = true;
            c.problem.instances = 1;
            c.problem.max_iters = 10;
        }
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    c.run.generations = 20;
    c.run.parents = 5;
    return c;
}

Config config_from_table(const ConfigTable& table, std::filesystem::path base_dir) {
    for (const auto& [section, keys] : table) {
        auto known = known_keys().find(section);
        if (known == known_keys().end()) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, value] : keys) {
            if (!known->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
        }
    }
    Reader problem(table, "problem");
    Config c = preset_config(problem.has("preset") ? problem.string("preset") : "bpp");
    c.base_dir = std::move(base_dir);

    Reader run(table, "run");
    auto positive = [](const Reader& r, const std::string& key) {
        const long long v = r.integer(key);
        if (v < 0) r.fail(key, "must be non-negative");
        return v;
    };
    if (run.has("population_size")) c.run.population_size = positive(run, "population_size");
    if (run.has("generations")) c.run.generations = static_cast<int>(positive(run, "generations"));
    if (run.has("parents")) c.run.parents = positive(run, "parents");
    if (run.has("seed")) c.run.seed = static_cast<std::uint64_t>(positive(run, "seed"));
    try {
        if (run.has("management")) c.run.management = evolution::parse_management(run.string("management"));
        if (run.has("objective")) c.run.objective_mode = parse_objective_mode(run.string("objective"));
        if (run.has("schedule")) {
            c.run.schedule.clear();
            for (const auto& op : split_list(run.string("schedule"))) c.run.schedule.push_back(parse_operator(op));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[run] ") + e.what());
    }
    if (run.has("init_max_attempts")) c.run.init_max_attempts = positive(run, "init_max_attempts");
    if (run.has("freeze_pool")) c.run.freeze_pool = run.boolean("freeze_pool");
    if (run.has("mode")) c.mode = run.string("mode");
    if (run.has("mock_malformed_rate")) c.mock_malformed_rate = run.number("mock_malformed_rate");
    if (run.has("threads")) c.threads = static_cast<int>(positive(run, "threads"));

    auto& p = c.problem;
    if (problem.has("instances")) p.instances = static_cast<int>(positive(problem, "instances"));
    if (problem.has("instance_seed")) p.instance_seed = positive(problem, "instance_seed");
    if (problem.has("instance_files")) p.instance_files = split_list(problem.string("instance_files"));
    if (problem.has("items")) p.items = positive(problem, "items");
    if (problem.has("capacity")) p.capacity = static_cast<int>(positive(problem, "capacity"));
    if (problem.has("weibull_shape")) p.weibull.shape = problem.number("weibull_shape");
    if (problem.has("weibull_scale")) p.weibull.scale = problem.number("weibull_scale");
    if (problem.has("unused_bin_rule")) {
        const std::string rule = problem.string("unused_bin_rule");
        if (rule == "not_counted") {
            p.unused_bin_rule = bpp::UnusedBinRule::NotCounted;
        } else if (rule == "excluded") {
            p.unused_bin_rule = bpp::UnusedBinRule::Excluded;
        } else {
            problem.fail("unused_bin_rule", "expected \"not_counted\" or \"excluded\"");
        }
    }
    if (problem.has("nodes")) p.nodes = positive(problem, "nodes");
    if (problem.has("unit_square")) p.unit_square = problem.boolean("unit_square");
    if (problem.has("references")) p.references = problem.string("references");
    if (problem.has("reference_restarts")) p.reference_restarts = static_cast<int>(positive(problem, "reference_restarts"));
    if (problem.has("max_iters")) p.max_iters = static_cast<int>(positive(problem, "max_iters"));
    if (problem.has("time_budget")) p.time_budget = problem.number("time_budget");
    if (problem.has("restart_from_nn")) p.restart_from_nn = problem.boolean("restart_from_nn");

    Reader llm(table, "llm");
    if (llm.has("base_url")) c.llm.base_url = llm.string("base_url");
    if (llm.has("model")) c.llm.model = llm.string("model");
    if (llm.has("api_key_env")) c.llm.api_key_env = llm.string("api_key_env");
    if (llm.has("temperature")) c.llm.temperature = llm.number("temperature");
    if (llm.has("timeout")) c.llm.timeout = seconds_to_ms(llm.number("timeout"));
    if (llm.has("max_retries")) c.llm.max_retries = static_cast<int>(llm.integer("max_retries"));
    if (llm.has("backoff_initial")) c.llm.backoff_initial = seconds_to_ms(llm.number("backoff_initial"));
    if (llm.has("backoff_max")) c.llm.backoff_max = seconds_to_ms(llm.number("backoff_max"));

    Reader limits(table, "dsl_limits");
    if (limits.has("max_steps")) c.limits.max_steps = positive(limits, "max_steps");
    if (limits.has("max_loop_total")) c.limits.max_loop_total = positive(limits, "max_loop_total");

    validate(c);
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return config_from_table(parse_config_table(buf.str()), path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

nlohmann::json config_to_json(const Config& c) {
    nlohmann::json schedule = nlohmann::json::array();
    for (auto op : c.run.schedule) schedule.push_back(operator_name(op));
    const auto& p = c.problem;
    return {
        {"preset", c.preset},
        {"run",
         {{"population_size", c.run.population_size},
          {"generations", c.run.generations},
          {"parents", c.run.parents},
          {"seed", c.run.seed},
          {"management", management_name(c.run.management)},
          {"objective", objective_mode_name(c.run.objective_mode)},
          {"init_max_attempts", c.run.init_max_attempts},
          {"freeze_pool", c.run.freeze_pool},
          {"schedule", schedule},
          {"mode", c.mode},
          {"mock_malformed_rate", c.mock_malformed_rate}}},
        {"problem",
         {{"kind", p.kind},
          {"instances", p.instances},
          {"instance_seed", p.instance_seed},
          {"instance_files", p.instance_files},
          {"items", p.items},
          {"capacity", p.capacity},
          {"weibull_shape", p.weibull.shape},
          {"weibull_scale", p.weibull.scale},
          {"unused_bin_rule", p.unused_bin_rule == bpp::UnusedBinRule::NotCounted ? "not_counted" : "excluded"},
          {"nodes", p.nodes},
          {"unit_square", p.unit_square},
          {"references", p.references},
          {"reference_restarts", p.reference_restarts},
          {"max_iters", p.max_iters},
          {"time_budget", p.time_budget},
          {"restart_from_nn", p.restart_from_nn}}},
        {"llm",
         {{"base_url", c.llm.base_url},
          {"model", c.llm.model},
          {"api_key_env", c.llm.api_key_env},
          {"temperature", c.llm.temperature},
          {"timeout", c.llm.timeout.count() / 1000.0},
          {"max_retries", c.llm.max_retries}}},
        {"dsl_limits", {{"max_steps", c.limits.max_steps}, {"max_loop_total", c.limits.max_loop_total}}},
    };
}

std::filesystem::path resolve_data_path(const Config& cfg, const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute()) return p;
    const auto local = cfg.base_dir / p;
    if (std::filesystem::exists(local)) return local;
    const auto fallback = std::filesystem::path(MEOH_DATA_ROOT) / p;
    if (std::filesystem::exists(fallback)) return fallback;
    return local;
}

std::unique_ptr<ProblemEnvironment> make_environment(const Config& cfg) {
    const auto& p = cfg.problem;
    if (p.kind == "bpp") {
        std::vector<bpp::Instance> instances;
        if (!p.instance_files.empty()) {
            for (const auto& f : p.instance_files) instances.push_back(bpp::load_instance(resolve_data_path(cfg, f)));
        } else {
            for (int k = 0; k < p.instances; ++k) {
                instances.push_back(bpp::generate_weibull_instance(p.items, p.capacity, p.instance_seed + k, p.weibull));
            }
        }
        bpp::EvalOptions opt;
        opt.limits = cfg.limits;
        opt.rule = p.unused_bin_rule;
        opt.mode = cfg.run.objective_mode;
        return std::make_unique<bpp::Environment>(std::move(instances), opt);
    }

    std::vector<tsp::Instance> instances;
    if (p.unit_square) {
        instances.push_back(tsp::from_coords("unit_square", {{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
    } else if (!p.instance_files.empty()) {
        for (const auto& f : p.instance_files) instances.push_back(tsp::load_tsplib(resolve_data_path(cfg, f)));
    } else {
        for (int k = 0; k < p.instances; ++k) instances.push_back(tsp::generate_uniform_instance(p.nodes, p.instance_seed + k));
    }
    std::map<std::string, double> known;
    if (!p.references.empty()) {
        for (const auto& [name, len] : tsp::load_reference_lengths(resolve_data_path(cfg, p.references))) known[name] = len;
    }
    std::vector<double> refs(instances.size(), 0.0);
    const auto count = static_cast<long>(instances.size());
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < count; ++k) {
        auto it = known.find(instances[k].name);
        if (it != known.end()) {
            refs[k] = it->second;
        } else if (instances[k].size() <= tsp::kExactMaxNodes) {
            refs[k] = tsp::exact_solve_small(instances[k]).second;
        } else {
            refs[k] = tsp::reference_solve(instances[k], p.reference_restarts, p.instance_seed + k).second;
        }
    }
    tsp::EvalOptions opt;
    opt.gls.max_iters = p.max_iters;
    opt.gls.time_budget = std::chrono::duration<double>(p.time_budget);
    opt.gls.limits = cfg.limits;
    opt.gls.restart_from_nn = p.restart_from_nn;
    opt.mode = cfg.run.objective_mode;
    return std::make_unique<tsp::Environment>(std::move(instances), std::move(refs), opt);
}

std::string run_id(const Config& cfg) {
    const std::string text = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return cfg.preset + "-s" + std::to_string(cfg.run.seed) + "-" + buf;
}

// --- archive ----------------------------------------------------------------

namespace {

nlohmann::json record_json(const evolution::ArchiveRecord& r) {
    nlohmann::json j = {
        {"type", "record"},
        {"id", r.id},
        {"generation", r.generation},
        {"slot", r.slot},
        {"operator", operator_name(r.op)},
        {"parent_ids", r.parent_ids},
        {"admitted", r.admitted},
        {"failure_category", r.admitted ? nlohmann::json(nullptr) : nlohmann::json(r.failure_category)},
        {"failure_message", r.failure_message},
        {"description", r.description},
        {"source", r.source},
        {"objectives", r.objectives},
        {"eval_steps", r.eval_steps},
        {"eval_seconds", r.eval_seconds},
        {"retries", r.retries},
        {"timestamp", r.timestamp},
    };
    return j;
}

evolution::ArchiveRecord record_from(const nlohmann::json& j) {
    evolution::ArchiveRecord r;
    r.id = j.at("id").get<std::uint64_t>();
    r.generation = j.at("generation").get<int>();
    r.slot = j.at("slot").get<int>();
    r.op = parse_operator(j.at("operator").get<std::string>());
    r.parent_ids = j.at("parent_ids").get<std::vector<std::uint64_t>>();
    r.admitted = j.at("admitted").get<bool>();
    if (!r.admitted) r.failure_category = j.at("failure_category").get<std::string>();
    r.failure_message = j.at("failure_message").get<std::string>();
    r.description = j.at("description").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.objectives = j.at("objectives").get<std::vector<double>>();
    r.eval_steps = j.at("eval_steps").get<std::uint64_t>();
    r.eval_seconds = j.at("eval_seconds").get<double>();
    r.retries = j.at("retries").get<int>();
    r.timestamp = j.at("timestamp").get<std::string>();
    return r;
}

}  // namespace

void write_archive(std::ostream& out, const nlohmann::json& header, const evolution::RunArchive& archive) {
    nlohmann::json h = header;
    h["type"] = "header";
    out << h.dump() << '\n';
    for (const auto& r : archive.records) out << record_json(r).dump() << '\n';
    for (const auto& g : archive.generations) {
        out << nlohmann::json{{"type", "generation"}, {"generation", g.generation}, {"ids", g.ids}, {"scores", g.scores}}
                   .dump()
            << '\n';
    }
}

ArchiveFile read_archive(std::istream& in) {
    ArchiveFile file;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (!have_header) {
                if (type != "header") throw CorruptArchive("first line is not a header");
                file.header = j;
                have_header = true;
            } else if (type == "record") {
                auto r = record_from(j);
                if (!file.archive.records.empty() && r.id <= file.archive.records.back().id) {
                    throw CorruptArchive("record ids are not strictly increasing");
                }
                if (r.admitted) {
                    if (r.objectives.empty()) throw CorruptArchive("admitted record without objectives");
                    for (double x : r.objectives) {
                        if (!std::isfinite(x)) throw CorruptArchive("admitted record with non-finite objectives");
                    }
                } else if (r.failure_category.empty()) {
                    throw CorruptArchive("failed record without a category");
                }
                file.archive.records.push_back(std::move(r));
            } else if (type == "generation") {
                evolution::GenerationSnapshot g;
                g.generation = j.at("generation").get<int>();
                g.ids = j.at("ids").get<std::vector<std::uint64_t>>();
                g.scores = j.at("scores").get<std::vector<double>>();
                if (g.ids.size() != g.scores.size()) throw CorruptArchive("snapshot ids and scores differ in length");
                file.archive.generations.push_back(std::move(g));
            } else {
                throw CorruptArchive("unknown line type '" + type + "'");
            }
        } catch (const CorruptArchive& e) {
            throw CorruptArchive("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception& e) {
            throw CorruptArchive("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw CorruptArchive("archive is empty");
    return file;
}

ArchiveFile load_archive(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CorruptArchive("cannot read archive " + path.string());
    return read_archive(in);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot replace " + path.string() + ": " + ec.message());
}

// --- reports ----------------------------------------------------------------

std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    std::string s = buf;
    if (s == "-0") s = "0";
    return s;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

std::vector<pareto::ObjectiveVector> admitted_objectives(const evolution::RunArchive& archive, int up_to_generation) {
    std::vector<pareto::ObjectiveVector> out;
    for (const auto& r : archive.records) {
        if (r.admitted && r.generation <= up_to_generation) out.push_back(r.objectives);
    }
    return out;
}

std::vector<pareto::ObjectiveVector> front_of(const std::vector<pareto::ObjectiveVector>& set) {
    std::vector<pareto::ObjectiveVector> out;
    if (set.empty()) return out;
    for (std::size_t k : pareto::nondominated_filter(set)) out.push_back(set[k]);
    return out;
}

double normalized_hv(const std::vector<pareto::ObjectiveVector>& set, const pareto::NormalizationBounds& bounds) {
    if (set.empty()) return 0.0;
    return pareto::hypervolume(pareto::normalize_all(front_of(set), bounds));
}

const evolution::ArchiveRecord& lookup(const evolution::RunArchive& archive, std::uint64_t id) {
    const auto* r = archive.find(id);
    if (!r || !r->admitted) throw CorruptArchive("snapshot refers to unknown or failed record " + std::to_string(id));
    return *r;
}

}  // namespace

std::vector<MetricsRow> compute_metrics(const evolution::RunArchive& archive) {
    const auto all = admitted_objectives(archive, std::numeric_limits<int>::max());
    if (all.empty()) throw CorruptArchive("archive has no admitted heuristics");
    if (archive.generations.empty()) throw CorruptArchive("archive has no generation snapshots");
    const auto bounds = pareto::compute_bounds(all);
    const auto reference = pareto::normalize_all(front_of(all), bounds);

    std::vector<MetricsRow> rows;
    for (const auto& g : archive.generations) {
        MetricsRow row;
        row.generation = g.generation;
        row.population = g.ids.size();
        std::vector<pareto::ObjectiveVector> pop;
        for (auto id : g.ids) pop.push_back(lookup(archive, id).objectives);
        if (!pop.empty()) {
            const auto front = front_of(pop);
            row.front_size = front.size();
            const auto norm = pareto::normalize_all(front, bounds);
            row.population_hv = pareto::hypervolume(norm);
            row.population_igd = pareto::igd(norm, reference);
        }
        row.archive_hv = normalized_hv(admitted_objectives(archive, g.generation), bounds);
        double total = 0.0;
        for (double s : g.scores) total += s;
        row.mean_score = g.scores.empty() ? 0.0 : total / static_cast<double>(g.scores.size());
        rows.push_back(row);
    }
    return rows;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "generation,population,front_size,population_hv,population_igd,archive_hv,mean_dd_score\n";
    for (const auto& r : rows) {
        out += std::to_string(r.generation) + "," + std::to_string(r.population) + "," + std::to_string(r.front_size) +
               "," + format_double(r.population_hv) + "," + format_double(r.population_igd) + "," +
               format_double(r.archive_hv) + "," + format_double(r.mean_score) + "\n";
    }
    return out;
}

std::string heatmap_csv(const evolution::RunArchive& archive, std::size_t slots) {
    if (archive.generations.empty()) throw CorruptArchive("archive has no generation snapshots");
    for (const auto& g : archive.generations) slots = std::max(slots, g.scores.size());
    std::string out = "generation";
    for (std::size_t k = 0; k < slots; ++k) out += ",slot_" + std::to_string(k);
    out += "\n";
    for (const auto& g : archive.generations) {
        out += std::to_string(g.generation);
        for (std::size_t k = 0; k < slots; ++k) out += "," + (k < g.scores.size() ? format_double(g.scores[k]) : "NA");
        out += "\n";
    }
    return out;
}

std::string front_csv(const evolution::RunArchive& archive) {
    if (archive.generations.empty()) throw CorruptArchive("archive has no generation snapshots");
    const auto& last = archive.generations.back();
    std::vector<const evolution::ArchiveRecord*> members;
    std::vector<pareto::ObjectiveVector> objs;
    for (auto id : last.ids) {
        members.push_back(&lookup(archive, id));
        objs.push_back(members.back()->objectives);
    }
    std::size_t m = objs.empty() ? 0 : objs[0].size();
    std::string out = "id";
    for (std::size_t k = 0; k < m; ++k) out += ",objective_" + std::to_string(k + 1);
    out += ",generation,operator,description,source\n";
    if (objs.empty()) return out;
    for (std::size_t k : pareto::nondominated_filter(objs)) {
        const auto& r = *members[k];
        out += std::to_string(r.id);
        for (double x : r.objectives) out += "," + format_double(x);
        out += "," + std::to_string(r.generation) + "," + std::string(operator_name(r.op)) + "," +
               csv_escape(r.description) + "," + csv_escape(r.source) + "\n";
    }
    return out;
}

double archive_front_hv(const evolution::RunArchive& archive) {
    const auto all = admitted_objectives(archive, std::numeric_limits<int>::max());
    if (all.empty()) return 0.0;
    return normalized_hv(all, pareto::compute_bounds(all));
}

}  // namespace meoh::runner
