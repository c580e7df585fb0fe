#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "meoh/bpp.hpp"
#include "meoh/evolution.hpp"
#include "meoh/operators.hpp"
#include "meoh/tsp.hpp"

namespace meoh::runner {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CorruptArchive : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sections of `[name]` holding `key = value` lines; values are quoted strings,
/// booleans, integers or floats. Comments start with #.
using ConfigTable = std::map<std::string, std::map<std::string, std::string>>;

ConfigTable parse_config_table(std::string_view text);

struct ProblemConfig {
    std::string kind = "bpp";  // bpp | tsp
    int instances = 5;
    std::uint64_t instance_seed = 0;
    std::vector<std::string> instance_files;  // bpp text files or TSPLIB files; overrides generation

    std::size_t items = 5000;
    int capacity = 100;
    bpp::WeibullParams weibull;
    bpp::UnusedBinRule unused_bin_rule = bpp::UnusedBinRule::NotCounted;

    std::size_t nodes = 100;
    bool unit_square = false;
    std::string references;  // "name length" file
    int reference_restarts = 8;
    int max_iters = 1000;
    double time_budget = 60.0;
    bool restart_from_nn = false;
};

struct Config {
    std::string preset;
    evolution::RunConfig run;
    std::string mode = "mock";  // mock | endpoint
    double mock_malformed_rate = 0.1;
    int threads = 0;  // evaluator threads; 0 keeps the OpenMP default. Not part of the archive header.
    ProblemConfig problem;
    operators::EndpointConfig llm;
    dsl::ExecLimits limits;
    std::filesystem::path base_dir;  // relative paths resolve against this
};

/// Built-in presets: bpp, bpp-small, tsp, tsp-berlin52, tsp-unit-square.
Config preset_config(std::string_view name);
std::vector<std::string> preset_names();

/// `[problem] preset` picks the defaults; every other key overrides them.
Config config_from_table(const ConfigTable& table, std::filesystem::path base_dir);
Config load_config(const std::filesystem::path& path);

nlohmann::json config_to_json(const Config& cfg);

std::filesystem::path resolve_data_path(const Config& cfg, const std::string& path);

std::unique_ptr<ProblemEnvironment> make_environment(const Config& cfg);

/// Deterministic for a given configuration.
std::string run_id(const Config& cfg);

// --- archive ----------------------------------------------------------------

struct ArchiveFile {
    nlohmann::json header;
    evolution::RunArchive archive;
};

void write_archive(std::ostream& out, const nlohmann::json& header, const evolution::RunArchive& archive);
ArchiveFile read_archive(std::istream& in);
ArchiveFile load_archive(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// --- reports ----------------------------------------------------------------

struct MetricsRow {
    int generation = 0;
    std::size_t population = 0;
    std::size_t front_size = 0;
    double population_hv = 0.0;
    double population_igd = 0.0;
    double archive_hv = 0.0;
    double mean_score = 0.0;
};

/// Normalization bounds and the IGD reference set both come from every
/// admitted record in the archive.
std::vector<MetricsRow> compute_metrics(const evolution::RunArchive& archive);
std::string metrics_csv(const std::vector<MetricsRow>& rows);

/// generations x slots grid of dd-scores; "NA" where a slot was empty.
std::string heatmap_csv(const evolution::RunArchive& archive, std::size_t slots);

/// Non-dominated members of the last snapshot.
std::string front_csv(const evolution::RunArchive& archive);

/// Archive-to-date HV of every admitted record so far, normalized by those records' bounds.
double archive_front_hv(const evolution::RunArchive& archive);

std::string csv_escape(const std::string& field);
std::string format_double(double x);

// --- command line -----------------------------------------------------------

/// Exit codes: 0 success, 1 configuration/input errors, 2 initialization exhausted.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace meoh::runner
