#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxde/analysis.hpp"
#include "boxde/engine.hpp"

namespace boxde {

using Json = nlohmann::ordered_json;

/// Config file does not match the schema. One entry per offending field.
class SchemaError : public std::invalid_argument {
public:
    explicit SchemaError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Settings shared by single runs and sweeps (everything except the
/// problem coordinates).
struct AlgorithmSettings {
    std::uint64_t budget_multiplier = 10000;
    std::optional<std::uint64_t> budget;
    std::optional<double> target_error;
    bool count_infeasible_evals = false;
    std::uint64_t max_generations = 0;
    ClassicDEParams classic;
    ShadeParams lshade;
    double beta_epsilon = 0.1;
    AdaptiveConfig adaptive;
    ClassifierConfig classifier;
};

struct RunSpec {
    std::string function;
    std::int64_t instance = 1;
    std::size_t dimension = 0;
    PlacementMode mode = PlacementMode::Sbox;
    EngineKind engine = EngineKind::Classic;
    Method bchm = Method::Saturation;
    std::uint64_t seed = 1;
    std::optional<Vector> optimum_location;
    double optimum_value = 0.0;
    AlgorithmSettings settings;
    std::string output_directory = ".";
    std::string name = "run";
};

struct SweepConfig {
    std::vector<std::string> functions;
    std::vector<std::int64_t> instances{1, 2, 3, 4, 5};
    std::vector<std::size_t> dimensions{20};
    std::vector<PlacementMode> modes{PlacementMode::Sbox};
    std::vector<EngineKind> engines{EngineKind::LShade};
    std::vector<Method> bchms;
    std::size_t runs_per_cell = 5;
    std::uint64_t base_seed = 0;
    std::string output_directory = "sweep_out";
    std::size_t parallelism = 1;
    AlgorithmSettings settings;
};

/// Throws SchemaError listing every problem (unknown keys included).
RunSpec parse_run_config(const Json& j);
SweepConfig parse_sweep_config(const Json& j);

/// Resolved config with every default filled in.
Json to_json(const RunSpec& spec);
Json to_json(const SweepConfig& cfg);

Json read_json_file(const std::filesystem::path& p);

/// Built-in catalogue function or a plugin registered under that name.
std::shared_ptr<const Problem> resolve_problem(const RunSpec& spec);

RunConfig make_run_config(const RunSpec& spec);

/// 64-bit seed of one sweep cell run.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view function, std::int64_t instance,
                          std::size_t dimension, EngineKind engine, Method bchm, std::size_t run_index);

/// Runs `spec` and writes <name>.csv and <name>.json into `dir`.
/// Returns the summary JSON.
Json execute_run(const RunSpec& spec, const std::filesystem::path& dir);

struct CommandOptions {
    std::optional<std::string> out;
    std::optional<std::size_t> parallelism;
    bool count_infeasible_evals = false;
    std::size_t grid_points = 200;
    std::vector<std::string> metrics;
    std::string group_by = "bchm";
    bool concat_instances = false;
};

/// Subcommand entry points. Exit codes: 0 success, 1 runtime failure,
/// 2 schema violation.
int cmd_run(const std::filesystem::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::filesystem::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_classify(const std::filesystem::path& manifest, const CommandOptions& opt, std::ostream& out,
                 std::ostream& err);
int cmd_cluster(const std::filesystem::path& manifest, const CommandOptions& opt, std::ostream& out,
                std::ostream& err);
int cmd_rank(const std::filesystem::path& manifest, const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_list(std::ostream& out);

/// Similarity matrix as CSV with a labelled header row and column.
void write_similarity_csv(std::ostream& out, const std::vector<std::string>& labels,
                          const std::vector<Vector>& similarity);

}  // namespace boxde
