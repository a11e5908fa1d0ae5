#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "boxde/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"boxde: bound constraint handling experiments for differential evolution"};
    app.require_subcommand(1);

    boxde::CommandOptions opt;
    std::string config;
    std::string manifest;
    std::size_t parallelism = 0;

    auto* run = app.add_subcommand("run", "Execute one run; writes a trajectory CSV and a summary JSON");
    run->add_option("--config", config, "Run config (JSON)")->required();
    run->add_option("--out", opt.out, "Output directory (overrides the config)");
    run->add_flag("--count-infeasible-evals", opt.count_infeasible_evals,
                  "Infeasible trials consume evaluation budget");

    auto* sweep = app.add_subcommand("sweep", "Execute a grid of runs and write a manifest");
    sweep->add_option("--config", config, "Sweep config (JSON)")->required();
    sweep->add_option("--out", opt.out, "Output directory (overrides the config)");
    sweep->add_option("--parallelism", parallelism, "Worker threads (overrides the config)");
    sweep->add_flag("--count-infeasible-evals", opt.count_infeasible_evals,
                    "Infeasible trials consume evaluation budget");

    auto add_manifest = [&](CLI::App* cmd) {
        cmd->add_option("--manifest,manifest", manifest, "Sweep manifest.json")->required();
        cmd->add_option("--out", opt.out, "Output directory (default: <manifest dir>/analysis)");
    };
    auto* classify = app.add_subcommand("classify", "Convergence behaviour (GB/SF/PC/BB) per cell");
    add_manifest(classify);
    auto* cluster = app.add_subcommand("cluster", "Cosine similarity + complete-linkage dendrograms");
    add_manifest(cluster);
    cluster->add_option("--grid-points", opt.grid_points, "Resampling grid size")->check(CLI::Range(2, 1000000));
    cluster->add_option("--metric", opt.metrics,
                        "violation_probability, best_so_far or population_variance (default: all)");
    cluster->add_option("--group-by", opt.group_by, "Row labels: bchm or function")
        ->check(CLI::IsMember({"bchm", "function"}));
    cluster->add_flag("--concat-instances", opt.concat_instances,
                      "Concatenate per-instance rows instead of averaging them");
    auto* rank = app.add_subcommand("rank", "Mean rank of each method across functions");
    add_manifest(rank);
    auto* list = app.add_subcommand("list", "Print catalogued functions and method ids");

    CLI11_PARSE(app, argc, argv);
    if (parallelism > 0) opt.parallelism = parallelism;

    if (run->parsed()) return boxde::cmd_run(config, opt, std::cout, std::cerr);
    if (sweep->parsed()) return boxde::cmd_sweep(config, opt, std::cout, std::cerr);
    if (classify->parsed()) return boxde::cmd_classify(manifest, opt, std::cout, std::cerr);
    if (cluster->parsed()) return boxde::cmd_cluster(manifest, opt, std::cout, std::cerr);
    if (rank->parsed()) return boxde::cmd_rank(manifest, opt, std::cout, std::cerr);
    if (list->parsed()) return boxde::cmd_list(std::cout);
    return 1;
}
