#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "banditforest/bench.hpp"

// Command-line front end: `run` executes a benchmark config, `oracle` builds
// a reference forest from a dataset, `binarize` fits and saves an encoding
// spec.

int main(int argc, char** argv) {
    CLI::App app{"Bandit forest benchmark harness"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a benchmark config and write the regret CSV");
    run->add_option("--config", config_path, "flat key-value config file")->required();

    std::string dataset_path, out_path;
    int oracle_trees = 10, oracle_depth = 4;
    double oracle_keep = 1.0;
    std::uint64_t oracle_seed = 1;
    auto* oracle = app.add_subcommand("oracle", "build a reference forest from a dataset");
    oracle->add_option("--dataset", dataset_path, "schema-headed delimited text file")->required();
    oracle->add_option("--out", out_path, "output policy file")->required();
    oracle->add_option("--trees", oracle_trees, "number of greedy trees");
    oracle->add_option("--depth", oracle_depth, "depth cap per tree");
    oracle->add_option("--keep", oracle_keep, "per-node variable keep fraction");
    oracle->add_option("--seed", oracle_seed, "randomization seed");

    std::string bin_dataset, bin_out;
    auto* binarize = app.add_subcommand("binarize", "fit and save a binarization spec");
    binarize->add_option("--dataset", bin_dataset, "schema-headed delimited text file")->required();
    binarize->add_option("--out", bin_out, "output spec file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto cfg = bf::RunConfig::load(config_path);
            const auto result = bf::run_experiment(cfg);
            std::printf("%s\n", bf::summary_row(config_path, result).c_str());
            if (cfg.output_path.empty()) std::printf("%s", bf::to_csv(result).c_str());
        } else if (*oracle) {
            const auto data = bf::LabeledDataset::load(dataset_path);
            const auto spec = bf::fit_binarization(data);
            const auto truth = bf::empirical_distribution(data, spec);
            std::vector<bf::TreeRandomization> rands;
            for (int l = 0; l < oracle_trees; ++l)
                rands.push_back({oracle_seed + static_cast<std::uint64_t>(l), oracle_depth, 0.0,
                                 oracle_keep});
            const auto policy = bf::optimal_forest_policy(truth, rands);
            policy.save(out_path);
            std::printf("wrote %d-tree reference to %s (value %.6f on the empirical measure)\n",
                        oracle_trees, out_path.c_str(),
                        bf::policy_value(truth, [&](const bf::ContextVector& x) {
                            return policy.decide(x);
                        }));
        } else if (*binarize) {
            const auto data = bf::LabeledDataset::load(bin_dataset);
            const auto spec = bf::fit_binarization(data);
            spec.save(bin_out);
            std::printf("wrote spec for %zu columns (width %d) to %s\n", spec.columns.size(),
                        spec.width(), bin_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
