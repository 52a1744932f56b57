#pragma once

#include <functional>
#include <string>
#include <vector>

#include "banditforest/core.hpp"
#include "banditforest/forest.hpp"

// Greedy trees built from a fully known distribution, the optimal-forest
// vote, and exact policy evaluation. These are the regret references.

namespace bf {

// Either an explicit enumeration of context probabilities and conditional
// mean rewards, or an empirical dataset treated as the ground truth (rows
// weighted 1/N, means = observed reward vectors).
struct KnownDistribution {
    int M = 0;
    int K = 0;
    struct Row {
        ContextVector x;
        double p = 0.0;             // probability (explicit) or weight (empirical)
        std::vector<double> means;  // E[y_k | x], one per action
    };
    std::vector<Row> rows;

    void validate(double tol = 1e-9) const;  // probabilities sum to 1

    // Plain-text tabular format: one row per context, columns = M context
    // bits, P(x), then K conditional means.
    static KnownDistribution load(const std::string& path);
    void save(const std::string& path) const;
};

// P(path) under dist.
double path_probability(const KnownDistribution& dist, const PathKey& path);

// For each candidate i: sum_v max_k E[y_k * 1{x_i=v} | path]. Errors on a
// zero-probability path.
std::vector<double> conditional_scores(const KnownDistribution& dist, const PathKey& path,
                                       const std::vector<int>& candidates);

// argmax_k E[y_k | path] with its value; lowest id wins ties.
std::pair<int, double> best_action(const KnownDistribution& dist, const PathKey& path);

// Deterministic greedy tree policy: internal nodes test one variable,
// leaves carry exactly one action.
class GreedyTreePolicy {
public:
    int decide(const ContextVector& x) const;
    int depth() const;

    struct Node {
        int var = -1;     // -1 for leaves
        int action = -1;  // set for leaves
        int child[2] = {-1, -1};

        bool operator==(const Node&) const = default;
    };
    std::vector<Node> nodes;  // nodes[0] is the root

    bool operator==(const GreedyTreePolicy&) const = default;
};

// Recursively splits on the argmax conditional score among the f-filtered
// candidates until the depth cap (or exhausted variables / single-row
// support), then assigns each leaf its best action. Zero-probability
// branches inherit the parent's best action.
GreedyTreePolicy build_theta_optimal_greedy(const KnownDistribution& dist,
                                            const TreeRandomization& rand);

// Plurality vote over L greedy trees.
class ForestPolicy {
public:
    int decide(const ContextVector& x) const;
    std::vector<GreedyTreePolicy> trees;

    bool operator==(const ForestPolicy&) const = default;

    static ForestPolicy load(const std::string& path);
    void save(const std::string& path) const;
};

ForestPolicy optimal_forest_policy(const KnownDistribution& dist,
                                   const std::vector<TreeRandomization>& rands);

// Exact expected per-round reward of a deterministic policy under dist.
double policy_value(const KnownDistribution& dist,
                    const std::function<int(const ContextVector&)>& policy);

}  // namespace bf
