#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "banditforest/core.hpp"
#include "banditforest/elimination.hpp"
#include "banditforest/stump.hpp"

// L randomized greedy trees grown by stacking per-path stumps, with the
// forest variants of the elimination radii, the explore/vote gate, and the
// per-node variable subsampling function f(theta, c, i).

namespace bf {

struct TreeRandomization {
    std::uint64_t theta_seed = 0;
    int depth_cap = 1;              // D_theta, <= global D
    double epsilon_theta = 0.0;     // per-tree elimination slack
    double keep_fraction = 1.0;     // per-node variable subsampling rate, in (0,1]
};

// Ordered (variable, value) tests from the root; variable ids are distinct.
using PathKey = std::vector<std::pair<int, int>>;

struct PathNode {
    int depth = 1;                      // root = 1; terminal when depth == depth_cap
    std::vector<int> available;         // V_c: variables usable by this subtree
    std::vector<int> candidates;        // S_c = f-filtered subset of available
    PairStatTable pair;                 // variable statistics, forest radii
    std::vector<std::array<ValueActionCell, 2>> cells;  // per (i, v), forest radii
    int chosen_var = -1;
    bool expanded = false;              // children spawned
};

class TreeState {
public:
    TreeState() = default;
    TreeState(const EliminationConfig& cfg, const TreeRandomization& rand);

    const TreeRandomization& randomization() const { return rand_; }
    const std::map<PathKey, PathNode>& nodes() const { return nodes_; }
    const PathNode& node(const PathKey& key) const { return nodes_.at(key); }

    // Walks from the root following chosen variables until an unfinished or
    // terminal-depth node.
    PathKey select_path(const ContextVector& x) const;

    // Terminal node, variable chosen, and a single surviving action for the
    // observed value of the chosen variable.
    bool ready(const PathKey& key, const ContextVector& x) const;
    int vote(const PathKey& key, const ContextVector& x) const;

    // Actions still viable on this path given x (union over candidate
    // variables while the variable phase is open).
    std::vector<int> remaining_actions(const PathKey& key, const ContextVector& x) const;

    // Allocates a zeroed stump for key with the f-filtered candidate set.
    void new_path(const PathKey& key, const std::vector<int>& available);

    // Credits one observation to the node selected for x; runs eliminations
    // and spawns children when the variable phase finishes below the cap.
    // With shared_counts (IPS exploration) every action's count advances
    // each round: the played action receives the credited reward, the rest
    // receive 0, keeping the per-action means unbiased under randomized
    // play; elimination checks then fire every round instead of at
    // round-robin sweep boundaries.
    void credit(const PathKey& key, const ContextVector& x, int action, double reward,
                bool shared_counts = false);

    // Global vote gate helper: every allocated node has finished its phase.
    bool fully_converged() const;

    bool operator==(const TreeState& other) const;

private:
    void run_variable_eliminations(PathNode& node, std::int64_t t_k);
    void maybe_expand(const PathKey& key);

    EliminationConfig cfg_;
    TreeRandomization rand_;
    std::map<PathKey, PathNode> nodes_;

    friend class ForestEngine;
};

enum class ExploreMode {
    RoundRobin,       // analyzed algorithm: round-robin over all K, propensity 1
    UniformUnionIps,  // uniform over the union of remaining actions, IPS credit
};

struct ForestConfig {
    EliminationConfig base;       // K, M, delta; L/D filled from below
    int L = 1;
    int depth_lo = 1, depth_hi = 1;
    double eps_lo = 0.0, eps_hi = 0.0;
    double keep_fraction = 1.0;
    ExploreMode mode = ExploreMode::RoundRobin;
    bool vote_gate_global = false;  // "forall theta" read over all paths, not just selected
    std::uint64_t seed = 1;
};

class ForestEngine {
public:
    ForestEngine() = default;
    explicit ForestEngine(const ForestConfig& cfg);

    struct Decision {
        int action = 0;
        double propensity = 1.0;
        std::vector<PathKey> keys;  // one selected path per tree
        bool vote = false;          // true when the action came from the vote gate
    };

    Decision decide(const ContextVector& x, std::mt19937_64& rng);
    void update(const ContextVector& x, const RewardObservation& obs,
                const std::vector<PathKey>& keys);

    const std::vector<TreeState>& trees() const { return trees_; }
    const ForestConfig& config() const { return fcfg_; }
    std::int64_t step_count() const { return t_; }

    // When true, update() distributes tree updates over OpenMP threads.
    // Results are bit-identical to the serial path (trees share no state).
    void set_parallel(bool on) { parallel_ = on; }

    // Versioned snapshot sufficient to pause/resume a run bit-exactly.
    std::string save_snapshot() const;
    static ForestEngine load_snapshot(const std::string& text);

    bool operator==(const ForestEngine& other) const;

private:
    ForestConfig fcfg_;
    EliminationConfig cfg_;  // base with D = depth_hi, L = number of trees
    std::vector<TreeState> trees_;
    RoundRobinCursor explore_cursor_;
    std::int64_t t_ = 0;
    bool parallel_ = false;
};

}  // namespace bf
