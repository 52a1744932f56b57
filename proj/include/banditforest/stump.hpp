#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "banditforest/core.hpp"
#include "banditforest/elimination.hpp"

// The three single-node learners: Variable Selection, Action Selection and
// the combined Decision Stump. Rewards come from the environment through a
// callback so the learners run unchanged on synthetic distributions, dataset
// streams and unit-test fixtures.

namespace bf {

using RewardSource = std::function<double(const ContextVector&, int action)>;

// Identifies the variable maximizing mu^i = sum_v max_k mu^i_{k,v} by
// round-robin play over all K actions and successive elimination of
// variables at sweep boundaries.
class VariableSelection {
public:
    explicit VariableSelection(const EliminationConfig& cfg);

    bool finished() const { return remaining_.size() == 1; }
    int chosen_variable() const { return remaining_.front(); }
    const std::vector<int>& remaining_variables() const { return remaining_; }
    const PairStatTable& stats() const { return stats_; }
    std::int64_t steps() const { return steps_; }

    // Plays one action, credits the reward, eliminates at sweep boundaries.
    int step(const ContextVector& x, const RewardSource& rewards);

private:
    EliminationConfig cfg_;
    std::vector<int> remaining_;
    PairStatTable stats_;
    RoundRobinCursor cursor_;
    std::int64_t steps_ = 0;
};

// Successive elimination over actions (context-free best-arm identification).
class ActionSelection {
public:
    explicit ActionSelection(const EliminationConfig& cfg);

    bool finished() const { return remaining_.size() == 1; }
    int chosen_action() const { return remaining_.front(); }
    const std::vector<int>& remaining_actions() const { return remaining_; }
    const ActionStatTable& stats() const { return stats_; }
    std::int64_t steps() const { return steps_; }

    int step(const RewardSource& rewards);

private:
    EliminationConfig cfg_;
    std::vector<int> remaining_;
    ActionStatTable stats_;
    RoundRobinCursor cursor_;
    std::int64_t steps_ = 0;
};

// One action-selection task per (variable, value); shared by DecisionStump
// and by the forest's per-path nodes. Action sets are pruned throughout, but
// the pruning governs play only once the variable is chosen.
struct ValueActionCell {
    std::vector<int> remaining;
    ActionStatTable stats;

    bool operator==(const ValueActionCell&) const = default;
};

// Algorithm combining both phases: round-robin over all K actions while
// |S| > 1, then leaf-level round-robin over the surviving actions of the
// chosen variable's observed value.
class DecisionStump {
public:
    explicit DecisionStump(const EliminationConfig& cfg);

    bool variable_chosen() const { return chosen_var_ >= 0; }
    int chosen_variable() const { return chosen_var_; }
    const std::vector<int>& remaining_variables() const { return remaining_vars_; }
    const std::vector<int>& remaining_actions(int var, int value) const;
    // Converged: variable chosen and both value cells hold a single action.
    bool converged() const;
    std::int64_t steps() const { return steps_; }
    const PairStatTable& variable_stats() const { return pair_; }

    int step(const ContextVector& x, const RewardSource& rewards);

    // Current greedy policy (best known action for x); defined after the
    // variable is chosen.
    int policy(const ContextVector& x) const;

private:
    void run_variable_eliminations(std::int64_t t_k);

    EliminationConfig cfg_;
    std::vector<int> remaining_vars_;
    PairStatTable pair_;
    RoundRobinCursor global_cursor_;
    std::vector<std::array<ValueActionCell, 2>> cells_;  // indexed by variable id
    std::array<std::optional<RoundRobinCursor>, 2> leaf_cursors_;
    int chosen_var_ = -1;
    std::int64_t steps_ = 0;
};

// Helpers shared with the forest module.
namespace detail {
// Lowest-index argmax of score() over ids.
template <typename Score>
int argmax_id(const std::vector<int>& ids, Score&& score) {
    int best = ids.front();
    double best_val = score(best);
    for (int id : ids) {
        const double s = score(id);
        if (s > best_val) {
            best_val = s;
            best = id;
        }
    }
    return best;
}

// AE elimination pass over one (variable, value) cell; fires only when the
// played action is the cell's sweep-closing (max id) remaining action.
void maybe_eliminate_actions(ValueActionCell& cell, int played, double epsilon,
                             const std::function<double(std::int64_t)>& radius);
}  // namespace detail

}  // namespace bf
