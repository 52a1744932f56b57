#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "banditforest/forest.hpp"
#include "banditforest/oracle.hpp"
#include "banditforest/stream.hpp"

// Regret harness: runs learners against streams, accumulates regret versus
// the optimal reference policy, aggregates trials and writes CSV traces.

namespace bf {

enum class LearnerKind { BanditForest, BanditTree, ContextFreeSE, UniformRandom };

struct RunConfig {
    LearnerKind learner = LearnerKind::BanditForest;

    // Engine parameters (forest learners).
    int L = 10;
    int depth_lo = 1, depth_hi = 2;
    double delta = 0.05;
    double eps_lo = 0.0, eps_hi = 0.0;
    double keep_fraction = 1.0;
    ExploreMode mode = ExploreMode::RoundRobin;
    bool vote_gate_global = false;

    // Stream source: "table1" | "xor" | "gap" | "dataset".
    std::string source = "table1";
    std::string dataset_path;
    int M = 2, K = 2;              // synthetic sources
    double gap1 = 0.25, gap2 = 0.5;  // gap source
    StreamConfig stream;

    int trials = 10;
    // "oracle" (build from the source's ground truth), "none" (best fixed
    // action, flagged in the summary), or a saved ForestPolicy file path.
    std::string reference = "oracle";
    std::string output_path;
    std::uint64_t master_seed = 1;

    void validate() const;

    // Flat key-value text, one "key value" (or "key = value") pair per line.
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;
};

// decide -> reveal -> update protocol shared by every learner.
class Learner {
public:
    virtual ~Learner() = default;
    struct Choice {
        int action = 0;
        double propensity = 1.0;
    };
    virtual Choice decide(const ContextVector& x, std::mt19937_64& rng) = 0;
    virtual void update(const ContextVector& x, const RewardObservation& obs) = 0;
};

std::unique_ptr<Learner> make_learner(const RunConfig& cfg, int K, int M, std::uint64_t seed);

// Context-ignoring successive elimination over actions; decide/update split
// of the round-robin action-selection loop.
class ContextFreeSE : public Learner {
public:
    ContextFreeSE(int K, double delta);

    Choice decide(const ContextVector& x, std::mt19937_64& rng) override;
    void update(const ContextVector& x, const RewardObservation& obs) override;

    const std::vector<int>& remaining_actions() const { return remaining_; }
    bool finished() const { return remaining_.size() == 1; }
    const ActionStatTable& stats() const { return stats_; }

private:
    EliminationConfig cfg_;
    std::vector<int> remaining_;
    ActionStatTable stats_;
    RoundRobinCursor cursor_;
    bool sweep_done_ = false;
};

struct RegretTrace {
    std::vector<std::int64_t> checkpoints;   // powers of 2 plus T
    std::vector<double> regret;              // accumulated: ref expected - realized
    std::vector<double> expected_regret;     // accumulated: ref expected - learner expected
    double final_regret = 0.0;
    double final_rate = 0.0;                 // mean realized reward, last window
    double wall_seconds = 0.0;
};

// Everything shareable across trials: the loaded dataset, the fitted spec
// and the reference policy (built once from the ground-truth distribution).
struct Experiment {
    RunConfig cfg;
    int M = 0, K = 0;
    LabeledDataset data;      // dataset source only
    BinarizationSpec spec;    // dataset source only
    std::function<int(const ContextVector&)> reference;  // null when fixed-action
    int fixed_action = 0;
    bool reference_is_fixed = false;
};

Experiment prepare_experiment(const RunConfig& cfg);
std::unique_ptr<Environment> make_environment(const Experiment& ex, std::uint64_t trial_seed);

RegretTrace run_trial(const Experiment& ex, std::uint64_t trial_seed);
RegretTrace run_trial(const RunConfig& cfg, std::uint64_t trial_seed);

struct ExperimentResult {
    std::vector<std::int64_t> checkpoints;
    std::vector<double> regret_mean, regret_std;
    double final_regret_mean = 0.0, final_regret_std = 0.0, final_regret_ci95 = 0.0;
    double final_rate_mean = 0.0;
    double wall_seconds = 0.0;
    bool reference_is_fixed = false;
    std::vector<RegretTrace> traces;
};

// Runs cfg.trials independent trials (parallel across trials), aggregates
// mean/std and the 95% normal-approximation interval, writes the CSV when
// an output path is configured.
ExperimentResult run_experiment(const RunConfig& cfg);

// Deterministic "t,regret_mean,regret_std" rows; byte-identical for
// identical config and master seed.
std::string to_csv(const ExperimentResult& result);

// One text row mirroring the results-table columns: regret with its 95%
// interval, final classification rate, wall-clock seconds.
std::string summary_row(const std::string& name, const ExperimentResult& result);

}  // namespace bf
