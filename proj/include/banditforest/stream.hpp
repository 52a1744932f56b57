#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "banditforest/core.hpp"
#include "banditforest/oracle.hpp"

// Environment construction: dataset ingestion, binarization and one-hot
// encoding, bit-flip noise, loop streaming, and the synthetic generators
// used by the tests and the benchmark harness.

namespace bf {

enum class ColumnKind { Continuous, Categorical, Binary };

// Per-column recoding rules. Continuous columns become 5 equal-frequency
// bins (4 interior quintile cuts, type-7 linear-interpolation quantiles);
// categorical columns become one-hot blocks; binary columns pass through.
struct BinarizationSpec {
    struct Column {
        ColumnKind kind = ColumnKind::Binary;
        std::vector<double> thresholds;       // continuous: 4 nondecreasing cuts
        std::vector<std::string> categories;  // categorical: one-hot order
        int width() const;
    };
    std::vector<Column> columns;

    int width() const;  // total encoded M
    void validate() const;

    static BinarizationSpec load(const std::string& path);
    void save(const std::string& path) const;
};

// Delimited text with a one-line schema header naming each column's kind
// ("continuous" | "categorical" | "binary" | "label", exactly one label).
struct LabeledDataset {
    std::vector<ColumnKind> schema;               // feature columns only
    std::vector<std::vector<std::string>> rows;   // raw feature cells
    std::vector<int> labels;                      // index into label_names
    std::vector<std::string> label_names;         // action vocabulary

    int K() const { return static_cast<int>(label_names.size()); }
    std::size_t size() const { return rows.size(); }

    static LabeledDataset load(const std::string& path);
};

BinarizationSpec fit_binarization(const LabeledDataset& data);

// Deterministic one-hot encoding. Unseen categories produce an all-zero
// block; when unseen_count is given it is incremented per such block.
ContextVector encode(const BinarizationSpec& spec, const std::vector<std::string>& row,
                     std::int64_t* unseen_count = nullptr);

// Each bit independently flipped with probability p.
ContextVector apply_noise(const ContextVector& x, double p, std::mt19937_64& rng);

struct StreamConfig {
    double noise_flip_prob = 0.05;
    bool loop = true;
    std::uint64_t shuffle_seed = 1;
    std::int64_t T = 1;

    void validate() const;
};

// One bandit round at a time: next() draws and reveals the context, then
// reward(k) reveals only the chosen action's reward. mean_reward(k) is the
// hidden conditional expectation for the round, used by the regret harness.
class Environment {
public:
    virtual ~Environment() = default;
    virtual int vars() const = 0;
    virtual int actions() const = 0;
    virtual ContextVector next(std::mt19937_64& rng) = 0;
    virtual double reward(int action, std::mt19937_64& rng) = 0;
    virtual double mean_reward(int action) const = 0;
};

// Shuffles the dataset once (every row appears once per epoch), loops when
// configured, encodes and noises each row. The hidden reward vector is the
// one-hot of the class label.
class DatasetStream : public Environment {
public:
    DatasetStream(LabeledDataset data, BinarizationSpec spec, StreamConfig cfg);

    int vars() const override { return spec_.width(); }
    int actions() const override { return data_.K(); }
    ContextVector next(std::mt19937_64& rng) override;
    double reward(int action, std::mt19937_64& rng) override;
    double mean_reward(int action) const override;

    std::int64_t steps() const { return t_; }
    std::int64_t unseen_categories() const { return unseen_; }
    const BinarizationSpec& spec() const { return spec_; }

private:
    LabeledDataset data_;
    BinarizationSpec spec_;
    StreamConfig cfg_;
    std::vector<std::size_t> perm_;
    std::size_t pos_ = 0;
    std::int64_t t_ = 0;
    std::int64_t unseen_ = 0;
    int current_label_ = -1;
};

// Ground-truth measure of a dataset: one row per distinct encoded context
// (noise-free), weight = empirical frequency, means = label frequencies.
KnownDistribution empirical_distribution(const LabeledDataset& data,
                                         const BinarizationSpec& spec);

// Two binary variables, two actions. The sampler draws the variables
// independently (P(x_0=1)=3/8, P(x_1=1)=1/4); action 0 pays 1 exactly when
// x_0=1, action 1 is Bernoulli with mean q2[x_0][x_1].
class Table1Env : public Environment {
public:
    int vars() const override { return 2; }
    int actions() const override { return 2; }
    ContextVector next(std::mt19937_64& rng) override;
    double reward(int action, std::mt19937_64& rng) override;
    double mean_reward(int action) const override;

    // Per-value conditional means the golden scores are computed from. The
    // action-0 row is not realizable by any bounded joint reward (one cell
    // exceeds 1), so this measure is marginal-exact only; the sampler below
    // matches it everywhere except mu_{k0}^{i1} conditioned on x_1.
    static KnownDistribution golden_distribution();
    // Exact law of the sampler; valid as a regret reference for this env.
    static KnownDistribution sampler_distribution();

private:
    ContextVector x_;
};

// Uniform context bits; action k pays 1 iff k == x_0 XOR x_1. Variables
// beyond the first two are pure distractors.
class XorEnv : public Environment {
public:
    explicit XorEnv(int M);

    int vars() const override { return M_; }
    int actions() const override { return 2; }
    ContextVector next(std::mt19937_64& rng) override;
    double reward(int action, std::mt19937_64& rng) override;
    double mean_reward(int action) const override;

    // Full enumeration; only sensible for small M.
    static KnownDistribution distribution(int M);

private:
    int M_ = 2;
    ContextVector x_;
};

// Configurable-gap instance: the best action tracks x_0 with action gap
// exactly delta2; x_1 is a degraded copy of x_0 placing the variable gap at
// exactly delta1; remaining variables are uninformative. Requires
// delta1 <= delta2 / 2 (otherwise a noise variable would outscore x_1).
class GapEnv : public Environment {
public:
    GapEnv(int K, int M, double delta1, double delta2);

    int vars() const override { return M_; }
    int actions() const override { return K_; }
    ContextVector next(std::mt19937_64& rng) override;
    double reward(int action, std::mt19937_64& rng) override;
    double mean_reward(int action) const override;

    static KnownDistribution distribution(int K, int M, double delta1, double delta2);

private:
    int K_ = 2, M_ = 2;
    double delta1_ = 0.0, delta2_ = 0.0;
    ContextVector x_;
};

}  // namespace bf
