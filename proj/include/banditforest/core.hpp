#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

// Shared primitives: incremental reward statistics, round-robin play and
// plurality voting. Everything here is single-writer; parallelism lives
// above (one table per tree/path).

namespace bf {

// Binary context vector x_t in {0,1}^M, indexed by variable id.
using ContextVector = std::vector<std::uint8_t>;

struct RewardObservation {
    int action = 0;
    double reward = 0.0;      // in [0,1] before IPS scaling
    double propensity = 1.0;  // probability the action was drawn; 1 when round-robin
};

// Running estimates mu_hat[i][k][v] of E[y_k * 1{x_i=v}] plus per-action
// play counts and the derived per-variable scores mu_hat_var[i].
class PairStatTable {
public:
    PairStatTable() = default;
    PairStatTable(int num_vars, int num_actions)
        : M_(num_vars), K_(num_actions),
          mu_(static_cast<std::size_t>(num_vars) * num_actions * 2, 0.0),
          counts_(num_actions, 0), scores_(num_vars, 0.0) {}

    int num_vars() const { return M_; }
    int num_actions() const { return K_; }

    std::int64_t count(int k) const { return counts_.at(k); }
    void increment_count(int k) { ++counts_.at(k); }

    double mu(int i, int k, int v) const { return mu_[idx(i, k, v)]; }
    // Score mu_hat_var[i] = sum_v max_k mu_hat[i][k][v].
    double score(int i) const { return scores_.at(i); }

    // mu_hat[i][k][v] = y/t * 1{x_i=v} + (t-1)/t * mu_hat[i][k][v] for every
    // active i, with t the (already incremented) count of obs.action.
    void update(const ContextVector& x, const RewardObservation& obs,
                const std::vector<int>& active_vars) {
        if (obs.action < 0 || obs.action >= K_)
            throw std::invalid_argument("PairStatTable::update: unknown action id");
        const std::int64_t t = counts_[obs.action];
        if (t < 1)
            throw std::logic_error("PairStatTable::update: count not incremented");
        const double inv_t = 1.0 / static_cast<double>(t);
        const double keep = static_cast<double>(t - 1) * inv_t;
        for (int i : active_vars) {
            const int v = x[static_cast<std::size_t>(i)] ? 1 : 0;
            mu_[idx(i, obs.action, v)] = obs.reward * inv_t + keep * mu_[idx(i, obs.action, v)];
            mu_[idx(i, obs.action, 1 - v)] = keep * mu_[idx(i, obs.action, 1 - v)];
            refresh_score(i);
        }
    }

    bool operator==(const PairStatTable&) const = default;

    // Snapshot access.
    const std::vector<double>& raw_mu() const { return mu_; }
    const std::vector<std::int64_t>& raw_counts() const { return counts_; }
    const std::vector<double>& raw_scores() const { return scores_; }
    static PairStatTable restore(int num_vars, int num_actions, std::vector<double> mu,
                                 std::vector<std::int64_t> counts, std::vector<double> scores) {
        PairStatTable t(num_vars, num_actions);
        t.mu_ = std::move(mu);
        t.counts_ = std::move(counts);
        t.scores_ = std::move(scores);
        return t;
    }

private:
    std::size_t idx(int i, int k, int v) const {
        return (static_cast<std::size_t>(i) * K_ + k) * 2 + v;
    }
    void refresh_score(int i) {
        double s = 0.0;
        for (int v = 0; v < 2; ++v) {
            double best = 0.0;
            for (int k = 0; k < K_; ++k) best = std::max(best, mu_[idx(i, k, v)]);
            s += best;
        }
        scores_[i] = s;
    }

    int M_ = 0, K_ = 0;
    std::vector<double> mu_;
    std::vector<std::int64_t> counts_;
    std::vector<double> scores_;
};

// Running mean of rewards per action.
class ActionStatTable {
public:
    ActionStatTable() = default;
    explicit ActionStatTable(int num_actions)
        : mu_(num_actions, 0.0), counts_(num_actions, 0) {}

    int num_actions() const { return static_cast<int>(mu_.size()); }
    std::int64_t count(int k) const { return counts_.at(k); }
    void increment_count(int k) { ++counts_.at(k); }
    double mu(int k) const { return mu_.at(k); }

    void update(const RewardObservation& obs) {
        const std::int64_t t = counts_.at(obs.action);
        if (t < 1)
            throw std::logic_error("ActionStatTable::update: count not incremented");
        const double inv_t = 1.0 / static_cast<double>(t);
        mu_[obs.action] = obs.reward * inv_t + static_cast<double>(t - 1) * inv_t * mu_[obs.action];
    }

    bool operator==(const ActionStatTable&) const = default;

    const std::vector<double>& raw_mu() const { return mu_; }
    const std::vector<std::int64_t>& raw_counts() const { return counts_; }
    static ActionStatTable restore(std::vector<double> mu, std::vector<std::int64_t> counts) {
        ActionStatTable t;
        t.mu_ = std::move(mu);
        t.counts_ = std::move(counts);
        return t;
    }

private:
    std::vector<double> mu_;
    std::vector<std::int64_t> counts_;
};

// Cyclic cursor over a shrinking action set. is_last marks sweep boundaries;
// elimination checks fire only there.
class RoundRobinCursor {
public:
    RoundRobinCursor() = default;
    explicit RoundRobinCursor(std::vector<int> actions) : order_(std::move(actions)) {
        if (order_.empty())
            throw std::invalid_argument("RoundRobinCursor: empty action set");
    }

    struct Pick {
        int action;
        bool is_last;  // true when this pick completes a full sweep
    };

    Pick next() {
        if (order_.empty())
            throw std::logic_error("RoundRobinCursor::next: empty action set");
        const int k = order_[pos_];
        const bool last = (pos_ + 1 == order_.size());
        pos_ = last ? 0 : pos_ + 1;
        return {k, last};
    }

    void remove(int action) {
        auto it = std::find(order_.begin(), order_.end(), action);
        if (it == order_.end()) return;
        const std::size_t removed = static_cast<std::size_t>(it - order_.begin());
        order_.erase(it);
        if (order_.empty())
            throw std::logic_error("RoundRobinCursor::remove: set emptied");
        if (removed < pos_) --pos_;
        if (pos_ >= order_.size()) pos_ = 0;
    }

    const std::vector<int>& remaining() const { return order_; }
    std::size_t position() const { return pos_; }
    static RoundRobinCursor restore(std::vector<int> order, std::size_t pos) {
        RoundRobinCursor c(std::move(order));
        c.pos_ = pos;
        return c;
    }

    bool operator==(const RoundRobinCursor&) const = default;

private:
    std::vector<int> order_;
    std::size_t pos_ = 0;
};

// Action with the most votes; ties broken by lowest action id.
inline int plurality_vote(const std::vector<int>& votes) {
    if (votes.empty())
        throw std::invalid_argument("plurality_vote: empty vote list");
    std::vector<int> sorted = votes;
    std::sort(sorted.begin(), sorted.end());
    int best = sorted[0], best_count = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const int count = static_cast<int>(j - i);
        if (count > best_count) {
            best_count = count;
            best = sorted[i];
        }
        i = j;
    }
    return best;
}

}  // namespace bf
