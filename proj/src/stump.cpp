#include "banditforest/stump.hpp"

#include <numeric>
#include <stdexcept>

namespace bf {

namespace {

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

}  // namespace

namespace detail {

void maybe_eliminate_actions(ValueActionCell& cell, int played, double epsilon,
                             const std::function<double(std::int64_t)>& radius) {
    if (cell.remaining.size() <= 1) return;
    if (played != cell.remaining.back()) return;  // not a sweep boundary for this cell
    const int best = argmax_id(cell.remaining, [&](int k) { return cell.stats.mu(k); });
    const double best_mu = cell.stats.mu(best);
    std::vector<int> kept;
    kept.reserve(cell.remaining.size());
    for (int k : cell.remaining) {
        // Unplayed actions (possible under randomized exploration) carry no
        // evidence yet and are never eliminated.
        if (k != best && cell.stats.count(k) > 0 &&
            should_eliminate(best_mu, cell.stats.mu(k), epsilon, radius(cell.stats.count(k))))
            continue;
        kept.push_back(k);
    }
    cell.remaining = std::move(kept);
}

}  // namespace detail

VariableSelection::VariableSelection(const EliminationConfig& cfg)
    : cfg_(cfg), remaining_(iota_ids(cfg.M)), stats_(cfg.M, cfg.K),
      cursor_(iota_ids(cfg.K)) {
    cfg_.validate();
}

int VariableSelection::step(const ContextVector& x, const RewardSource& rewards) {
    if (finished()) throw std::logic_error("VariableSelection::step: already finished");
    const auto pick = cursor_.next();
    const double y = rewards(x, pick.action);
    stats_.increment_count(pick.action);
    stats_.update(x, {pick.action, y, 1.0}, remaining_);
    ++steps_;
    if (pick.is_last) {
        const int best =
            detail::argmax_id(remaining_, [&](int i) { return stats_.score(i); });
        const double best_score = stats_.score(best);
        const double radius = variable_radius(cfg_, stats_.count(pick.action));
        std::vector<int> kept;
        kept.reserve(remaining_.size());
        for (int i : remaining_) {
            if (i != best && should_eliminate(best_score, stats_.score(i), cfg_.epsilon, radius))
                continue;
            kept.push_back(i);
        }
        remaining_ = std::move(kept);
    }
    return pick.action;
}

ActionSelection::ActionSelection(const EliminationConfig& cfg)
    : cfg_(cfg), remaining_(iota_ids(cfg.K)), stats_(cfg.K), cursor_(remaining_) {
    if (cfg.K < 1) throw std::invalid_argument("ActionSelection: K >= 1 required");
    if (!(cfg.delta > 0.0 && cfg.delta <= 1.0))
        throw std::invalid_argument("ActionSelection: delta in (0,1] required");
}

int ActionSelection::step(const RewardSource& rewards) {
    if (finished()) throw std::logic_error("ActionSelection::step: already finished");
    const auto pick = cursor_.next();
    const double y = rewards({}, pick.action);
    stats_.increment_count(pick.action);
    stats_.update({pick.action, y, 1.0});
    ++steps_;
    if (pick.is_last) {
        const int best = detail::argmax_id(remaining_, [&](int k) { return stats_.mu(k); });
        const double best_mu = stats_.mu(best);
        const double radius = action_radius(cfg_, stats_.count(pick.action));
        std::vector<int> kept;
        kept.reserve(remaining_.size());
        for (int k : remaining_) {
            if (k != best && should_eliminate(best_mu, stats_.mu(k), cfg_.epsilon, radius))
                continue;
            kept.push_back(k);
        }
        if (kept.size() != remaining_.size()) {
            remaining_ = std::move(kept);
            cursor_ = RoundRobinCursor(remaining_);
        }
    }
    return pick.action;
}

DecisionStump::DecisionStump(const EliminationConfig& cfg)
    : cfg_(cfg), remaining_vars_(iota_ids(cfg.M)), pair_(cfg.M, cfg.K),
      global_cursor_(iota_ids(cfg.K)), cells_(cfg.M) {
    cfg_.validate();
    for (auto& pair_cells : cells_)
        for (auto& cell : pair_cells)
            cell = {iota_ids(cfg.K), ActionStatTable(cfg.K)};
}

const std::vector<int>& DecisionStump::remaining_actions(int var, int value) const {
    return cells_.at(var)[value].remaining;
}

bool DecisionStump::converged() const {
    if (!variable_chosen()) return false;
    return cells_[chosen_var_][0].remaining.size() == 1 &&
           cells_[chosen_var_][1].remaining.size() == 1;
}

void DecisionStump::run_variable_eliminations(std::int64_t t_k) {
    const int best = detail::argmax_id(remaining_vars_, [&](int i) { return pair_.score(i); });
    const double best_score = pair_.score(best);
    const double radius = variable_radius(cfg_, t_k);
    std::vector<int> kept;
    kept.reserve(remaining_vars_.size());
    for (int i : remaining_vars_) {
        if (i != best && should_eliminate(best_score, pair_.score(i), cfg_.epsilon, radius))
            continue;
        kept.push_back(i);
    }
    if (kept.size() == remaining_vars_.size()) return;
    remaining_vars_ = std::move(kept);
    if (remaining_vars_.size() == 1) {
        chosen_var_ = remaining_vars_.front();
        // Orphaned per-value states of eliminated variables are dropped.
        for (int i = 0; i < cfg_.M; ++i) {
            if (i == chosen_var_) continue;
            cells_[i][0] = ValueActionCell{};
            cells_[i][1] = ValueActionCell{};
        }
    }
}

int DecisionStump::step(const ContextVector& x, const RewardSource& rewards) {
    ++steps_;
    if (!variable_chosen()) {
        const auto pick = global_cursor_.next();
        const double y = rewards(x, pick.action);
        pair_.increment_count(pick.action);
        pair_.update(x, {pick.action, y, 1.0}, remaining_vars_);
        if (pick.is_last) run_variable_eliminations(pair_.count(pick.action));
        for (int i : remaining_vars_) {
            // Both cells track E[y_k * 1{x_i=v}]: the observed value gets the
            // reward, the other decays toward 0; counts advance in lockstep.
            const int observed = x[static_cast<std::size_t>(i)] ? 1 : 0;
            for (int v = 0; v < 2; ++v) {
                auto& cell = cells_[i][v];
                cell.stats.increment_count(pick.action);
                cell.stats.update({pick.action, v == observed ? y : 0.0, 1.0});
                detail::maybe_eliminate_actions(
                    cell, pick.action, cfg_.epsilon,
                    [&](std::int64_t t) { return action_radius(cfg_, t); });
            }
        }
        return pick.action;
    }
    // Leaf phase: round-robin over the surviving actions of (chosen, x_chosen).
    const int v = x[static_cast<std::size_t>(chosen_var_)] ? 1 : 0;
    auto& cell = cells_[chosen_var_][v];
    if (!leaf_cursors_[v]) leaf_cursors_[v].emplace(cell.remaining);
    auto& cursor = *leaf_cursors_[v];
    const auto pick = cursor.next();
    const double y = rewards(x, pick.action);
    cell.stats.increment_count(pick.action);
    cell.stats.update({pick.action, y, 1.0});
    if (pick.is_last && cell.remaining.size() > 1) {
        const std::size_t before = cell.remaining.size();
        detail::maybe_eliminate_actions(cell, pick.action, cfg_.epsilon,
                                        [&](std::int64_t t) { return action_radius(cfg_, t); });
        if (cell.remaining.size() != before) cursor = RoundRobinCursor(cell.remaining);
    }
    return pick.action;
}

int DecisionStump::policy(const ContextVector& x) const {
    if (!variable_chosen())
        throw std::logic_error("DecisionStump::policy: variable not chosen yet");
    const int v = x[static_cast<std::size_t>(chosen_var_)] ? 1 : 0;
    const auto& cell = cells_[chosen_var_][v];
    return detail::argmax_id(cell.remaining, [&](int k) { return cell.stats.mu(k); });
}

}  // namespace bf
