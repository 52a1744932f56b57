#include "banditforest/forest.hpp"

#include "banditforest/detail/hash.hpp"

#include <numeric>
#include <set>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

namespace bf {

namespace {

using json = nlohmann::json;

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

}  // namespace

TreeState::TreeState(const EliminationConfig& cfg, const TreeRandomization& rand)
    : cfg_(cfg), rand_(rand) {
    if (rand_.depth_cap < 1 || rand_.depth_cap > cfg_.D)
        throw std::invalid_argument("TreeState: depth_cap must be in [1, D]");
    if (!(rand_.keep_fraction > 0.0 && rand_.keep_fraction <= 1.0))
        throw std::invalid_argument("TreeState: keep_fraction in (0,1] required");
    new_path({}, iota_ids(cfg_.M));
}

void TreeState::new_path(const PathKey& key, const std::vector<int>& available) {
    if (nodes_.count(key))
        throw std::logic_error("TreeState::new_path: duplicate path key");
    PathNode node;
    node.depth = static_cast<int>(key.size()) + 1;
    node.available = available;
    for (int i : available)
        if (detail::path_hash01(rand_.theta_seed, key, i) < rand_.keep_fraction)
            node.candidates.push_back(i);
    if (node.candidates.empty())
        node.candidates.push_back(available.front());  // force-keep lowest id
    node.pair = PairStatTable(cfg_.M, cfg_.K);
    node.cells.assign(cfg_.M, {});
    for (int i : node.candidates)
        for (int v = 0; v < 2; ++v)
            node.cells[i][v] = {iota_ids(cfg_.K), ActionStatTable(cfg_.K)};
    if (node.candidates.size() == 1) node.chosen_var = node.candidates.front();
    nodes_.emplace(key, std::move(node));
    maybe_expand(key);
}

// Children are spawned as soon as the split variable is known, so
// select_path can always descend through chosen nodes below the cap.
void TreeState::maybe_expand(const PathKey& key) {
    PathNode& node = nodes_.at(key);
    if (node.chosen_var < 0 || node.expanded || node.depth >= rand_.depth_cap) return;
    if (node.available.size() <= 1) return;  // variables exhausted: terminal node
    node.expanded = true;
    std::vector<int> child_avail;
    child_avail.reserve(node.available.size() - 1);
    for (int i : node.available)
        if (i != node.chosen_var) child_avail.push_back(i);
    for (int v = 0; v < 2; ++v) {
        PathKey child = key;
        child.emplace_back(node.chosen_var, v);
        new_path(child, child_avail);
    }
}

PathKey TreeState::select_path(const ContextVector& x) const {
    PathKey key;
    for (;;) {
        const PathNode& node = nodes_.at(key);
        if (node.chosen_var < 0 || node.depth >= rand_.depth_cap || !node.expanded) return key;
        key.emplace_back(node.chosen_var,
                         x[static_cast<std::size_t>(node.chosen_var)] ? 1 : 0);
    }
}

bool TreeState::ready(const PathKey& key, const ContextVector& x) const {
    const PathNode& node = nodes_.at(key);
    // Leaf = split chosen and no children (depth cap or variables exhausted).
    if (node.chosen_var < 0 || node.expanded) return false;
    const int v = x[static_cast<std::size_t>(node.chosen_var)] ? 1 : 0;
    return node.cells[node.chosen_var][v].remaining.size() == 1;
}

int TreeState::vote(const PathKey& key, const ContextVector& x) const {
    const PathNode& node = nodes_.at(key);
    const int v = x[static_cast<std::size_t>(node.chosen_var)] ? 1 : 0;
    return node.cells[node.chosen_var][v].remaining.front();
}

std::vector<int> TreeState::remaining_actions(const PathKey& key, const ContextVector& x) const {
    const PathNode& node = nodes_.at(key);
    if (node.chosen_var >= 0) {
        const int v = x[static_cast<std::size_t>(node.chosen_var)] ? 1 : 0;
        return node.cells[node.chosen_var][v].remaining;
    }
    std::set<int> acc;
    for (int i : node.candidates) {
        const int v = x[static_cast<std::size_t>(i)] ? 1 : 0;
        acc.insert(node.cells[i][v].remaining.begin(), node.cells[i][v].remaining.end());
    }
    return {acc.begin(), acc.end()};
}

void TreeState::run_variable_eliminations(PathNode& node, std::int64_t t_k) {
    auto& s = node.candidates;
    const int best = detail::argmax_id(s, [&](int i) { return node.pair.score(i); });
    const double best_score = node.pair.score(best);
    const double radius = forest_variable_radius(cfg_, t_k);
    std::vector<int> kept;
    kept.reserve(s.size());
    for (int i : s) {
        if (i != best &&
            should_eliminate(best_score, node.pair.score(i), rand_.epsilon_theta, radius))
            continue;
        kept.push_back(i);
    }
    if (kept.size() == s.size()) return;
    for (int i : s)
        if (std::find(kept.begin(), kept.end(), i) == kept.end())
            node.cells[i] = {};  // drop orphaned per-value states
    s = std::move(kept);
    if (s.size() == 1) node.chosen_var = s.front();
}

void TreeState::credit(const PathKey& key, const ContextVector& x, int action, double reward,
                       bool shared_counts) {
    PathNode& node = nodes_.at(key);
    const auto& active = node.chosen_var < 0 ? node.candidates
                                             : std::vector<int>{node.chosen_var};
    if (shared_counts) {
        for (int k = 0; k < cfg_.K; ++k) {
            node.pair.increment_count(k);
            node.pair.update(x, {k, k == action ? reward : 0.0, 1.0}, active);
        }
        if (node.chosen_var < 0) run_variable_eliminations(node, node.pair.count(0));
    } else {
        node.pair.increment_count(action);
        node.pair.update(x, {action, reward, 1.0}, active);
        // Round-robin sweep boundary: the highest action id closes a sweep.
        if (node.chosen_var < 0 && action == cfg_.K - 1)
            run_variable_eliminations(node, node.pair.count(action));
    }
    for (int i : node.candidates) {
        // Both cells track E[y_k * 1{x_i=v}]: the observed value gets the
        // reward, the other decays toward 0; counts advance in lockstep.
        const int observed = x[static_cast<std::size_t>(i)] ? 1 : 0;
        for (int v = 0; v < 2; ++v) {
            auto& cell = node.cells[i][v];
            if (shared_counts) {
                for (int k = 0; k < cfg_.K; ++k) {
                    cell.stats.increment_count(k);
                    cell.stats.update({k, k == action && v == observed ? reward : 0.0, 1.0});
                }
            } else {
                cell.stats.increment_count(action);
                cell.stats.update({action, v == observed ? reward : 0.0, 1.0});
            }
            const int boundary = shared_counts && !cell.remaining.empty()
                                     ? cell.remaining.back()
                                     : action;
            detail::maybe_eliminate_actions(
                cell, boundary, rand_.epsilon_theta,
                [&](std::int64_t t) { return forest_action_radius(cfg_, t); });
        }
    }
    maybe_expand(key);
}

bool TreeState::fully_converged() const {
    for (const auto& [key, node] : nodes_) {
        if (node.chosen_var < 0) return false;
        if (!node.expanded) {
            for (int v = 0; v < 2; ++v)
                if (node.cells[node.chosen_var][v].remaining.size() != 1) return false;
        }
    }
    return true;
}

bool TreeState::operator==(const TreeState& other) const {
    auto node_eq = [](const PathNode& a, const PathNode& b) {
        auto cell_eq = [](const std::array<ValueActionCell, 2>& u,
                          const std::array<ValueActionCell, 2>& w) {
            return u[0] == w[0] && u[1] == w[1];
        };
        return a.depth == b.depth && a.available == b.available &&
               a.candidates == b.candidates && a.pair == b.pair &&
               a.chosen_var == b.chosen_var && a.expanded == b.expanded &&
               std::equal(a.cells.begin(), a.cells.end(), b.cells.begin(), b.cells.end(),
                          cell_eq);
    };
    if (!(cfg_ == other.cfg_) || rand_.theta_seed != other.rand_.theta_seed ||
        rand_.depth_cap != other.rand_.depth_cap ||
        rand_.epsilon_theta != other.rand_.epsilon_theta ||
        rand_.keep_fraction != other.rand_.keep_fraction)
        return false;
    if (nodes_.size() != other.nodes_.size()) return false;
    return std::equal(nodes_.begin(), nodes_.end(), other.nodes_.begin(),
                      [&](const auto& a, const auto& b) {
                          return a.first == b.first && node_eq(a.second, b.second);
                      });
}

ForestEngine::ForestEngine(const ForestConfig& cfg)
    : fcfg_(cfg), cfg_(cfg.base), explore_cursor_(iota_ids(cfg.base.K)) {
    if (cfg.L < 1) throw std::invalid_argument("ForestEngine: L >= 1 required");
    if (cfg.depth_lo < 1 || cfg.depth_hi < cfg.depth_lo)
        throw std::invalid_argument("ForestEngine: bad depth range");
    if (cfg.eps_lo < 0.0 || cfg.eps_hi < cfg.eps_lo)
        throw std::invalid_argument("ForestEngine: bad epsilon range");
    cfg_.L = cfg.L;
    cfg_.D = cfg.depth_hi;  // radii use the configured cap for every tree
    cfg_.validate();
    trees_.reserve(cfg.L);
    for (int l = 0; l < cfg.L; ++l) {
        TreeRandomization rand;
        rand.theta_seed = detail::splitmix64(cfg.seed + 0x7f4a7c15ULL * (l + 1));
        std::mt19937_64 g(rand.theta_seed);
        rand.depth_cap = std::uniform_int_distribution<int>(cfg.depth_lo, cfg.depth_hi)(g);
        rand.epsilon_theta = std::uniform_real_distribution<double>(cfg.eps_lo, cfg.eps_hi)(g);
        rand.keep_fraction = cfg.keep_fraction;
        trees_.emplace_back(cfg_, rand);
    }
}

ForestEngine::Decision ForestEngine::decide(const ContextVector& x, std::mt19937_64& rng) {
    Decision d;
    d.keys.reserve(trees_.size());
    bool all_ready = true;
    for (const auto& tree : trees_) {
        d.keys.push_back(tree.select_path(x));
        if (all_ready && !tree.ready(d.keys.back(), x)) all_ready = false;
    }
    if (all_ready && fcfg_.vote_gate_global)
        for (const auto& tree : trees_)
            if (!tree.fully_converged()) {
                all_ready = false;
                break;
            }
    if (all_ready) {
        std::vector<int> votes;
        votes.reserve(trees_.size());
        for (std::size_t i = 0; i < trees_.size(); ++i)
            votes.push_back(trees_[i].vote(d.keys[i], x));
        d.action = plurality_vote(votes);
        d.propensity = 1.0;
        d.vote = true;
        return d;
    }
    if (fcfg_.mode == ExploreMode::RoundRobin) {
        d.action = explore_cursor_.next().action;
        d.propensity = 1.0;
        return d;
    }
    std::set<int> uni;
    for (std::size_t i = 0; i < trees_.size(); ++i) {
        auto rem = trees_[i].remaining_actions(d.keys[i], x);
        uni.insert(rem.begin(), rem.end());
    }
    std::vector<int> pool(uni.begin(), uni.end());
    const std::size_t idx =
        std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
    d.action = pool[idx];
    d.propensity = 1.0 / static_cast<double>(pool.size());
    return d;
}

void ForestEngine::update(const ContextVector& x, const RewardObservation& obs,
                          const std::vector<PathKey>& keys) {
    if (keys.size() != trees_.size())
        throw std::invalid_argument("ForestEngine::update: keys/engine mismatch");
    const bool ips = fcfg_.mode == ExploreMode::UniformUnionIps;
    const double credited = ips ? obs.reward / obs.propensity : obs.reward;
    const int n = static_cast<int>(trees_.size());
    if (parallel_) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i)
            trees_[i].credit(keys[i], x, obs.action, credited, ips);
    } else {
        for (int i = 0; i < n; ++i)
            trees_[i].credit(keys[i], x, obs.action, credited, ips);
    }
    ++t_;
}

bool ForestEngine::operator==(const ForestEngine& other) const {
    return trees_ == other.trees_ && t_ == other.t_ &&
           explore_cursor_ == other.explore_cursor_ && cfg_ == other.cfg_;
}

// ---- snapshot ----------------------------------------------------------

namespace {

json to_json(const PairStatTable& t) {
    return {{"M", t.num_vars()},
            {"K", t.num_actions()},
            {"mu", t.raw_mu()},
            {"counts", t.raw_counts()},
            {"scores", t.raw_scores()}};
}

PairStatTable pair_from_json(const json& j) {
    return PairStatTable::restore(j.at("M"), j.at("K"), j.at("mu"), j.at("counts"),
                                  j.at("scores"));
}

json to_json(const ValueActionCell& c) {
    return {{"remaining", c.remaining},
            {"mu", c.stats.raw_mu()},
            {"counts", c.stats.raw_counts()}};
}

ValueActionCell cell_from_json(const json& j) {
    return {j.at("remaining"),
            ActionStatTable::restore(j.at("mu"), j.at("counts"))};
}

}  // namespace

std::string ForestEngine::save_snapshot() const {
    json j;
    j["version"] = 1;
    j["config"] = {{"K", cfg_.K},
                   {"M", cfg_.M},
                   {"delta", cfg_.delta},
                   {"epsilon", cfg_.epsilon},
                   {"L", cfg_.L},
                   {"D", cfg_.D},
                   {"depth_lo", fcfg_.depth_lo},
                   {"depth_hi", fcfg_.depth_hi},
                   {"eps_lo", fcfg_.eps_lo},
                   {"eps_hi", fcfg_.eps_hi},
                   {"keep_fraction", fcfg_.keep_fraction},
                   {"mode", fcfg_.mode == ExploreMode::UniformUnionIps ? "ips" : "rr"},
                   {"vote_gate_global", fcfg_.vote_gate_global},
                   {"seed", fcfg_.seed}};
    j["t"] = t_;
    j["cursor"] = {{"order", explore_cursor_.remaining()},
                   {"pos", explore_cursor_.position()}};
    json trees = json::array();
    for (const auto& tree : trees_) {
        json tj;
        tj["rand"] = {{"theta_seed", tree.rand_.theta_seed},
                      {"depth_cap", tree.rand_.depth_cap},
                      {"epsilon_theta", tree.rand_.epsilon_theta},
                      {"keep_fraction", tree.rand_.keep_fraction}};
        json nodes = json::array();
        for (const auto& [key, node] : tree.nodes_) {
            json nj;
            nj["key"] = key;
            nj["depth"] = node.depth;
            nj["available"] = node.available;
            nj["candidates"] = node.candidates;
            nj["pair"] = to_json(node.pair);
            nj["chosen_var"] = node.chosen_var;
            nj["expanded"] = node.expanded;
            json cells = json::array();
            for (int i : node.candidates)
                cells.push_back({{"var", i},
                                 {"v0", to_json(node.cells[i][0])},
                                 {"v1", to_json(node.cells[i][1])}});
            nj["cells"] = cells;
            nodes.push_back(std::move(nj));
        }
        tj["nodes"] = std::move(nodes);
        trees.push_back(std::move(tj));
    }
    j["trees"] = std::move(trees);
    return j.dump();
}

ForestEngine ForestEngine::load_snapshot(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("version") != 1)
        throw std::invalid_argument("ForestEngine::load_snapshot: unknown version");
    const json& c = j.at("config");
    ForestConfig fc;
    fc.base.K = c.at("K");
    fc.base.M = c.at("M");
    fc.base.delta = c.at("delta");
    fc.base.epsilon = c.at("epsilon");
    fc.L = c.at("L");
    fc.depth_lo = c.at("depth_lo");
    fc.depth_hi = c.at("depth_hi");
    fc.eps_lo = c.at("eps_lo");
    fc.eps_hi = c.at("eps_hi");
    fc.keep_fraction = c.at("keep_fraction");
    fc.mode = c.at("mode") == "ips" ? ExploreMode::UniformUnionIps : ExploreMode::RoundRobin;
    fc.vote_gate_global = c.at("vote_gate_global");
    fc.seed = c.at("seed");
    ForestEngine engine(fc);
    engine.t_ = j.at("t");
    engine.explore_cursor_ = RoundRobinCursor::restore(
        j.at("cursor").at("order").get<std::vector<int>>(), j.at("cursor").at("pos"));
    const json& trees = j.at("trees");
    for (std::size_t l = 0; l < engine.trees_.size(); ++l) {
        TreeState& tree = engine.trees_[l];
        const json& tj = trees.at(l);
        tree.rand_.theta_seed = tj.at("rand").at("theta_seed");
        tree.rand_.depth_cap = tj.at("rand").at("depth_cap");
        tree.rand_.epsilon_theta = tj.at("rand").at("epsilon_theta");
        tree.rand_.keep_fraction = tj.at("rand").at("keep_fraction");
        tree.nodes_.clear();
        for (const json& nj : tj.at("nodes")) {
            PathNode node;
            node.depth = nj.at("depth");
            node.available = nj.at("available").get<std::vector<int>>();
            node.candidates = nj.at("candidates").get<std::vector<int>>();
            node.pair = pair_from_json(nj.at("pair"));
            node.chosen_var = nj.at("chosen_var");
            node.expanded = nj.at("expanded");
            node.cells.assign(engine.cfg_.M, {});
            for (const json& cj : nj.at("cells")) {
                const int i = cj.at("var");
                node.cells[i][0] = cell_from_json(cj.at("v0"));
                node.cells[i][1] = cell_from_json(cj.at("v1"));
            }
            tree.nodes_.emplace(nj.at("key").get<PathKey>(), std::move(node));
        }
    }
    return engine;
}

}  // namespace bf
