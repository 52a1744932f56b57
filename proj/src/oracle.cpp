#include "banditforest/oracle.hpp"

#include "banditforest/detail/hash.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bf {

namespace {

bool row_matches(const KnownDistribution::Row& row, const PathKey& path) {
    for (const auto& [i, v] : path)
        if ((row.x[static_cast<std::size_t>(i)] ? 1 : 0) != v) return false;
    return true;
}

}  // namespace

void KnownDistribution::validate(double tol) const {
    double total = 0.0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.x.size()) != M)
            throw std::invalid_argument("KnownDistribution: row width mismatch");
        if (static_cast<int>(row.means.size()) != K)
            throw std::invalid_argument("KnownDistribution: means width mismatch");
        if (row.p < 0.0) throw std::invalid_argument("KnownDistribution: negative probability");
        total += row.p;
    }
    if (std::abs(total - 1.0) > tol)
        throw std::invalid_argument("KnownDistribution: probabilities do not sum to 1");
}

KnownDistribution KnownDistribution::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("KnownDistribution::load: cannot open " + path);
    KnownDistribution dist;
    std::string line;
    int M = -1, K = -1;
    std::vector<std::vector<double>> numeric;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string tag;
            if (ss >> tag && tag == "dims") ss >> M >> K;
            continue;
        }
        std::istringstream ss(line);
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (!vals.empty()) numeric.push_back(std::move(vals));
    }
    if (numeric.empty()) throw std::runtime_error("KnownDistribution::load: no rows");
    if (M < 0) throw std::runtime_error("KnownDistribution::load: missing '# dims M K' header");
    dist.M = M;
    dist.K = K;
    for (const auto& vals : numeric) {
        if (static_cast<int>(vals.size()) != M + 1 + K)
            throw std::runtime_error("KnownDistribution::load: bad row width");
        Row row;
        row.x.resize(M);
        for (int i = 0; i < M; ++i) row.x[i] = vals[i] != 0.0 ? 1 : 0;
        row.p = vals[M];
        row.means.assign(vals.begin() + M + 1, vals.end());
        dist.rows.push_back(std::move(row));
    }
    return dist;
}

void KnownDistribution::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("KnownDistribution::save: cannot open " + path);
    out << "# dims " << M << ' ' << K << '\n';
    out.precision(17);
    for (const auto& row : rows) {
        for (int i = 0; i < M; ++i) out << int(row.x[i]) << ' ';
        out << row.p;
        for (double m : row.means) out << ' ' << m;
        out << '\n';
    }
}

double path_probability(const KnownDistribution& dist, const PathKey& path) {
    double p = 0.0;
    for (const auto& row : dist.rows)
        if (row_matches(row, path)) p += row.p;
    return p;
}

std::vector<double> conditional_scores(const KnownDistribution& dist, const PathKey& path,
                                       const std::vector<int>& candidates) {
    const double p_path = path_probability(dist, path);
    if (p_path <= 0.0)
        throw std::invalid_argument("conditional_scores: zero-probability path");
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (int i : candidates) {
        double score = 0.0;
        for (int v = 0; v < 2; ++v) {
            double best = 0.0;
            for (int k = 0; k < dist.K; ++k) {
                double acc = 0.0;
                for (const auto& row : dist.rows)
                    if (row_matches(row, path) &&
                        (row.x[static_cast<std::size_t>(i)] ? 1 : 0) == v)
                        acc += row.p * row.means[k];
                best = std::max(best, acc / p_path);
            }
            score += best;
        }
        scores.push_back(score);
    }
    return scores;
}

std::pair<int, double> best_action(const KnownDistribution& dist, const PathKey& path) {
    const double p_path = path_probability(dist, path);
    if (p_path <= 0.0)
        throw std::invalid_argument("best_action: zero-probability path");
    int best_k = 0;
    double best_v = -1.0;
    for (int k = 0; k < dist.K; ++k) {
        double acc = 0.0;
        for (const auto& row : dist.rows)
            if (row_matches(row, path)) acc += row.p * row.means[k];
        acc /= p_path;
        if (acc > best_v) {
            best_v = acc;
            best_k = k;
        }
    }
    return {best_k, best_v};
}

int GreedyTreePolicy::decide(const ContextVector& x) const {
    int idx = 0;
    for (;;) {
        const Node& n = nodes.at(static_cast<std::size_t>(idx));
        if (n.var < 0) return n.action;
        idx = n.child[x[static_cast<std::size_t>(n.var)] ? 1 : 0];
    }
}

int GreedyTreePolicy::depth() const {
    std::function<int(int)> walk = [&](int idx) -> int {
        const Node& n = nodes[static_cast<std::size_t>(idx)];
        if (n.var < 0) return 0;
        return 1 + std::max(walk(n.child[0]), walk(n.child[1]));
    };
    return nodes.empty() ? 0 : walk(0);
}

namespace {

struct GreedyBuilder {
    const KnownDistribution& dist;
    const TreeRandomization& rand;
    GreedyTreePolicy tree;

    int support(const PathKey& path) const {
        int n = 0;
        for (const auto& row : dist.rows)
            if (row.p > 0.0 && row_matches(row, path)) ++n;
        return n;
    }

    int build(const PathKey& path, int depth, const std::vector<int>& available,
              int fallback_action) {
        const int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        if (path_probability(dist, path) <= 0.0) {
            tree.nodes[idx].action = fallback_action;  // unreachable leaf
            return idx;
        }
        const auto [act, val] = best_action(dist, path);
        if (depth >= rand.depth_cap || available.empty() || support(path) <= 1) {
            tree.nodes[idx].action = act;
            return idx;
        }
        std::vector<int> candidates;
        for (int i : available)
            if (detail::path_hash01(rand.theta_seed, path, i) < rand.keep_fraction)
                candidates.push_back(i);
        if (candidates.empty()) candidates.push_back(available.front());
        const auto scores = conditional_scores(dist, path, candidates);
        int best_i = candidates[0];
        double best_s = scores[0];
        for (std::size_t c = 1; c < candidates.size(); ++c)
            if (scores[c] > best_s) {
                best_s = scores[c];
                best_i = candidates[c];
            }
        std::vector<int> child_avail;
        for (int i : available)
            if (i != best_i) child_avail.push_back(i);
        tree.nodes[idx].var = best_i;
        for (int v = 0; v < 2; ++v) {
            PathKey child = path;
            child.emplace_back(best_i, v);
            const int cidx = build(child, depth + 1, child_avail, act);
            tree.nodes[idx].child[v] = cidx;
        }
        return idx;
    }
};

}  // namespace

GreedyTreePolicy build_theta_optimal_greedy(const KnownDistribution& dist,
                                            const TreeRandomization& rand) {
    std::vector<int> all(dist.M);
    for (int i = 0; i < dist.M; ++i) all[i] = i;
    GreedyBuilder builder{dist, rand, {}};
    builder.build({}, 0, all, best_action(dist, {}).first);
    return std::move(builder.tree);
}

int ForestPolicy::decide(const ContextVector& x) const {
    std::vector<int> votes;
    votes.reserve(trees.size());
    for (const auto& tree : trees) votes.push_back(tree.decide(x));
    return plurality_vote(votes);
}

ForestPolicy optimal_forest_policy(const KnownDistribution& dist,
                                   const std::vector<TreeRandomization>& rands) {
    ForestPolicy forest;
    forest.trees.reserve(rands.size());
    for (const auto& rand : rands)
        forest.trees.push_back(build_theta_optimal_greedy(dist, rand));
    return forest;
}

double policy_value(const KnownDistribution& dist,
                    const std::function<int(const ContextVector&)>& policy) {
    double value = 0.0;
    for (const auto& row : dist.rows)
        value += row.p * row.means[static_cast<std::size_t>(policy(row.x))];
    return value;
}

void ForestPolicy::save(const std::string& path) const {
    nlohmann::json j;
    j["version"] = 1;
    nlohmann::json trees_j = nlohmann::json::array();
    for (const auto& tree : trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back({{"var", n.var},
                             {"action", n.action},
                             {"children", {n.child[0], n.child[1]}}});
        trees_j.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees_j);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("ForestPolicy::save: cannot open " + path);
    out << j.dump(2) << '\n';
}

ForestPolicy ForestPolicy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ForestPolicy::load: cannot open " + path);
    nlohmann::json j;
    in >> j;
    ForestPolicy forest;
    for (const auto& tj : j.at("trees")) {
        GreedyTreePolicy tree;
        for (const auto& nj : tj) {
            GreedyTreePolicy::Node n;
            n.var = nj.at("var");
            n.action = nj.at("action");
            n.child[0] = nj.at("children").at(0);
            n.child[1] = nj.at("children").at(1);
            tree.nodes.push_back(n);
        }
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

}  // namespace bf
