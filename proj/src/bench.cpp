#include "banditforest/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "banditforest/detail/hash.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bf {

namespace {

// Enumeration-based references become impractical past this width; above it
// the synthetic sources fall back to their closed-form optimal rules.
constexpr int kMaxEnumVars = 12;

class ForestLearner : public Learner {
public:
    explicit ForestLearner(const ForestConfig& fc) : engine_(fc) {}

    Choice decide(const ContextVector& x, std::mt19937_64& rng) override {
        auto d = engine_.decide(x, rng);
        keys_ = std::move(d.keys);
        return {d.action, d.propensity};
    }

    void update(const ContextVector& x, const RewardObservation& obs) override {
        engine_.update(x, obs, keys_);
    }

private:
    ForestEngine engine_;
    std::vector<PathKey> keys_;
};

class UniformRandomLearner : public Learner {
public:
    explicit UniformRandomLearner(int K) : K_(K) {}

    Choice decide(const ContextVector&, std::mt19937_64& rng) override {
        std::uniform_int_distribution<int> pick(0, K_ - 1);
        return {pick(rng), 1.0 / static_cast<double>(K_)};
    }

    void update(const ContextVector&, const RewardObservation&) override {}

private:
    int K_ = 2;
};

std::string learner_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::BanditForest: return "bandit-forest";
        case LearnerKind::BanditTree: return "bandit-tree";
        case LearnerKind::ContextFreeSE: return "context-free-se";
        case LearnerKind::UniformRandom: return "uniform-random";
    }
    return "?";
}

LearnerKind parse_learner(const std::string& name) {
    if (name == "bandit-forest") return LearnerKind::BanditForest;
    if (name == "bandit-tree") return LearnerKind::BanditTree;
    if (name == "context-free-se") return LearnerKind::ContextFreeSE;
    if (name == "uniform-random") return LearnerKind::UniformRandom;
    throw std::invalid_argument("unknown learner: " + name);
}

std::vector<std::int64_t> checkpoint_schedule(std::int64_t T) {
    std::vector<std::int64_t> cps;
    for (std::int64_t t = 1; t <= T && t > 0; t *= 2) cps.push_back(t);
    if (cps.empty() || cps.back() != T) cps.push_back(T);
    return cps;
}

std::string format_num(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace

void RunConfig::validate() const {
    if (trials < 1) throw std::invalid_argument("RunConfig: trials >= 1 required");
    if (L < 1) throw std::invalid_argument("RunConfig: L >= 1 required");
    if (depth_lo < 1 || depth_hi < depth_lo)
        throw std::invalid_argument("RunConfig: need 1 <= depth_lo <= depth_hi");
    if (eps_hi < eps_lo || eps_lo < 0.0)
        throw std::invalid_argument("RunConfig: need 0 <= eps_lo <= eps_hi");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("RunConfig: keep_fraction in (0,1] required");
    if (source != "table1" && source != "xor" && source != "gap" && source != "dataset")
        throw std::invalid_argument("RunConfig: unknown source " + source);
    if (source == "dataset" && dataset_path.empty())
        throw std::invalid_argument("RunConfig: dataset source needs dataset_path");
    stream.validate();
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("RunConfig::load: cannot open " + path);
    RunConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), '=', ' ');
        std::istringstream ss(line);
        std::string key, value;
        if (!(ss >> key >> value)) throw std::runtime_error("RunConfig::load: bad line: " + line);
        if (key == "learner") cfg.learner = parse_learner(value);
        else if (key == "L") cfg.L = std::stoi(value);
        else if (key == "depth_lo") cfg.depth_lo = std::stoi(value);
        else if (key == "depth_hi") cfg.depth_hi = std::stoi(value);
        else if (key == "delta") cfg.delta = std::stod(value);
        else if (key == "eps_lo") cfg.eps_lo = std::stod(value);
        else if (key == "eps_hi") cfg.eps_hi = std::stod(value);
        else if (key == "keep_fraction") cfg.keep_fraction = std::stod(value);
        else if (key == "mode")
            cfg.mode = value == "uniform-ips" ? ExploreMode::UniformUnionIps
                                              : ExploreMode::RoundRobin;
        else if (key == "vote_gate_global") cfg.vote_gate_global = value == "1" || value == "true";
        else if (key == "source") cfg.source = value;
        else if (key == "dataset") cfg.dataset_path = value;
        else if (key == "M") cfg.M = std::stoi(value);
        else if (key == "K") cfg.K = std::stoi(value);
        else if (key == "gap1") cfg.gap1 = std::stod(value);
        else if (key == "gap2") cfg.gap2 = std::stod(value);
        else if (key == "noise") cfg.stream.noise_flip_prob = std::stod(value);
        else if (key == "loop") cfg.stream.loop = value == "1" || value == "true";
        else if (key == "T") cfg.stream.T = std::stoll(value);
        else if (key == "trials") cfg.trials = std::stoi(value);
        else if (key == "reference") cfg.reference = value;
        else if (key == "output") cfg.output_path = value;
        else if (key == "seed") cfg.master_seed = std::stoull(value);
        else throw std::runtime_error("RunConfig::load: unknown key " + key);
    }
    cfg.validate();
    return cfg;
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("RunConfig::save: cannot open " + path);
    out.precision(17);
    out << "learner " << learner_name(learner) << '\n'
        << "L " << L << '\n'
        << "depth_lo " << depth_lo << '\n'
        << "depth_hi " << depth_hi << '\n'
        << "delta " << delta << '\n'
        << "eps_lo " << eps_lo << '\n'
        << "eps_hi " << eps_hi << '\n'
        << "keep_fraction " << keep_fraction << '\n'
        << "mode " << (mode == ExploreMode::UniformUnionIps ? "uniform-ips" : "round-robin")
        << '\n'
        << "vote_gate_global " << (vote_gate_global ? 1 : 0) << '\n'
        << "source " << source << '\n';
    if (!dataset_path.empty()) out << "dataset " << dataset_path << '\n';
    out << "M " << M << '\n'
        << "K " << K << '\n'
        << "gap1 " << gap1 << '\n'
        << "gap2 " << gap2 << '\n'
        << "noise " << stream.noise_flip_prob << '\n'
        << "loop " << (stream.loop ? 1 : 0) << '\n'
        << "T " << stream.T << '\n'
        << "trials " << trials << '\n'
        << "reference " << reference << '\n';
    if (!output_path.empty()) out << "output " << output_path << '\n';
    out << "seed " << master_seed << '\n';
}

ContextFreeSE::ContextFreeSE(int K, double delta) {
    if (K < 1) throw std::invalid_argument("ContextFreeSE: K >= 1 required");
    cfg_.K = std::max(K, 2);  // radius bookkeeping only
    cfg_.delta = delta;
    remaining_.resize(static_cast<std::size_t>(K));
    std::iota(remaining_.begin(), remaining_.end(), 0);
    stats_ = ActionStatTable(K);
    cursor_ = RoundRobinCursor(remaining_);
}

Learner::Choice ContextFreeSE::decide(const ContextVector&, std::mt19937_64&) {
    const auto pick = cursor_.next();
    sweep_done_ = pick.is_last;
    return {pick.action, 1.0};
}

void ContextFreeSE::update(const ContextVector&, const RewardObservation& obs) {
    stats_.increment_count(obs.action);
    stats_.update(obs);
    if (!sweep_done_ || remaining_.size() == 1) return;
    const double radius = action_radius(cfg_, stats_.count(obs.action));
    double best_mu = stats_.mu(remaining_.front());
    for (int k : remaining_) best_mu = std::max(best_mu, stats_.mu(k));
    std::vector<int> kept;
    bool best_kept = false;
    for (int k : remaining_) {
        const bool is_best = !best_kept && stats_.mu(k) == best_mu;
        if (is_best) best_kept = true;
        if (!is_best && should_eliminate(best_mu, stats_.mu(k), 0.0, radius)) continue;
        kept.push_back(k);
    }
    if (kept.size() != remaining_.size()) {
        remaining_ = std::move(kept);
        cursor_ = RoundRobinCursor(remaining_);
    }
}

std::unique_ptr<Learner> make_learner(const RunConfig& cfg, int K, int M, std::uint64_t seed) {
    switch (cfg.learner) {
        case LearnerKind::BanditForest:
        case LearnerKind::BanditTree: {
            ForestConfig fc;
            fc.base.K = K;
            fc.base.M = M;
            fc.base.delta = cfg.delta;
            fc.L = cfg.learner == LearnerKind::BanditTree ? 1 : cfg.L;
            fc.depth_lo = cfg.depth_lo;
            fc.depth_hi = cfg.depth_hi;
            fc.eps_lo = cfg.eps_lo;
            fc.eps_hi = cfg.eps_hi;
            fc.keep_fraction = cfg.keep_fraction;
            fc.mode = cfg.mode;
            fc.vote_gate_global = cfg.vote_gate_global;
            fc.seed = seed;
            return std::make_unique<ForestLearner>(fc);
        }
        case LearnerKind::ContextFreeSE:
            return std::make_unique<ContextFreeSE>(K, cfg.delta);
        case LearnerKind::UniformRandom:
            return std::make_unique<UniformRandomLearner>(K);
    }
    throw std::logic_error("make_learner: unreachable");
}

Experiment prepare_experiment(const RunConfig& cfg) {
    cfg.validate();
    Experiment ex;
    ex.cfg = cfg;

    KnownDistribution dist;
    bool have_dist = false;
    if (cfg.source == "table1") {
        ex.M = 2;
        ex.K = 2;
        dist = Table1Env::sampler_distribution();
        have_dist = true;
    } else if (cfg.source == "xor") {
        ex.M = cfg.M;
        ex.K = 2;
        if (cfg.M <= kMaxEnumVars) {
            dist = XorEnv::distribution(cfg.M);
            have_dist = true;
        }
    } else if (cfg.source == "gap") {
        ex.M = cfg.M;
        ex.K = cfg.K;
        if (cfg.M <= kMaxEnumVars) {
            dist = GapEnv::distribution(cfg.K, cfg.M, cfg.gap1, cfg.gap2);
            have_dist = true;
        }
    } else {
        ex.data = LabeledDataset::load(cfg.dataset_path);
        ex.spec = fit_binarization(ex.data);
        ex.M = ex.spec.width();
        ex.K = ex.data.K();
    }

    if (cfg.reference == "none") {
        ex.reference_is_fixed = true;
        if (have_dist) {
            ex.fixed_action = best_action(dist, {}).first;
        } else if (cfg.source == "dataset") {
            std::vector<std::int64_t> counts(static_cast<std::size_t>(ex.K), 0);
            for (int y : ex.data.labels) ++counts[static_cast<std::size_t>(y)];
            ex.fixed_action = static_cast<int>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
        } else {
            ex.fixed_action = 0;  // symmetric large-M synthetic sources
        }
        return ex;
    }

    if (cfg.reference != "oracle") {
        auto policy = std::make_shared<ForestPolicy>(ForestPolicy::load(cfg.reference));
        ex.reference = [policy](const ContextVector& x) { return policy->decide(x); };
        return ex;
    }

    if (cfg.source == "dataset") {
        auto truth = empirical_distribution(ex.data, ex.spec);
        std::vector<TreeRandomization> rands;
        for (int l = 0; l < cfg.L; ++l)
            rands.push_back({detail::splitmix64(cfg.master_seed + 0x9e3779b9ULL * (l + 1)),
                             cfg.depth_hi, 0.0, cfg.keep_fraction});
        auto policy = std::make_shared<ForestPolicy>(optimal_forest_policy(truth, rands));
        ex.reference = [policy](const ContextVector& x) { return policy->decide(x); };
    } else if (have_dist) {
        // Fully greedy (no subsampling) at the depth cap: exactly optimal on
        // these instances, so the expected-regret trace stays nonnegative.
        auto tree = std::make_shared<GreedyTreePolicy>(
            build_theta_optimal_greedy(dist, {1, cfg.depth_hi, 0.0, 1.0}));
        ex.reference = [tree](const ContextVector& x) { return tree->decide(x); };
    } else if (cfg.source == "xor") {
        ex.reference = [](const ContextVector& x) { return static_cast<int>(x[0] ^ x[1]); };
    } else {
        ex.reference = [](const ContextVector& x) { return x[0] ? 0 : 1; };
    }
    return ex;
}

std::unique_ptr<Environment> make_environment(const Experiment& ex, std::uint64_t trial_seed) {
    const auto& cfg = ex.cfg;
    if (cfg.source == "table1") return std::make_unique<Table1Env>();
    if (cfg.source == "xor") return std::make_unique<XorEnv>(cfg.M);
    if (cfg.source == "gap")
        return std::make_unique<GapEnv>(cfg.K, cfg.M, cfg.gap1, cfg.gap2);
    StreamConfig sc = cfg.stream;
    sc.shuffle_seed = detail::splitmix64(trial_seed ^ 0x5u);
    return std::make_unique<DatasetStream>(ex.data, ex.spec, sc);
}

RegretTrace run_trial(const Experiment& ex, std::uint64_t trial_seed) {
    const auto start = std::chrono::steady_clock::now();
    const auto& cfg = ex.cfg;
    std::mt19937_64 rng(trial_seed);
    auto env = make_environment(ex, trial_seed);
    auto learner = make_learner(cfg, ex.K, ex.M, detail::splitmix64(trial_seed ^ 0x11u));

    const std::int64_t T = cfg.stream.T;
    const std::int64_t window = std::min<std::int64_t>(100000, std::max<std::int64_t>(1, T / 10));
    const std::int64_t window_start = T - window;

    RegretTrace trace;
    trace.checkpoints = checkpoint_schedule(T);
    double cum = 0.0, cum_expected = 0.0, window_sum = 0.0;
    std::size_t next_cp = 0;
    for (std::int64_t t = 1; t <= T; ++t) {
        const ContextVector x = env->next(rng);
        const auto choice = learner->decide(x, rng);
        const double y = env->reward(choice.action, rng);
        learner->update(x, {choice.action, y, choice.propensity});

        const int ref_action = ex.reference ? ex.reference(x) : ex.fixed_action;
        const double ref_mean = env->mean_reward(ref_action);
        cum += ref_mean - y;
        cum_expected += ref_mean - env->mean_reward(choice.action);
        if (t > window_start) window_sum += y;

        if (t == trace.checkpoints[next_cp]) {
            trace.regret.push_back(cum);
            trace.expected_regret.push_back(cum_expected);
            ++next_cp;
        }
    }
    trace.final_regret = cum;
    trace.final_rate = window_sum / static_cast<double>(window);
    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

RegretTrace run_trial(const RunConfig& cfg, std::uint64_t trial_seed) {
    return run_trial(prepare_experiment(cfg), trial_seed);
}

ExperimentResult run_experiment(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const Experiment ex = prepare_experiment(cfg);

    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.trials));
    for (int i = 0; i < cfg.trials; ++i)
        seeds[static_cast<std::size_t>(i)] =
            detail::splitmix64(cfg.master_seed + 0x9e3779b97f4a7c15ULL * (i + 1));

    ExperimentResult result;
    result.reference_is_fixed = ex.reference_is_fixed;
    result.traces.resize(static_cast<std::size_t>(cfg.trials));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < cfg.trials; ++i)
        result.traces[static_cast<std::size_t>(i)] = run_trial(ex, seeds[static_cast<std::size_t>(i)]);

    result.checkpoints = result.traces.front().checkpoints;
    const auto n = static_cast<double>(cfg.trials);
    for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
        double mean = 0.0;
        for (const auto& tr : result.traces) mean += tr.regret[c];
        mean /= n;
        double var = 0.0;
        for (const auto& tr : result.traces) var += (tr.regret[c] - mean) * (tr.regret[c] - mean);
        var = cfg.trials > 1 ? var / (n - 1.0) : 0.0;
        result.regret_mean.push_back(mean);
        result.regret_std.push_back(std::sqrt(var));
    }
    result.final_regret_mean = result.regret_mean.back();
    result.final_regret_std = result.regret_std.back();
    result.final_regret_ci95 = 1.96 * result.final_regret_std / std::sqrt(n);
    for (const auto& tr : result.traces) result.final_rate_mean += tr.final_rate;
    result.final_rate_mean /= n;
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!cfg.output_path.empty()) {
        std::ofstream out(cfg.output_path);
        if (!out) throw std::runtime_error("run_experiment: cannot open " + cfg.output_path);
        out << to_csv(result);
    }
    return result;
}

std::string to_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "t,regret_mean,regret_std\n";
    for (std::size_t c = 0; c < result.checkpoints.size(); ++c)
        out << result.checkpoints[c] << ',' << format_num(result.regret_mean[c]) << ','
            << format_num(result.regret_std[c]) << '\n';
    return out.str();
}

std::string summary_row(const std::string& name, const ExperimentResult& result) {
    std::ostringstream out;
    out.precision(6);
    out << name << "  regret " << result.final_regret_mean << " +/- " << result.final_regret_ci95
        << "  rate " << result.final_rate_mean << "  wall_s " << result.wall_seconds;
    if (result.reference_is_fixed) out << "  [reference: best fixed action]";
    return out.str();
}

}  // namespace bf
