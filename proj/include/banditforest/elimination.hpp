#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

// Confidence radii for the four elimination inequalities and the
// sample-complexity budgets used as stopping-time test envelopes.
// Natural log throughout: the derivations invert a Hoeffding exponential.

namespace bf {

struct EliminationConfig {
    int K = 2;            // actions
    int M = 2;            // contextual variables
    double delta = 0.05;  // failure probability, in (0,1]
    double epsilon = 0.0; // convergence-speed slack, >= 0
    int L = 1;            // trees
    int D = 1;            // max depth over trees

    void validate() const {
        if (K < 2) throw std::invalid_argument("EliminationConfig: K >= 2 required");
        if (M < 2) throw std::invalid_argument("EliminationConfig: M >= 2 required");
        if (!(delta > 0.0 && delta <= 1.0))
            throw std::invalid_argument("EliminationConfig: delta in (0,1] required");
        if (epsilon < 0.0) throw std::invalid_argument("EliminationConfig: epsilon >= 0 required");
        if (L < 1) throw std::invalid_argument("EliminationConfig: L >= 1 required");
        if (D < 1) throw std::invalid_argument("EliminationConfig: D >= 1 required");
    }

    bool operator==(const EliminationConfig&) const = default;
};

namespace detail {
inline double radius(double prefactor, double log_const, std::int64_t t) {
    if (t < 1) throw std::invalid_argument("radius: t >= 1 required");
    const double td = static_cast<double>(t);
    return prefactor * std::sqrt(1.0 / (2.0 * td) * std::log(log_const * td * td));
}
}  // namespace detail

// 4 * sqrt(1/(2 t_k) * log(4 K M t_k^2 / delta))
inline double variable_radius(const EliminationConfig& cfg, std::int64_t t_k) {
    return detail::radius(4.0, 4.0 * cfg.K * cfg.M / cfg.delta, t_k);
}

// 2 * sqrt(1/(2 t_k) * log(4 K t_k^2 / delta))
inline double action_radius(const EliminationConfig& cfg, std::int64_t t_k) {
    return detail::radius(2.0, 4.0 * cfg.K / cfg.delta, t_k);
}

// 4 * sqrt(1/(2 t) * log(4 K M D L t^2 / delta)), D the global depth cap
inline double forest_variable_radius(const EliminationConfig& cfg, std::int64_t t) {
    return detail::radius(4.0, 4.0 * cfg.K * cfg.M * cfg.D * cfg.L / cfg.delta, t);
}

// 2 * sqrt(1/(2 t) * log(4 K L t^2 / delta))
inline double forest_action_radius(const EliminationConfig& cfg, std::int64_t t) {
    return detail::radius(2.0, 4.0 * cfg.K * cfg.L / cfg.delta, t);
}

// Shared shape of all four inequalities; the inequality is inclusive.
inline bool should_eliminate(double best_score, double score, double epsilon, double radius) {
    return best_score - score + epsilon >= radius;
}

struct GapBudget {
    double delta1 = 1.0;       // minimal variable gap
    double delta2 = 1.0;       // minimal action gap
    std::int64_t t_star = 1;   // predicted sample complexity (ceiling)
};

namespace detail {
inline void check_gap(double gap) {
    if (!(gap > 0.0 && gap <= 1.0))
        throw std::invalid_argument("budget: gap in (0,1] required");
}
inline double lemma1_term(const EliminationConfig& cfg, double d1) {
    return 64.0 * cfg.K / (d1 * d1) * std::log(4.0 * cfg.K * cfg.M / (cfg.delta * d1));
}
inline double lemma3_term(const EliminationConfig& cfg, double d2) {
    return 64.0 * cfg.K / (d2 * d2) * std::log(4.0 * cfg.K / (cfg.delta * d2));
}
}  // namespace detail

inline GapBudget lemma1_budget(const EliminationConfig& cfg, double delta1) {
    detail::check_gap(delta1);
    return {delta1, 1.0, static_cast<std::int64_t>(std::ceil(detail::lemma1_term(cfg, delta1)))};
}

inline GapBudget lemma3_budget(const EliminationConfig& cfg, double delta2) {
    detail::check_gap(delta2);
    return {1.0, delta2, static_cast<std::int64_t>(std::ceil(detail::lemma3_term(cfg, delta2)))};
}

inline GapBudget theorem1_budget(const EliminationConfig& cfg, double delta1, double delta2) {
    detail::check_gap(delta1);
    detail::check_gap(delta2);
    const double t = detail::lemma1_term(cfg, delta1) + detail::lemma3_term(cfg, delta2);
    return {delta1, delta2, static_cast<std::int64_t>(std::ceil(t))};
}

// 2^D * (64K/d1^2 log(4KMDL/(delta d1)) + 64K/d2^2 log(4LK/(delta d2)))
inline GapBudget theorem3_budget(const EliminationConfig& cfg, double delta1, double delta2) {
    detail::check_gap(delta1);
    detail::check_gap(delta2);
    const double a = 64.0 * cfg.K / (delta1 * delta1) *
                     std::log(4.0 * cfg.K * cfg.M * cfg.D * cfg.L / (cfg.delta * delta1));
    const double b = 64.0 * cfg.K / (delta2 * delta2) *
                     std::log(4.0 * cfg.L * cfg.K / (cfg.delta * delta2));
    const double t = std::pow(2.0, cfg.D) * (a + b);
    return {delta1, delta2, static_cast<std::int64_t>(std::ceil(t))};
}

}  // namespace bf
