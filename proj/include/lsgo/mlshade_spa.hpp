#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lsgo/eade.hpp"
#include "lsgo/evo_core.hpp"

namespace lsgo::mlshade {

struct MlshadeSpaConfig {
    std::size_t initial_population = 100;
    std::size_t min_population = 20;
    std::size_t memory_size = 5;
    /// Minimum share of the global-phase budget each optimizer receives.
    double quota_floor = 0.1;
    /// A cycle lasts this many generations of the current population.
    std::size_t cycle_generations = 25;
    /// Share of each cycle given to the local search.
    double local_search_fraction = 0.1;
    /// Number of random dimension groups; 0 selects ceil(D / 100).
    std::size_t group_count = 1;
    double archive_rate = 1.0;
    double pbest_fraction = 0.11;
    eade::EadeConfig eade{};
};

/// Uniformly random partition of {0..dim-1} into group_count groups whose
/// sizes differ by at most one. Each group is returned sorted.
std::vector<std::vector<std::size_t>> random_dimension_grouping(std::size_t dim, std::size_t group_count, Rng& rng);

/// Persistent state of the coordinate-wise local search. A sweep may span
/// several calls.
struct MmtsState {
    double search_range = 0.0;
    double initial_range = 0.0;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    bool improved_in_sweep = false;

    static MmtsState for_bounds(const Bounds& bounds);
};

/// Modified multiple-trajectory local search on (x, fx).
///
/// Visits dimensions in a random order per sweep: tries x_i - SR, and on
/// failure x_i + SR / 2, keeping strict improvements. SR halves after a full
/// sweep without improvement and resets to 40 % of the domain width once it
/// drops below 1e-8. Spends at most step_budget evaluations; returns the
/// number spent.
std::int64_t mmts_local_search(std::vector<double>& x, double& fx, Evaluator& evaluator, const Bounds& bounds,
                               std::int64_t step_budget, MmtsState& state, Rng& rng);

/// Success-history DE with current-to-pbest/1 mutation and an external
/// archive. F is fixed around 0.5 during the first half of the budget and
/// adapted from the memory afterwards; CR is always adapted.
class LshadeSpa final : public PopulationOptimizer {
public:
    LshadeSpa(const Bounds& bounds, std::size_t memory_size, double pbest_fraction, double archive_rate);

    const char* name() const override { return "lshade-spa"; }
    std::int64_t generation(Population& pop, Evaluator& evaluator, Rng& rng, const SearchScope& scope) override;

    const SuccessHistory& memory() const { return memory_; }

private:
    Bounds bounds_;
    SuccessHistory memory_;
    double pbest_fraction_;
    double archive_rate_;
    std::vector<std::vector<double>> archive_;
};

/// Triangular-mutation DE: a weighted convex combination of three random
/// donors plus their three pairwise differences.
class Ande final : public PopulationOptimizer {
public:
    explicit Ande(const Bounds& bounds);

    const char* name() const override { return "ande"; }
    std::int64_t generation(Population& pop, Evaluator& evaluator, Rng& rng, const SearchScope& scope) override;

    double cr_mean() const { return cr_mean_; }

private:
    Bounds bounds_;
    double cr_mean_ = 0.9;
};

inline constexpr std::size_t kOptimizerCount = 3;

/// Next-cycle budget shares from per-optimizer efficiency (improvement per
/// evaluation): floor + (1 - n * floor) * efficiency / sum. Equal shares
/// when nothing improved.
std::array<double, kOptimizerCount> allocate_shares(std::span<const double> efficiency, double floor);

/// Splits `total` evaluations by `shares`; the remainder of the rounding goes
/// to the last slot so the quotas always sum to `total`.
std::array<std::int64_t, kOptimizerCount> split_budget(std::int64_t total, std::span<const double> shares);

struct CycleReport {
    std::array<std::int64_t, kOptimizerCount> quotas{};
    std::array<std::int64_t, kOptimizerCount> spent{};
    std::array<double, kOptimizerCount> efficiency{};
    std::int64_t cycle_budget = 0;
    std::int64_t local_budget = 0;
    std::int64_t local_spent = 0;
    double best_before = 0.0;
    double best_after = 0.0;
    std::size_t population = 0;
    std::size_t groups = 0;
};

SolverResult run_mlshade_spa(const Objective& objective, const Bounds& bounds, std::int64_t max_evals,
                             const MlshadeSpaConfig& config, Rng& rng, std::vector<CycleReport>* reports = nullptr);

}  // namespace lsgo::mlshade
