#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "lsgo/objective.hpp"

namespace lsgo {

using Rng = std::mt19937_64;

/// Box constraint shared by every coordinate.
struct Bounds {
    double lower = 0.0;
    double upper = 15.0;

    double width() const { return upper - lower; }
    double midpoint() const { return 0.5 * (lower + upper); }
    void validate() const;
};

struct Individual {
    std::vector<double> position;
    double fitness = std::numeric_limits<double>::quiet_NaN();

    bool evaluated() const { return fitness == fitness; }
};

struct Population {
    std::vector<Individual> members;

    std::size_t size() const { return members.size(); }
    std::size_t dimension() const { return members.empty() ? 0 : members.front().position.size(); }
    Individual& operator[](std::size_t i) { return members[i]; }
    const Individual& operator[](std::size_t i) const { return members[i]; }

    std::size_t best_index() const;
    /// Stable ascending sort by fitness.
    void sort_by_fitness();
};

/// A restriction of a generation to a subset of coordinates.
///
/// Trial vectors start from `context` (or from the target, when null) and
/// only the coordinates listed in `dims` (all, when empty) come from the
/// variation operator. `max_evals` caps the evaluations one call may spend.
struct SearchScope {
    std::span<const std::size_t> dims;
    const std::vector<double>* context = nullptr;
    std::int64_t max_evals = std::numeric_limits<std::int64_t>::max();
};

/// NP uniform individuals in [lower, upper]^D, unevaluated. Requires NP >= 4.
Population init_population(std::size_t np, std::size_t dim, const Bounds& bounds, Rng& rng);

/// Evaluates every unevaluated member while budget remains. Returns the
/// number of evaluations spent.
std::int64_t evaluate_population(Population& pop, Evaluator& evaluator);

/// `count` distinct indices from [0, n), none equal to any of `exclude`.
std::vector<std::size_t> distinct_indices(std::size_t n, std::size_t count, std::span<const std::size_t> exclude,
                                          Rng& rng);

/// Binomial crossover of target and mutant over dims (all when empty), with one
/// guaranteed coordinate taken from the mutant. The other coordinates come from
/// `base` when given, otherwise from the target.
std::vector<double> binomial_crossover(std::span<const double> target, std::span<const double> mutant, double cr,
                                       Rng& rng, std::span<const std::size_t> dims = {},
                                       const std::vector<double>* base = nullptr);

/// DE/rand/1/bin trial for target i: x_r1 + F (x_r2 - x_r3), crossed with x_i.
std::vector<double> de_rand_1_bin(const Population& pop, std::size_t i, double f, double cr, Rng& rng);

/// Mirror out-of-range coordinates at the violated bound; anything still out
/// of range after one reflection is clamped.
void reflect_into_bounds(std::span<double> x, const Bounds& bounds);
double reflect_into_bounds(double x, const Bounds& bounds);

/// round(N_init - (N_init - N_min) * used / max_evals).
std::size_t linear_pop_size_reduction(const EvalBudget& budget, std::size_t n_init, std::size_t n_min);

/// Removes the worst members until `target` remain. Keeps the order of the
/// survivors.
void truncate_to(Population& pop, std::size_t target);

/// Circular success-history memory for F and CR.
class SuccessHistory {
public:
    explicit SuccessHistory(std::size_t size = 5, double f_init = 0.5, double cr_init = 0.5);

    std::size_t size() const { return f_.size(); }
    double f(std::size_t slot) const { return f_[slot]; }
    double cr(std::size_t slot) const { return cr_[slot]; }
    std::size_t cursor() const { return cursor_; }

    /// Writes the improvement-weighted Lehmer mean of F and weighted
    /// arithmetic mean of CR into the current slot and advances it. An empty
    /// success set leaves the memory untouched. When `update_f` is false only
    /// the CR entry is written.
    void update(std::span<const double> f_values, std::span<const double> cr_values,
                std::span<const double> improvements, bool update_f = true);

private:
    std::vector<double> f_;
    std::vector<double> cr_;
    std::size_t cursor_ = 0;
};

double weighted_lehmer_mean(std::span<const double> values, std::span<const double> weights);
double weighted_mean(std::span<const double> values, std::span<const double> weights);

/// Population-based optimizer that advances a population by one generation.
class PopulationOptimizer {
public:
    virtual ~PopulationOptimizer() = default;
    virtual const char* name() const = 0;
    /// Runs one generation within `scope`. Stops early, committing the trials
    /// evaluated so far, when the scope cap or the budget runs out. Returns
    /// the number of evaluations spent.
    virtual std::int64_t generation(Population& pop, Evaluator& evaluator, Rng& rng, const SearchScope& scope) = 0;
};

}  // namespace lsgo
