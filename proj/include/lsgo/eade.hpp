#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lsgo/evo_core.hpp"

namespace lsgo::eade {

struct EadeConfig {
    std::size_t population = 100;
    double p_fraction = 0.1;
    std::vector<double> cr_candidates{0.05, 0.5, 0.95};
    /// Learning period, as a fraction of the expected number of generations.
    double learning_fraction = 0.1;
    /// Probability of using the ordered-population mutation instead of
    /// DE/rand/1/bin.
    double mixing_probability = 0.5;
    double f_lower = 0.4;
    double f_upper = 0.9;
    /// Added to every success ratio so a candidate that failed one period
    /// can still be drawn in the next.
    double ratio_floor = 0.01;
};

/// Candidate crossover rates with success/failure bookkeeping.
///
/// During the first learning period every candidate is equally likely. At
/// the end of each period the selection probabilities are reset to the
/// normalised success ratios observed in that period and the counters
/// cleared.
class CrossoverPool {
public:
    CrossoverPool(std::vector<double> candidates, std::size_t learning_period, double ratio_floor = 0.01);

    std::size_t size() const { return candidates_.size(); }
    double value(std::size_t k) const { return candidates_[k]; }
    std::span<const double> probabilities() const { return probabilities_; }
    std::span<const std::int64_t> successes() const { return successes_; }
    std::span<const std::int64_t> failures() const { return failures_; }
    std::size_t generation() const { return generation_; }

    /// Index of the candidate to use; consumes no randomness when the pool
    /// has a single candidate.
    std::size_t draw(Rng& rng) const;
    void record(std::size_t k, bool success);
    /// Advances the generation counter, refreshing probabilities at period ends.
    void end_generation();
    /// Recomputes probabilities from the current counters and clears them.
    void refresh();

private:
    std::vector<double> candidates_;
    std::vector<double> probabilities_;
    std::vector<std::int64_t> successes_;
    std::vector<std::int64_t> failures_;
    std::size_t learning_period_;
    double ratio_floor_;
    std::size_t generation_ = 0;
};

/// Draws a crossover rate from the pool.
double eade_cr_adapt(const CrossoverPool& pool, Rng& rng, std::size_t* chosen = nullptr);

struct SliceSizes {
    std::size_t top;
    std::size_t middle;
    std::size_t bottom;
};

/// floor(p * NP) individuals at either end, at least one each; throws when
/// no middle individual remains.
SliceSizes slice_sizes(std::size_t np, double p_fraction);

/// x_mid + F1 (x_top - x_mid) + F2 (x_mid - x_bottom).
std::vector<double> eade_combine(std::span<const double> top, std::span<const double> mid,
                                 std::span<const double> bottom, double f1, double f2);

/// Ordered-population mutant for a population sorted best first. Donors are
/// drawn from the best, middle and worst slices; F1, F2 ~ U(0, 1).
std::vector<double> eade_mutation(const Population& sorted, std::size_t i, double p_fraction, Rng& rng);

/// x_r1 + F (x_r2 - x_r3) over distinct r1, r2, r3 different from i.
std::vector<double> de_rand_1_mutant(const Population& pop, std::size_t i, double f, Rng& rng);

class Eade final : public PopulationOptimizer {
public:
    Eade(EadeConfig config, const Bounds& bounds, std::size_t learning_period);

    const char* name() const override { return "eade"; }
    std::int64_t generation(Population& pop, Evaluator& evaluator, Rng& rng, const SearchScope& scope) override;

    const CrossoverPool& pool() const { return pool_; }

private:
    EadeConfig config_;
    Bounds bounds_;
    CrossoverPool pool_;
};

SolverResult run_eade(const Objective& objective, const Bounds& bounds, std::int64_t max_evals,
                      const EadeConfig& config, Rng& rng);

}  // namespace lsgo::eade
