#include "lsgo/eade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lsgo::eade {

CrossoverPool::CrossoverPool(std::vector<double> candidates, std::size_t learning_period, double ratio_floor)
    : candidates_(std::move(candidates)),
      probabilities_(candidates_.size()),
      successes_(candidates_.size(), 0),
      failures_(candidates_.size(), 0),
      learning_period_(std::max<std::size_t>(1, learning_period)),
      ratio_floor_(ratio_floor) {
    if (candidates_.empty()) throw std::invalid_argument("crossover pool needs at least one candidate");
    std::fill(probabilities_.begin(), probabilities_.end(), 1.0 / static_cast<double>(candidates_.size()));
}

std::size_t CrossoverPool::draw(Rng& rng) const {
    if (candidates_.size() == 1) return 0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    for (std::size_t k = 0; k + 1 < probabilities_.size(); ++k) {
        if (x < probabilities_[k]) return k;
        x -= probabilities_[k];
    }
    return probabilities_.size() - 1;
}

void CrossoverPool::record(std::size_t k, bool success) {
    if (success) ++successes_[k]; else ++failures_[k];
}

void CrossoverPool::end_generation() {
    ++generation_;
    if (generation_ % learning_period_ == 0) refresh();
}

void CrossoverPool::refresh() {
    std::vector<double> ratio(candidates_.size());
    for (std::size_t k = 0; k < ratio.size(); ++k) {
        const auto trials = successes_[k] + failures_[k];
        const double r = trials > 0 ? static_cast<double>(successes_[k]) / static_cast<double>(trials) : 0.0;
        ratio[k] = r + ratio_floor_;
    }
    const double total = std::accumulate(ratio.begin(), ratio.end(), 0.0);
    for (std::size_t k = 0; k < ratio.size(); ++k) {
        probabilities_[k] = total > 0.0 ? ratio[k] / total : 1.0 / static_cast<double>(ratio.size());
    }
    std::fill(successes_.begin(), successes_.end(), 0);
    std::fill(failures_.begin(), failures_.end(), 0);
}

double eade_cr_adapt(const CrossoverPool& pool, Rng& rng, std::size_t* chosen) {
    const std::size_t k = pool.draw(rng);
    if (chosen) *chosen = k;
    return pool.value(k);
}

SliceSizes slice_sizes(std::size_t np, double p_fraction) {
    const auto edge = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(p_fraction * static_cast<double>(np))));
    if (np < 2 * edge + 1) throw std::invalid_argument("population too small for the ordered mutation slices");
    return {edge, np - 2 * edge, edge};
}

std::vector<double> eade_combine(std::span<const double> top, std::span<const double> mid,
                                 std::span<const double> bottom, double f1, double f2) {
    std::vector<double> v(mid.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = mid[j] + f1 * (top[j] - mid[j]) + f2 * (mid[j] - bottom[j]);
    }
    return v;
}

std::vector<double> eade_mutation(const Population& sorted, std::size_t /*i*/, double p_fraction, Rng& rng) {
    const SliceSizes s = slice_sizes(sorted.size(), p_fraction);
    std::uniform_int_distribution<std::size_t> top(0, s.top - 1);
    std::uniform_int_distribution<std::size_t> mid(s.top, s.top + s.middle - 1);
    std::uniform_int_distribution<std::size_t> bottom(s.top + s.middle, sorted.size() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t it = top(rng);
    const std::size_t im = mid(rng);
    const std::size_t ib = bottom(rng);
    const double f1 = u(rng);
    const double f2 = u(rng);
    return eade_combine(sorted[it].position, sorted[im].position, sorted[ib].position, f1, f2);
}

std::vector<double> de_rand_1_mutant(const Population& pop, std::size_t i, double f, Rng& rng) {
    const std::size_t self[] = {i};
    const auto r = distinct_indices(pop.size(), 3, self, rng);
    const auto& x1 = pop[r[0]].position;
    const auto& x2 = pop[r[1]].position;
    const auto& x3 = pop[r[2]].position;
    std::vector<double> v(x1.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = x1[j] + f * (x2[j] - x3[j]);
    return v;
}

Eade::Eade(EadeConfig config, const Bounds& bounds, std::size_t learning_period)
    : config_(std::move(config)),
      bounds_(bounds),
      pool_(config_.cr_candidates, learning_period, config_.ratio_floor) {}

std::int64_t Eade::generation(Population& pop, Evaluator& evaluator, Rng& rng, const SearchScope& scope) {
    if (evaluator.exhausted() || scope.max_evals <= 0) return 0;
    pop.sort_by_fitness();
    slice_sizes(pop.size(), config_.p_fraction);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> f_dist(config_.f_lower, config_.f_upper);
    struct Outcome {
        std::size_t index;
        std::vector<double> position;
        double fitness;
    };
    std::vector<Outcome> accepted;
    std::int64_t spent = 0;
    const double mix = config_.mixing_probability;

    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (spent >= scope.max_evals || evaluator.exhausted()) break;
        const bool ordered = mix >= 1.0 ? true : (mix <= 0.0 ? false : u(rng) < mix);
        std::size_t cr_slot = 0;
        const double cr = eade_cr_adapt(pool_, rng, &cr_slot);
        std::vector<double> mutant;
        if (ordered) {
            mutant = eade_mutation(pop, i, config_.p_fraction, rng);
        } else {
            const double f = f_dist(rng);
            mutant = de_rand_1_mutant(pop, i, f, rng);
        }
        auto trial = binomial_crossover(pop[i].position, mutant, cr, rng, scope.dims, scope.context);
        reflect_into_bounds(trial, bounds_);
        const double ft = evaluator(trial);
        ++spent;
        const bool improved = ft < pop[i].fitness;
        pool_.record(cr_slot, improved);
        if (ft <= pop[i].fitness) accepted.push_back({i, std::move(trial), ft});
    }
    for (auto& o : accepted) {
        pop[o.index].position = std::move(o.position);
        pop[o.index].fitness = o.fitness;
    }
    pool_.end_generation();
    return spent;
}

SolverResult run_eade(const Objective& objective, const Bounds& bounds, std::int64_t max_evals,
                      const EadeConfig& config, Rng& rng) {
    Evaluator evaluator(objective, max_evals);
    const std::size_t np = config.population;
    evaluator.set_population_size(np);
    Population pop = init_population(np, objective.dimension(), bounds, rng);
    evaluate_population(pop, evaluator);

    const double generations = static_cast<double>(max_evals) / static_cast<double>(np);
    const auto period = static_cast<std::size_t>(std::max(1.0, std::round(config.learning_fraction * generations)));
    Eade eade(config, bounds, period);
    while (!evaluator.exhausted()) {
        if (eade.generation(pop, evaluator, rng, SearchScope{}) == 0) break;
    }
    return evaluator.result();
}

}  // namespace lsgo::eade
