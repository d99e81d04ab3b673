#include "lsgo/evo_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lsgo {

void Bounds::validate() const {
    if (!(lower < upper)) throw std::invalid_argument("bounds require lower < upper");
}

std::size_t Population::best_index() const {
    if (members.empty()) throw std::logic_error("empty population has no best member");
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i) {
        if (members[i].fitness < members[best].fitness) best = i;
    }
    return best;
}

void Population::sort_by_fitness() {
    std::stable_sort(members.begin(), members.end(),
                     [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; });
}

Population init_population(std::size_t np, std::size_t dim, const Bounds& bounds, Rng& rng) {
    if (np < 4) throw std::invalid_argument("population size must be at least 4");
    bounds.validate();
    std::uniform_real_distribution<double> u(bounds.lower, bounds.upper);
    Population pop;
    pop.members.resize(np);
    for (auto& ind : pop.members) {
        ind.position.resize(dim);
        for (auto& x : ind.position) x = u(rng);
    }
    return pop;
}

std::int64_t evaluate_population(Population& pop, Evaluator& evaluator) {
    std::int64_t spent = 0;
    for (auto& ind : pop.members) {
        if (ind.evaluated()) continue;
        if (evaluator.exhausted()) break;
        ind.fitness = evaluator(ind.position);
        ++spent;
    }
    return spent;
}

std::vector<std::size_t> distinct_indices(std::size_t n, std::size_t count, std::span<const std::size_t> exclude,
                                          Rng& rng) {
    std::size_t excluded_in_range = 0;
    for (std::size_t e : exclude) excluded_in_range += e < n ? 1 : 0;
    if (n < count + excluded_in_range) throw std::invalid_argument("population too small for distinct indices");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
        const std::size_t r = pick(rng);
        if (std::find(exclude.begin(), exclude.end(), r) != exclude.end()) continue;
        if (std::find(out.begin(), out.end(), r) != out.end()) continue;
        out.push_back(r);
    }
    return out;
}

std::vector<double> binomial_crossover(std::span<const double> target, std::span<const double> mutant, double cr,
                                       Rng& rng, std::span<const std::size_t> dims, const std::vector<double>* base) {
    std::vector<double> trial = base ? *base : std::vector<double>(target.begin(), target.end());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = dims.empty() ? target.size() : dims.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t jrand = pick(rng);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = dims.empty() ? k : dims[k];
        const bool take = u(rng) < cr || k == jrand;
        trial[j] = take ? mutant[j] : target[j];
    }
    return trial;
}

std::vector<double> de_rand_1_bin(const Population& pop, std::size_t i, double f, double cr, Rng& rng) {
    const std::size_t self[] = {i};
    const auto r = distinct_indices(pop.size(), 3, self, rng);
    const auto& x1 = pop[r[0]].position;
    const auto& x2 = pop[r[1]].position;
    const auto& x3 = pop[r[2]].position;
    std::vector<double> v(x1.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = x1[j] + f * (x2[j] - x3[j]);
    return binomial_crossover(pop[i].position, v, cr, rng);
}

double reflect_into_bounds(double x, const Bounds& bounds) {
    if (x < bounds.lower) {
        x = 2.0 * bounds.lower - x;
        if (x > bounds.upper) x = bounds.upper;
    } else if (x > bounds.upper) {
        x = 2.0 * bounds.upper - x;
        if (x < bounds.lower) x = bounds.lower;
    }
    return x;
}

void reflect_into_bounds(std::span<double> x, const Bounds& bounds) {
    for (auto& v : x) v = reflect_into_bounds(v, bounds);
}

std::size_t linear_pop_size_reduction(const EvalBudget& budget, std::size_t n_init, std::size_t n_min) {
    if (n_min > n_init) throw std::invalid_argument("n_min must not exceed n_init");
    if (budget.max_evals <= 0) return n_init;
    const double frac = std::clamp(static_cast<double>(budget.used) / static_cast<double>(budget.max_evals), 0.0, 1.0);
    const double target = static_cast<double>(n_init) - static_cast<double>(n_init - n_min) * frac;
    return static_cast<std::size_t>(std::lround(target));
}

void truncate_to(Population& pop, std::size_t target) {
    if (pop.size() <= target) return;
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
    std::vector<bool> keep(pop.size(), false);
    for (std::size_t k = 0; k < target; ++k) keep[order[k]] = true;
    std::vector<Individual> survivors;
    survivors.reserve(target);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (keep[i]) survivors.push_back(std::move(pop.members[i]));
    }
    pop.members = std::move(survivors);
}

double weighted_lehmer_mean(std::span<const double> values, std::span<const double> weights) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        num += weights[k] * values[k] * values[k];
        den += weights[k] * values[k];
    }
    return den > 0.0 ? num / den : 0.0;
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        num += weights[k] * values[k];
        den += weights[k];
    }
    return den > 0.0 ? num / den : 0.0;
}

SuccessHistory::SuccessHistory(std::size_t size, double f_init, double cr_init)
    : f_(size, f_init), cr_(size, cr_init) {
    if (size == 0) throw std::invalid_argument("success history needs at least one slot");
}

void SuccessHistory::update(std::span<const double> f_values, std::span<const double> cr_values,
                            std::span<const double> improvements, bool update_f) {
    if (improvements.empty()) return;
    if (f_values.size() != improvements.size() || cr_values.size() != improvements.size()) {
        throw std::invalid_argument("success history update needs matching sizes");
    }
    const double total = std::accumulate(improvements.begin(), improvements.end(), 0.0);
    std::vector<double> w(improvements.size());
    if (total > 0.0) {
        for (std::size_t k = 0; k < w.size(); ++k) w[k] = improvements[k] / total;
    } else {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    }
    if (update_f) f_[cursor_] = weighted_lehmer_mean(f_values, w);
    cr_[cursor_] = weighted_mean(cr_values, w);
    cursor_ = (cursor_ + 1) % f_.size();
}

}  // namespace lsgo
