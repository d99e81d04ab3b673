#include "lsgo/mlshade_spa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lsgo::mlshade {

std::vector<std::vector<std::size_t>> random_dimension_grouping(std::size_t dim, std::size_t group_count, Rng& rng) {
    if (group_count < 1 || group_count > dim) throw std::invalid_argument("group_count must lie in [1, D]");
    std::vector<std::size_t> perm(dim);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::size_t>> groups(group_count);
    const std::size_t base = dim / group_count;
    const std::size_t extra = dim % group_count;
    std::size_t pos = 0;
    for (std::size_t g = 0; g < group_count; ++g) {
        const std::size_t len = base + (g < extra ? 1 : 0);
        groups[g].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                         perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
        std::sort(groups[g].begin(), groups[g].end());
        pos += len;
    }
    return groups;
}

MmtsState MmtsState::for_bounds(const Bounds& bounds) {
    MmtsState s;
    s.initial_range = 0.4 * bounds.width();
    s.search_range = s.initial_range;
    return s;
}

std::int64_t mmts_local_search(std::vector<double>& x, double& fx, Evaluator& evaluator, const Bounds& bounds,
                               std::int64_t step_budget, MmtsState& state, Rng& rng) {
    std::int64_t spent = 0;
    const std::size_t dim = x.size();
    if (dim == 0) return 0;
    auto can_spend = [&] { return spent < step_budget && !evaluator.exhausted(); };

    while (can_spend()) {
        if (state.cursor == 0 || state.order.size() != dim) {
            state.order.resize(dim);
            std::iota(state.order.begin(), state.order.end(), 0);
            std::shuffle(state.order.begin(), state.order.end(), rng);
            state.cursor = 0;
            state.improved_in_sweep = false;
        }
        const std::size_t d = state.order[state.cursor];
        const double old = x[d];

        x[d] = reflect_into_bounds(old - state.search_range, bounds);
        double f = evaluator(x);
        ++spent;
        if (f < fx) {
            fx = f;
            state.improved_in_sweep = true;
        } else {
            x[d] = old;
            if (can_spend()) {
                x[d] = reflect_into_bounds(old + 0.5 * state.search_range, bounds);
                f = evaluator(x);
                ++spent;
                if (f < fx) {
                    fx = f;
                    state.improved_in_sweep = true;
                } else {
                    x[d] = old;
                }
            }
        }

        if (++state.cursor == dim) {
            state.cursor = 0;
            if (!state.improved_in_sweep) {
                state.search_range *= 0.5;
                if (state.search_range < 1e-8) state.search_range = state.initial_range;
            }
        }
    }
    return spent;
}

namespace {

double draw_normal_clipped(Rng& rng, double mean, double sd, double lo, double hi) {
    std::normal_distribution<double> n(mean, sd);
    return std::clamp(n(rng), lo, hi);
}

std::vector<std::size_t> fitness_order(const Population& pop) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
    return order;
}

struct Accepted {
    std::size_t index;
    std::vector<double> position;
    double fitness;
};

void commit(Population& pop, std::vector<Accepted>& accepted) {
    for (auto& a : accepted) {
        pop[a.index].position = std::move(a.position);
        pop[a.index].fitness = a.fitness;
    }
}

}  // namespace

LshadeSpa::LshadeSpa(const Bounds& bounds, std::size_t memory_size, double pbest_fraction, double archive_rate)
    : bounds_(bounds), memory_(memory_size, 0.5, 0.5), pbest_fraction_(pbest_fraction), archive_rate_(archive_rate) {}

std::int64_t LshadeSpa::generation(Population& pop, Evaluator& evaluator, Rng& rng, const SearchScope& scope) {
    if (evaluator.exhausted() || scope.max_evals <= 0) return 0;
    const std::size_t np = pop.size();
    const auto order = fitness_order(pop);
    const std::size_t pbest_count =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(pbest_fraction_ * static_cast<double>(np))));
    const bool adapt_f = 2 * evaluator.used() >= evaluator.max_evals();

    std::uniform_int_distribution<std::size_t> slot(0, memory_.size() - 1);
    std::uniform_int_distribution<std::size_t> pbest_pick(0, std::min(pbest_count, np) - 1);
    std::uniform_real_distribution<double> semi_f(0.45, 0.55);
    std::vector<double> s_f, s_cr, s_delta;
    std::vector<Accepted> accepted;
    std::int64_t spent = 0;

    for (std::size_t i = 0; i < np; ++i) {
        if (spent >= scope.max_evals || evaluator.exhausted()) break;
        const std::size_t r = slot(rng);
        const double cr = draw_normal_clipped(rng, memory_.cr(r), 0.1, 0.0, 1.0);
        double f;
        if (adapt_f) {
            std::cauchy_distribution<double> c(memory_.f(r), 0.1);
            do { f = c(rng); } while (f <= 0.0);
            f = std::min(f, 1.0);
        } else {
            f = semi_f(rng);
        }
        const std::size_t pbest = order[pbest_pick(rng)];
        const std::size_t self[] = {i};
        const std::size_t r1 = distinct_indices(np, 1, self, rng)[0];
        const std::size_t union_size = np + archive_.size();
        std::uniform_int_distribution<std::size_t> pick_union(0, union_size - 1);
        std::size_t r2;
        do { r2 = pick_union(rng); } while (r2 == i || r2 == r1);
        const auto& x2 = r2 < np ? pop[r2].position : archive_[r2 - np];

        const auto& xi = pop[i].position;
        const auto& xp = pop[pbest].position;
        const auto& x1 = pop[r1].position;
        std::vector<double> v(xi.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = xi[j] + f * (xp[j] - xi[j]) + f * (x1[j] - x2[j]);

        auto trial = binomial_crossover(xi, v, cr, rng, scope.dims, scope.context);
        reflect_into_bounds(trial, bounds_);
        const double ft = evaluator(trial);
        ++spent;
        if (ft < pop[i].fitness) {
            s_f.push_back(f);
            s_cr.push_back(cr);
            s_delta.push_back(pop[i].fitness - ft);
            archive_.push_back(xi);
        }
        if (ft <= pop[i].fitness) accepted.push_back({i, std::move(trial), ft});
    }
    commit(pop, accepted);
    memory_.update(s_f, s_cr, s_delta, adapt_f);

    const auto cap = static_cast<std::size_t>(std::lround(archive_rate_ * static_cast<double>(pop.size())));
    while (archive_.size() > cap) {
        std::uniform_int_distribution<std::size_t> victim(0, archive_.size() - 1);
        const std::size_t k = victim(rng);
        archive_[k] = std::move(archive_.back());
        archive_.pop_back();
    }
    return spent;
}

Ande::Ande(const Bounds& bounds) : bounds_(bounds) {}

std::int64_t Ande::generation(Population& pop, Evaluator& evaluator, Rng& rng, const SearchScope& scope) {
    if (evaluator.exhausted() || scope.max_evals <= 0) return 0;
    const std::size_t np = pop.size();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s_cr;
    std::vector<Accepted> accepted;
    std::int64_t spent = 0;

    for (std::size_t i = 0; i < np; ++i) {
        if (spent >= scope.max_evals || evaluator.exhausted()) break;
        const std::size_t self[] = {i};
        auto r = distinct_indices(np, 3, self, rng);
        std::sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
        const auto& xb = pop[r[0]].position;
        const auto& xm = pop[r[1]].position;
        const auto& xw = pop[r[2]].position;

        const double p1 = 1.0;
        const double p2 = 0.75 + 0.25 * u(rng);
        const double p3 = 0.5 + (p2 - 0.5) * u(rng);
        const double ps = p1 + p2 + p3;
        const double w1 = p1 / ps, w2 = p2 / ps, w3 = p3 / ps;
        const double f1 = u(rng), f2 = u(rng), f3 = u(rng);
        const double cr = draw_normal_clipped(rng, cr_mean_, 0.1, 0.0, 1.0);

        std::vector<double> v(xb.size());
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double xc = w1 * xb[j] + w2 * xm[j] + w3 * xw[j];
            v[j] = xc + f1 * (xb[j] - xm[j]) + f2 * (xb[j] - xw[j]) + f3 * (xm[j] - xw[j]);
        }
        auto trial = binomial_crossover(pop[i].position, v, cr, rng, scope.dims, scope.context);
        reflect_into_bounds(trial, bounds_);
        const double ft = evaluator(trial);
        ++spent;
        if (ft < pop[i].fitness) s_cr.push_back(cr);
        if (ft <= pop[i].fitness) accepted.push_back({i, std::move(trial), ft});
    }
    commit(pop, accepted);
    if (!s_cr.empty()) {
        const double mean = std::accumulate(s_cr.begin(), s_cr.end(), 0.0) / static_cast<double>(s_cr.size());
        cr_mean_ = 0.9 * cr_mean_ + 0.1 * mean;
    }
    return spent;
}

std::array<double, kOptimizerCount> allocate_shares(std::span<const double> efficiency, double floor) {
    if (efficiency.size() != kOptimizerCount) throw std::invalid_argument("one efficiency per optimizer expected");
    if (floor < 0.0 || floor * static_cast<double>(kOptimizerCount) > 1.0) {
        throw std::invalid_argument("quota floor must lie in [0, 1/n]");
    }
    std::array<double, kOptimizerCount> shares{};
    double total = 0.0;
    for (double e : efficiency) total += std::max(0.0, e);
    if (!(total > 0.0) || !std::isfinite(total)) {
        shares.fill(1.0 / static_cast<double>(kOptimizerCount));
        return shares;
    }
    const double free = 1.0 - static_cast<double>(kOptimizerCount) * floor;
    for (std::size_t k = 0; k < kOptimizerCount; ++k) shares[k] = floor + free * std::max(0.0, efficiency[k]) / total;
    return shares;
}

std::array<std::int64_t, kOptimizerCount> split_budget(std::int64_t total, std::span<const double> shares) {
    std::array<std::int64_t, kOptimizerCount> out{};
    std::int64_t assigned = 0;
    for (std::size_t k = 0; k + 1 < kOptimizerCount; ++k) {
        out[k] = static_cast<std::int64_t>(std::floor(static_cast<double>(total) * shares[k]));
        assigned += out[k];
    }
    out[kOptimizerCount - 1] = total - assigned;
    return out;
}

SolverResult run_mlshade_spa(const Objective& objective, const Bounds& bounds, std::int64_t max_evals,
                             const MlshadeSpaConfig& config, Rng& rng, std::vector<CycleReport>* reports) {
    const std::size_t dim = objective.dimension();
    Evaluator evaluator(objective, max_evals);
    const std::size_t n_init = config.initial_population;
    const std::size_t n_min = std::min(config.min_population, n_init);
    evaluator.set_population_size(n_init);

    Population pop = init_population(n_init, dim, bounds, rng);
    evaluate_population(pop, evaluator);
    if (evaluator.exhausted()) return evaluator.result();

    const std::size_t group_count =
        config.group_count > 0 ? std::min(config.group_count, dim) : std::max<std::size_t>(1, (dim + 99) / 100);

    const double expected_generations = static_cast<double>(max_evals) / static_cast<double>(n_init);
    const auto eade_period =
        static_cast<std::size_t>(std::max(1.0, std::round(config.eade.learning_fraction * expected_generations)));

    LshadeSpa lshade(bounds, config.memory_size, config.pbest_fraction, config.archive_rate);
    eade::Eade eade_opt(config.eade, bounds, eade_period);
    Ande ande(bounds);
    std::array<PopulationOptimizer*, kOptimizerCount> optimizers{&lshade, &eade_opt, &ande};

    std::array<double, kOptimizerCount> shares{};
    shares.fill(1.0 / static_cast<double>(kOptimizerCount));
    MmtsState mmts = MmtsState::for_bounds(bounds);

    while (!evaluator.exhausted()) {
        CycleReport report;
        report.population = pop.size();
        report.best_before = evaluator.best_fitness();
        report.groups = group_count;

        const auto cycle_budget = std::min<std::int64_t>(
            static_cast<std::int64_t>(config.cycle_generations * pop.size()), evaluator.remaining());
        const auto local_budget =
            static_cast<std::int64_t>(std::llround(config.local_search_fraction * static_cast<double>(cycle_budget)));
        report.cycle_budget = cycle_budget;
        report.local_budget = local_budget;
        report.quotas = split_budget(cycle_budget - local_budget, shares);

        const auto groups = random_dimension_grouping(dim, group_count, rng);
        std::size_t group_cursor = 0;

        for (std::size_t k = 0; k < kOptimizerCount; ++k) {
            const double before = evaluator.best_fitness();
            std::int64_t spent = 0;
            while (spent < report.quotas[k] && !evaluator.exhausted()) {
                SearchScope scope;
                scope.dims = groups[group_cursor];
                scope.context = &evaluator.best_position();
                scope.max_evals = report.quotas[k] - spent;
                group_cursor = (group_cursor + 1) % groups.size();

                const std::int64_t s = optimizers[k]->generation(pop, evaluator, rng, scope);
                spent += s;
                if (s == 0) break;
                truncate_to(pop, std::max(linear_pop_size_reduction(evaluator.budget(), n_init, n_min), n_min));
                evaluator.set_population_size(pop.size());
            }
            report.spent[k] = spent;
            report.efficiency[k] = spent > 0 ? (before - evaluator.best_fitness()) / static_cast<double>(spent) : 0.0;
        }

        std::vector<double> x = evaluator.best_position();
        double fx = evaluator.best_fitness();
        report.local_spent = mmts_local_search(x, fx, evaluator, bounds, local_budget, mmts, rng);

        // Re-inject the context best over the worst member if it is not already present.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < pop.size(); ++i) {
            if (pop[i].fitness > pop[worst].fitness) worst = i;
        }
        if (evaluator.best_fitness() < pop[pop.best_index()].fitness) {
            pop[worst].position = evaluator.best_position();
            pop[worst].fitness = evaluator.best_fitness();
        }

        shares = allocate_shares(report.efficiency, config.quota_floor);
        report.best_after = evaluator.best_fitness();
        if (reports) reports->push_back(report);
        if (cycle_budget == 0) break;
    }
    return evaluator.result();
}

}  // namespace lsgo::mlshade
