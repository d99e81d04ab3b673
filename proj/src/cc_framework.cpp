#include "lsgo/cc_framework.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lsgo::cc {

double evaluate_in_context(std::span<const std::size_t> dims, std::span<const double> slice, ContextVector& context,
                           Evaluator& evaluator, std::vector<TracePoint>* trace) {
    std::vector<double> x = context.values;
    for (std::size_t k = 0; k < dims.size(); ++k) x[dims[k]] = slice[k];
    const double f = evaluator(x);
    if (f < context.fitness) {
        context.values = std::move(x);
        context.fitness = f;
        if (trace) trace->push_back({evaluator.used(), f});
    }
    return f;
}

void RoundRobinScheduler::reset(std::size_t components) {
    if (components == 0) throw std::invalid_argument("scheduler needs at least one component");
    count_ = components;
    cursor_ = 0;
}

std::size_t RoundRobinScheduler::next() {
    const std::size_t c = cursor_;
    cursor_ = (cursor_ + 1) % count_;
    return c;
}

std::size_t cbcc_select(std::span<const double> contributions) {
    if (contributions.empty()) throw std::invalid_argument("cbcc_select needs at least one component");
    std::size_t best = 0;
    for (std::size_t c = 1; c < contributions.size(); ++c) {
        if (contributions[c] > contributions[best]) best = c;
    }
    return best;
}

void CbccScheduler::reset(std::size_t components) {
    if (components == 0) throw std::invalid_argument("scheduler needs at least one component");
    contributions_.assign(components, 0.0);
    warmup_ = 0;
}

std::size_t CbccScheduler::next() {
    if (!warming_up() && *std::max_element(contributions_.begin(), contributions_.end()) <= 0.0) warmup_ = 0;
    if (warming_up()) return warmup_++;
    return cbcc_select(contributions_);
}

void CbccScheduler::report(std::size_t component, double improvement) {
    contributions_.at(component) = improvement;
}

// ---------------------------------------------------------------- CMA-ES

std::size_t cmaes_default_lambda(std::size_t n) {
    if (n == 0) throw std::invalid_argument("CMA-ES needs at least one coordinate");
    return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(n))));
}

CmaesState CmaesState::create(std::span<const double> mean, double sigma0, std::size_t lambda) {
    CmaesState s;
    s.n = mean.size();
    if (s.n == 0) throw std::invalid_argument("CMA-ES needs at least one coordinate");
    if (!(sigma0 > 0.0)) throw std::invalid_argument("CMA-ES initial step size must be positive");
    s.lambda = lambda == 0 ? cmaes_default_lambda(s.n) : lambda;
    if (s.lambda < 2) throw std::invalid_argument("CMA-ES needs lambda >= 2");
    s.mu = s.lambda / 2;
    s.weights.resize(s.mu);
    for (std::size_t i = 0; i < s.mu; ++i) {
        s.weights[i] = std::log(static_cast<double>(s.mu) + 0.5) - std::log(static_cast<double>(i + 1));
    }
    const double total = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
    double sq = 0.0;
    for (auto& w : s.weights) {
        w /= total;
        sq += w * w;
    }
    s.mueff = 1.0 / sq;
    const double n = static_cast<double>(s.n);
    s.cc = (4.0 + s.mueff / n) / (n + 4.0 + 2.0 * s.mueff / n);
    s.cs = (s.mueff + 2.0) / (n + s.mueff + 5.0);
    s.c1 = 2.0 / ((n + 1.3) * (n + 1.3) + s.mueff);
    s.cmu = std::min(1.0 - s.c1, 2.0 * (s.mueff - 2.0 + 1.0 / s.mueff) / ((n + 2.0) * (n + 2.0) + s.mueff));
    s.damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mueff - 1.0) / (n + 1.0)) - 1.0) + s.cs;
    s.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    s.sigma0 = sigma0;
    s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(s.n));
    s.reset_distribution();
    s.resets = 0;
    return s;
}

void CmaesState::reset_distribution() {
    const auto nn = static_cast<Eigen::Index>(n);
    sigma = sigma0;
    pc = Eigen::VectorXd::Zero(nn);
    ps = Eigen::VectorXd::Zero(nn);
    C = Eigen::MatrixXd::Identity(nn, nn);
    B = Eigen::MatrixXd::Identity(nn, nn);
    D = Eigen::VectorXd::Ones(nn);
    eigen_generation = generation;
    ++resets;
}

namespace {

bool refresh_eigensystem(CmaesState& s) {
    s.C = 0.5 * (s.C + s.C.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.C);
    if (eig.info() != Eigen::Success) return false;
    const Eigen::VectorXd values = eig.eigenvalues();
    if (!values.allFinite() || values.minCoeff() <= 0.0) return false;
    s.B = eig.eigenvectors();
    s.D = values.cwiseSqrt();
    s.eigen_generation = s.generation;
    return true;
}

}  // namespace

std::int64_t cmaes_step(CmaesState& s, const Group& indices, ContextVector& context, Evaluator& evaluator,
                        const Bounds& bounds, Rng& rng, std::vector<TracePoint>* trace) {
    if (indices.size() != s.n) throw std::invalid_argument("CMA-ES state dimension does not match the component");
    const auto nn = static_cast<Eigen::Index>(s.n);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> fs;
    xs.reserve(s.lambda);
    std::int64_t spent = 0;
    for (std::size_t k = 0; k < s.lambda && !evaluator.exhausted(); ++k) {
        Eigen::VectorXd z(nn);
        for (Eigen::Index j = 0; j < nn; ++j) z(j) = normal(rng);
        Eigen::VectorXd x = s.mean + s.sigma * (s.B * s.D.cwiseProduct(z));
        reflect_into_bounds(std::span<double>(x.data(), s.n), bounds);
        fs.push_back(evaluate_in_context(indices, std::span<const double>(x.data(), s.n), context, evaluator, trace));
        xs.push_back(std::move(x));
        ++spent;
    }
    if (xs.size() < s.lambda) return spent;

    std::vector<std::size_t> order(s.lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });

    const Eigen::VectorXd old_mean = s.mean;
    s.mean.setZero();
    for (std::size_t i = 0; i < s.mu; ++i) s.mean += s.weights[i] * xs[order[i]];
    const Eigen::VectorXd y_w = (s.mean - old_mean) / s.sigma;

    const Eigen::MatrixXd inv_sqrt_c = s.B * s.D.cwiseInverse().asDiagonal() * s.B.transpose();
    s.ps = (1.0 - s.cs) * s.ps + std::sqrt(s.cs * (2.0 - s.cs) * s.mueff) * (inv_sqrt_c * y_w);
    const double gen = static_cast<double>(s.generation + 1);
    const double ps_norm = s.ps.norm();
    const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - s.cs, 2.0 * gen)) / s.chi_n
                      < 1.4 + 2.0 / (static_cast<double>(s.n) + 1.0);
    s.pc = (1.0 - s.cc) * s.pc + (hsig ? std::sqrt(s.cc * (2.0 - s.cc) * s.mueff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(nn, nn);
    for (std::size_t i = 0; i < s.mu; ++i) {
        const Eigen::VectorXd y = (xs[order[i]] - old_mean) / s.sigma;
        rank_mu.noalias() += s.weights[i] * y * y.transpose();
    }
    const double hsig_fix = hsig ? 0.0 : s.cc * (2.0 - s.cc);
    s.C = (1.0 - s.c1 - s.cmu) * s.C + s.c1 * (s.pc * s.pc.transpose() + hsig_fix * s.C) + s.cmu * rank_mu;
    s.sigma *= std::exp(std::min(1.0, (s.cs / s.damps) * (ps_norm / s.chi_n - 1.0)));
    ++s.generation;

    const double lag = 1.0 / (s.c1 + s.cmu) / static_cast<double>(s.n) / 10.0;
    bool healthy = std::isfinite(s.sigma) && s.sigma > 0.0 && s.C.allFinite();
    if (healthy && static_cast<double>(s.generation - s.eigen_generation) > lag) healthy = refresh_eigensystem(s);
    if (!healthy) s.reset_distribution();
    return spent;
}

void CmaesComponent::reset(std::size_t components) {
    states_.assign(components, std::nullopt);
}

std::int64_t CmaesComponent::step(std::size_t c, const Group& indices, ContextVector& context, Evaluator& evaluator,
                                  Rng& rng, std::vector<TracePoint>* trace) {
    auto& slot = states_.at(c);
    if (!slot) {
        std::vector<double> mean(indices.size());
        for (std::size_t k = 0; k < indices.size(); ++k) mean[k] = context.values[indices[k]];
        slot = CmaesState::create(mean, config_.sigma_fraction * bounds_.width(), config_.lambda);
    }
    return cmaes_step(*slot, indices, context, evaluator, bounds_, rng, trace);
}

std::int64_t CmaesComponent::total_resets() const {
    std::int64_t total = 0;
    for (const auto& s : states_) {
        if (s) total += s->resets;
    }
    return total;
}

// ---------------------------------------------------------------- SaNSDE

double sansde_update_probability(std::int64_t ns1, std::int64_t nf1, std::int64_t ns2, std::int64_t nf2) {
    const double a = static_cast<double>(ns1) * static_cast<double>(ns2 + nf2);
    const double b = static_cast<double>(ns2) * static_cast<double>(ns1 + nf1);
    if (a + b <= 0.0) return 0.5;
    return std::clamp(a / (a + b), 0.05, 0.95);
}

std::int64_t sansde_init(SansdeState& state, const Group& indices, ContextVector& context, Evaluator& evaluator,
                         const Bounds& bounds, const SansdeConfig& config, Rng& rng, std::vector<TracePoint>* trace) {
    const std::size_t np = std::max<std::size_t>(4, config.subpopulation);
    state = SansdeState{};
    state.pop = init_population(np, indices.size(), bounds, rng);
    for (std::size_t k = 0; k < indices.size(); ++k) state.pop[0].position[k] = context.values[indices[k]];
    state.pop[0].fitness = context.fitness;
    std::int64_t spent = 0;
    for (std::size_t i = 1; i < np && !evaluator.exhausted(); ++i) {
        state.pop[i].fitness = evaluate_in_context(indices, state.pop[i].position, context, evaluator, trace);
        ++spent;
    }
    // Members the budget never reached keep a NaN fitness and lose every
    // comparison.
    return spent;
}

SansdeTrial sansde_trial(const SansdeState& state, std::size_t i, const SansdeConfig& config, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Population& pop = state.pop;
    SansdeTrial t{};
    const double p = config.fixed_strategy_probability.value_or(state.p);
    t.rand_strategy = p >= 1.0 ? true : (p <= 0.0 ? false : u(rng) < p);

    auto draw_f = [&](bool& gaussian) {
        gaussian = true;
        if (config.fixed_f) return *config.fixed_f;
        gaussian = u(rng) < state.fp;
        if (gaussian) return std::normal_distribution<double>(0.5, 0.3)(rng);
        return std::cauchy_distribution<double>(0.0, 1.0)(rng);
    };

    const std::size_t self[] = {i};
    std::vector<double> v(pop.dimension());
    if (t.rand_strategy) {
        const auto r = distinct_indices(pop.size(), 3, self, rng);
        const double f = draw_f(t.gaussian_f);
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = pop[r[0]].position[j] + f * (pop[r[1]].position[j] - pop[r[2]].position[j]);
        }
    } else {
        const std::size_t best = pop.best_index();
        const auto r = distinct_indices(pop.size(), 2, self, rng);
        const double f = draw_f(t.gaussian_f);
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double xi = pop[i].position[j];
            v[j] = xi + f * (pop[best].position[j] - xi) + f * (pop[r[0]].position[j] - pop[r[1]].position[j]);
        }
    }
    t.cr = config.fixed_cr ? *config.fixed_cr
                           : std::clamp(std::normal_distribution<double>(state.cr_mean, 0.1)(rng), 0.0, 1.0);
    t.position = binomial_crossover(pop[i].position, v, t.cr, rng);
    return t;
}

std::int64_t sansde_step(SansdeState& state, const Group& indices, ContextVector& context, Evaluator& evaluator,
                         const Bounds& bounds, const SansdeConfig& config, Rng& rng, std::vector<TracePoint>* trace) {
    std::int64_t spent = 0;
    for (std::size_t i = 0; i < state.pop.size(); ++i) {
        if (evaluator.exhausted()) return spent;
        SansdeTrial t = sansde_trial(state, i, config, rng);
        reflect_into_bounds(t.position, bounds);
        const double ft = evaluate_in_context(indices, t.position, context, evaluator, trace);
        ++spent;
        const double fi = state.pop[i].fitness;
        const bool success = ft < fi || std::isnan(fi);
        if (t.rand_strategy) (success ? state.ns1 : state.nf1)++;
        else (success ? state.ns2 : state.nf2)++;
        if (t.gaussian_f) (success ? state.fs1 : state.ff1)++;
        else (success ? state.fs2 : state.ff2)++;
        if (success) {
            state.cr_successes.push_back(t.cr);
            state.cr_gains.push_back(std::isnan(fi) ? 1.0 : fi - ft);
        }
        if (success || ft == fi) {
            state.pop[i].position = std::move(t.position);
            state.pop[i].fitness = ft;
        }
    }
    ++state.generation;
    const auto gen = static_cast<std::size_t>(state.generation);
    if (config.cr_period > 0 && gen % config.cr_period == 0) {
        if (!state.cr_successes.empty()) state.cr_mean = weighted_mean(state.cr_successes, state.cr_gains);
        state.cr_successes.clear();
        state.cr_gains.clear();
    }
    if (config.strategy_period > 0 && gen % config.strategy_period == 0) {
        state.p = sansde_update_probability(state.ns1, state.nf1, state.ns2, state.nf2);
        state.fp = sansde_update_probability(state.fs1, state.ff1, state.fs2, state.ff2);
        state.ns1 = state.nf1 = state.ns2 = state.nf2 = 0;
        state.fs1 = state.ff1 = state.fs2 = state.ff2 = 0;
    }
    return spent;
}

void SansdeComponent::reset(std::size_t components) {
    states_.assign(components, std::nullopt);
}

std::int64_t SansdeComponent::step(std::size_t c, const Group& indices, ContextVector& context, Evaluator& evaluator,
                                   Rng& rng, std::vector<TracePoint>* trace) {
    auto& slot = states_.at(c);
    if (!slot) {
        slot.emplace();
        return sansde_init(*slot, indices, context, evaluator, bounds_, config_, rng, trace);
    }
    return sansde_step(*slot, indices, context, evaluator, bounds_, config_, rng, trace);
}

// ---------------------------------------------------------------- driver

CcResult cc_optimize(Evaluator& evaluator, const std::vector<Group>& groups, Scheduler& scheduler,
                     ComponentOptimizer& optimizer, const Bounds& bounds, Rng& rng, const CcOptions& options,
                     std::optional<ContextVector> initial) {
    const std::size_t dim = evaluator.dimension();
    decomp::GroupingResult{groups, 0}.validate(dim);
    CcResult out;
    for (const auto& g : groups) out.components.push_back(ComponentState{g});

    if (initial) {
        if (initial->values.size() != dim) throw std::invalid_argument("initial context has the wrong dimension");
        out.context = std::move(*initial);
    } else {
        std::uniform_real_distribution<double> u(bounds.lower, bounds.upper);
        out.context.values.resize(dim);
        for (auto& v : out.context.values) v = u(rng);
        if (!evaluator.exhausted()) {
            out.context.fitness = evaluator(out.context.values);
            out.trace.push_back({evaluator.used(), out.context.fitness});
        }
    }

    scheduler.reset(groups.size());
    optimizer.reset(groups.size());
    const std::size_t turn_generations = std::max<std::size_t>(1, options.generations_per_turn);
    while (!evaluator.exhausted()) {
        const std::size_t c = scheduler.next();
        const double before = out.context.fitness;
        std::int64_t spent = 0;
        for (std::size_t g = 0; g < turn_generations && !evaluator.exhausted(); ++g) {
            const std::int64_t s = optimizer.step(c, groups[c], out.context, evaluator, rng, &out.trace);
            spent += s;
            if (s == 0) break;
        }
        const double gain = std::isfinite(before) ? std::max(0.0, before - out.context.fitness) : 0.0;
        auto& state = out.components[c];
        state.contribution += gain;
        state.last_improvement = gain;
        state.evaluations += spent;
        ++state.turns;
        scheduler.report(c, gain);
        if (spent == 0) break;
    }
    out.evaluations = evaluator.used();
    return out;
}

namespace {

template <class Fn>
decomp::GroupingResult probe_grouping(Evaluator& evaluator, Fn&& fn) {
    const std::int64_t start = evaluator.used();
    evaluator.pin_iteration(1);
    decomp::GroupingResult grouping;
    try {
        grouping = fn();
    } catch (const BudgetExhausted&) {
        Group all(evaluator.dimension());
        std::iota(all.begin(), all.end(), 0);
        grouping.groups = {all};
        grouping.probe_evals = evaluator.used() - start;
    }
    evaluator.pin_iteration(std::nullopt);
    return grouping;
}

SolverResult to_result(const CcResult& cc) {
    return SolverResult{cc.context.values, cc.context.fitness, cc.evaluations, cc.trace};
}

}  // namespace

SolverResult run_cbcc_rdg3(const Objective& objective, const Bounds& bounds, std::int64_t max_evals,
                           const CbccRdg3Config& config, Rng& rng, CcRunInfo* info) {
    bounds.validate();
    Evaluator evaluator(objective, max_evals);
    evaluator.set_population_size(config.iteration_population);
    const std::size_t dim = objective.dimension();
    auto grouping = probe_grouping(evaluator, [&] {
        const std::int64_t start = evaluator.used();
        const double eps = decomp::adaptive_threshold(evaluator, bounds, rng, config.threshold_samples);
        auto g = decomp::rdg3_group(evaluator, decomp::InteractionProbe::at_lower_bound(dim, bounds, eps), config.e_n,
                                    config.e_s);
        g.probe_evals = evaluator.used() - start;
        return g;
    });

    CbccScheduler cbcc;
    RoundRobinScheduler round_robin;
    Scheduler& scheduler = config.schedule == ScheduleMode::contribution ? static_cast<Scheduler&>(cbcc)
                                                                         : static_cast<Scheduler&>(round_robin);
    CmaesComponent cmaes(bounds, config.cmaes);
    CcResult cc = cc_optimize(evaluator, grouping.groups, scheduler, cmaes, bounds, rng, config.cc);
    SolverResult result = to_result(cc);
    if (info) *info = CcRunInfo{std::move(grouping), std::move(cc)};
    return result;
}

SolverResult run_dgsc_decc(const Objective& objective, const Bounds& bounds, std::int64_t max_evals,
                           const DgscDeccConfig& config, Rng& rng, CcRunInfo* info) {
    bounds.validate();
    Evaluator evaluator(objective, max_evals);
    evaluator.set_population_size(config.iteration_population);
    const std::size_t dim = objective.dimension();
    const std::size_t k = std::clamp<std::size_t>(config.group_count == 0 ? (dim + 99) / 100 : config.group_count, 1,
                                                  dim);
    auto grouping = probe_grouping(evaluator, [&] {
        const std::int64_t start = evaluator.used();
        const double eps = decomp::adaptive_threshold(evaluator, bounds, rng, config.threshold_samples);
        auto g = decomp::dgsc_group(evaluator, decomp::InteractionProbe::at_lower_bound(dim, bounds, eps), k, rng,
                                    config.dgsc);
        g.probe_evals = evaluator.used() - start;
        return g;
    });

    RoundRobinScheduler scheduler;
    SansdeComponent sansde(bounds, config.sansde);
    CcResult cc = cc_optimize(evaluator, grouping.groups, scheduler, sansde, bounds, rng, config.cc);
    SolverResult result = to_result(cc);
    if (info) *info = CcRunInfo{std::move(grouping), std::move(cc)};
    return result;
}

}  // namespace lsgo::cc
