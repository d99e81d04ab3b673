#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lsgo/decomposition.hpp"
#include "lsgo/evo_core.hpp"

namespace lsgo::cc {

using decomp::Group;

/// The full-dimension cooperation point.
struct ContextVector {
    std::vector<double> values;
    double fitness = std::numeric_limits<double>::infinity();
};

struct ComponentState {
    Group indices;
    double contribution = 0.0;  // accumulated improvement
    double last_improvement = 0.0;
    std::int64_t turns = 0;
    std::int64_t evaluations = 0;
};

/// Evaluates the context with the coordinates in `dims` replaced by `slice`.
/// The context adopts the point when it is strictly better. Also records a
/// trace point on adoption when `trace` is given.
double evaluate_in_context(std::span<const std::size_t> dims, std::span<const double> slice, ContextVector& context,
                           Evaluator& evaluator, std::vector<TracePoint>* trace = nullptr);

/// Subcomponent solver driven by cc_optimize. Keeps one state per component.
class ComponentOptimizer {
public:
    virtual ~ComponentOptimizer() = default;
    virtual const char* name() const = 0;
    virtual void reset(std::size_t components) = 0;
    /// One generation on component `c`. Returns evaluations spent.
    virtual std::int64_t step(std::size_t c, const Group& indices, ContextVector& context, Evaluator& evaluator,
                              Rng& rng, std::vector<TracePoint>* trace) = 0;
};

class Scheduler {
public:
    virtual ~Scheduler() = default;
    virtual void reset(std::size_t components) = 0;
    virtual std::size_t next() = 0;
    virtual void report(std::size_t component, double improvement) = 0;
};

class RoundRobinScheduler final : public Scheduler {
public:
    void reset(std::size_t components) override;
    std::size_t next() override;
    void report(std::size_t, double) override {}

private:
    std::size_t count_ = 1;
    std::size_t cursor_ = 0;
};

/// argmax of contributions, lowest index on ties. Requires a nonempty span.
std::size_t cbcc_select(std::span<const double> contributions);

/// One round-robin pass, then always the component with the largest recent
/// improvement. A component's contribution is replaced by the improvement of
/// its latest turn. When no component improved on its latest turn a new
/// round-robin pass starts.
class CbccScheduler final : public Scheduler {
public:
    void reset(std::size_t components) override;
    std::size_t next() override;
    void report(std::size_t component, double improvement) override;
    const std::vector<double>& contributions() const { return contributions_; }
    bool warming_up() const { return warmup_ < contributions_.size(); }

private:
    std::vector<double> contributions_;
    std::size_t warmup_ = 0;
};

struct CmaesConfig {
    double sigma_fraction = 0.3;
    /// 0 selects 4 + floor(3 ln n).
    std::size_t lambda = 0;
};

std::size_t cmaes_default_lambda(std::size_t n);

/// (mu/mu_w, lambda)-CMA-ES state over the n coordinates of one component.
struct CmaesState {
    std::size_t n = 0;
    std::size_t lambda = 0;
    std::size_t mu = 0;
    std::vector<double> weights;
    double mueff = 0.0;
    double cc = 0.0, cs = 0.0, c1 = 0.0, cmu = 0.0, damps = 0.0, chi_n = 0.0;
    double sigma = 0.0;
    double sigma0 = 0.0;
    Eigen::VectorXd mean;
    Eigen::VectorXd pc;
    Eigen::VectorXd ps;
    Eigen::MatrixXd C;
    Eigen::MatrixXd B;
    Eigen::VectorXd D;  // square roots of the eigenvalues of C
    std::int64_t generation = 0;
    std::int64_t eigen_generation = 0;
    std::int64_t resets = 0;

    static CmaesState create(std::span<const double> mean, double sigma0, std::size_t lambda = 0);
    void reset_distribution();
};

/// One CMA-ES generation for the component through the context. Offspring
/// are repaired by reflection into the bounds and the repaired points drive
/// the update. A generation cut short by the budget leaves the distribution
/// unchanged. Returns evaluations spent.
std::int64_t cmaes_step(CmaesState& state, const Group& indices, ContextVector& context, Evaluator& evaluator,
                        const Bounds& bounds, Rng& rng, std::vector<TracePoint>* trace = nullptr);

class CmaesComponent final : public ComponentOptimizer {
public:
    CmaesComponent(const Bounds& bounds, CmaesConfig config = {}) : bounds_(bounds), config_(config) {}

    const char* name() const override { return "cma-es"; }
    void reset(std::size_t components) override;
    std::int64_t step(std::size_t c, const Group& indices, ContextVector& context, Evaluator& evaluator, Rng& rng,
                      std::vector<TracePoint>* trace) override;

    const std::optional<CmaesState>& state(std::size_t c) const { return states_.at(c); }
    std::int64_t total_resets() const;

private:
    Bounds bounds_;
    CmaesConfig config_;
    std::vector<std::optional<CmaesState>> states_;
};

struct SansdeConfig {
    std::size_t subpopulation = 30;
    std::size_t strategy_period = 50;
    std::size_t cr_period = 25;
    /// Pinning any of these disables the matching adaptation.
    std::optional<double> fixed_strategy_probability;
    std::optional<double> fixed_f;
    std::optional<double> fixed_cr;
};

/// Success-based probability of the first of two choices, clamped to
/// [0.05, 0.95]; 0.5 when neither choice has succeeded.
double sansde_update_probability(std::int64_t ns1, std::int64_t nf1, std::int64_t ns2, std::int64_t nf2);

struct SansdeState {
    Population pop;  // positions are component slices
    double p = 0.5;   // P(DE/rand/1)
    double fp = 0.5;  // P(Gaussian F)
    double cr_mean = 0.5;
    std::int64_t ns1 = 0, nf1 = 0, ns2 = 0, nf2 = 0;
    std::int64_t fs1 = 0, ff1 = 0, fs2 = 0, ff2 = 0;
    std::vector<double> cr_successes;
    std::vector<double> cr_gains;
    std::int64_t generation = 0;
};

/// Subpopulation with the context slice as member 0 and uniform members
/// otherwise; all evaluated through the context. Returns evaluations spent.
std::int64_t sansde_init(SansdeState& state, const Group& indices, ContextVector& context, Evaluator& evaluator,
                         const Bounds& bounds, const SansdeConfig& config, Rng& rng,
                         std::vector<TracePoint>* trace = nullptr);

struct SansdeTrial {
    std::vector<double> position;
    bool rand_strategy;
    bool gaussian_f;
    double cr;
};

/// Mutation + binomial crossover for member i. Pinned settings consume no
/// random numbers, so a fully pinned DE/rand/1 trial matches de_rand_1_bin.
SansdeTrial sansde_trial(const SansdeState& state, std::size_t i, const SansdeConfig& config, Rng& rng);

std::int64_t sansde_step(SansdeState& state, const Group& indices, ContextVector& context, Evaluator& evaluator,
                         const Bounds& bounds, const SansdeConfig& config, Rng& rng,
                         std::vector<TracePoint>* trace = nullptr);

class SansdeComponent final : public ComponentOptimizer {
public:
    SansdeComponent(const Bounds& bounds, SansdeConfig config = {}) : bounds_(bounds), config_(config) {}

    const char* name() const override { return "sansde"; }
    void reset(std::size_t components) override;
    std::int64_t step(std::size_t c, const Group& indices, ContextVector& context, Evaluator& evaluator, Rng& rng,
                      std::vector<TracePoint>* trace) override;

    const std::optional<SansdeState>& state(std::size_t c) const { return states_.at(c); }

private:
    Bounds bounds_;
    SansdeConfig config_;
    std::vector<std::optional<SansdeState>> states_;
};

struct CcOptions {
    std::size_t generations_per_turn = 1;
};

struct CcResult {
    ContextVector context;
    std::vector<ComponentState> components;
    std::vector<TracePoint> trace;
    std::int64_t evaluations = 0;
};

/// Cooperative coevolution over `groups` until the budget runs out. Starts
/// from `initial` when given (its fitness must be current), otherwise from a
/// uniform point evaluated here.
CcResult cc_optimize(Evaluator& evaluator, const std::vector<Group>& groups, Scheduler& scheduler,
                     ComponentOptimizer& optimizer, const Bounds& bounds, Rng& rng, const CcOptions& options = {},
                     std::optional<ContextVector> initial = std::nullopt);

enum class ScheduleMode { contribution, round_robin };

struct CbccRdg3Config {
    std::size_t e_n = 50;
    std::size_t e_s = 100;
    std::size_t threshold_samples = 10;
    /// Population size that drives the dynamic-penalty iteration counter.
    std::size_t iteration_population = 100;
    ScheduleMode schedule = ScheduleMode::contribution;
    CmaesConfig cmaes{};
    CcOptions cc{};
};

struct DgscDeccConfig {
    /// 0 selects ceil(D / 100).
    std::size_t group_count = 0;
    std::size_t threshold_samples = 10;
    std::size_t iteration_population = 100;
    decomp::DgscOptions dgsc{};
    SansdeConfig sansde{};
    CcOptions cc{};
};

struct CcRunInfo {
    decomp::GroupingResult grouping;
    CcResult cc;
};

SolverResult run_cbcc_rdg3(const Objective& objective, const Bounds& bounds, std::int64_t max_evals,
                           const CbccRdg3Config& config, Rng& rng, CcRunInfo* info = nullptr);

SolverResult run_dgsc_decc(const Objective& objective, const Bounds& bounds, std::int64_t max_evals,
                           const DgscDeccConfig& config, Rng& rng, CcRunInfo* info = nullptr);

}  // namespace lsgo::cc
