#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace lsgo {

/// A real-valued objective to be minimised.
///
/// `iteration` is the generation-like counter consumed by dynamic penalty
/// functions; static objectives ignore it.
class Objective {
public:
    virtual ~Objective() = default;
    virtual std::size_t dimension() const = 0;
    virtual double evaluate(std::span<const double> x, std::int64_t iteration) const = 0;
};

/// Wraps a plain callable as a static (iteration-independent) objective.
class FunctionObjective final : public Objective {
public:
    using Function = std::function<double(std::span<const double>)>;

    FunctionObjective(std::size_t dimension, Function fn)
        : dimension_(dimension), fn_(std::move(fn)) {}

    std::size_t dimension() const override { return dimension_; }
    double evaluate(std::span<const double> x, std::int64_t) const override { return fn_(x); }

private:
    std::size_t dimension_;
    Function fn_;
};

class BudgetExhausted : public std::runtime_error {
public:
    BudgetExhausted() : std::runtime_error("evaluation budget exhausted") {}
};

struct EvalBudget {
    std::int64_t max_evals = 0;
    std::int64_t used = 0;

    std::int64_t remaining() const { return max_evals - used; }
    bool exhausted() const { return used >= max_evals; }
    void consume() {
        if (exhausted()) throw BudgetExhausted();
        ++used;
    }
};

struct TracePoint {
    std::int64_t evals;
    double best;
};

struct SolverResult {
    std::vector<double> best_position;
    double best_fitness = std::numeric_limits<double>::infinity();
    std::int64_t evaluations = 0;
    std::vector<TracePoint> trace;
};

/// The single gateway through which every solver calls the objective.
///
/// Owns the evaluation budget, the best-so-far record and the convergence
/// trace. The dynamic-penalty iteration counter is derived from the number
/// of completed evaluations and the population size announced by the
/// running solver, unless it has been pinned.
class Evaluator {
public:
    Evaluator(const Objective& objective, std::int64_t max_evals)
        : objective_(&objective), budget_{max_evals, 0} {
        if (max_evals < 0) throw std::invalid_argument("max_evals must be nonnegative");
    }

    std::size_t dimension() const { return objective_->dimension(); }

    /// Evaluates x, charging one evaluation. Throws BudgetExhausted when the
    /// budget has no evaluations left.
    double operator()(std::span<const double> x) {
        const std::int64_t it = iteration();
        budget_.consume();
        const double f = objective_->evaluate(x, it);
        if (f < best_fitness_ || best_position_.empty()) {
            best_fitness_ = f;
            best_position_.assign(x.begin(), x.end());
            trace_.push_back({budget_.used, f});
        }
        return f;
    }

    const EvalBudget& budget() const { return budget_; }
    std::int64_t used() const { return budget_.used; }
    std::int64_t remaining() const { return budget_.remaining(); }
    std::int64_t max_evals() const { return budget_.max_evals; }
    bool exhausted() const { return budget_.exhausted(); }

    void set_population_size(std::size_t n) { population_size_ = n == 0 ? 1 : n; }
    std::size_t population_size() const { return population_size_; }

    /// Holds the penalty iteration at a fixed value (used while probing
    /// variable interactions, where a drifting penalty would look like an
    /// interaction). std::nullopt restores the evaluation-derived counter.
    void pin_iteration(std::optional<std::int64_t> it) { pinned_ = it; }

    /// ceil(used / population_size), at least 1.
    std::int64_t iteration() const {
        if (pinned_) return *pinned_;
        const auto np = static_cast<std::int64_t>(population_size_);
        const std::int64_t it = (budget_.used + np - 1) / np;
        return it < 1 ? 1 : it;
    }

    double best_fitness() const { return best_fitness_; }
    const std::vector<double>& best_position() const { return best_position_; }
    const std::vector<TracePoint>& trace() const { return trace_; }

    SolverResult result() const {
        return SolverResult{best_position_, best_fitness_, budget_.used, trace_};
    }

private:
    const Objective* objective_;
    EvalBudget budget_;
    std::size_t population_size_ = 1;
    std::optional<std::int64_t> pinned_;
    double best_fitness_ = std::numeric_limits<double>::infinity();
    std::vector<double> best_position_;
    std::vector<TracePoint> trace_;
};

}  // namespace lsgo
