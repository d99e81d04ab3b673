#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lsgo/evo_core.hpp"
#include "lsgo/objective.hpp"

namespace lsgo::decomp {

using Group = std::vector<std::size_t>;

struct InteractionProbe {
    std::vector<double> base_point;
    /// Perturbation of the first set; the second set moves by delta / 2 in
    /// the set-level test and by delta in pairwise tests.
    double delta = 1.0;
    double threshold = 0.0;

    /// Probe rooted at the lower bound with delta = width.
    static InteractionProbe at_lower_bound(std::size_t dim, const Bounds& bounds, double threshold);
};

struct GroupingResult {
    std::vector<Group> groups;
    std::int64_t probe_evals = 0;

    /// Throws std::logic_error unless the groups partition {0..dim-1}.
    void validate(std::size_t dim) const;
    std::size_t size() const { return groups.size(); }
};

struct Interaction {
    bool interacts;
    double lambda;
};

/// |(f(x + d e_i) - f(x)) - (f(x + d e_i + d e_j) - f(x + d e_j))| against
/// the probe threshold. Four evaluations.
Interaction dg_interaction(Evaluator& evaluator, std::size_t i, std::size_t j, const InteractionProbe& probe);

/// alpha * min |f| over `samples` uniform points, alpha = 1e-12 * D.
double adaptive_threshold(Evaluator& evaluator, const Bounds& bounds, Rng& rng, std::size_t samples = 10);

/// Recursive differential grouping. Separable variables are returned as
/// singleton groups (emitted after all nonseparable groups, in index order).
GroupingResult rdg_group(Evaluator& evaluator, const InteractionProbe& probe);

/// RDG with an overlap cut: a growing group is emitted as soon as it reaches
/// e_n variables; separable variables are packed into groups of e_s.
GroupingResult rdg3_group(Evaluator& evaluator, const InteractionProbe& probe, std::size_t e_n, std::size_t e_s);

struct DgscOptions {
    /// Dimensions above which only a random subset of pairs is probed.
    std::size_t full_probe_limit = 400;
    double sampled_pair_fraction = 0.25;
    /// Probing stops once the remaining budget would fall below this share
    /// of max_evals.
    double budget_reserve = 0.2;
    /// Group size used by the separable fallback when W has no edges.
    std::size_t fallback_group_size = 100;
    std::size_t kmeans_restarts = 10;
    std::size_t kmeans_iterations = 100;
};

using SimilarityMatrix = Eigen::MatrixXd;

/// Pairwise differential magnitudes lambda_ij (zero where no interaction is
/// detected or the pair was not probed).
SimilarityMatrix dg_similarity(Evaluator& evaluator, const InteractionProbe& probe, const DgscOptions& options,
                               Rng& rng);

/// Normalized spectral clustering of the variables into at most k groups.
/// Falls back to packing by options.fallback_group_size when W is zero.
std::vector<Group> spectral_grouping(const SimilarityMatrix& w, std::size_t k, Rng& rng,
                                     const DgscOptions& options = {});

GroupingResult dgsc_group(Evaluator& evaluator, const InteractionProbe& probe, std::size_t k_groups, Rng& rng,
                          const DgscOptions& options = {});

/// Packs indices into consecutive chunks of at most `size`.
std::vector<Group> pack_groups(const Group& indices, std::size_t size);

}  // namespace lsgo::decomp
