#include "lsgo/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lsgo::decomp {

InteractionProbe InteractionProbe::at_lower_bound(std::size_t dim, const Bounds& bounds, double threshold) {
    return InteractionProbe{std::vector<double>(dim, bounds.lower), bounds.width(), threshold};
}

void GroupingResult::validate(std::size_t dim) const {
    std::vector<int> seen(dim, 0);
    for (const auto& g : groups) {
        if (g.empty()) throw std::logic_error("grouping contains an empty group");
        for (std::size_t v : g) {
            if (v >= dim) throw std::logic_error("grouping index " + std::to_string(v) + " out of range");
            if (seen[v]++) throw std::logic_error("grouping index " + std::to_string(v) + " appears twice");
        }
    }
    for (std::size_t v = 0; v < dim; ++v) {
        if (!seen[v]) throw std::logic_error("grouping misses index " + std::to_string(v));
    }
}

Interaction dg_interaction(Evaluator& evaluator, std::size_t i, std::size_t j, const InteractionProbe& probe) {
    std::vector<double> x = probe.base_point;
    const double f0 = evaluator(x);
    x[i] += probe.delta;
    const double fi = evaluator(x);
    x[j] += probe.delta;
    const double fij = evaluator(x);
    x[i] = probe.base_point[i];
    const double fj = evaluator(x);
    const double lambda = std::abs((fi - f0) - (fij - fj));
    return {lambda > probe.threshold, lambda};
}

double adaptive_threshold(Evaluator& evaluator, const Bounds& bounds, Rng& rng, std::size_t samples) {
    const std::size_t dim = evaluator.dimension();
    std::uniform_real_distribution<double> u(bounds.lower, bounds.upper);
    std::vector<double> x(dim);
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples && !evaluator.exhausted(); ++s) {
        for (auto& v : x) v = u(rng);
        smallest = std::min(smallest, std::abs(evaluator(x)));
    }
    if (!std::isfinite(smallest)) smallest = 0.0;
    return 1e-12 * static_cast<double>(dim) * smallest;
}

namespace {

class RecursiveGrouper {
public:
    RecursiveGrouper(Evaluator& evaluator, const InteractionProbe& probe)
        : ev_(evaluator), probe_(probe), x_ll_(probe.base_point) {
        f_ll_ = ev_(x_ll_);
    }

    /// Grows groups from the front of the remaining variables. `limit` of 0
    /// means unbounded growth.
    void run(std::size_t limit, std::vector<Group>& nonseparable, Group& separable) {
        Group remaining(x_ll_.size());
        std::iota(remaining.begin(), remaining.end(), 0);
        while (!remaining.empty()) {
            Group group{remaining.front()};
            remaining.erase(remaining.begin());
            while (!remaining.empty()) {
                std::size_t cap = std::numeric_limits<std::size_t>::max();
                if (limit > 0) {
                    if (group.size() >= limit) break;
                    cap = limit - group.size();
                }
                set_first(group);
                Group found;
                interact(remaining, cap, found);
                if (found.empty()) break;
                group.insert(group.end(), found.begin(), found.end());
                Group rest;
                std::set_difference(remaining.begin(), remaining.end(), found.begin(), found.end(),
                                    std::back_inserter(rest));
                remaining = std::move(rest);
            }
            std::sort(group.begin(), group.end());
            if (group.size() == 1) separable.push_back(group.front());
            else nonseparable.push_back(std::move(group));
        }
    }

private:
    void set_first(const Group& group) {
        x_ul_ = x_ll_;
        for (std::size_t v : group) x_ul_[v] += probe_.delta;
        f_ul_ = ev_(x_ul_);
    }

    // Adds to `found`, in index order, up to `cap` members of `candidates`
    // that interact with the current first set.
    void interact(const Group& candidates, std::size_t cap, Group& found) {
        std::vector<double> x_lm = x_ll_;
        std::vector<double> x_um = x_ul_;
        for (std::size_t v : candidates) {
            x_lm[v] += 0.5 * probe_.delta;
            x_um[v] += 0.5 * probe_.delta;
        }
        const double f_lm = ev_(x_lm);
        const double f_um = ev_(x_um);
        const double d1 = f_ll_ - f_ul_;
        const double d2 = f_lm - f_um;
        if (!(std::abs(d1 - d2) > probe_.threshold)) return;
        if (candidates.size() == 1) {
            found.push_back(candidates.front());
            return;
        }
        const auto half = static_cast<std::ptrdiff_t>(candidates.size() / 2);
        const Group left(candidates.begin(), candidates.begin() + half);
        const Group right(candidates.begin() + half, candidates.end());
        interact(left, cap, found);
        if (found.size() < cap) interact(right, cap, found);
        if (found.size() > cap) found.resize(cap);
    }

    Evaluator& ev_;
    const InteractionProbe& probe_;
    std::vector<double> x_ll_;
    std::vector<double> x_ul_;
    double f_ll_ = 0.0;
    double f_ul_ = 0.0;
};

}  // namespace

std::vector<Group> pack_groups(const Group& indices, std::size_t size) {
    if (size == 0) throw std::invalid_argument("pack size must be positive");
    std::vector<Group> out;
    for (std::size_t pos = 0; pos < indices.size(); pos += size) {
        const std::size_t end = std::min(indices.size(), pos + size);
        out.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(pos),
                         indices.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

GroupingResult rdg_group(Evaluator& evaluator, const InteractionProbe& probe) {
    const std::int64_t start = evaluator.used();
    GroupingResult out;
    Group separable;
    RecursiveGrouper grouper(evaluator, probe);
    grouper.run(0, out.groups, separable);
    for (std::size_t v : separable) out.groups.push_back({v});
    out.probe_evals = evaluator.used() - start;
    out.validate(evaluator.dimension());
    return out;
}

GroupingResult rdg3_group(Evaluator& evaluator, const InteractionProbe& probe, std::size_t e_n, std::size_t e_s) {
    if (e_n < 1 || e_s < 1) throw std::invalid_argument("rdg3 thresholds must be at least 1");
    const std::int64_t start = evaluator.used();
    GroupingResult out;
    Group separable;
    RecursiveGrouper grouper(evaluator, probe);
    grouper.run(e_n, out.groups, separable);
    std::sort(separable.begin(), separable.end());
    for (auto& g : pack_groups(separable, e_s)) out.groups.push_back(std::move(g));
    out.probe_evals = evaluator.used() - start;
    out.validate(evaluator.dimension());
    return out;
}

SimilarityMatrix dg_similarity(Evaluator& evaluator, const InteractionProbe& probe, const DgscOptions& options,
                               Rng& rng) {
    const std::size_t dim = evaluator.dimension();
    SimilarityMatrix w = SimilarityMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    const auto reserve = static_cast<std::int64_t>(std::ceil(options.budget_reserve * static_cast<double>(evaluator.max_evals())));
    auto can_probe = [&] { return evaluator.remaining() > reserve; };

    if (!can_probe()) return w;
    std::vector<double> x = probe.base_point;
    const double f0 = evaluator(x);
    std::vector<double> fi(dim, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < dim && can_probe(); ++i) {
        x[i] += probe.delta;
        fi[i] = evaluator(x);
        x[i] = probe.base_point[i];
    }

    const bool sampled = dim > options.full_probe_limit;
    std::bernoulli_distribution take(options.sampled_pair_fraction);
    for (std::size_t i = 0; i < dim && can_probe(); ++i) {
        if (std::isnan(fi[i])) break;
        for (std::size_t j = i + 1; j < dim; ++j) {
            if (sampled && !take(rng)) continue;
            if (!can_probe() || std::isnan(fi[j])) break;
            x[i] += probe.delta;
            x[j] += probe.delta;
            const double fij = evaluator(x);
            x[i] = probe.base_point[i];
            x[j] = probe.base_point[j];
            const double lambda = std::abs((fi[i] - f0) - (fij - fi[j]));
            if (lambda > probe.threshold) {
                w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = lambda;
                w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = lambda;
            }
        }
    }
    return w;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double squared_distance(const RowMatrix& pts, Eigen::Index row, const RowMatrix& centers, Eigen::Index c) {
    return (pts.row(row) - centers.row(c)).squaredNorm();
}

std::vector<std::size_t> kmeans(const RowMatrix& pts, std::size_t k, const DgscOptions& options, Rng& rng,
                                double& best_inertia) {
    const Eigen::Index n = pts.rows();
    const auto kk = static_cast<Eigen::Index>(k);
    std::vector<std::size_t> best_labels(static_cast<std::size_t>(n), 0);
    best_inertia = std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (std::size_t restart = 0; restart < std::max<std::size_t>(1, options.kmeans_restarts); ++restart) {
        // k-means++ seeding.
        RowMatrix centers(kk, pts.cols());
        std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
        centers.row(0) = pts.row(first(rng));
        std::vector<double> d2(static_cast<std::size_t>(n));
        for (Eigen::Index c = 1; c < kk; ++c) {
            double total = 0.0;
            for (Eigen::Index p = 0; p < n; ++p) {
                double m = std::numeric_limits<double>::infinity();
                for (Eigen::Index q = 0; q < c; ++q) m = std::min(m, squared_distance(pts, p, centers, q));
                d2[static_cast<std::size_t>(p)] = m;
                total += m;
            }
            Eigen::Index chosen = n - 1;
            if (total > 0.0) {
                double x = u(rng) * total;
                for (Eigen::Index p = 0; p < n; ++p) {
                    x -= d2[static_cast<std::size_t>(p)];
                    if (x < 0.0) { chosen = p; break; }
                }
            } else {
                chosen = first(rng);
            }
            centers.row(c) = pts.row(chosen);
        }

        std::vector<std::size_t> labels(static_cast<std::size_t>(n), k);
        double inertia = 0.0;
        for (std::size_t iter = 0; iter < options.kmeans_iterations; ++iter) {
            bool changed = false;
            inertia = 0.0;
            for (Eigen::Index p = 0; p < n; ++p) {
                std::size_t arg = 0;
                double m = std::numeric_limits<double>::infinity();
                for (Eigen::Index c = 0; c < kk; ++c) {
                    const double d = squared_distance(pts, p, centers, c);
                    if (d < m) { m = d; arg = static_cast<std::size_t>(c); }
                }
                inertia += m;
                if (labels[static_cast<std::size_t>(p)] != arg) {
                    labels[static_cast<std::size_t>(p)] = arg;
                    changed = true;
                }
            }
            if (!changed) break;
            RowMatrix sums = RowMatrix::Zero(kk, pts.cols());
            std::vector<std::size_t> counts(k, 0);
            for (Eigen::Index p = 0; p < n; ++p) {
                sums.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(p)])) += pts.row(p);
                ++counts[labels[static_cast<std::size_t>(p)]];
            }
            for (Eigen::Index c = 0; c < kk; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) {
                    centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
                    continue;
                }
                // Empty cluster: move it onto the point farthest from its centre.
                Eigen::Index far = 0;
                double fd = -1.0;
                for (Eigen::Index p = 0; p < n; ++p) {
                    const double d = squared_distance(pts, p, centers,
                                                      static_cast<Eigen::Index>(labels[static_cast<std::size_t>(p)]));
                    if (d > fd) { fd = d; far = p; }
                }
                centers.row(c) = pts.row(far);
            }
        }
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best_labels = labels;
        }
    }
    return best_labels;
}

}  // namespace

std::vector<Group> spectral_grouping(const SimilarityMatrix& w, std::size_t k, Rng& rng, const DgscOptions& options) {
    const auto n = static_cast<std::size_t>(w.rows());
    Group all(n);
    std::iota(all.begin(), all.end(), 0);
    if (n == 0) return {};
    if (w.maxCoeff() <= 0.0) return pack_groups(all, options.fallback_group_size);
    k = std::clamp<std::size_t>(k, 1, n);
    if (k == 1) return {all};

    const Eigen::VectorXd degree = w.rowwise().sum();
    Eigen::VectorXd scale(degree.size());
    for (Eigen::Index i = 0; i < degree.size(); ++i) scale(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
    Eigen::MatrixXd laplacian = -(scale.asDiagonal() * w * scale.asDiagonal());
    laplacian.diagonal().array() += 1.0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(laplacian);
    if (eig.info() != Eigen::Success) return pack_groups(all, options.fallback_group_size);

    RowMatrix embed = eig.eigenvectors().leftCols(static_cast<Eigen::Index>(k));
    for (Eigen::Index r = 0; r < embed.rows(); ++r) {
        const double norm = embed.row(r).norm();
        if (norm > 0.0) embed.row(r) /= norm;
    }
    double inertia = 0.0;
    const auto labels = kmeans(embed, k, options, rng, inertia);

    std::vector<Group> buckets(k);
    for (std::size_t v = 0; v < n; ++v) buckets[labels[v]].push_back(v);
    std::vector<Group> out;
    for (auto& b : buckets) {
        if (!b.empty()) out.push_back(std::move(b));
    }
    std::sort(out.begin(), out.end(), [](const Group& a, const Group& b) { return a.front() < b.front(); });
    return out;
}

GroupingResult dgsc_group(Evaluator& evaluator, const InteractionProbe& probe, std::size_t k_groups, Rng& rng,
                          const DgscOptions& options) {
    const std::size_t dim = evaluator.dimension();
    if (k_groups < 1 || k_groups > dim) throw std::invalid_argument("k_groups must lie in [1, D]");
    const std::int64_t start = evaluator.used();
    const SimilarityMatrix w = dg_similarity(evaluator, probe, options, rng);
    GroupingResult out;
    out.groups = spectral_grouping(w, k_groups, rng, options);
    out.probe_evals = evaluator.used() - start;
    out.validate(dim);
    return out;
}

}  // namespace lsgo::decomp
