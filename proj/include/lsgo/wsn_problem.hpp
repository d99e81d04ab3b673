#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lsgo/objective.hpp"

namespace lsgo::wsn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One instance of the decentralized-detection power allocation problem.
struct WsnConfig {
    std::size_t num_sensors = 1;   // L
    double snr_db = 10.0;          // local observation SNR, gamma
    double correlation = 0.0;      // rho
    double spacing = 1.0;          // d
    double sigma_v2 = 1.0;         // observation noise variance
    double sigma_w2 = 1.0;         // receiver noise variance
    double epsilon = 0.1;          // fusion error threshold
    double prior_ratio = 1.0;      // tau = pi0 / pi1
    std::uint64_t fading_seed = 0;

    /// Throws std::invalid_argument on any invariant violation.
    void validate() const;
    double snr_linear() const;
    /// m^2 = gamma_linear * sigma_v^2.
    double signal_power() const;
    /// rho^d, the correlation between adjacent sensors.
    double adjacent_correlation() const;
};

/// Channel coefficients, sorted in descending order.
struct FadingProfile {
    std::vector<double> h;
};

Matrix build_signal_covariance(const WsnConfig& config);

/// L Rayleigh draws with unit mean, sorted descending.
FadingProfile sample_fading(const WsnConfig& config, std::mt19937_64& rng);
/// Same, from a fresh stream seeded with config.fading_seed.
FadingProfile sample_fading(const WsnConfig& config);

/// Sigma_n = A Sigma_v A + sigma_w2 I with A = diag(h .* g).
Matrix effective_noise_covariance(std::span<const double> h, std::span<const double> g,
                                  const Matrix& sigma_v, double sigma_w2);

/// Gaussian tail probability, Q(x) = erfc(x / sqrt 2) / 2.
double q_function(double x);

/// How m^2 e' A Sigma_n^-1 A e is computed.
///
/// `dense` forms Sigma_n and Cholesky-solves it. `structured` uses the
/// tridiagonal inverse of the exponential-correlation Sigma_v and an LDL'
/// solve of a tridiagonal system, O(L); it is exact for every rho < 1.
/// `automatic` picks structured whenever it applies.
enum class SolvePath { automatic, dense, structured };

/// Precomputed, immutable problem instance. Safe to share across threads.
class WsnInstance {
public:
    WsnInstance(WsnConfig config, FadingProfile fading);
    explicit WsnInstance(const WsnConfig& config);

    const WsnConfig& config() const { return config_; }
    const FadingProfile& fading() const { return fading_; }
    const Matrix& signal_covariance() const { return sigma_v_; }
    std::size_t dimension() const { return config_.num_sensors; }

    /// m^2 e' A Sigma_n^-1 A e.
    double detection_statistic(std::span<const double> g, SolvePath path = SolvePath::automatic) const;

private:
    double statistic_dense(std::span<const double> g) const;
    double statistic_structured(std::span<const double> g) const;

    WsnConfig config_;
    FadingProfile fading_;
    Matrix sigma_v_;
    bool structured_ = false;
};

double fusion_error_probability(const WsnInstance& instance, std::span<const double> g,
                                SolvePath path = SolvePath::automatic);

struct MonteCarloEstimate {
    double error_rate;
    double false_alarm_rate;   // decide H1 under H0
    double miss_rate;          // decide H0 under H1
    std::int64_t h0_samples;
    std::int64_t h1_samples;
};

/// Simulates the received vector under both hypotheses from the sensor
/// model itself (correlated observation noise generated recursively, receiver
/// noise added per link) and applies the LLR threshold rule. Half of the
/// samples are drawn under each hypothesis; the error rate is weighted by the
/// priors implied by prior_ratio.
MonteCarloEstimate monte_carlo_pe(const WsnInstance& instance, std::span<const double> g,
                                  std::int64_t n_samples, std::mt19937_64& rng);

double total_power(std::span<const double> g);

/// Fusion error probability minus epsilon; nonpositive iff the error
/// constraint holds.
double constraint_zeta(const WsnInstance& instance, std::span<const double> g);

/// Multi-stage penalty weight: 10 for x <= 0.1, 100 for x <= 1, else 300.
double penalty_weight(double violation);
/// Penalty exponent: 1 for x < 1, else 2.
double penalty_exponent(double violation);

/// f(g) + It * sum_i theta(q_i) q_i^lambda(q_i) over the error-constraint
/// violation and the per-sensor sign violations. Zero violations add nothing.
double penalized_objective(const WsnInstance& instance, std::span<const double> g, std::int64_t iteration);

/// True when zeta <= tolerance and every gain is nonnegative.
bool is_feasible(const WsnInstance& instance, std::span<const double> g, double tolerance = 1e-6);

/// The penalized objective behind the Objective interface.
class WsnObjective final : public Objective {
public:
    explicit WsnObjective(const WsnInstance& instance) : instance_(&instance) {}
    std::size_t dimension() const override { return instance_->dimension(); }
    double evaluate(std::span<const double> g, std::int64_t iteration) const override {
        return penalized_objective(*instance_, g, iteration);
    }
    const WsnInstance& instance() const { return *instance_; }

private:
    const WsnInstance* instance_;
};

/// Smallest common gain c such that g = c * 1 meets the error constraint,
/// found by bisection on [0, upper]. Returns upper when even that is
/// infeasible.
double uniform_feasible_gain(const WsnInstance& instance, double upper = 15.0);

}  // namespace lsgo::wsn
