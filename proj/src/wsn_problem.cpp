#include "lsgo/wsn_problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lsgo::wsn {

namespace {

// Above this adjacent correlation the tridiagonal inverse is badly
// conditioned and the dense factorization is used instead.
constexpr double kStructuredCorrelationLimit = 0.999;

void check_dimension(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) +
                                    " entries, got " + std::to_string(got));
    }
}

// Solves the symmetric positive-definite tridiagonal system (diag, off) y = b
// in place by LDL' factorization.
void solve_spd_tridiagonal(std::vector<double>& diag, const std::vector<double>& off, std::vector<double>& b) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (!(diag[i - 1] > 0.0)) throw std::domain_error("tridiagonal system not positive definite");
        const double l = off[i - 1] / diag[i - 1];
        diag[i] -= l * off[i - 1];
        b[i] -= l * b[i - 1];
    }
    if (!(diag[n - 1] > 0.0)) throw std::domain_error("tridiagonal system not positive definite");
    b[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        b[i] = (b[i] - off[i] * b[i + 1]) / diag[i];
    }
}

}  // namespace

void WsnConfig::validate() const {
    if (num_sensors < 1) throw std::invalid_argument("num_sensors must be at least 1");
    if (!(correlation >= 0.0 && correlation <= 1.0)) throw std::invalid_argument("correlation must lie in [0, 1]");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 0.5)");
    if (!(sigma_v2 > 0.0)) throw std::invalid_argument("sigma_v2 must be positive");
    if (!(sigma_w2 > 0.0)) throw std::invalid_argument("sigma_w2 must be positive");
    if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
    if (!(prior_ratio > 0.0)) throw std::invalid_argument("prior_ratio must be positive");
    if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
}

double WsnConfig::snr_linear() const { return std::pow(10.0, snr_db / 10.0); }

double WsnConfig::signal_power() const { return snr_linear() * sigma_v2; }

double WsnConfig::adjacent_correlation() const {
    return correlation == 0.0 ? 0.0 : std::pow(correlation, spacing);
}

Matrix build_signal_covariance(const WsnConfig& config) {
    const auto n = static_cast<Eigen::Index>(config.num_sensors);
    Matrix sigma(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto lag = static_cast<double>(i > j ? i - j : j - i);
            // 0^0 = 1 on the diagonal.
            sigma(i, j) = lag == 0.0 ? config.sigma_v2
                                     : config.sigma_v2 * std::pow(config.correlation, config.spacing * lag);
        }
    }
    return sigma;
}

FadingProfile sample_fading(const WsnConfig& config, std::mt19937_64& rng) {
    // Rayleigh mean is scale * sqrt(pi / 2); unit mean fixes the scale.
    const double scale = 1.0 / std::sqrt(std::numbers::pi / 2.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    FadingProfile out;
    out.h.resize(config.num_sensors);
    for (auto& h : out.h) {
        const double u = 1.0 - uniform(rng);  // (0, 1]
        h = scale * std::sqrt(-2.0 * std::log(u));
    }
    std::sort(out.h.begin(), out.h.end(), std::greater<>());
    return out;
}

FadingProfile sample_fading(const WsnConfig& config) {
    std::mt19937_64 rng(config.fading_seed);
    return sample_fading(config, rng);
}

Matrix effective_noise_covariance(std::span<const double> h, std::span<const double> g,
                                  const Matrix& sigma_v, double sigma_w2) {
    const std::size_t n = h.size();
    check_dimension(n, g.size(), "gain vector");
    if (sigma_v.rows() != static_cast<Eigen::Index>(n) || sigma_v.cols() != static_cast<Eigen::Index>(n)) {
        throw std::invalid_argument("signal covariance does not match the fading profile");
    }
    Vector a(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) a(static_cast<Eigen::Index>(k)) = h[k] * g[k];
    Matrix out = a.asDiagonal() * sigma_v * a.asDiagonal();
    out.diagonal().array() += sigma_w2;
    return out;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

WsnInstance::WsnInstance(WsnConfig config, FadingProfile fading)
    : config_(std::move(config)), fading_(std::move(fading)) {
    config_.validate();
    check_dimension(config_.num_sensors, fading_.h.size(), "fading profile");
    sigma_v_ = build_signal_covariance(config_);
    structured_ = config_.adjacent_correlation() <= kStructuredCorrelationLimit;
}

WsnInstance::WsnInstance(const WsnConfig& config) : WsnInstance(config, sample_fading(config)) {}

double WsnInstance::detection_statistic(std::span<const double> g, SolvePath path) const {
    check_dimension(config_.num_sensors, g.size(), "gain vector");
    switch (path) {
        case SolvePath::dense:
            return statistic_dense(g);
        case SolvePath::structured:
            if (!structured_) throw std::invalid_argument("structured solve requires adjacent correlation < 1");
            return statistic_structured(g);
        case SolvePath::automatic:
            break;
    }
    return structured_ ? statistic_structured(g) : statistic_dense(g);
}

double WsnInstance::statistic_dense(std::span<const double> g) const {
    const auto n = static_cast<Eigen::Index>(config_.num_sensors);
    Vector a(n);
    for (Eigen::Index k = 0; k < n; ++k) a(k) = fading_.h[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
    Matrix sigma_n = a.asDiagonal() * sigma_v_ * a.asDiagonal();
    sigma_n.diagonal().array() += config_.sigma_w2;
    Eigen::LLT<Matrix> llt(sigma_n);
    if (llt.info() != Eigen::Success) throw std::domain_error("noise covariance is not positive definite");
    const Vector y = llt.solve(a);
    return config_.signal_power() * a.dot(y);
}

// With A = diag(a) and Sigma_v^-1 = T tridiagonal, Woodbury gives
//   a' (A Sigma_v A + s I)^-1 a = (a'a - b' (s T + A^2)^-1 b) / s,  b = A a.
double WsnInstance::statistic_structured(std::span<const double> g) const {
    const std::size_t n = config_.num_sensors;
    const double s = config_.sigma_w2;
    const double r = config_.adjacent_correlation();
    std::vector<double> a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = fading_.h[k] * g[k];

    if (r == 0.0) {
        double acc = 0.0;
        for (double ak : a) {
            const double a2 = ak * ak;
            acc += a2 / (a2 * config_.sigma_v2 + s);
        }
        return config_.signal_power() * acc;
    }

    std::vector<double> diag(n), off(n > 0 ? n - 1 : 0), b(n);
    if (n == 1) {
        diag[0] = s / config_.sigma_v2;
    } else {
        const double scale = s / (config_.sigma_v2 * (1.0 - r * r));
        for (std::size_t k = 0; k < n; ++k) {
            diag[k] = scale * ((k == 0 || k + 1 == n) ? 1.0 : 1.0 + r * r);
        }
        for (std::size_t k = 0; k + 1 < n; ++k) off[k] = -scale * r;
    }
    double ata = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double a2 = a[k] * a[k];
        diag[k] += a2;
        b[k] = a2;
        ata += a2;
    }
    std::vector<double> y = b;
    solve_spd_tridiagonal(diag, off, y);
    double bty = 0.0;
    for (std::size_t k = 0; k < n; ++k) bty += b[k] * y[k];
    const double quad = std::max(0.0, (ata - bty) / s);
    return config_.signal_power() * quad;
}

double fusion_error_probability(const WsnInstance& instance, std::span<const double> g, SolvePath path) {
    const double stat = instance.detection_statistic(g, path);
    return q_function(0.5 * std::sqrt(std::max(0.0, stat)));
}

MonteCarloEstimate monte_carlo_pe(const WsnInstance& instance, std::span<const double> g,
                                  std::int64_t n_samples, std::mt19937_64& rng) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
    const WsnConfig& cfg = instance.config();
    const std::size_t L = cfg.num_sensors;
    check_dimension(L, g.size(), "gain vector");

    const auto n = static_cast<Eigen::Index>(L);
    Vector a(n);
    for (Eigen::Index k = 0; k < n; ++k) a(k) = instance.fading().h[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
    const Matrix sigma_n = effective_noise_covariance(instance.fading().h, g, instance.signal_covariance(), cfg.sigma_w2);
    Eigen::LLT<Matrix> llt(sigma_n);
    if (llt.info() != Eigen::Success) throw std::domain_error("noise covariance is not positive definite");
    const Vector w = llt.solve(a);

    const double m = std::sqrt(cfg.signal_power());
    const double offset = 0.5 * m * m * a.dot(w);  // shift of the LLR mean under H1 vs the centre
    const double threshold = std::log(cfg.prior_ratio);
    const double r = cfg.adjacent_correlation();
    const double sv = std::sqrt(cfg.sigma_v2);
    const double innovation = sv * std::sqrt(std::max(0.0, 1.0 - r * r));
    const double sw = std::sqrt(cfg.sigma_w2);
    std::normal_distribution<double> normal(0.0, 1.0);

    // LLR T(r) = m w'r - offset, with r = n (H0) or A m + n (H1).
    auto noise_projection = [&]() {
        double v = 0.0;
        double acc = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
            v = k == 0 ? sv * normal(rng) : r * v + innovation * normal(rng);
            const double nk = a(static_cast<Eigen::Index>(k)) * v + sw * normal(rng);
            acc += w(static_cast<Eigen::Index>(k)) * nk;
        }
        return acc;
    };

    const std::int64_t n0 = (n_samples + 1) / 2;
    const std::int64_t n1 = n_samples - n0;
    std::int64_t false_alarms = 0, misses = 0;
    for (std::int64_t s = 0; s < n0; ++s) {
        const double t = m * noise_projection() - offset;
        if (t >= threshold) ++false_alarms;
    }
    const double mean_shift = m * m * a.dot(w);
    for (std::int64_t s = 0; s < n1; ++s) {
        const double t = m * noise_projection() + mean_shift - offset;
        if (t < threshold) ++misses;
    }

    const double pi0 = cfg.prior_ratio / (1.0 + cfg.prior_ratio);
    const double pi1 = 1.0 - pi0;
    MonteCarloEstimate est{};
    est.h0_samples = n0;
    est.h1_samples = n1;
    est.false_alarm_rate = static_cast<double>(false_alarms) / static_cast<double>(n0);
    est.miss_rate = n1 > 0 ? static_cast<double>(misses) / static_cast<double>(n1) : 0.0;
    est.error_rate = n1 > 0 ? pi0 * est.false_alarm_rate + pi1 * est.miss_rate : est.false_alarm_rate;
    return est;
}

double total_power(std::span<const double> g) {
    double acc = 0.0;
    for (double x : g) acc += x * x;
    return acc;
}

double constraint_zeta(const WsnInstance& instance, std::span<const double> g) {
    return fusion_error_probability(instance, g) - instance.config().epsilon;
}

double penalty_weight(double violation) {
    if (violation <= 0.1) return 10.0;
    if (violation <= 1.0) return 100.0;
    return 300.0;
}

double penalty_exponent(double violation) { return violation < 1.0 ? 1.0 : 2.0; }

double penalized_objective(const WsnInstance& instance, std::span<const double> g, std::int64_t iteration) {
    if (iteration < 1) throw std::invalid_argument("iteration must be at least 1");
    auto term = [](double q) {
        if (q <= 0.0) return 0.0;
        const double lam = penalty_exponent(q);
        return penalty_weight(q) * (lam == 1.0 ? q : q * q);
    };
    double penalty = term(std::max(0.0, constraint_zeta(instance, g)));
    for (double x : g) penalty += term(std::max(0.0, -x));
    return total_power(g) + static_cast<double>(iteration) * penalty;
}

bool is_feasible(const WsnInstance& instance, std::span<const double> g, double tolerance) {
    if (std::any_of(g.begin(), g.end(), [](double x) { return x < 0.0; })) return false;
    return constraint_zeta(instance, g) <= tolerance;
}

double uniform_feasible_gain(const WsnInstance& instance, double upper) {
    std::vector<double> g(instance.dimension(), upper);
    if (constraint_zeta(instance, g) > 0.0) return upper;
    double lo = 0.0, hi = upper;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * upper; ++iter) {
        const double mid = 0.5 * (lo + hi);
        std::fill(g.begin(), g.end(), mid);
        if (constraint_zeta(instance, g) <= 0.0) hi = mid; else lo = mid;
    }
    return hi;
}

}  // namespace lsgo::wsn
