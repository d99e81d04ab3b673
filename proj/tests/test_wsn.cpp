#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lsgo/wsn_problem.hpp"

using namespace lsgo::wsn;

namespace {

WsnConfig make_config(std::size_t L, double rho, std::uint64_t seed = 7) {
    WsnConfig c;
    c.num_sensors = L;
    c.correlation = rho;
    c.fading_seed = seed;
    return c;
}

// Brute-force reference: full-pivot LU on the dense effective covariance.
double reference_pe(const WsnInstance& inst, const std::vector<double>& g) {
    const auto& h = inst.fading().h;
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::VectorXd a(n);
    for (Eigen::Index k = 0; k < n; ++k) a(k) = h[k] * g[k];
    Eigen::MatrixXd sn = a.asDiagonal() * inst.signal_covariance() * a.asDiagonal();
    sn.diagonal().array() += inst.config().sigma_w2;
    const double stat = inst.config().signal_power() * a.dot(sn.fullPivLu().solve(a));
    return 0.5 * std::erfc(0.5 * std::sqrt(stat) / std::sqrt(2.0));
}

}  // namespace

TEST_SUITE("wsn") {

TEST_CASE("covariance builder") {
    auto c = make_config(3, 0.5);
    Matrix s = build_signal_covariance(c);
    Matrix want(3, 3);
    want << 1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1;
    CHECK((s - want).cwiseAbs().maxCoeff() < 1e-15);

    auto c0 = make_config(6, 0.0);
    c0.sigma_v2 = 2.5;
    CHECK((build_signal_covariance(c0) - 2.5 * Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);

    auto c2 = make_config(2, 0.1);
    c2.spacing = 2.0;
    c2.sigma_v2 = 4.0;
    Matrix s2 = build_signal_covariance(c2);
    CHECK(s2(0, 0) == doctest::Approx(4.0));
    CHECK(s2(0, 1) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(s2(1, 0) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("covariance is symmetric positive definite") {
    for (double rho : {0.0, 0.01, 0.5, 0.9}) {
        Matrix s = build_signal_covariance(make_config(40, rho));
        CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::LLT<Matrix> llt(s);
        CHECK(llt.info() == Eigen::Success);
    }
}

TEST_CASE("config validation") {
    auto c = make_config(3, 0.5);
    CHECK_NOTHROW(c.validate());
    c.num_sensors = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = make_config(3, 1.5);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = make_config(3, 0.0);
    c.epsilon = 0.6;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.epsilon = 0.1;
    c.sigma_w2 = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("fading is deterministic, sorted, unit mean") {
    auto c = make_config(5, 0.0, 42);
    auto a = sample_fading(c);
    auto b = sample_fading(c);
    CHECK(a.h == b.h);
    for (std::size_t i = 1; i < a.h.size(); ++i) CHECK(a.h[i - 1] >= a.h[i]);

    auto big = make_config(1000000, 0.0, 3);
    auto f = sample_fading(big);
    double mean = 0.0;
    for (double h : f.h) mean += h;
    mean /= static_cast<double>(f.h.size());
    CHECK(std::abs(mean - 1.0) < 0.01);
    for (std::size_t i = 1; i < f.h.size(); ++i) REQUIRE(f.h[i - 1] >= f.h[i]);
}

TEST_CASE("effective noise covariance") {
    Matrix sv = Matrix::Identity(3, 3);
    std::vector<double> h{1.2, 0.7, 0.3}, zero(3, 0.0);
    CHECK((effective_noise_covariance(h, zero, sv, 2.0) - 2.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

    Matrix one = Matrix::Identity(1, 1);
    std::vector<double> h1{1.0}, g1{2.0};
    CHECK(effective_noise_covariance(h1, g1, one, 1.0)(0, 0) == doctest::Approx(5.0));

    std::vector<double> g{1.0, 2.0, 3.0};
    Matrix d = effective_noise_covariance(h, g, 1.5 * sv, 0.5);
    for (int k = 0; k < 3; ++k) CHECK(d(k, k) == doctest::Approx(h[k] * h[k] * g[k] * g[k] * 1.5 + 0.5));
    CHECK(d(0, 1) == 0.0);

    std::vector<double> bad{1.0};
    CHECK_THROWS_AS(effective_noise_covariance(h, bad, sv, 1.0), std::invalid_argument);
}

TEST_CASE("Q function") {
    CHECK(q_function(0.0) == doctest::Approx(0.5));
    CHECK(std::abs(q_function(1.2816) - 0.1) < 1e-4);
    CHECK(std::abs(q_function(-1.6449) - 0.95) < 1e-4);
    for (double x : {-3.0, -0.4, 0.0, 1.1, 4.0}) CHECK(q_function(x) + q_function(-x) == doctest::Approx(1.0));
}

TEST_CASE("fusion error probability small cases") {
    auto c = make_config(4, 0.3);
    WsnInstance inst(c, FadingProfile{{1.5, 1.0, 0.8, 0.2}});
    std::vector<double> zero(4, 0.0);
    CHECK(fusion_error_probability(inst, zero) == doctest::Approx(0.5));

    auto c1 = make_config(1, 0.0);
    WsnInstance one(c1, FadingProfile{{1.0}});
    std::vector<double> g{1.0};
    CHECK(one.config().signal_power() == doctest::Approx(10.0));
    CHECK(fusion_error_probability(one, g) == doctest::Approx(q_function(0.5 * std::sqrt(5.0))).epsilon(1e-12));
    CHECK(std::abs(fusion_error_probability(one, g) - 0.1318) < 1e-4);
}

TEST_CASE("uncorrelated closed form") {
    auto c = make_config(60, 0.0, 11);
    WsnInstance inst(c);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> g(60);
        for (auto& x : g) x = u(rng);
        double sum = 0.0;
        const double m2 = c.signal_power();
        for (std::size_t k = 0; k < 60; ++k) {
            const double a2 = inst.fading().h[k] * inst.fading().h[k] * g[k] * g[k];
            sum += m2 * a2 / (a2 * c.sigma_v2 + c.sigma_w2);
        }
        const double closed = q_function(0.5 * std::sqrt(sum));
        CHECK(std::abs(fusion_error_probability(inst, g, SolvePath::dense) - closed) < 1e-10);
        CHECK(std::abs(fusion_error_probability(inst, g, SolvePath::structured) - closed) < 1e-10);
    }
}

TEST_CASE("structured and dense paths agree with LU reference") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (double rho : {0.01, 0.1, 0.5, 0.95}) {
        for (std::size_t L : {1u, 2u, 7u, 80u}) {
            WsnInstance inst(make_config(L, rho, L * 13));
            std::vector<double> g(L);
            for (auto& x : g) x = u(rng);
            g[0] = 0.0;  // a silent sensor must not break the solve
            const double ref = reference_pe(inst, g);
            CHECK(std::abs(fusion_error_probability(inst, g, SolvePath::dense) - ref) < 1e-10);
            CHECK(std::abs(fusion_error_probability(inst, g, SolvePath::structured) - ref) < 1e-10);
        }
    }
}

TEST_CASE("error probability falls as gains grow") {
    WsnInstance inst(make_config(20, 0.5));
    double prev = 0.5;
    for (double c : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        std::vector<double> g(20, c);
        const double pe = fusion_error_probability(inst, g);
        CHECK(pe <= prev);
        CHECK(pe > 0.0);
        prev = pe;
    }
}

TEST_CASE("Monte Carlo agrees with the analytic value") {
    std::mt19937_64 rng(77);
    WsnInstance inst(make_config(5, 0.5, 4));
    std::vector<double> g{0.4, 0.3, 0.2, 0.3, 0.1};
    const double pe = fusion_error_probability(inst, g);
    const std::int64_t n = 200000;
    auto est = monte_carlo_pe(inst, g, n, rng);
    const double sigma = std::sqrt(pe * (1 - pe) / n);
    CHECK(std::abs(est.error_rate - pe) <= 3 * sigma);
    // equal priors: both error types have the same rate
    const double s_half = std::sqrt(pe * (1 - pe) / est.h0_samples);
    CHECK(std::abs(est.false_alarm_rate - est.miss_rate) <= 3 * std::sqrt(2.0) * s_half);

    std::vector<double> zero(5, 0.0);
    auto z = monte_carlo_pe(inst, zero, n, rng);
    CHECK(std::abs(z.error_rate - 0.5) <= 3 * std::sqrt(0.25 / n));
}

TEST_CASE("power and constraint") {
    CHECK(total_power(std::vector<double>{0, 0, 0}) == 0.0);
    CHECK(total_power(std::vector<double>{1, 2, 3}) == 14.0);
    CHECK(total_power(std::vector<double>{3, 4}) == 25.0);

    auto c = make_config(3, 0.0);
    c.epsilon = 0.1;
    WsnInstance inst(c);
    std::vector<double> zero(3, 0.0);
    CHECK(constraint_zeta(inst, zero) == doctest::Approx(0.4));

    const double cstar = uniform_feasible_gain(inst);
    std::vector<double> g(3, cstar);
    CHECK(std::abs(constraint_zeta(inst, g)) < 1e-9);
    CHECK(is_feasible(inst, g));
    std::vector<double> neg{cstar, cstar, -0.1};
    CHECK_FALSE(is_feasible(inst, neg));
}

TEST_CASE("penalty branches") {
    CHECK(penalty_weight(0.05) == 10.0);
    CHECK(penalty_weight(0.1) == 10.0);
    CHECK(penalty_weight(0.1000001) == 100.0);
    CHECK(penalty_weight(1.0) == 100.0);
    CHECK(penalty_weight(1.5) == 300.0);
    CHECK(penalty_exponent(0.999) == 1.0);
    CHECK(penalty_exponent(1.0) == 2.0);

    // f + It * theta * q^lambda on a single violation
    auto hand = [](double f, double q, double it) { return f + it * penalty_weight(q) * std::pow(q, penalty_exponent(q)); };
    CHECK(hand(100, 0.05, 10) == doctest::Approx(105.0));
    CHECK(hand(100, 1.5, 2) == doctest::Approx(1450.0));
}

TEST_CASE("penalized objective") {
    auto c = make_config(2, 0.0);
    c.epsilon = 0.1;
    WsnInstance inst(c, FadingProfile{{1.0, 1.0}});
    std::vector<double> big{10.0, 10.0};
    REQUIRE(constraint_zeta(inst, big) < 0.0);
    CHECK(penalized_objective(inst, big, 1) == doctest::Approx(200.0));
    CHECK(penalized_objective(inst, big, 500) == doctest::Approx(200.0));

    // zero gains: error violation 0.4 and no sign violations
    std::vector<double> zero{0.0, 0.0};
    CHECK(penalized_objective(inst, zero, 3) == doctest::Approx(3 * 100 * 0.4));

    // one negative gain: sign violation 1.5 on top of the error term
    std::vector<double> neg{10.0, -1.5};
    const double zeta = std::max(0.0, constraint_zeta(inst, neg));
    const double err = zeta <= 0 ? 0.0 : penalty_weight(zeta) * zeta;
    CHECK(penalized_objective(inst, neg, 2) == doctest::Approx(102.25 + 2 * (err + 300 * 2.25)));

    CHECK_THROWS_AS(penalized_objective(inst, big, 0), std::invalid_argument);
    std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(penalized_objective(inst, wrong, 1), std::invalid_argument);
}

TEST_CASE("objective wrapper") {
    WsnInstance inst(make_config(4, 0.1));
    WsnObjective obj(inst);
    std::vector<double> g{1, 2, 3, 4};
    CHECK(obj.dimension() == 4);
    CHECK(obj.evaluate(g, 5) == penalized_objective(inst, g, 5));
}

}
