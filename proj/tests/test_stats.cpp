#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include "lsgo/stats.hpp"

using namespace lsgo::stats;

namespace {

// Enumerates all 2^n sign patterns over the mean ranks of |d|.
double brute_force_p(const std::vector<double>& d) {
    std::vector<double> mags;
    for (double v : d)
        if (v != 0.0) mags.push_back(std::abs(v));
    const auto ranks = rank_row(mags);
    double w_plus = 0.0, total = 0.0;
    std::size_t k = 0;
    for (double v : d) {
        if (v == 0.0) continue;
        if (v > 0) w_plus += ranks[k];
        total += ranks[k];
        ++k;
    }
    const double observed = std::min(w_plus, total - w_plus);
    const std::size_t n = mags.size();
    std::size_t extreme = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) w += ranks[i];
        if (std::min(w, total - w) <= observed + 1e-9) ++extreme;
    }
    return std::min(1.0, double(extreme) / double(std::size_t{1} << n));
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("row ranks") {
    CHECK(rank_row(std::vector<double>{3, 1, 2}) == std::vector<double>{3, 1, 2});
    CHECK(rank_row(std::vector<double>{3, 3}) == std::vector<double>{1.5, 1.5});
    CHECK(rank_row(std::vector<double>{5, 1, 5, 5}) == std::vector<double>{3, 1, 3, 3});
}

TEST_CASE("Friedman ranks") {
    auto r = friedman_ranks(std::vector<std::vector<double>>{{1, 2}, {1, 2}});
    CHECK(r.mean_ranks == std::vector<double>{1, 2});
    CHECK(r.normalized == std::vector<double>{1, 2});
    CHECK(r.order == std::vector<std::size_t>{0, 1});

    auto t = friedman_ranks(std::vector<std::vector<double>>{{3, 3}, {1, 2}});
    CHECK(t.mean_ranks[0] == doctest::Approx(1.25));
    CHECK(t.mean_ranks[1] == doctest::Approx(1.75));

    CHECK_THROWS_AS(friedman_ranks(std::vector<std::vector<double>>{}), std::invalid_argument);
    CHECK_THROWS_AS(friedman_ranks(std::vector<std::vector<double>>{{1, 2}, {1}}), std::invalid_argument);
    CHECK_THROWS_AS(friedman_ranks(std::vector<std::vector<double>>{{1, NAN}}), std::invalid_argument);
}

TEST_CASE("Friedman invariances") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<std::vector<double>> rows(15, std::vector<double>(4));
    for (auto& row : rows)
        for (auto& v : row) v = u(rng);
    auto base = friedman_ranks(rows);
    double sum = 0.0;
    for (double m : base.mean_ranks) sum += m;
    CHECK(sum == doctest::Approx(10.0));

    // monotone transform of each row
    auto scaled = rows;
    for (auto& row : scaled)
        for (auto& v : row) v = std::log1p(v) * 7.0;
    auto s = friedman_ranks(scaled);
    for (std::size_t j = 0; j < 4; ++j) CHECK(s.mean_ranks[j] == doctest::Approx(base.mean_ranks[j]));

    // column permutation permutes the ranks
    auto swapped = rows;
    for (auto& row : swapped) std::swap(row[0], row[3]);
    auto w = friedman_ranks(swapped);
    CHECK(w.mean_ranks[0] == doctest::Approx(base.mean_ranks[3]));
    CHECK(w.mean_ranks[3] == doctest::Approx(base.mean_ranks[0]));

    // row order does not matter
    auto reversed = rows;
    std::reverse(reversed.begin(), reversed.end());
    auto rv = friedman_ranks(reversed);
    for (std::size_t j = 0; j < 4; ++j) CHECK(rv.mean_ranks[j] == doctest::Approx(base.mean_ranks[j]));
}

TEST_CASE("signed rank degenerate and argument checks") {
    std::vector<double> x{1, 2, 3, 4, 5, 6};
    auto r = wilcoxon_signed_rank(x, x);
    CHECK(r.degenerate);
    CHECK(r.p_value == 1.0);
    std::vector<double> shorter{1, 2};
    CHECK_THROWS_AS(wilcoxon_signed_rank(x, shorter), std::invalid_argument);
    std::vector<double> y{1, 2, 3, 4, 5, 7};
    CHECK_THROWS(wilcoxon_signed_rank(x, y));
}

TEST_CASE("signed rank exact against enumeration") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t n : {5u, 6u, 9u, 12u, 16u}) {
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<double> x(n), y(n, 0.0), d(n);
            for (std::size_t i = 0; i < n; ++i) {
                // coarse rounding forces tied magnitudes
                x[i] = std::round((n01(rng) + 0.3 * rep) * 2.0) / 2.0;
                d[i] = x[i] - y[i];
            }
            std::size_t nz = 0;
            for (double v : d) nz += v != 0.0;
            if (nz < 5) continue;
            auto r = wilcoxon_signed_rank(x, y);
            CHECK(r.exact);
            CHECK(r.p_value == doctest::Approx(brute_force_p(d)).epsilon(1e-12));
            CHECK(r.w_plus + r.w_minus == doctest::Approx(nz * (nz + 1) / 2.0));
        }
    }
}

TEST_CASE("signed rank symmetry and scale") {
    std::vector<double> x{3.1, 4.2, 1.0, 8.8, 2.5, 6.0, 7.7, 0.4, 5.5, 9.9};
    std::vector<double> y{2.0, 4.0, 1.5, 6.0, 2.0, 7.0, 5.0, 0.1, 5.0, 8.0};
    auto a = wilcoxon_signed_rank(x, y);
    auto b = wilcoxon_signed_rank(y, x);
    CHECK(a.p_value == doctest::Approx(b.p_value));
    CHECK(a.w_plus == b.w_minus);
    std::vector<double> xs(x), ys(y);
    for (auto& v : xs) v *= 1000.0;
    for (auto& v : ys) v *= 1000.0;
    CHECK(wilcoxon_signed_rank(xs, ys).p_value == doctest::Approx(a.p_value));

    // all positive differences: the smallest attainable p
    std::vector<double> z(10, 0.0), one(10);
    for (std::size_t i = 0; i < 10; ++i) one[i] = double(i + 1);
    CHECK(wilcoxon_signed_rank(one, z).p_value == doctest::Approx(2.0 / 1024.0));
}

TEST_CASE("signed rank normal approximation for large n") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x[i] = n01(rng) + 0.5;
        y[i] = n01(rng);
    }
    auto r = wilcoxon_signed_rank(x, y);
    CHECK_FALSE(r.exact);
    CHECK(r.n == 40);
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value < 1.0);
    // the approximation tracks the exact tail closely near the cut
    std::vector<double> x26(x.begin(), x.begin() + 26), y26(y.begin(), y.begin() + 26);
    std::vector<double> x25(x.begin(), x.begin() + 25), y25(y.begin(), y.begin() + 25);
    CHECK(wilcoxon_signed_rank(x25, y25).exact);
    CHECK_FALSE(wilcoxon_signed_rank(x26, y26).exact);
}

TEST_CASE("reference table ranks") {
    auto m = read_result_matrix(LSGO_DATA_DIR "/reference_means.csv");
    CHECK(m.cases.size() == 24);
    REQUIRE(m.algorithms.size() == 4);
    auto r = friedman_ranks(m);
    CHECK(std::abs(r.mean_ranks[0] - 1.75) < 0.005);
    CHECK(std::abs(r.mean_ranks[1] - 2.96) < 0.005);
    CHECK(std::abs(r.mean_ranks[2] - 1.33) < 0.005);
    CHECK(std::abs(r.mean_ranks[3] - 3.96) < 0.005);
    CHECK(r.order == std::vector<std::size_t>{2, 0, 1, 3});
}

TEST_CASE("result matrix reader") {
    const char* path = "stats_reader_tmp.csv";
    {
        std::ofstream out(path);
        out << "# comment\ncase,a,b\nc1,1,2\nc2,3.5,1e-2\n";
    }
    auto m = read_result_matrix(path);
    CHECK(m.algorithms == std::vector<std::string>{"a", "b"});
    CHECK(m.cases == std::vector<std::string>{"c1", "c2"});
    CHECK(m.values[1][1] == doctest::Approx(0.01));
    CHECK(m.column(0) == std::vector<double>{1, 3.5});
    {
        std::ofstream out(path);
        out << "case,a,b\nc1,1\n";
    }
    CHECK_THROWS(read_result_matrix(path));
    CHECK_THROWS(read_result_matrix("does/not/exist.csv"));
    std::remove(path);
}

}
