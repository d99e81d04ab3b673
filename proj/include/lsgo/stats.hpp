#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lsgo::stats {

/// Rows are problem cases, columns are algorithms.
struct ResultMatrix {
    std::vector<std::string> algorithms;
    std::vector<std::string> cases;
    std::vector<std::vector<double>> values;

    void validate() const;
    std::vector<double> column(std::size_t j) const;
};

/// Reads a delimited table with a header row `case,<alg1>,<alg2>,...`.
ResultMatrix read_result_matrix(const std::string& path);

struct FriedmanResult {
    std::vector<double> mean_ranks;
    /// mean_ranks divided by the smallest mean rank.
    std::vector<double> normalized;
    /// Column indices from best (smallest mean rank) to worst.
    std::vector<std::size_t> order;
};

/// Ranks of `row` in ascending order starting at 1; ties share the mean of
/// their ranks.
std::vector<double> rank_row(std::span<const double> row);

FriedmanResult friedman_ranks(const std::vector<std::vector<double>>& rows);
FriedmanResult friedman_ranks(const ResultMatrix& matrix);

struct WilcoxonResult {
    double p_value = 1.0;
    double w_plus = 0.0;
    double w_minus = 0.0;
    std::size_t n = 0;  // nonzero differences
    bool exact = false;
    bool degenerate = false;
};

/// Two-sided signed-rank test of x - y. Zero differences are dropped and
/// tied magnitudes share mean ranks. Exact null distribution for n <= 25,
/// otherwise the normal approximation with continuity and tie corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kExactWilcoxonLimit = 25;

}  // namespace lsgo::stats
