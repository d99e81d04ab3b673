#include "lsgo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lsgo::stats {

void ResultMatrix::validate() const {
    if (values.empty() || algorithms.empty()) throw std::invalid_argument("result matrix is empty");
    if (!cases.empty() && cases.size() != values.size()) throw std::invalid_argument("case labels do not match rows");
    for (std::size_t r = 0; r < values.size(); ++r) {
        if (values[r].size() != algorithms.size()) {
            throw std::invalid_argument("result matrix row " + std::to_string(r) + " has the wrong width");
        }
        for (double v : values[r]) {
            if (!std::isfinite(v)) throw std::invalid_argument("result matrix row " + std::to_string(r) + " is not finite");
        }
    }
}

std::vector<double> ResultMatrix::column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& row : values) out.push_back(row.at(j));
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    return cells;
}

}  // namespace

ResultMatrix read_result_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ResultMatrix m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line);
        if (m.algorithms.empty()) {
            if (cells.size() < 2) throw std::runtime_error(path + ": header needs a case column and algorithms");
            m.algorithms.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.size() != m.algorithms.size() + 1) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(m.algorithms.size() + 1) + " cells");
        }
        m.cases.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            try {
                row.push_back(std::stod(cells[j]));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number '" + cells[j] + "'");
            }
        }
        m.values.push_back(std::move(row));
    }
    m.validate();
    return m;
}

std::vector<double> rank_row(std::span<const double> row) {
    std::vector<std::size_t> idx(row.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    std::vector<double> ranks(row.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && row[idx[j + 1]] == row[idx[i]]) ++j;
        const double mean = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mean;
        i = j + 1;
    }
    return ranks;
}

FriedmanResult friedman_ranks(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) throw std::invalid_argument("friedman_ranks: empty matrix");
    if (rows.size() < 2 || rows.front().size() < 2) {
        throw std::invalid_argument("friedman_ranks needs at least 2 rows and 2 columns");
    }
    const std::size_t k = rows.front().size();
    FriedmanResult out;
    out.mean_ranks.assign(k, 0.0);
    for (const auto& row : rows) {
        if (row.size() != k) throw std::invalid_argument("friedman_ranks: ragged matrix");
        for (double v : row) {
            if (!std::isfinite(v)) throw std::invalid_argument("friedman_ranks: non-finite entry");
        }
        const auto r = rank_row(row);
        for (std::size_t j = 0; j < k; ++j) out.mean_ranks[j] += r[j];
    }
    for (auto& r : out.mean_ranks) r /= static_cast<double>(rows.size());
    const double best = *std::min_element(out.mean_ranks.begin(), out.mean_ranks.end());
    for (double r : out.mean_ranks) out.normalized.push_back(r / best);
    out.order.resize(k);
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](std::size_t a, std::size_t b) { return out.mean_ranks[a] < out.mean_ranks[b]; });
    return out;
}

FriedmanResult friedman_ranks(const ResultMatrix& matrix) {
    matrix.validate();
    return friedman_ranks(matrix.values);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("wilcoxon_signed_rank: samples differ in length");
    std::vector<double> d;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        if (!std::isfinite(diff)) throw std::invalid_argument("wilcoxon_signed_rank: non-finite difference");
        if (diff != 0.0) d.push_back(diff);
    }
    WilcoxonResult out;
    out.n = d.size();
    if (d.empty()) {
        out.degenerate = true;
        return out;
    }
    if (d.size() < 5) throw std::invalid_argument("wilcoxon_signed_rank needs at least 5 nonzero differences");

    std::vector<double> mag(d.size());
    std::transform(d.begin(), d.end(), mag.begin(), [](double v) { return std::abs(v); });
    const auto ranks = rank_row(mag);
    for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0.0 ? out.w_plus : out.w_minus) += ranks[i];
    const double n = static_cast<double>(d.size());
    const double w = std::min(out.w_plus, out.w_minus);

    if (d.size() <= kExactWilcoxonLimit) {
        // Subset-sum counts over doubled ranks, which are always integers.
        out.exact = true;
        std::vector<int> doubled(ranks.size());
        std::transform(ranks.begin(), ranks.end(), doubled.begin(), [](double r) { return static_cast<int>(std::lround(2.0 * r)); });
        const int total = std::accumulate(doubled.begin(), doubled.end(), 0);
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        for (int r : doubled) {
            for (int s = total; s >= r; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
        }
        const int limit = static_cast<int>(std::lround(2.0 * w));
        double tail = 0.0;
        for (int s = 0; s <= limit; ++s) tail += count[static_cast<std::size_t>(s)];
        out.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(d.size())));
        return out;
    }

    const double mean = n * (n + 1.0) / 4.0;
    double tie_term = 0.0;
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(out.w_plus - mean) - 0.5) / std::sqrt(var);
    out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return out;
}

}  // namespace lsgo::stats
