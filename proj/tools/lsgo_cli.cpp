#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lsgo/harness.hpp"
#include "lsgo/stats.hpp"

using namespace lsgo;

namespace {

std::string valid_algorithms() {
    std::string s;
    for (const auto& n : harness::algorithm_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
}

int cmd_stats(const std::string& path) {
    const auto m = stats::read_result_matrix(path);
    const auto f = stats::friedman_ranks(m);
    std::printf("%-14s %10s %10s %6s\n", "algorithm", "mean_rank", "normalized", "order");
    for (std::size_t j = 0; j < m.algorithms.size(); ++j) {
        const auto pos = std::find(f.order.begin(), f.order.end(), j) - f.order.begin();
        std::printf("%-14s %10.2f %10.2f %6ld\n", m.algorithms[j].c_str(), f.mean_ranks[j], f.normalized[j],
                    static_cast<long>(pos + 1));
    }
    const auto it = std::find(m.algorithms.begin(), m.algorithms.end(), "cbcc-rdg3");
    const std::size_t ref = it == m.algorithms.end() ? 0 : static_cast<std::size_t>(it - m.algorithms.begin());
    std::printf("\nwilcoxon signed-rank, %s vs\n", m.algorithms[ref].c_str());
    for (std::size_t j = 0; j < m.algorithms.size(); ++j) {
        if (j == ref) continue;
        const auto x = m.column(ref), y = m.column(j);
        try {
            const auto w = stats::wilcoxon_signed_rank(x, y);
            std::printf("%-14s p=%.3e (%s, n=%zu, W+=%g, W-=%g)\n", m.algorithms[j].c_str(), w.p_value,
                        w.degenerate ? "degenerate" : (w.exact ? "exact" : "normal"), w.n, w.w_plus, w.w_minus);
        } catch (const std::invalid_argument& e) {
            std::printf("%-14s n/a (%s)\n", m.algorithms[j].c_str(), e.what());
        }
    }
    return 0;
}

int cmd_validate(std::size_t configs, std::int64_t samples, std::uint64_t seed) {
    const auto rows = harness::validate_monte_carlo(configs, samples, seed);
    std::size_t bad = 0;
    std::printf("%4s %5s %7s %12s %12s %10s %s\n", "L", "rho", "snr_db", "analytic", "monte_carlo", "z", "ok");
    for (const auto& r : rows) {
        const double z = r.sigma > 0 ? (r.monte_carlo - r.analytic) / r.sigma : 0.0;
        std::printf("%4zu %5.2f %7.2f %12.6f %12.6f %10.3f %s\n", r.sensors, r.rho, r.snr_db, r.analytic,
                    r.monte_carlo, z, r.within ? "yes" : "NO");
        if (!r.within) ++bad;
    }
    std::printf("%zu/%zu within 3 sigma\n", rows.size() - bad, rows.size());
    return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large-scale optimizers for sensor network power allocation"};
    app.require_subcommand(1);

    std::string config_path;
    std::size_t run_workers = 0;
    std::string run_out;
    auto* run = app.add_subcommand("run", "run a full experiment from a JSON config");
    run->add_option("config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("--workers", run_workers, "worker threads (overrides the config)");
    run->add_option("--out", run_out, "output directory (overrides the config)");

    std::size_t sensors = 0;
    double epsilon = 0.1, rho = 0.0, snr_db = 10.0, sigma_w2 = 1.0, spacing = 1.0;
    std::string algo;
    std::size_t trials = 1, population = 100, case_workers = 1;
    std::uint64_t seed = 1;
    std::int64_t max_evals = 60000;
    std::string case_out = "results";
    auto* one = app.add_subcommand("case", "run one problem case");
    one->add_option("--sensors", sensors, "number of sensors L")->required();
    one->add_option("--epsilon", epsilon, "fusion error threshold")->required();
    one->add_option("--rho", rho, "correlation factor")->required();
    one->add_option("--algo", algo, "algorithm: " + valid_algorithms())->required();
    one->add_option("--trials", trials, "independent trials");
    one->add_option("--seed", seed, "base seed");
    one->add_option("--max-evals", max_evals, "evaluation budget per trial");
    one->add_option("--population", population, "population size");
    one->add_option("--snr-db", snr_db, "observation SNR in dB");
    one->add_option("--sigma-w2", sigma_w2, "receiver noise variance");
    one->add_option("--spacing", spacing, "sensor spacing d");
    one->add_option("--workers", case_workers, "worker threads");
    one->add_option("--out", case_out, "output directory");

    std::string stats_path;
    auto* st = app.add_subcommand("stats", "Friedman ranks and Wilcoxon tests from a result matrix");
    st->add_option("file", stats_path, "CSV with header case,<algorithms...>")->required()->check(CLI::ExistingFile);

    std::size_t v_configs = 20;
    std::int64_t v_samples = 1000000;
    std::uint64_t v_seed = 2024;
    auto* val = app.add_subcommand("validate", "check the analytic error probability against Monte Carlo");
    val->add_option("--configs", v_configs, "random configurations");
    val->add_option("--samples", v_samples, "Monte Carlo samples per configuration");
    val->add_option("--seed", v_seed, "seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto cfg = harness::ExperimentConfig::load(config_path);
            if (run_workers > 0) cfg.workers = run_workers;
            if (!run_out.empty()) cfg.output_dir = run_out;
            harness::run_experiment(cfg, &std::cerr);
            std::cout << "results written to " << cfg.output_dir.string() << '\n';
            return 0;
        }
        if (*one) {
            if (!harness::is_algorithm(algo)) {
                std::cerr << "unknown algorithm '" << algo << "'; valid names: " << valid_algorithms() << '\n';
                return 2;
            }
            harness::ExperimentConfig cfg;
            cfg.grid.push_back({{sensors}, {epsilon}, {rho}});
            cfg.snr_db = snr_db;
            cfg.sigma_w2 = sigma_w2;
            cfg.spacing = spacing;
            cfg.algorithms.push_back({algo});
            cfg.trials = trials;
            cfg.max_evals = max_evals;
            cfg.population[sensors] = population;
            cfg.base_seed = seed;
            cfg.output_dir = case_out;
            cfg.workers = case_workers;
            const auto result = harness::run_experiment(cfg, &std::cerr);
            for (const auto& r : result.records) {
                std::printf("%s %s trial=%zu best_f=%.10g feasible=%d evals=%lld\n", r.case_id.c_str(),
                            r.algorithm.c_str(), r.trial, r.best_f, r.feasible ? 1 : 0,
                            static_cast<long long>(r.evals));
            }
            return 0;
        }
        if (*st) return cmd_stats(stats_path);
        if (*val) return cmd_validate(v_configs, v_samples, v_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
