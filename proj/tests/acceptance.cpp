// Acceptance checks; run with --criterion N or without arguments for all.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsgo/cc_framework.hpp"
#include "lsgo/decomposition.hpp"
#include "lsgo/harness.hpp"
#include "lsgo/stats.hpp"
#include "lsgo/wsn_problem.hpp"

using namespace lsgo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

const char* kAlgNames[] = {"mlshade-spa", "dgsc-decc", "cbcc-rdg3", "eade"};

Outcome friedman_replication() {
    auto m = stats::read_result_matrix(LSGO_DATA_DIR "/reference_means.csv");
    auto r = stats::friedman_ranks(m);
    const double ranks[] = {1.75, 2.96, 1.33, 3.96};
    const double norm[] = {1.31, 2.22, 1.00, 2.97};
    bool ok = m.values.size() == 24 && m.algorithms.size() == 4;
    std::string d;
    for (std::size_t j = 0; j < 4 && ok; ++j) {
        ok &= m.algorithms[j] == kAlgNames[j];
        ok &= std::abs(r.mean_ranks[j] - ranks[j]) <= 0.005;
        ok &= std::abs(r.normalized[j] - norm[j]) <= 0.01;
        d += std::string(j ? ", " : "") + m.algorithms[j] + " " + fmt("%.3f", r.mean_ranks[j]) + "/" +
             fmt("%.3f", r.normalized[j]);
    }
    return {ok, d};
}

Outcome wilcoxon_agreement() {
    auto m = stats::read_result_matrix(LSGO_DATA_DIR "/reference_means.csv");
    const auto ref = m.column(2);
    const std::size_t others[] = {0, 1, 3};
    const double reference[] = {3.426e-2, 4.0e-5, 7.0e-6};
    bool ok = true;
    std::string d;
    for (int k = 0; k < 3; ++k) {
        const auto w = stats::wilcoxon_signed_rank(ref, m.column(others[k]));
        const double ratio = std::max(w.p_value / reference[k], reference[k] / w.p_value);
        const bool sig = w.p_value <= 0.05;
        const bool close = ratio <= 3.0;
        ok &= sig && close;
        d += std::string(k ? "; " : "") + "vs " + m.algorithms[others[k]] + " p=" + fmt("%.4g", w.p_value) +
             " (reference " + fmt("%.4g", reference[k]) + (sig ? ", significant" : ", not significant") +
             (close ? ", within 3x)" : ", ratio " + fmt("%.3g", ratio) + ")");
    }
    return {ok, d};
}

Outcome objective_correctness() {
    const auto rows = harness::validate_monte_carlo(20, 1000000, 2024);
    std::size_t within = 0;
    double worst = 0.0;
    for (const auto& r : rows) {
        within += r.within;
        worst = std::max(worst, std::abs(r.monte_carlo - r.analytic) / r.sigma);
    }

    // uncorrelated sensors: both solve paths against the per-sensor sum
    double max_err = 0.0;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (std::size_t L : {1u, 5u, 50u, 300u}) {
        wsn::WsnConfig c;
        c.num_sensors = L;
        c.fading_seed = L;
        wsn::WsnInstance inst(c);
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<double> g(L);
            for (auto& x : g) x = u(rng);
            double sum = 0.0;
            for (std::size_t k = 0; k < L; ++k) {
                const double a2 = std::pow(inst.fading().h[k] * g[k], 2);
                sum += c.signal_power() * a2 / (a2 * c.sigma_v2 + c.sigma_w2);
            }
            const double closed = wsn::q_function(0.5 * std::sqrt(sum));
            for (auto path : {wsn::SolvePath::dense, wsn::SolvePath::structured})
                max_err = std::max(max_err, std::abs(wsn::fusion_error_probability(inst, g, path) - closed));
        }
    }
    const bool ok = within == rows.size() && rows.size() == 20 && max_err <= 1e-10;
    return {ok, std::to_string(within) + "/" + std::to_string(rows.size()) + " configurations within 3 sigma (worst " +
                    fmt("%.2f", worst) + " sigma); closed-form max error " + fmt("%.2g", max_err)};
}

struct TrialOutcome {
    double power;
    bool feasible;
};

TrialOutcome solve(const wsn::WsnInstance& inst, const std::string& algo, std::uint64_t seed, std::size_t case_index,
                   std::size_t trial, std::size_t population) {
    wsn::WsnObjective obj(inst);
    Rng rng(harness::trial_seed(seed, case_index, algo, trial));
    auto r = harness::run_algorithm({algo}, obj, Bounds{0.0, 15.0}, 60000, population, rng);
    return {wsn::total_power(r.best_position), wsn::is_feasible(inst, r.best_position, 1e-6)};
}

Outcome desk_scale() {
    wsn::WsnConfig c;
    c.num_sensors = 300;
    c.correlation = 0.0;
    c.epsilon = 0.1;
    c.fading_seed = harness::fading_seed(1, 300);
    wsn::WsnInstance inst(c);
    const double cstar = wsn::uniform_feasible_gain(inst);
    const double baseline = 300.0 * cstar * cstar;

    std::string d = "baseline " + fmt("%.4g", baseline);
    double means[3] = {0, 0, 0};
    int good[3] = {0, 0, 0};
    const char* algos[] = {"mlshade-spa", "cbcc-rdg3", "eade"};
    for (int a = 0; a < 3; ++a) {
        for (std::size_t t = 0; t < 5; ++t) {
            auto o = solve(inst, algos[a], 1, 0, t, 100);
            means[a] += o.power / 5.0;
            good[a] += o.feasible && o.power < 10.0 * baseline;
        }
        d += std::string("; ") + algos[a] + " mean " + fmt("%.4g", means[a]) + " ok " + std::to_string(good[a]) + "/5";
    }
    const bool ok = good[0] >= 4 && good[1] >= 4 && 10.0 * means[0] <= means[2] && 10.0 * means[1] <= means[2];
    return {ok, d};
}

Outcome monotone_landscape() {
    const double eps[] = {0.1, 0.05, 0.01, 0.001};
    std::size_t checks = 0, violations = 0;
    std::string d;
    for (const char* algo : kAlgNames) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            double prev = 0.0;
            for (double e : eps) {
                wsn::WsnConfig c;
                c.num_sensors = 50;
                c.epsilon = e;
                c.fading_seed = harness::fading_seed(seed, 50);
                wsn::WsnInstance inst(c);
                auto o = solve(inst, algo, seed, 0, 0, 100);
                const double best = o.feasible ? o.power : std::numeric_limits<double>::infinity();
                ++checks;
                if (best < prev) {
                    ++violations;
                    d += std::string(algo) + " seed " + std::to_string(seed) + " eps " + fmt("%g", e) + ": " +
                         fmt("%.5g", best) + " < " + fmt("%.5g", prev) + "; ";
                }
                prev = best;
            }
        }
    }
    d += std::to_string(checks - violations) + "/" + std::to_string(checks) + " steps nondecreasing";
    return {violations == 0, d};
}

double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double pair_products(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); i += 2) s += x[i] * x[i + 1];
    return s;
}

double rosenbrock(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
    return s;
}

Outcome decomposition_correctness() {
    using decomp::Group;
    const std::size_t D = 40;
    const Bounds b{0.0, 15.0};
    Group all(D);
    for (std::size_t i = 0; i < D; ++i) all[i] = i;
    std::vector<Group> singles, pairs;
    for (std::size_t i = 0; i < D; ++i) singles.push_back({i});
    for (std::size_t i = 0; i < D; i += 2) pairs.push_back({i, i + 1});

    struct Case {
        const char* name;
        double (*fn)(std::span<const double>);
        std::vector<Group> rdg;
        std::vector<Group> rdg3;  // e_n = 50, e_s = 10
    };
    const Case cases[] = {
        {"sphere", sphere, singles, decomp::pack_groups(all, 10)},
        {"pair-products", pair_products, pairs, pairs},
        {"rosenbrock", rosenbrock, {all}, {all}},
    };

    // misplacements: variables whose group differs from the expected one
    auto misplaced = [&](const std::vector<Group>& got, const std::vector<Group>& want) {
        std::vector<const Group*> of_got(D, nullptr), of_want(D, nullptr);
        for (const auto& g : got)
            for (auto i : g) of_got.at(i) = &g;
        for (const auto& g : want)
            for (auto i : g) of_want.at(i) = &g;
        std::size_t n = 0;
        for (std::size_t i = 0; i < D; ++i) n += !of_got[i] || *of_got[i] != *of_want[i];
        return n;
    };

    bool ok = true;
    std::string d;
    Rng rng(5);
    for (const auto& c : cases) {
        FunctionObjective f(D, c.fn);
        Evaluator e1(f, 1000000), e2(f, 1000000);
        const double t = decomp::adaptive_threshold(e1, b, rng);
        auto probe = decomp::InteractionProbe::at_lower_bound(D, b, t);
        auto r1 = decomp::rdg_group(e1, probe);
        auto r3 = decomp::rdg3_group(e2, probe, 50, 10);
        const auto m1 = misplaced(r1.groups, c.rdg), m3 = misplaced(r3.groups, c.rdg3);
        ok &= m1 == 0 && m3 == 0;
        d += std::string(c.name) + " rdg " + std::to_string(m1) + "/rdg3 " + std::to_string(m3) + " misplaced; ";
    }
    FunctionObjective f(D, pair_products);
    Evaluator ev(f, 1000000);
    auto probe = decomp::InteractionProbe::at_lower_bound(D, b, decomp::adaptive_threshold(ev, b, rng));
    auto g = decomp::dgsc_group(ev, probe, D / 2, rng);
    const auto md = misplaced(g.groups, pairs);
    ok &= md == 0 && g.size() == D / 2;
    d += "dgsc k=" + std::to_string(D / 2) + " " + std::to_string(md) + " misplaced";
    return {ok, d};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "lsgo_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "config.json");
        cfg << R"({
  "grid": [{"sensors": [40], "epsilon": [0.1, 0.01], "rho": [0, 0.5]}],
  "algorithms": ["mlshade-spa", "dgsc-decc", "cbcc-rdg3", "eade"],
  "trials": 2, "max_evals": 6000, "population": 30, "trace_step": 500
})";
    }
    auto run = [&](int workers, const char* out) {
        const std::string cmd = std::string("\"") + LSGO_CLI_PATH + "\" run \"" + (root / "config.json").string() +
                                "\" --workers " + std::to_string(workers) + " --out \"" + (root / out).string() +
                                "\" > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const int s1 = run(1, "a"), s2 = run(1, "b"), s3 = run(4, "c");
    const auto a = slurp(root / "a" / "summary.csv");
    const auto b = slurp(root / "b" / "summary.csv");
    const auto c = slurp(root / "c" / "summary.csv");
    const bool ok = s1 == 0 && s2 == 0 && s3 == 0 && !a.empty() && a == b && a == c;
    std::string d = "exit codes " + std::to_string(s1) + "/" + std::to_string(s2) + "/" + std::to_string(s3) + "; " +
                    std::to_string(a.size()) + " bytes; repeat " + (a == b ? "identical" : "differs") +
                    "; 4 workers " + (a == c ? "identical" : "differs");
    fs::remove_all(root);
    return {ok, d};
}

class CountingObjective final : public Objective {
public:
    explicit CountingObjective(const Objective& inner) : inner_(inner) {}
    std::size_t dimension() const override { return inner_.dimension(); }
    double evaluate(std::span<const double> x, std::int64_t it) const override {
        ++calls;
        return inner_.evaluate(x, it);
    }
    mutable std::int64_t calls = 0;

private:
    const Objective& inner_;
};

Outcome budget_discipline() {
    bool ok = true;
    std::string d;
    for (std::size_t L : {300u, 800u}) {
        wsn::WsnConfig c;
        c.num_sensors = L;
        c.epsilon = 0.01;
        c.fading_seed = harness::fading_seed(1, L);
        wsn::WsnInstance inst(c);
        wsn::WsnObjective obj(inst);
        for (const char* algo : kAlgNames) {
            CountingObjective counting(obj);
            Rng rng(harness::trial_seed(1, L, algo, 0));
            auto r = harness::run_algorithm({algo}, counting, Bounds{0.0, 15.0}, 60000, L == 300 ? 100 : 250, rng);
            const bool good = counting.calls == r.evaluations && r.evaluations <= 60000 &&
                              (r.trace.empty() || r.trace.back().evals <= r.evaluations);
            ok &= good;
            d += std::string(algo) + "@" + std::to_string(L) + " " + std::to_string(counting.calls) + "/" +
                 std::to_string(r.evaluations) + (good ? "" : " MISMATCH") + "; ";
        }
    }
    d.resize(d.size() - 2);
    return {ok, d};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"Friedman ranks match the reference table", friedman_replication},
        {"Wilcoxon p-values agree with the reference table", wilcoxon_agreement},
        {"analytic error probability matches Monte Carlo", objective_correctness},
        {"desk-scale optimization at L=300", desk_scale},
        {"best feasible power grows as epsilon tightens", monotone_landscape},
        {"decomposition recovers known structure", decomposition_correctness},
        {"run output is deterministic across worker counts", determinism},
        {"objective calls equal recorded evaluations", budget_discipline},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && static_cast<std::size_t>(only) != k + 1) continue;
        Outcome o{false, ""};
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %zu %s: %s | %s\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
