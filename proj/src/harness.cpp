#include "lsgo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "lsgo/cc_framework.hpp"
#include "lsgo/eade.hpp"
#include "lsgo/mlshade_spa.hpp"

namespace fs = std::filesystem;

namespace lsgo::harness {

namespace {

template <class T>
std::vector<T> as_list(const json& v) {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void ExperimentConfig::validate() const {
    if (grid.empty()) throw std::invalid_argument("config: grid is empty");
    for (std::size_t b = 0; b < grid.size(); ++b) {
        const auto& block = grid[b];
        const std::string where = "config: grid block " + std::to_string(b);
        if (block.sensors.empty() || block.epsilon.empty() || block.rho.empty()) {
            throw std::invalid_argument(where + " needs sensors, epsilon and rho");
        }
        for (std::size_t l : block.sensors) {
            if (l == 0) throw std::invalid_argument(where + ": sensors must be positive");
            if (!population.count(l)) {
                throw std::invalid_argument(where + ": no population size for L=" + std::to_string(l));
            }
        }
        for (double e : block.epsilon) {
            if (!(e > 0.0 && e < 0.5)) throw std::invalid_argument(where + ": epsilon must lie in (0, 0.5)");
        }
        for (double r : block.rho) {
            if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument(where + ": rho must lie in [0, 1)");
        }
    }
    if (algorithms.empty()) throw std::invalid_argument("config: no algorithms");
    for (const auto& a : algorithms) {
        if (!is_algorithm(a.name)) throw std::invalid_argument("config: unknown algorithm '" + a.name + "'");
    }
    if (trials < 1) throw std::invalid_argument("config: trials must be at least 1");
    if (max_evals < 1) throw std::invalid_argument("config: max_evals must be positive");
    if (trace_step < 1) throw std::invalid_argument("config: trace_step must be positive");
    if (!(upper > lower)) throw std::invalid_argument("config: upper bound must exceed lower bound");
    for (const auto& [l, np] : population) {
        if (np < 4) throw std::invalid_argument("config: population for L=" + std::to_string(l) + " is below 4");
    }
}

ExperimentConfig ExperimentConfig::from_json(const json& doc, const fs::path& base) {
    static const char* known[] = {"grid", "snr_db", "sigma_v2", "sigma_w2", "spacing", "prior_ratio", "lower",
                                  "upper", "algorithms", "trials", "max_evals", "population", "base_seed",
                                  "output_dir", "workers", "trace_step"};
    for (const auto& [key, _] : doc.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    ExperimentConfig c;
    try {
        for (const auto& b : doc.at("grid")) {
            c.grid.push_back(GridBlock{as_list<std::size_t>(b.at("sensors")), as_list<double>(b.at("epsilon")),
                                       as_list<double>(b.at("rho"))});
        }
        c.snr_db = doc.value("snr_db", c.snr_db);
        c.sigma_v2 = doc.value("sigma_v2", c.sigma_v2);
        c.sigma_w2 = doc.value("sigma_w2", c.sigma_w2);
        c.spacing = doc.value("spacing", c.spacing);
        c.prior_ratio = doc.value("prior_ratio", c.prior_ratio);
        c.lower = doc.value("lower", c.lower);
        c.upper = doc.value("upper", c.upper);
        for (const auto& a : doc.at("algorithms")) {
            if (a.is_string()) {
                c.algorithms.push_back({a.get<std::string>()});
            } else {
                c.algorithms.push_back({a.at("name").get<std::string>(), a.value("overrides", json::object())});
            }
        }
        c.trials = doc.value("trials", c.trials);
        c.max_evals = doc.value("max_evals", c.max_evals);
        if (doc.contains("population")) {
            const auto& p = doc.at("population");
            if (p.is_number()) {
                for (const auto& b : c.grid) {
                    for (std::size_t l : b.sensors) c.population[l] = p.get<std::size_t>();
                }
            } else {
                for (const auto& [key, value] : p.items()) c.population[std::stoul(key)] = value.get<std::size_t>();
            }
        } else {
            for (const auto& b : c.grid) {
                for (std::size_t l : b.sensors) c.population[l] = 100;
            }
        }
        c.base_seed = doc.value("base_seed", c.base_seed);
        c.output_dir = doc.value("output_dir", c.output_dir.string());
        c.workers = doc.value("workers", c.workers);
        c.trace_step = doc.value("trace_step", c.trace_step);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    if (c.output_dir.is_relative() && !base.empty()) c.output_dir = base / c.output_dir;
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return from_json(doc, path.parent_path());
}

ExperimentConfig protocol_config(std::size_t trials) {
    ExperimentConfig c;
    const std::vector<double> eps{0.1, 0.05, 0.01, 0.001};
    c.grid.push_back({{300}, eps, {0.0, 0.01, 0.1, 0.5}});
    c.grid.push_back({{600, 800}, eps, {0.0}});
    c.population = {{300, 100}, {600, 250}, {800, 250}};
    for (const auto& n : algorithm_names()) c.algorithms.push_back({n});
    c.trials = trials;
    return c;
}

std::string case_id(std::size_t sensors, double rho, double epsilon) {
    return "L" + std::to_string(sensors) + "_rho" + format_g(rho) + "_eps" + format_g(epsilon);
}

std::vector<CaseSpec> expand_cases(const ExperimentConfig& config) {
    std::vector<CaseSpec> cases;
    for (const auto& block : config.grid) {
        for (std::size_t l : block.sensors) {
            for (double rho : block.rho) {
                for (double eps : block.epsilon) {
                    CaseSpec cs;
                    cs.index = cases.size();
                    cs.id = case_id(l, rho, eps);
                    cs.problem.num_sensors = l;
                    cs.problem.snr_db = config.snr_db;
                    cs.problem.correlation = rho;
                    cs.problem.spacing = config.spacing;
                    cs.problem.sigma_v2 = config.sigma_v2;
                    cs.problem.sigma_w2 = config.sigma_w2;
                    cs.problem.epsilon = eps;
                    cs.problem.prior_ratio = config.prior_ratio;
                    cs.problem.fading_seed = fading_seed(config.base_seed, l);
                    cs.population = config.population.at(l);
                    cases.push_back(std::move(cs));
                }
            }
        }
    }
    return cases;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

void fnv_u64(std::uint64_t& h, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    fnv_bytes(h, b, 8);
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t case_index, const std::string& algorithm,
                         std::size_t trial) {
    std::uint64_t h = kFnvOffset;
    fnv_u64(h, base_seed);
    fnv_u64(h, case_index);
    fnv_bytes(h, algorithm.data(), algorithm.size());
    fnv_u64(h, trial);
    return splitmix64(h);
}

std::uint64_t fading_seed(std::uint64_t base_seed, std::size_t sensors) {
    std::uint64_t h = kFnvOffset;
    fnv_u64(h, base_seed);
    fnv_bytes(h, "fading", 6);
    fnv_u64(h, sensors);
    return splitmix64(h);
}

const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names{"mlshade-spa", "dgsc-decc", "cbcc-rdg3", "eade"};
    return names;
}

bool is_algorithm(const std::string& name) {
    const auto& n = algorithm_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

namespace {

class Overrides {
public:
    Overrides(const std::string& algorithm, const json& doc) : algorithm_(algorithm), doc_(doc) {
        if (!doc_.is_object()) throw std::invalid_argument(algorithm + ": overrides must be an object");
    }

    template <class T>
    void apply(const char* key, T& target) {
        used_.push_back(key);
        if (!doc_.contains(key)) return;
        try {
            target = doc_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(algorithm_ + ": override '" + key + "': " + e.what());
        }
    }

    void finish() const {
        for (const auto& [key, _] : doc_.items()) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
                throw std::invalid_argument(algorithm_ + ": unknown override '" + key + "'");
            }
        }
    }

private:
    std::string algorithm_;
    const json& doc_;
    std::vector<std::string> used_;
};

}  // namespace

SolverResult run_algorithm(const AlgorithmSpec& spec, const Objective& objective, const Bounds& bounds,
                           std::int64_t max_evals, std::size_t population, Rng& rng) {
    Overrides o(spec.name, spec.overrides);
    if (spec.name == "eade") {
        eade::EadeConfig c;
        c.population = population;
        o.apply("population", c.population);
        o.apply("p_fraction", c.p_fraction);
        o.apply("learning_fraction", c.learning_fraction);
        o.apply("mixing_probability", c.mixing_probability);
        o.apply("f_lower", c.f_lower);
        o.apply("f_upper", c.f_upper);
        o.finish();
        return eade::run_eade(objective, bounds, max_evals, c, rng);
    }
    if (spec.name == "mlshade-spa") {
        mlshade::MlshadeSpaConfig c;
        c.initial_population = population;
        o.apply("initial_population", c.initial_population);
        o.apply("min_population", c.min_population);
        o.apply("memory_size", c.memory_size);
        o.apply("quota_floor", c.quota_floor);
        o.apply("cycle_generations", c.cycle_generations);
        o.apply("local_search_fraction", c.local_search_fraction);
        o.apply("group_count", c.group_count);
        o.finish();
        return mlshade::run_mlshade_spa(objective, bounds, max_evals, c, rng);
    }
    if (spec.name == "cbcc-rdg3") {
        cc::CbccRdg3Config c;
        c.iteration_population = population;
        std::string schedule = "contribution";
        o.apply("e_n", c.e_n);
        o.apply("e_s", c.e_s);
        o.apply("threshold_samples", c.threshold_samples);
        o.apply("sigma_fraction", c.cmaes.sigma_fraction);
        o.apply("generations_per_turn", c.cc.generations_per_turn);
        o.apply("schedule", schedule);
        o.finish();
        if (schedule == "round_robin") c.schedule = cc::ScheduleMode::round_robin;
        else if (schedule != "contribution") throw std::invalid_argument("cbcc-rdg3: unknown schedule '" + schedule + "'");
        return cc::run_cbcc_rdg3(objective, bounds, max_evals, c, rng);
    }
    if (spec.name == "dgsc-decc") {
        cc::DgscDeccConfig c;
        c.iteration_population = population;
        o.apply("group_count", c.group_count);
        o.apply("threshold_samples", c.threshold_samples);
        o.apply("subpopulation", c.sansde.subpopulation);
        o.apply("generations_per_turn", c.cc.generations_per_turn);
        o.finish();
        return cc::run_dgsc_decc(objective, bounds, max_evals, c, rng);
    }
    std::string valid;
    for (const auto& n : algorithm_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown algorithm '" + spec.name + "' (valid: " + valid + ")");
}

std::vector<double> sample_trace(const std::vector<TracePoint>& trace, std::int64_t max_evals, std::int64_t step) {
    if (step < 1) throw std::invalid_argument("trace step must be positive");
    std::vector<double> out;
    std::size_t k = 0;
    double current = std::numeric_limits<double>::quiet_NaN();
    for (std::int64_t c = step; c <= max_evals; c += step) {
        while (k < trace.size() && trace[k].evals <= c) current = trace[k++].best;
        out.push_back(current);
    }
    return out;
}

CellSummary summarize(const std::vector<TrialRecord>& records) {
    CellSummary s;
    s.trials = records.size();
    if (records.empty()) return s;
    std::vector<double> v;
    for (const auto& r : records) v.push_back(r.best_f);
    const double n = static_cast<double>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    s.feasible_rate = static_cast<double>(std::count_if(records.begin(), records.end(),
                                                        [](const TrialRecord& r) { return r.feasible; })) / n;
    return s;
}

stats::ResultMatrix ExperimentResult::means() const {
    stats::ResultMatrix m;
    m.algorithms = algorithms;
    m.cases = cases;
    for (const auto& row : cells) {
        std::vector<double> r;
        for (const auto& c : row) r.push_back(c.mean);
        m.values.push_back(std::move(r));
    }
    return m;
}

namespace {

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

void export_traces(const std::vector<TrialRecord>& records, const std::vector<std::string>& algorithms,
                   std::int64_t max_evals, std::int64_t step, const fs::path& path) {
    if (records.empty()) throw std::invalid_argument("export_traces: no records");
    const std::size_t rows = static_cast<std::size_t>(max_evals / step);
    std::vector<std::vector<double>> sums(algorithms.size(), std::vector<double>(rows, 0.0));
    std::vector<std::vector<std::size_t>> counts(algorithms.size(), std::vector<std::size_t>(rows, 0));
    for (const auto& r : records) {
        const auto it = std::find(algorithms.begin(), algorithms.end(), r.algorithm);
        if (it == algorithms.end()) continue;
        const auto a = static_cast<std::size_t>(it - algorithms.begin());
        const auto sampled = sample_trace(r.trace, max_evals, step);
        for (std::size_t k = 0; k < rows; ++k) {
            if (std::isnan(sampled[k])) continue;
            sums[a][k] += sampled[k];
            ++counts[a][k];
        }
    }
    auto out = open_output(path);
    out << "evals";
    for (const auto& a : algorithms) out << ',' << a;
    out << '\n';
    for (std::size_t k = 0; k < rows; ++k) {
        out << static_cast<std::int64_t>(k + 1) * step;
        for (std::size_t a = 0; a < algorithms.size(); ++a) {
            out << ',';
            if (counts[a][k] > 0) out << format_number(sums[a][k] / static_cast<double>(counts[a][k]));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::size_t effective_workers(std::size_t configured) {
    if (const char* env = std::getenv("LSGO_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, configured);
}

namespace {

struct Task {
    std::size_t case_pos;
    std::size_t algo_pos;
    std::size_t trial;
};

void write_cell(const fs::path& dir, const std::vector<TrialRecord>& cell) {
    make_dirs(dir);
    auto trials = open_output(dir / "trials.csv");
    trials << "trial,seed,best_f,feasible,evals\n";
    auto gains = open_output(dir / "best_gains.csv");
    for (const auto& r : cell) {
        trials << r.trial << ',' << r.seed << ',' << format_exact(r.best_f) << ',' << (r.feasible ? 1 : 0) << ','
               << r.evals << '\n';
        gains << r.trial;
        for (double g : r.best_gains) gains << ',' << format_exact(g);
        gains << '\n';
    }
    if (!trials || !gains) throw std::runtime_error("failed writing results in " + dir.string());
}

json cell_json(const CellSummary& s) {
    return json{{"mean", s.mean},       {"median", s.median},       {"std", s.stddev},
                {"min", s.min},         {"feasible_rate", s.feasible_rate}, {"trials", s.trials}};
}

json stats_json(const ExperimentResult& result) {
    json out = json::object();
    const auto m = result.means();
    if (m.values.size() >= 2 && m.algorithms.size() >= 2) {
        const auto f = stats::friedman_ranks(m);
        json ranks = json::object();
        for (std::size_t j = 0; j < m.algorithms.size(); ++j) {
            ranks[m.algorithms[j]] = json{{"mean_rank", f.mean_ranks[j]}, {"normalized", f.normalized[j]}};
        }
        out["friedman"] = ranks;
    } else {
        out["friedman"] = nullptr;
    }
    const auto ref_it = std::find(m.algorithms.begin(), m.algorithms.end(), "cbcc-rdg3");
    const std::size_t ref = ref_it == m.algorithms.end() ? 0 : static_cast<std::size_t>(ref_it - m.algorithms.begin());
    json tests = json::array();
    for (std::size_t j = 0; j < m.algorithms.size(); ++j) {
        if (j == ref) continue;
        json t{{"reference", m.algorithms[ref]}, {"other", m.algorithms[j]}};
        try {
            const auto x = m.column(ref);
            const auto y = m.column(j);
            const auto w = stats::wilcoxon_signed_rank(x, y);
            t["p_value"] = w.p_value;
            t["exact"] = w.exact;
            t["degenerate"] = w.degenerate;
        } catch (const std::invalid_argument&) {
            t["p_value"] = nullptr;
        }
        tests.push_back(t);
    }
    out["wilcoxon"] = tests;
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
    config.validate();
    const auto cases = expand_cases(config);
    const fs::path root = config.output_dir;
    make_dirs(root / "traces");

    std::vector<wsn::WsnInstance> instances;
    instances.reserve(cases.size());
    for (const auto& cs : cases) instances.emplace_back(cs.problem);

    ExperimentResult result;
    for (const auto& cs : cases) result.cases.push_back(cs.id);
    for (const auto& a : config.algorithms) result.algorithms.push_back(a.name);
    const std::size_t n_alg = config.algorithms.size();

    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        for (std::size_t a = 0; a < n_alg; ++a) {
            for (std::size_t t = 0; t < config.trials; ++t) tasks.push_back({c, a, t});
        }
    }
    std::vector<std::optional<TrialRecord>> slots(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mutex;
    std::condition_variable done;
    const Bounds bounds{config.lower, config.upper};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || stop.load()) return;
            const Task& task = tasks[i];
            const CaseSpec& cs = cases[task.case_pos];
            const AlgorithmSpec& spec = config.algorithms[task.algo_pos];
            try {
                const wsn::WsnInstance& instance = instances[task.case_pos];
                wsn::WsnObjective objective(instance);
                TrialRecord r;
                r.case_id = cs.id;
                r.algorithm = spec.name;
                r.trial = task.trial;
                r.seed = trial_seed(config.base_seed, cs.index, spec.name, task.trial);
                Rng rng(r.seed);
                SolverResult s = run_algorithm(spec, objective, bounds, config.max_evals, cs.population, rng);
                r.best_f = s.best_fitness;
                r.best_gains = std::move(s.best_position);
                r.feasible = !r.best_gains.empty() && wsn::is_feasible(instance, r.best_gains);
                r.evals = s.evaluations;
                const auto sampled = sample_trace(s.trace, config.max_evals, config.trace_step);
                for (std::size_t k = 0; k < sampled.size(); ++k) {
                    if (!std::isnan(sampled[k])) {
                        r.trace.push_back({static_cast<std::int64_t>(k + 1) * config.trace_step, sampled[k]});
                    }
                }
                std::lock_guard lock(mutex);
                slots[i] = std::move(r);
            } catch (...) {
                std::lock_guard lock(mutex);
                errors[i] = std::current_exception();
                stop = true;
            }
            done.notify_all();
        }
    };

    const std::size_t n_workers = std::min(effective_workers(config.workers), std::max<std::size_t>(1, tasks.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);

    std::exception_ptr failure;
    std::string failure_context;
    std::size_t cursor = 0;
    result.cells.assign(cases.size(), std::vector<CellSummary>(n_alg));
    std::vector<TrialRecord> case_records;
    try {
        for (std::size_t c = 0; c < cases.size() && !failure; ++c) {
            case_records.clear();
            for (std::size_t a = 0; a < n_alg && !failure; ++a) {
                std::vector<TrialRecord> cell;
                for (std::size_t t = 0; t < config.trials; ++t, ++cursor) {
                    std::unique_lock lock(mutex);
                    done.wait(lock, [&] { return slots[cursor].has_value() || stop.load(); });
                    if (!slots[cursor]) {
                        for (std::size_t k = 0; k < errors.size() && !failure; ++k) {
                            if (!errors[k]) continue;
                            failure = errors[k];
                            failure_context = cases[tasks[k].case_pos].id + "/" +
                                              config.algorithms[tasks[k].algo_pos].name + " trial " +
                                              std::to_string(tasks[k].trial);
                        }
                        break;
                    }
                    cell.push_back(std::move(*slots[cursor]));
                    slots[cursor].reset();
                }
                if (failure) break;
                write_cell(root / cases[c].id / config.algorithms[a].name, cell);
                result.cells[c][a] = summarize(cell);
                if (log) {
                    const auto& s = result.cells[c][a];
                    *log << cases[c].id << ' ' << config.algorithms[a].name << " mean=" << format_number(s.mean)
                         << " feasible=" << format_number(s.feasible_rate) << '\n';
                }
                for (auto& r : cell) case_records.push_back(std::move(r));
            }
            if (failure) break;
            export_traces(case_records, result.algorithms, config.max_evals, config.trace_step,
                          root / "traces" / (cases[c].id + ".csv"));
            for (auto& r : case_records) result.records.push_back(std::move(r));
        }
    } catch (...) {
        stop = true;
        for (auto& t : pool) t.join();
        throw;
    }
    for (auto& t : pool) t.join();
    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            throw std::runtime_error(failure_context + ": " + e.what());
        }
    }

    {
        auto out = open_output(root / "summary.csv");
        out << "case";
        for (const auto& a : result.algorithms) out << ',' << a;
        out << '\n';
        for (std::size_t c = 0; c < cases.size(); ++c) {
            out << cases[c].id;
            for (const auto& cell : result.cells[c]) out << ',' << format_number(cell.mean);
            out << '\n';
        }
        if (!out) throw std::runtime_error("failed writing summary.csv");
    }
    {
        json doc;
        doc["trials"] = config.trials;
        doc["max_evals"] = config.max_evals;
        doc["base_seed"] = config.base_seed;
        doc["algorithms"] = result.algorithms;
        json jc = json::array();
        for (std::size_t c = 0; c < cases.size(); ++c) {
            json row{{"id", cases[c].id},
                     {"sensors", cases[c].problem.num_sensors},
                     {"rho", cases[c].problem.correlation},
                     {"epsilon", cases[c].problem.epsilon},
                     {"population", cases[c].population}};
            json cells = json::object();
            for (std::size_t a = 0; a < n_alg; ++a) cells[result.algorithms[a]] = cell_json(result.cells[c][a]);
            row["results"] = cells;
            jc.push_back(row);
        }
        doc["cases"] = jc;
        doc["stats"] = stats_json(result);
        auto out = open_output(root / "summary.json");
        out << doc.dump(2) << '\n';
        if (!out) throw std::runtime_error("failed writing summary.json");
    }
    return result;
}

std::vector<ValidationRow> validate_monte_carlo(std::size_t configs, std::int64_t samples, std::uint64_t seed) {
    static const std::size_t sizes[] = {1, 5, 50};
    static const double rhos[] = {0.0, 0.5};
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ValidationRow> rows;
    for (std::size_t i = 0; i < configs; ++i) {
        wsn::WsnConfig c;
        c.num_sensors = sizes[i % 3];
        c.correlation = rhos[(i / 3) % 2];
        c.snr_db = 10.0 * u(rng);
        c.sigma_w2 = 0.5 + 1.5 * u(rng);
        c.fading_seed = rng();
        const wsn::WsnInstance instance(c);

        std::vector<double> shape(c.num_sensors);
        for (auto& g : shape) g = 0.2 + 0.8 * u(rng);
        auto pe_at = [&](double scale) {
            std::vector<double> g(shape);
            for (auto& x : g) x *= scale;
            return wsn::fusion_error_probability(instance, g);
        };
        const double floor = pe_at(1e3);
        const double target = floor + (0.1 + 0.8 * u(rng)) * (0.5 - floor);
        double lo = 0.0, hi = 1e3;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (pe_at(mid) > target ? lo : hi) = mid;
        }
        std::vector<double> g(shape);
        for (auto& x : g) x *= hi;

        ValidationRow row;
        row.sensors = c.num_sensors;
        row.rho = c.correlation;
        row.snr_db = c.snr_db;
        row.analytic = wsn::fusion_error_probability(instance, g);
        row.monte_carlo = wsn::monte_carlo_pe(instance, g, samples, rng).error_rate;
        row.sigma = std::sqrt(row.analytic * (1.0 - row.analytic) / static_cast<double>(samples));
        row.within = std::abs(row.monte_carlo - row.analytic) <= 3.0 * row.sigma;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace lsgo::harness
