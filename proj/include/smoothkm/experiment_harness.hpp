#pragma once

// Parameter sweeps over (n, k, d, σ) with `trials` perturbed instances per
// cell. Each trial's seed is derived from the base seed and the cell
// parameters alone, so cells are independent of execution order.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothkm/lloyd.hpp"
#include "smoothkm/mc_oracles.hpp"
#include "smoothkm/parallel.hpp"
#include "smoothkm/perturbation.hpp"
#include "smoothkm/trace_io.hpp"

namespace smoothkm {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct SweepConfig {
    std::vector<std::size_t> n_grid{100};
    std::vector<std::size_t> k_grid{3};
    std::vector<std::size_t> d_grid{2};
    std::vector<double> sigma_grid{0.1};
    std::size_t trials = 10;
    MeanGenerator means = MeanGenerator::UniformGrid;
    std::optional<PointSet> means_points;  // for MeanGenerator::FromFile
    InitMethod init = InitMethod::UniformPoints;
    std::size_t max_iterations = 1'000'000;
    std::uint64_t base_seed = 1;
    std::string output_path;
    std::optional<std::string> trace_dir;
    std::size_t threads = 1;

    void validate() const {
        if (n_grid.empty() || k_grid.empty() || d_grid.empty() || sigma_grid.empty())
            throw Error(Errc::InvalidArgument, "every grid must be non-empty");
        if (trials < 1) throw Error(Errc::InvalidArgument, "trials must be >= 1");
        for (std::size_t n : n_grid)
            for (std::size_t k : k_grid)
                if (k > n || k < 1)
                    throw Error(Errc::InvalidArgument, "cell with k=" + std::to_string(k) + " n=" + std::to_string(n));
        for (std::size_t d : d_grid)
            if (d < 1) throw Error(Errc::InvalidArgument, "d must be >= 1");
        for (double s : sigma_grid)
            if (!(s > 0.0)) throw Error(Errc::InvalidSigma, "grid sigma must be positive");
        if (means == MeanGenerator::FromFile) {
            if (!means_points) throw Error(Errc::MissingField, "means_file");
            for (std::size_t n : n_grid)
                if (n != means_points->size()) throw Error(Errc::InvalidArgument, "n grid must match means file");
            for (std::size_t d : d_grid)
                if (d != means_points->dim()) throw Error(Errc::InvalidArgument, "d grid must match means file");
        }
    }
};

inline std::uint64_t cell_seed(std::uint64_t base, std::size_t n, std::size_t k, std::size_t d, double sigma) {
    return derive_seed(base, n, k, d, std::bit_cast<std::uint64_t>(sigma));
}

inline std::uint64_t trial_seed(std::uint64_t base, std::size_t n, std::size_t k, std::size_t d, double sigma,
                                std::size_t trial) {
    return derive_seed(base, n, k, d, std::bit_cast<std::uint64_t>(sigma), trial);
}

struct AggregateStats {
    std::size_t runs = 0;
    double iters_mean = 0.0;
    double iters_median = 0.0;
    std::size_t iters_max = 0;
    std::size_t iters_min = 0;
    double final_potential_mean = 0.0;
    double frac_capped = 0.0;
    double max_epoch_mean = 0.0;
    double min_delta_mean = std::numeric_limits<double>::quiet_NaN();  // NaN when no run has Δ
};

/// Statistics over traces; a trace's iteration count is its record count.
inline AggregateStats aggregate(const std::vector<RunTrace>& traces) {
    if (traces.empty()) throw Error(Errc::InvalidArgument, "aggregate of no traces");
    AggregateStats s;
    s.runs = traces.size();
    std::vector<std::size_t> iters;
    double pot = 0.0, epochs = 0.0, delta_sum = 0.0;
    std::size_t capped = 0, delta_runs = 0;
    for (const auto& t : traces) {
        iters.push_back(t.iterations());
        pot += t.final_potential();
        if (t.termination == Termination::MaxIterations) ++capped;
        std::size_t longest = 0;
        for (const auto& e : detect_epochs(t)) longest = std::max(longest, e.length());
        epochs += static_cast<double>(longest);
        if (const auto m = run_min_center_distance(t)) {
            delta_sum += *m;
            ++delta_runs;
        }
    }
    const double r = static_cast<double>(s.runs);
    std::sort(iters.begin(), iters.end());
    s.iters_mean = static_cast<double>(std::accumulate(iters.begin(), iters.end(), std::size_t{0})) / r;
    const std::size_t mid = iters.size() / 2;
    s.iters_median = iters.size() % 2 ? static_cast<double>(iters[mid])
                                      : (static_cast<double>(iters[mid - 1]) + static_cast<double>(iters[mid])) / 2.0;
    s.iters_min = iters.front();
    s.iters_max = iters.back();
    s.final_potential_mean = pot / r;
    s.frac_capped = static_cast<double>(capped) / r;
    s.max_epoch_mean = epochs / r;
    if (delta_runs > 0) s.min_delta_mean = delta_sum / static_cast<double>(delta_runs);
    return s;
}

struct SweepRow {
    std::size_t n = 0, k = 0, d = 0;
    double sigma = 0.0;
    std::size_t trials = 0;
    AggregateStats stats;
    std::uint64_t seed = 0;
    std::vector<std::string> diagnostics;  // non-empty when the cell was aborted

    bool aborted() const { return !diagnostics.empty(); }
};

struct SweepResult {
    std::vector<SweepRow> rows;

    bool ok() const {
        return std::none_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.aborted(); });
    }
};

inline constexpr const char* kSweepHeader =
    "n,k,d,sigma,trials,iters_mean,iters_median,iters_max,iters_min,final_potential_mean,frac_capped,"
    "max_epoch_mean,min_delta_mean,seed";

inline std::string trace_file_name(std::size_t n, std::size_t k, std::size_t d, double sigma, std::size_t trial) {
    return "n" + std::to_string(n) + "_k" + std::to_string(k) + "_d" + std::to_string(d) + "_s" +
           format_double(sigma) + "_t" + std::to_string(trial) + ".jsonl";
}

/// One cell: `trials` independent perturbed runs, each checked against the
/// per-run invariants. Any violation aborts the cell.
inline SweepRow run_cell(const SweepConfig& cfg, std::size_t n, std::size_t k, std::size_t d, double sigma) {
    SweepRow row{n, k, d, sigma, cfg.trials, {}, cell_seed(cfg.base_seed, n, k, d, sigma), {}};
    std::vector<RunTrace> traces(cfg.trials);
    std::vector<std::vector<std::string>> problems(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        const std::uint64_t s = trial_seed(cfg.base_seed, n, k, d, sigma, t);
        const PointSet means = cfg.means == MeanGenerator::FromFile ? *cfg.means_points : make_means(cfg.means, n, d, s);
        const Instance inst = perturb(means, sigma, s);
        traces[t] = run(inst, InitSpec{cfg.init, k, s, {}}, RunOptions{cfg.max_iterations, false});
        const auto rep = check_run_invariants(traces[t]);
        for (const auto& v : rep.violations) problems[t].push_back("trial " + std::to_string(t) + ": " + v);
    });
    for (const auto& p : problems) row.diagnostics.insert(row.diagnostics.end(), p.begin(), p.end());
    if (row.aborted()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.stats = AggregateStats{0, nan, nan, 0, 0, nan, nan, nan, nan};
        return row;
    }
    if (cfg.trace_dir) {
        std::filesystem::create_directories(*cfg.trace_dir);
        for (std::size_t t = 0; t < cfg.trials; ++t)
            write_trace_file((std::filesystem::path(*cfg.trace_dir) / trace_file_name(n, k, d, sigma, t)).string(),
                             traces[t]);
    }
    row.stats = aggregate(traces);
    return row;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& res) {
    os << kSweepHeader << '\n';
    for (const auto& r : res.rows) {
        const auto& s = r.stats;
        os << r.n << ',' << r.k << ',' << r.d << ',' << format_double(r.sigma) << ',' << r.trials << ','
           << format_double(s.iters_mean) << ',' << format_double(s.iters_median) << ',' << s.iters_max << ','
           << s.iters_min << ',' << format_double(s.final_potential_mean) << ',' << format_double(s.frac_capped)
           << ',' << format_double(s.max_epoch_mean) << ',' << format_double(s.min_delta_mean) << ',' << r.seed
           << '\n';
    }
}

inline SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    SweepResult res;
    for (std::size_t n : cfg.n_grid)
        for (std::size_t k : cfg.k_grid)
            for (std::size_t d : cfg.d_grid)
                for (double sigma : cfg.sigma_grid) {
                    try {
                        res.rows.push_back(run_cell(cfg, n, k, d, sigma));
                    } catch (const std::exception& e) {
                        throw Error(Errc::Io, "cell n=" + std::to_string(n) + " k=" + std::to_string(k) +
                                                  " d=" + std::to_string(d) + " sigma=" + format_double(sigma) +
                                                  ": " + e.what());
                    }
                }
    if (!cfg.output_path.empty()) {
        std::ofstream os(cfg.output_path, std::ios::binary);
        if (!os) throw Error(Errc::Io, "cannot open " + cfg.output_path + " for writing");
        write_sweep_csv(os, res);
        if (!os) throw Error(Errc::Io, "write failed for " + cfg.output_path);
    }
    return res;
}

// ---- config files ------------------------------------------------------------
//
// {"schema": 1, "n": [..], "k": [..], "d": [..], "sigma": [..], "trials": T,
//  "means": "uniform-grid" | "uniform-random" | "from-file", "means_file": path,
//  "init": "uniform-points" | "first-k", "max_iterations": M, "seed": S,
//  "output": path, "trace_dir": path}

inline constexpr int kSweepSchema = 1;

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    if (!j.contains("schema")) throw Error(Errc::MissingField, "schema");
    if (j.at("schema").get<int>() != kSweepSchema) throw Error(Errc::Parse, "unsupported sweep schema");
    SweepConfig c;
    try {
        auto need = [&](const char* key) -> const nlohmann::json& {
            if (!j.contains(key)) throw Error(Errc::MissingField, key);
            return j.at(key);
        };
        c.n_grid = need("n").get<std::vector<std::size_t>>();
        c.k_grid = need("k").get<std::vector<std::size_t>>();
        c.d_grid = need("d").get<std::vector<std::size_t>>();
        c.sigma_grid = need("sigma").get<std::vector<double>>();
        c.trials = need("trials").get<std::size_t>();
        c.means = parse_mean_generator(j.value("means", std::string("uniform-grid")));
        if (c.means == MeanGenerator::FromFile) {
            const auto doc = read_json_file(need("means_file").get<std::string>());
            if (!doc.contains("means")) throw Error(Errc::MissingField, "means (in means_file)");
            c.means_points = PointSet::from_rows(doc.at("means").get<std::vector<Point>>());
        }
        c.init = parse_init_method(j.value("init", std::string("uniform-points")));
        if (c.init == InitMethod::Explicit) throw Error(Errc::Unsupported, "explicit init in sweeps");
        c.max_iterations = j.value("max_iterations", std::size_t{1'000'000});
        c.base_seed = j.value("seed", std::uint64_t{1});
        c.output_path = j.value("output", std::string{});
        if (j.contains("trace_dir")) c.trace_dir = j.at("trace_dir").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, e.what());
    }
    return c;
}

inline SweepConfig load_sweep_config(const std::string& path) { return sweep_config_from_json(read_json_file(path)); }

}  // namespace smoothkm
