#pragma once

// Command-line driver: run | sweep | props | verify | constants.
// Machine-readable output goes to `out`, diagnostics to `err`.

#include <cstdint>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smoothkm/experiment_harness.hpp"
#include "smoothkm/lloyd.hpp"
#include "smoothkm/mc_oracles.hpp"
#include "smoothkm/perturbation.hpp"
#include "smoothkm/structure_props.hpp"
#include "smoothkm/trace_io.hpp"

namespace smoothkm {

namespace cli_detail {

inline nlohmann::ordered_json witness_json(const Witness& w) {
    nlohmann::ordered_json j;
    j["description"] = w.description;
    j["points"] = w.points;
    if (w.hyperplane) j["hyperplane"] = {{"normal", w.hyperplane->normal}, {"offset", w.hyperplane->offset}};
    if (w.interval) j["interval"] = {w.interval->first, w.interval->second};
    if (!w.pairs.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : w.pairs) arr.push_back({p.first, p.second});
        j["pairs"] = arr;
    }
    if (!w.key_values.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& kv : w.key_values) arr.push_back({{"s", kv.s}, {"t", kv.t}, {"subset", kv.subset}});
        j["key_values"] = arr;
    }
    return j;
}

inline std::string params_string(const McResult& r) {
    std::string s;
    for (const auto& [k, v] : r.params) {
        if (!s.empty()) s += ';';
        s += k + "=" + format_double(v);
    }
    return s;
}

inline constexpr const char* kVerifyHeader = "lemma,params,empirical,bound,margin,verdict";

inline void print_verify_row(std::ostream& out, const McResult& r) {
    out << r.lemma << ',' << params_string(r) << ',' << format_double(r.empirical) << ','
        << format_double(r.bound) << ',' << format_double(r.margin()) << ',' << (r.passed() ? "pass" : "fail")
        << '\n';
}

}  // namespace cli_detail

inline int cli_run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Instrumented k-means under Gaussian perturbation", "smoothkm"};
    app.require_subcommand(1);
    std::size_t threads = default_threads();
    app.add_option("--threads", threads, "worker threads (default: SMOOTHKM_THREADS or hardware)");

    // run
    auto* run_cmd = app.add_subcommand("run", "run k-means on one instance");
    std::string points_file, means_file, centers_file, trace_out, init_name = "uniform-points";
    std::optional<double> sigma;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> init_seed;
    std::size_t k = 0, max_iters = 1'000'000;
    run_cmd->add_option("--points", points_file, "instance file with realized points");
    run_cmd->add_option("--means", means_file, "file with means to perturb");
    run_cmd->add_option("--sigma", sigma, "perturbation standard deviation");
    run_cmd->add_option("--seed", seed, "perturbation seed");
    run_cmd->add_option("--k", k, "number of clusters")->required();
    run_cmd->add_option("--init", init_name, "uniform-points | first-k | explicit");
    run_cmd->add_option("--centers", centers_file, "initial centers for --init explicit");
    run_cmd->add_option("--init-seed", init_seed, "seed for uniform-points (default: --seed or 0)");
    run_cmd->add_option("--max-iters", max_iters, "iteration cap");
    run_cmd->add_option("--trace-out", trace_out, "write line-delimited trace here");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep");
    std::string config_file, sweep_out, trace_dir;
    sweep_cmd->add_option("--config", config_file, "sweep config file")->required();
    sweep_cmd->add_option("--out", sweep_out, "results CSV (overrides config)");
    sweep_cmd->add_option("--trace-dir", trace_dir, "per-run traces directory");

    // props
    auto* props_cmd = app.add_subcommand("props", "check structural properties");
    std::string check;
    std::optional<double> eps, delta;
    SparseCaps caps;
    std::size_t budget = kDefaultSubsetBudget;
    props_cmd->add_option("--points", points_file, "instance file")->required();
    props_cmd->add_option("--check", check, "separated | sparse | spreaded")
        ->required()
        ->check(CLI::IsMember({"separated", "sparse", "spreaded"}));
    props_cmd->add_option("--eps", eps, "epsilon");
    props_cmd->add_option("--delta", delta, "delta");
    props_cmd->add_option("--s-cap", caps.s_cap, "key-value s cap");
    props_cmd->add_option("--t-cap", caps.t_cap, "key-value t cap");
    props_cmd->add_option("--size-cap", caps.size_cap, "key-value subset size cap");
    props_cmd->add_option("--budget", budget, "enumeration budget");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "Monte Carlo check of a probability bound");
    std::string lemma, means_gen = "uniform-grid";
    double v_sigma = 0.5, v_t = 1.0, v_mu = 0.0, v_eps = 1e-3, v_delta = 1e-5;
    std::size_t v_n = 10, v_d = 1, v_k = 2, v_ell = 0, trials = 10'000;
    std::uint64_t v_seed = 1;
    verify_cmd->add_option("--lemma", lemma, "tail | spreaded-prob | separation-prob | delta-bound | single-point")
        ->required()
        ->check(CLI::IsMember({"tail", "spreaded-prob", "separation-prob", "delta-bound", "single-point"}));
    verify_cmd->add_option("--sigma", v_sigma);
    verify_cmd->add_option("--t", v_t);
    verify_cmd->add_option("--mu", v_mu);
    verify_cmd->add_option("--eps", v_eps);
    verify_cmd->add_option("--delta", v_delta);
    verify_cmd->add_option("--n", v_n);
    verify_cmd->add_option("--d", v_d);
    verify_cmd->add_option("--k", v_k);
    verify_cmd->add_option("--ell", v_ell);
    verify_cmd->add_option("--trials", trials);
    verify_cmd->add_option("--seed", v_seed);
    verify_cmd->add_option("--means-gen", means_gen, "uniform-grid | uniform-random");

    // constants
    auto* const_cmd = app.add_subcommand("constants", "print lemma constants and drop bounds");
    std::size_t c_n = 10, c_k = 2, c_d = 2, c_a = 1;
    double c_sigma = 0.5, c_kappa = 1.0;
    std::optional<double> c_D, c_eps, c_delta, c_Delta;
    const_cmd->add_option("--n", c_n)->required();
    const_cmd->add_option("--k", c_k)->required();
    const_cmd->add_option("--d", c_d)->required();
    const_cmd->add_option("--a", c_a);
    const_cmd->add_option("--sigma", c_sigma)->required();
    const_cmd->add_option("--kappa", c_kappa);
    const_cmd->add_option("--D", c_D, "override the hypercube radius");
    const_cmd->add_option("--eps", c_eps, "epsilon for drop bounds (default: lemma epsilon)");
    const_cmd->add_option("--delta", c_delta, "delta for the sparse drop bound");
    const_cmd->add_option("--Delta", c_Delta, "center distance for the sequence bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    auto usage_error = [&](const std::string& msg) {
        err << "error: " << msg << "\n\n" << app.help();
        return 2;
    };

    try {
        if (*run_cmd) {
            if (points_file.empty() == means_file.empty())
                return usage_error("run needs exactly one of --points or --means");
            Instance inst;
            if (!points_file.empty()) {
                inst = load_instance_file(points_file);
            } else {
                const auto doc = read_json_file(means_file);
                if (!doc.contains("means")) return usage_error("means file has no \"means\"");
                const PointSet means = PointSet::from_rows(doc.at("means").get<std::vector<Point>>());
                for (const auto& w : validate_means(means)) err << "warning: " << w << '\n';
                if (!sigma && doc.contains("sigma")) sigma = doc.at("sigma").get<double>();
                if (!seed && doc.contains("seed")) seed = doc.at("seed").get<std::uint64_t>();
                if (!sigma || !seed) return usage_error("--means requires --sigma and --seed");
                inst = perturb(means, *sigma, *seed, 1.0, k);
            }
            InitSpec init{parse_init_method(init_name), k, init_seed.value_or(seed.value_or(0)), {}};
            if (init.method == InitMethod::Explicit) {
                if (centers_file.empty()) return usage_error("--init explicit requires --centers");
                const auto doc = read_json_file(centers_file);
                const char* key = doc.contains("centers") ? "centers" : "points";
                init.centers = PointSet::from_rows(doc.at(key).get<std::vector<Point>>());
            }
            const RunTrace trace = run(inst, init, RunOptions{max_iters, false});
            if (!trace_out.empty()) write_trace_file(trace_out, trace);
            const auto rep = check_run_invariants(trace);
            nlohmann::ordered_json summary;
            summary["termination"] = std::string(to_string(trace.termination));
            summary["iterations"] = trace.iterations();
            summary["final_potential"] = trace.final_potential();
            summary["max_epoch_length"] = rep.max_epoch_length;
            summary["epochs_of_length_four"] = rep.epochs_of_length_four;
            summary["invariants_ok"] = rep.ok();
            out << summary.dump() << '\n';
            for (const auto& v : rep.violations) err << "invariant violated: " << v << '\n';
            return rep.ok() ? 0 : 1;
        }

        if (*sweep_cmd) {
            SweepConfig cfg = load_sweep_config(config_file);
            if (!sweep_out.empty()) cfg.output_path = sweep_out;
            if (!trace_dir.empty()) cfg.trace_dir = trace_dir;
            if (cfg.output_path.empty()) return usage_error("sweep needs --out or an output path in the config");
            cfg.threads = threads;
            const auto res = run_sweep(cfg);
            for (const auto& row : res.rows)
                for (const auto& dgn : row.diagnostics) err << "cell aborted: " << dgn << '\n';
            out << "wrote " << res.rows.size() << " rows to " << cfg.output_path << '\n';
            return res.ok() ? 0 : 1;
        }

        if (*props_cmd) {
            const Instance inst = load_instance_file(points_file);
            PropertyVerdict v;
            nlohmann::ordered_json j;
            j["check"] = check;
            if (check == "separated") {
                if (!eps) return usage_error("--check separated requires --eps");
                v = check_eps_separated(inst.points, *eps, budget);
                j["eps"] = *eps;
            } else if (check == "spreaded") {
                if (!eps) return usage_error("--check spreaded requires --eps");
                v = check_eps_spreaded(inst.points, *eps);
                j["eps"] = *eps;
            } else {
                if (!delta) return usage_error("--check sparse requires --delta");
                v = check_delta_sparse(inst.points, *delta, caps);
                j["delta"] = *delta;
            }
            j["status"] = std::string(to_string(v.status));
            j["witness"] = v.witness ? cli_detail::witness_json(*v.witness) : nlohmann::ordered_json(nullptr);
            if (!v.note.empty()) j["note"] = v.note;
            out << j.dump() << '\n';
            return 0;
        }

        if (*verify_cmd) {
            McOptions opt{parse_mean_generator(means_gen), threads};
            McResult r;
            if (lemma == "tail") {
                const auto tc = tail_probability_check(v_sigma, v_t, v_mu, trials, v_seed);
                r = McResult{"tail", {{"sigma", v_sigma}, {"t", v_t}, {"mu", v_mu}}, tc.empirical, tc.bound,
                             tc.sampling_error, tc.samples, {}};
                if (!tc.in_lemma_range) r.warnings.push_back("t < 1 is outside the lemma's range");
            } else if (lemma == "spreaded-prob") {
                r = mc_spreaded_bound(v_n, v_sigma, v_eps, trials, v_seed, opt);
            } else if (lemma == "separation-prob") {
                r = mc_separation_bound(v_n, v_d, v_sigma, v_eps, trials, v_seed, opt);
            } else if (lemma == "delta-bound") {
                r = mc_delta_bound(v_n, v_d, v_k, v_sigma, v_delta, trials, v_seed, InitMethod::UniformPoints, opt);
            } else {
                SinglePointSetup setup;
                setup.n = v_n;
                r = mc_single_point_bisector(v_ell, v_sigma, v_delta, v_eps, trials, v_seed, setup, opt);
            }
            for (const auto& w : r.warnings) err << "warning: " << w << '\n';
            out << cli_detail::kVerifyHeader << '\n';
            cli_detail::print_verify_row(out, r);
            return r.passed() ? 0 : 1;
        }

        if (*const_cmd) {
            const auto c = lemma_constants(c_n, c_d, c_k, c_a, c_sigma, c_kappa, c_D);
            out << "W_log=" << format_double(c.W_log) << '\n';
            out << "eps_log=" << format_double(c.eps_log) << '\n';
            out << "D=" << format_double(c.D) << '\n';
            out << "D_clamped=" << (c.D_clamp == ClampReason::None ? "no" : "yes") << '\n';
            DropContext ctx;
            ctx.n = double(c_n);
            ctx.d = double(c_d);
            ctx.k = double(c_k);
            ctx.a = double(c_a);
            ctx.D = c.D;
            if (c_eps) ctx.eps = *c_eps;
            else ctx.eps_log = c.eps_log;
            ctx.delta = c_delta;
            ctx.Delta = c_Delta;
            std::vector<DropBound> kinds{DropBound::EpsSeparated, DropBound::Spreaded1D};
            if (c_delta) kinds.push_back(DropBound::DeltaSparse);
            if (c_Delta) kinds.push_back(DropBound::UpperSequence);
            for (const auto& b : drop_lower_bounds(ctx, kinds)) {
                out << "drop_" << b.name << "_log=" << format_double(b.log_value) << '\n';
                if (b.value) out << "drop_" << b.name << "=" << format_double(*b.value) << '\n';
            }
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == Errc::InvalidArgument || e.code() == Errc::MissingField ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return usage_error("no subcommand");
}

}  // namespace smoothkm
