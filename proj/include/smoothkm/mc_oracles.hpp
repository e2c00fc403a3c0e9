#pragma once

// Monte Carlo checks of the probabilistic bounds and an exhaustive optimum
// for tiny instances. Each check reports (empirical, bound, sampling error)
// and passes when empirical <= bound + 3 * sampling error. Trial i always
// uses seed + i, so results do not depend on the thread count.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smoothkm/core_model.hpp"
#include "smoothkm/lloyd.hpp"
#include "smoothkm/parallel.hpp"
#include "smoothkm/perturbation.hpp"
#include "smoothkm/structure_props.hpp"

namespace smoothkm {

struct McResult {
    std::string lemma;
    std::vector<std::pair<std::string, double>> params;
    double empirical = 0.0;
    double bound = 0.0;
    double sampling_error = 0.0;
    std::size_t trials = 0;
    std::vector<std::string> warnings;

    double margin() const { return 3.0 * sampling_error; }
    bool passed() const { return empirical <= bound + margin(); }
};

namespace detail {

inline void finish(McResult& r, std::size_t hits) {
    r.empirical = r.trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(r.trials);
    r.sampling_error = r.trials == 0 ? 0.0 : std::sqrt(std::min(r.bound, 1.0) / static_cast<double>(r.trials));
    if (r.bound >= 1.0) r.warnings.push_back("bound is vacuous (>= 1)");
    if (r.bound <= 1e-3) r.warnings.push_back("bound is untestably small (<= 1e-3)");
}

inline std::size_t count_hits(std::size_t trials, std::size_t threads, const auto& trial_hit) {
    std::vector<char> hit(trials, 0);
    parallel_for(trials, threads, [&](std::size_t i) { hit[i] = trial_hit(i) ? 1 : 0; });
    std::size_t hits = 0;
    for (char h : hit) hits += static_cast<std::size_t>(h);
    return hits;
}

}  // namespace detail

struct McOptions {
    MeanGenerator means = MeanGenerator::UniformGrid;
    std::size_t threads = 1;
};

inline double spreaded_bound(double n, double sigma, double eps) {
    return 2.0 * std::pow(n, 4.0) * eps * eps / (sigma * sigma);
}

inline double separation_bound(double n, double d, double sigma, double eps) {
    return std::pow(n, 2.0 * d) * std::pow(4.0 * d * eps / sigma, d);
}

inline double delta_bound(double n, double d, double sigma, double delta) {
    return std::pow((4.0 * d + 16.0) * std::pow(n, 4.0) * delta / sigma, d);
}

inline double single_point_bound(double n, double sigma, double delta, double eps) {
    return 2.0 * std::sqrt(n * delta * eps) / sigma;
}

/// Fraction of perturbed 1D instances that are not ε-spreaded vs 2n⁴ε²/σ².
inline McResult mc_spreaded_bound(std::size_t n, double sigma, double eps, std::size_t trials, std::uint64_t seed,
                                  const McOptions& opt = {}) {
    McResult r{"spreaded-prob", {{"n", double(n)}, {"sigma", sigma}, {"eps", eps}}, 0, 0, 0, trials, {}};
    r.bound = spreaded_bound(double(n), sigma, eps);
    const std::size_t hits = detail::count_hits(trials, opt.threads, [&](std::size_t i) {
        const std::uint64_t s = seed + i;
        const auto inst = perturb(make_means(opt.means, n, 1, s), sigma, s);
        return check_eps_spreaded(inst.points, eps).violated();
    });
    detail::finish(r, hits);
    return r;
}

/// Fraction of perturbed instances that are not ε-separated vs n^{2d}(4dε/σ)^d. Needs d <= 2.
inline McResult mc_separation_bound(std::size_t n, std::size_t d, double sigma, double eps, std::size_t trials,
                                    std::uint64_t seed, const McOptions& opt = {}) {
    if (d > 2) throw Error(Errc::Unsupported, "separation checker is certified only for d <= 2");
    McResult r{"separation-prob", {{"n", double(n)}, {"d", double(d)}, {"sigma", sigma}, {"eps", eps}}, 0, 0, 0,
               trials, {}};
    r.bound = separation_bound(double(n), double(d), sigma, eps);
    const std::size_t hits = detail::count_hits(trials, opt.threads, [&](std::size_t i) {
        const std::uint64_t s = seed + i;
        const auto inst = perturb(make_means(opt.means, n, d, s), sigma, s);
        if (eps <= 0.0) return false;
        return check_eps_separated(inst.points, eps).violated();
    });
    detail::finish(r, hits);
    return r;
}

/// Smallest Δ over a whole run: every pre-step Δ plus Δ of the final centers.
inline std::optional<double> run_min_center_distance(const RunTrace& trace) {
    std::optional<double> best;
    auto take = [&](std::optional<double> v) {
        if (v && (!best || *v < *best)) best = v;
    };
    for (const auto& r : trace.records) take(r.min_center_distance);
    if (!trace.records.empty()) {
        const auto& last = trace.records.back();
        std::vector<bool> empty(last.centers_after.size(), false);
        for (std::size_t c : last.empty_cluster_events) empty[c] = true;
        take(min_center_distance(last.centers_after, empty));
    }
    return best;
}

/// Fraction of k-means runs whose smallest center distance is <= δ vs ((4d+16)n⁴δ/σ)^d.
inline McResult mc_delta_bound(std::size_t n, std::size_t d, std::size_t k, double sigma, double delta,
                               std::size_t trials, std::uint64_t seed, InitMethod init = InitMethod::UniformPoints,
                               const McOptions& opt = {}, std::size_t max_iterations = 1'000'000) {
    McResult r{"delta-bound",
               {{"n", double(n)}, {"d", double(d)}, {"k", double(k)}, {"sigma", sigma}, {"delta", delta}},
               0, 0, 0, trials, {}};
    r.bound = delta_bound(double(n), double(d), sigma, delta);
    const std::size_t hits = detail::count_hits(trials, opt.threads, [&](std::size_t i) {
        const std::uint64_t s = seed + i;
        const auto inst = perturb(make_means(opt.means, n, d, s), sigma, s);
        const auto trace = run(inst, InitSpec{init, k, s, {}}, RunOptions{max_iterations, false});
        const auto m = run_min_center_distance(trace);
        return m && *m <= delta;
    });
    detail::finish(r, hits);
    return r;
}

struct SinglePointSetup {
    Point o{0.0, 0.0};
    Point p{0.0, 1.0};
    std::optional<Point> r_mean;  // defaults to o
    std::size_t n = 4;
};

/// r ~ N(r_mean, σ²I), q = (ℓ/(ℓ+1))p + (1/(ℓ+1))r. Estimates
/// Pr[‖r−o‖ <= δ and dist(r, bisector(o,q)) <= ε] vs 2√(nδε)/σ.
inline McResult mc_single_point_bisector(std::size_t ell, double sigma, double delta, double eps, std::size_t trials,
                                         std::uint64_t seed, const SinglePointSetup& setup = {},
                                         const McOptions& opt = {}) {
    if (ell + 1 > setup.n) throw Error(Errc::InvalidArgument, "ell must lie in [0, n-1]");
    if (setup.o.size() != setup.p.size()) throw Error(Errc::DimensionMismatch, "o and p differ in dimension");
    const Point mean = setup.r_mean.value_or(setup.o);
    if (mean.size() != setup.o.size()) throw Error(Errc::DimensionMismatch, "r_mean dimension");
    McResult r{"single-point",
               {{"ell", double(ell)}, {"n", double(setup.n)}, {"sigma", sigma}, {"delta", delta}, {"eps", eps}},
               0, 0, 0, trials, {}};
    r.bound = single_point_bound(double(setup.n), sigma, delta, eps);
    const double w = 1.0 / static_cast<double>(ell + 1);
    const std::size_t hits = detail::count_hits(trials, opt.threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed + i, 0x7370ULL));
        Point rp(mean.size()), q(mean.size());
        for (std::size_t j = 0; j < rp.size(); ++j) {
            rp[j] = mean[j] + sigma * rng.normal();
            q[j] = (1.0 - w) * setup.p[j] + w * rp[j];
        }
        if (distance(rp, setup.o) > delta) return false;
        if (squared_distance(q, setup.o) == 0.0) return false;
        return bisector_distance(rp, setup.o, q) <= eps;
    });
    detail::finish(r, hits);
    return r;
}

struct OptimumResult {
    double potential = 0.0;
    Assignment assignment;
    PointSet centers;
};

inline constexpr double kBruteForceBudget = 1e7;

/// Exhaustive minimum of the potential over all k^n assignments, centers at
/// the centers of mass. Enumerates in odometer order with incremental sums;
/// the winning assignment's potential is recomputed from scratch.
inline OptimumResult brute_force_optimum(const PointSet& points, std::size_t k, double budget = kBruteForceBudget) {
    const std::size_t n = points.size();
    const std::size_t d = points.dim();
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
    if (n * std::log(double(k)) > std::log(budget) + 1e-12)
        throw Error(Errc::Unsupported, "k^n exceeds the enumeration budget");

    Assignment a(n, 0);
    std::vector<double> sum(k * d, 0.0), sumsq(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    auto move_point = [&](std::size_t i, std::size_t from, std::size_t to) {
        const auto x = points[i];
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            sum[from * d + j] -= x[j];
            sum[to * d + j] += x[j];
            sq += x[j] * x[j];
        }
        sumsq[from] -= sq;
        sumsq[to] += sq;
        --count[from];
        ++count[to];
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = points[i];
        for (std::size_t j = 0; j < d; ++j) sum[j] += x[j];
        for (std::size_t j = 0; j < d; ++j) sumsq[0] += x[j] * x[j];
    }
    count[0] = n;

    auto current = [&] {
        double phi = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] == 0) continue;
            double s2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) s2 += sum[c * d + j] * sum[c * d + j];
            phi += sumsq[c] - s2 / static_cast<double>(count[c]);
        }
        return phi;
    };

    double best = current();
    Assignment best_a = a;
    while (true) {
        std::size_t i = 0;
        while (i < n && a[i] == k - 1) {
            move_point(i, k - 1, 0);
            a[i] = 0;
            ++i;
        }
        if (i == n) break;
        move_point(i, a[i], a[i] + 1);
        ++a[i];
        const double phi = current();
        if (phi < best) {
            best = phi;
            best_a = a;
        }
    }

    OptimumResult out;
    out.assignment = best_a;
    out.centers = PointSet(k, d);
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[best_a[i]].push_back(i);
    for (std::size_t c = 0; c < k; ++c) {
        if (members[c].empty()) continue;
        const Point cm = center_of_mass(points, members[c]);
        std::copy(cm.begin(), cm.end(), out.centers[c].begin());
    }
    out.potential = potential(points, best_a, out.centers);
    return out;
}

}  // namespace smoothkm
