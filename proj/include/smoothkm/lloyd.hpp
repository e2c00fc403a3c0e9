#pragma once

// Instrumented Lloyd iteration: one step is a reassignment of every point
// followed by a center-of-mass update. Every step emits an IterationRecord.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "smoothkm/core_model.hpp"
#include "smoothkm/rng.hpp"

namespace smoothkm {

struct ClusteringState {
    Assignment assignment;
    PointSet centers;
    std::size_t iteration = 0;
    std::vector<bool> empty_flags;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double potential_before = 0.0;
    double potential_after = 0.0;
    double drop = 0.0;
    std::vector<BisectorCrossing> reassigned;
    std::size_t active_clusters = 0;
    std::vector<double> center_movements;
    std::optional<double> min_center_distance;  // Δ of the centers before the step
    std::vector<std::size_t> empty_cluster_events;
    PointSet centers_after;
    std::uint64_t assignment_hash = 0;

    bool operator==(const IterationRecord&) const = default;
};

enum class Termination { Converged, MaxIterations };

enum class InitMethod { UniformPoints, FirstK, Explicit };

constexpr std::string_view to_string(Termination t) {
    return t == Termination::Converged ? "Converged" : "MaxIterations";
}

constexpr std::string_view to_string(InitMethod m) {
    switch (m) {
        case InitMethod::UniformPoints: return "uniform-points";
        case InitMethod::FirstK: return "first-k";
        case InitMethod::Explicit: return "explicit";
    }
    return "unknown";
}

inline InitMethod parse_init_method(std::string_view s) {
    if (s == "uniform-points") return InitMethod::UniformPoints;
    if (s == "first-k") return InitMethod::FirstK;
    if (s == "explicit") return InitMethod::Explicit;
    throw Error(Errc::InvalidArgument, "unknown init method '" + std::string(s) + "'");
}

inline Termination parse_termination(std::string_view s) {
    if (s == "Converged") return Termination::Converged;
    if (s == "MaxIterations") return Termination::MaxIterations;
    throw Error(Errc::Parse, "unknown termination '" + std::string(s) + "'");
}

struct InitSpec {
    InitMethod method = InitMethod::UniformPoints;
    std::size_t k = 1;
    std::uint64_t seed = 0;
    std::optional<PointSet> centers;  // required for Explicit
};

struct RunOptions {
    std::size_t max_iterations = 1'000'000;
    bool keep_assignments = false;
};

struct RunTrace {
    std::vector<IterationRecord> records;
    Termination termination = Termination::Converged;
    InitMethod init_method = InitMethod::UniformPoints;
    std::uint64_t seed = 0;
    PointSet initial_centers;
    Assignment final_assignment;
    std::vector<Assignment> assignments;  // post-step assignments; filled when keep_assignments

    std::size_t iterations() const { return records.size(); }

    double final_potential() const { return records.empty() ? 0.0 : records.back().potential_after; }

    bool operator==(const RunTrace&) const = default;
};

struct Epoch {
    std::size_t start = 0;  // iteration numbers, inclusive
    std::size_t end = 0;
    std::vector<std::size_t> distinct_positions;

    std::size_t length() const { return end - start + 1; }
};

/// FNV-1a over the cluster indices.
inline std::uint64_t hash_assignment(std::span<const std::size_t> assignment) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t a : assignment) {
        std::uint64_t v = static_cast<std::uint64_t>(a);
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFFu;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

inline PointSet init_centers(const PointSet& points, const InitSpec& spec) {
    const std::size_t n = points.size();
    if (spec.k == 0) throw Error(Errc::InvalidArgument, "k must be at least 1");
    switch (spec.method) {
        case InitMethod::FirstK: {
            if (spec.k > n) throw Error(Errc::InfeasibleInit, "first-k needs k <= n");
            PointSet c;
            for (std::size_t i = 0; i < spec.k; ++i) c.push_back(points[i]);
            return c;
        }
        case InitMethod::UniformPoints: {
            if (spec.k > n)
                throw Error(Errc::InfeasibleInit, "k = " + std::to_string(spec.k) +
                                                      " exceeds n = " + std::to_string(n));
            // Partial Fisher-Yates: the first k slots are a uniform k-subset in sampled order.
            Rng rng(derive_seed(spec.seed, 0x1417ULL));
            std::vector<std::size_t> idx(n);
            for (std::size_t i = 0; i < n; ++i) idx[i] = i;
            PointSet c;
            for (std::size_t i = 0; i < spec.k; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
                std::swap(idx[i], idx[j]);
                c.push_back(points[idx[i]]);
            }
            return c;
        }
        case InitMethod::Explicit: {
            if (!spec.centers) throw Error(Errc::MissingField, "explicit init requires centers");
            if (spec.centers->dim() != points.dim())
                throw Error(Errc::DimensionMismatch, "explicit centers dimension mismatch");
            if (spec.centers->size() != spec.k)
                throw Error(Errc::InvalidArgument, "explicit centers count != k");
            return *spec.centers;
        }
    }
    throw Error(Errc::InvalidArgument, "unhandled init method");
}

/// Assigns every point to its nearest initial center (lowest index on ties).
inline ClusteringState make_initial_state(const PointSet& points, PointSet centers) {
    if (centers.dim() != points.dim())
        throw Error(Errc::DimensionMismatch, "center/point dimension mismatch");
    ClusteringState s;
    s.assignment.resize(points.size());
    s.empty_flags.assign(centers.size(), true);
    for (std::size_t i = 0; i < points.size(); ++i) {
        s.assignment[i] = assign_nearest(points[i], centers);
        s.empty_flags[s.assignment[i]] = false;
    }
    s.centers = std::move(centers);
    return s;
}

/// One reassignment followed by one center update. A cluster left without
/// members keeps its previous center.
inline std::pair<ClusteringState, IterationRecord> lloyd_step(const PointSet& points,
                                                              const ClusteringState& state) {
    const std::size_t n = points.size();
    const std::size_t k = state.centers.size();
    if (state.assignment.size() != n) throw Error(Errc::DimensionMismatch, "assignment length != n");

    IterationRecord rec;
    rec.iteration = state.iteration + 1;
    rec.potential_before = potential(points, state.assignment, state.centers);
    rec.min_center_distance = min_center_distance(state.centers, state.empty_flags);

    ClusteringState next;
    next.iteration = state.iteration + 1;
    next.assignment.resize(n);
    std::vector<std::size_t> gained(k, 0), lost(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t from = state.assignment[i];
        const std::size_t to = assign_nearest(points[i], state.centers, from);
        next.assignment[i] = to;
        if (to != from) {
            rec.reassigned.push_back(
                {i, from, to, bisector_distance(points[i], state.centers[from], state.centers[to])});
            ++lost[from];
            ++gained[to];
        }
    }

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[next.assignment[i]].push_back(i);

    next.centers = state.centers;
    next.empty_flags.assign(k, false);
    rec.center_movements.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        if (gained[c] > 0 || lost[c] > 0) ++rec.active_clusters;
        if (members[c].empty()) {
            next.empty_flags[c] = true;
            rec.empty_cluster_events.push_back(c);
            continue;
        }
        const Point cm = center_of_mass(points, members[c]);
        std::copy(cm.begin(), cm.end(), next.centers[c].begin());
        rec.center_movements[c] = distance(state.centers[c], next.centers[c]);
    }

    rec.potential_after = potential(points, next.assignment, next.centers);
    rec.drop = rec.potential_before - rec.potential_after;
    rec.centers_after = next.centers;
    rec.assignment_hash = hash_assignment(next.assignment);
    return {std::move(next), std::move(rec)};
}

inline bool is_fixed_point(const IterationRecord& rec) {
    return rec.reassigned.empty() &&
           std::all_of(rec.center_movements.begin(), rec.center_movements.end(),
                       [](double m) { return m == 0.0; });
}

inline RunTrace run_from_centers(const PointSet& points, PointSet centers, const RunOptions& options,
                                 InitMethod method = InitMethod::Explicit, std::uint64_t seed = 0) {
    if (options.max_iterations < 1) throw Error(Errc::InvalidArgument, "max_iterations must be >= 1");
    RunTrace trace;
    trace.init_method = method;
    trace.seed = seed;
    trace.initial_centers = centers;
    ClusteringState state = make_initial_state(points, std::move(centers));
    trace.termination = Termination::MaxIterations;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        auto [next, rec] = lloyd_step(points, state);
        const bool done = is_fixed_point(rec);
        trace.records.push_back(std::move(rec));
        if (options.keep_assignments) trace.assignments.push_back(next.assignment);
        state = std::move(next);
        if (done) {
            trace.termination = Termination::Converged;
            break;
        }
    }
    trace.final_assignment = state.assignment;
    return trace;
}

inline RunTrace run(const PointSet& points, const InitSpec& init, const RunOptions& options = {}) {
    return run_from_centers(points, init_centers(points, init), options, init.method, init.seed);
}

inline RunTrace run(const Instance& instance, const InitSpec& init, const RunOptions& options = {}) {
    instance.validate();
    return run(instance.points, init, options);
}

/// Greedy maximal epochs: an epoch grows while every cluster has at most two
/// distinct (bit-identical) post-step center positions inside it.
inline std::vector<Epoch> detect_epochs(const RunTrace& trace) {
    std::vector<Epoch> epochs;
    if (trace.records.empty()) return epochs;
    const std::size_t k = trace.records.front().centers_after.size();
    std::vector<std::vector<std::size_t>> seen(k);  // record indices of distinct positions

    auto same = [&](std::size_t r1, std::size_t r2, std::size_t c) {
        const auto a = trace.records[r1].centers_after[c];
        const auto b = trace.records[r2].centers_after[c];
        return std::equal(a.begin(), a.end(), b.begin());  // bit-exact
    };
    auto close_epoch = [&](std::size_t first, std::size_t last) {
        Epoch e{trace.records[first].iteration, trace.records[last].iteration, {}};
        for (const auto& s : seen) e.distinct_positions.push_back(s.size());
        epochs.push_back(std::move(e));
    };

    std::size_t first = 0;
    for (std::size_t r = 0; r < trace.records.size(); ++r) {
        bool overflow = false;
        for (std::size_t c = 0; c < k && !overflow; ++c) {
            const bool known = std::any_of(seen[c].begin(), seen[c].end(),
                                           [&](std::size_t q) { return same(q, r, c); });
            if (!known && seen[c].size() == 2) overflow = true;
        }
        if (overflow) {
            close_epoch(first, r - 1);
            first = r;
            for (auto& s : seen) s.clear();
        }
        for (std::size_t c = 0; c < k; ++c) {
            const bool known = std::any_of(seen[c].begin(), seen[c].end(),
                                           [&](std::size_t q) { return same(q, r, c); });
            if (!known) seen[c].push_back(r);
        }
    }
    close_epoch(first, trace.records.size() - 1);
    return epochs;
}

/// Points gained plus points lost per cluster in one step.
inline std::vector<std::size_t> cluster_exchange_counts(const IterationRecord& rec, std::size_t k) {
    std::vector<std::size_t> flow(k, 0);
    for (const auto& x : rec.reassigned) {
        ++flow[x.from_cluster];
        ++flow[x.to_cluster];
    }
    return flow;
}

inline double drop_tolerance(const IterationRecord& rec) { return 1e-9 * (1.0 + std::abs(rec.potential_before)); }

struct InvariantReport {
    std::vector<std::string> violations;
    std::size_t max_epoch_length = 0;
    std::size_t epochs_of_length_four = 0;
    std::size_t repeated_clusterings = 0;

    bool ok() const { return violations.empty(); }
};

/// Per-run checks: monotone potential, movement lower bound on the drop,
/// strict progress on reassignment, epoch length <= 4, no repeated clustering.
inline InvariantReport check_run_invariants(const RunTrace& trace) {
    InvariantReport rep;
    auto fail = [&](const IterationRecord& r, const std::string& what) {
        std::ostringstream os;
        os << "iteration " << r.iteration << ": " << what;
        rep.violations.push_back(os.str());
    };
    for (const auto& r : trace.records) {
        const double tol = drop_tolerance(r);
        if (r.drop < -tol) fail(r, "potential increased by " + std::to_string(-r.drop));
        double max_move = 0.0;
        for (double m : r.center_movements) max_move = std::max(max_move, m);
        if (r.drop < max_move * max_move - tol)
            fail(r, "drop " + std::to_string(r.drop) + " below squared movement " +
                        std::to_string(max_move * max_move));
        if (!r.reassigned.empty() && !(r.drop > 0.0)) fail(r, "reassignment without strict drop");
        if (r.active_clusters > r.centers_after.size()) fail(r, "more active clusters than k");
    }

    // Consecutive identical assignments (zero-reassignment steps) are one clustering.
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& r = trace.records[i];
        if (i > 0 && r.reassigned.empty()) continue;
        if (!seen.insert(r.assignment_hash).second) {
            ++rep.repeated_clusterings;
            fail(r, "clustering repeats");
        }
    }
    if (!trace.assignments.empty()) {
        for (std::size_t i = 1; i < trace.assignments.size(); ++i)
            if (!trace.records[i].reassigned.empty())
                for (std::size_t j = 0; j < i; ++j)
                    if (trace.assignments[j] == trace.assignments[i]) {
                        ++rep.repeated_clusterings;
                        fail(trace.records[i], "clustering repeats (exact)");
                        break;
                    }
    }

    for (const auto& e : detect_epochs(trace)) {
        rep.max_epoch_length = std::max(rep.max_epoch_length, e.length());
        if (e.length() == 4) ++rep.epochs_of_length_four;
        if (e.length() > 4)
            rep.violations.push_back("epoch [" + std::to_string(e.start) + "," + std::to_string(e.end) +
                                     "] longer than 4");
    }
    if (trace.termination == Termination::Converged && !trace.records.empty() &&
        !trace.records.back().reassigned.empty())
        rep.violations.push_back("converged trace ends with reassignments");
    return rep;
}

}  // namespace smoothkm
