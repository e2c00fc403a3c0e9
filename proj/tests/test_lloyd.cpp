#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "smoothkm/lloyd.hpp"
#include "smoothkm/perturbation.hpp"
#include "smoothkm/trace_io.hpp"

using namespace smoothkm;

namespace {

PointSet line(std::initializer_list<double> xs) {
    PointSet ps;
    for (double x : xs) ps.push_back(std::vector<double>{x});
    return ps;
}

// Minimum potential over every assignment of points to two clusters.
double best_two_clustering(const PointSet& pts) {
    const std::size_t n = pts.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double phi = 0.0;
        for (int side = 0; side < 2; ++side) {
            std::vector<std::size_t> m;
            for (std::size_t i = 0; i < n; ++i)
                if (((mask >> i) & 1u) == static_cast<std::size_t>(side)) m.push_back(i);
            if (m.empty()) continue;
            const auto c = center_of_mass(pts, m);
            for (std::size_t i : m) phi += squared_distance(pts[i], c);
        }
        best = std::min(best, phi);
    }
    return best;
}

Instance fuzz_instance(std::uint64_t seed, std::size_t n, std::size_t d, double sigma) {
    return perturb(uniform_random_means(n, d, seed), sigma, seed);
}

}  // namespace

TEST(InitCenters, FirstK) {
    const auto pts = line({1, 2, 3, 4, 5});
    EXPECT_EQ(init_centers(pts, {InitMethod::FirstK, 2, 0, {}}), line({1, 2}));
}

TEST(InitCenters, UniformPointsDeterministicAndDistinct) {
    const auto pts = line({1, 2, 3, 4, 5, 6, 7, 8});
    const InitSpec spec{InitMethod::UniformPoints, 5, 1234, {}};
    const auto a = init_centers(pts, spec);
    EXPECT_EQ(a, init_centers(pts, spec));
    std::set<double> distinct;
    for (std::size_t i = 0; i < a.size(); ++i) distinct.insert(a[i][0]);
    EXPECT_EQ(distinct.size(), 5u);
}

TEST(InitCenters, UniformPointsFrequencies) {
    const auto pts = line({0, 1, 2, 3, 4});
    std::vector<int> hits(5, 0);
    const int draws = 10'000;
    for (int s = 0; s < draws; ++s) hits[static_cast<int>(init_centers(pts, {InitMethod::UniformPoints, 1, std::uint64_t(s), {}})[0][0])]++;
    for (int h : hits) EXPECT_NEAR(h / double(draws), 0.2, 0.02);
}

TEST(InitCenters, InfeasibleWhenKExceedsN) {
    try {
        init_centers(line({1, 2}), {InitMethod::UniformPoints, 3, 0, {}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InfeasibleInit);
    }
}

TEST(LloydStep, FixedPointIsStable) {
    const auto pts = line({0, 1, 10, 11});
    const auto s0 = make_initial_state(pts, line({0.5, 10.5}));
    const auto [s1, rec] = lloyd_step(pts, s0);
    EXPECT_TRUE(rec.reassigned.empty());
    EXPECT_EQ(rec.drop, 0.0);
    EXPECT_EQ(s1.assignment, s0.assignment);
    EXPECT_EQ(s1.centers, s0.centers);
    EXPECT_TRUE(is_fixed_point(rec));
}

TEST(LloydStep, OneDimensionalExample) {
    const auto pts = line({0, 1, 10, 11});
    const auto s0 = make_initial_state(pts, line({0, 11}));
    const auto [s1, rec] = lloyd_step(pts, s0);
    EXPECT_EQ(s1.assignment, (Assignment{0, 0, 1, 1}));
    EXPECT_EQ(s1.centers, line({0.5, 10.5}));
    // before: 0 + 1 + 1 + 0; after: 4 * 0.25
    EXPECT_DOUBLE_EQ(rec.potential_before, 2.0);
    EXPECT_DOUBLE_EQ(rec.potential_after, 1.0);
    EXPECT_DOUBLE_EQ(rec.drop, 1.0);
    EXPECT_EQ(rec.center_movements, (std::vector<double>{0.5, 0.5}));
    EXPECT_DOUBLE_EQ(*rec.min_center_distance, 11.0);
}

TEST(LloydStep, RecordsCrossingsAgainstPreStepCenters) {
    const auto pts = line({0, 4, 5, 9});
    ClusteringState s;
    s.assignment = {0, 0, 0, 1};
    s.centers = line({3, 6});
    s.empty_flags = {false, false};
    const auto [s1, rec] = lloyd_step(pts, s);
    ASSERT_EQ(rec.reassigned.size(), 1u);  // x=5 moves to 6
    EXPECT_EQ(rec.reassigned[0].point_index, 2u);
    for (const auto& x : rec.reassigned) {
        EXPECT_NE(x.from_cluster, x.to_cluster);
        EXPECT_LT(squared_distance(pts[x.point_index], s.centers[x.to_cluster]),
                  squared_distance(pts[x.point_index], s.centers[x.from_cluster]));
        EXPECT_DOUBLE_EQ(x.distance_to_bisector,
                         bisector_distance(pts[x.point_index], s.centers[x.from_cluster], s.centers[x.to_cluster]));
    }
    EXPECT_EQ(rec.active_clusters, 2u);
}

TEST(LloydStep, EmptyClusterKeepsItsCenter) {
    const auto pts = line({0, 1, 2});
    ClusteringState s = make_initial_state(pts, line({1, 100}));
    EXPECT_TRUE(s.empty_flags[1]);
    const auto [s1, rec] = lloyd_step(pts, s);
    EXPECT_EQ(s1.centers[1][0], 100.0);
    EXPECT_EQ(rec.empty_cluster_events, (std::vector<std::size_t>{1}));
    EXPECT_FALSE(rec.min_center_distance.has_value());
}

TEST(LloydStep, PotentialNeverIncreasesOnFuzz) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = fuzz_instance(seed, 30, 2, 0.2);
        auto state = make_initial_state(inst.points, init_centers(inst.points, {InitMethod::UniformPoints, 4, seed, {}}));
        for (int it = 0; it < 50; ++it) {
            auto [next, rec] = lloyd_step(inst.points, state);
            EXPECT_GE(rec.drop, -drop_tolerance(rec));
            if (!rec.reassigned.empty()) {
                EXPECT_GT(rec.drop, 0.0);
            }
            if (is_fixed_point(rec)) break;
            state = std::move(next);
        }
    }
}

TEST(Run, SingleClusterConvergesInTwoSteps) {
    const auto inst = fuzz_instance(3, 40, 3, 0.5);
    const auto t = run(inst, {InitMethod::UniformPoints, 1, 9, {}});
    EXPECT_EQ(t.termination, Termination::Converged);
    EXPECT_LE(t.iterations(), 2u);
}

TEST(Run, OneDimensionalExampleMatchesExhaustiveOptimum) {
    const auto pts = line({0, 1, 10, 11});
    const auto t = run(pts, {InitMethod::Explicit, 2, 0, line({0, 11})});
    EXPECT_EQ(t.termination, Termination::Converged);
    EXPECT_EQ(t.iterations(), 2u);
    EXPECT_DOUBLE_EQ(t.final_potential(), best_two_clustering(pts));
    EXPECT_DOUBLE_EQ(t.final_potential(), 1.0);
}

TEST(Run, MaxIterationsCap) {
    const auto inst = fuzz_instance(21, 200, 2, 0.05);
    const auto t = run(inst, {InitMethod::FirstK, 8, 0, {}}, RunOptions{1, false});
    EXPECT_EQ(t.iterations(), 1u);
    EXPECT_EQ(t.termination, Termination::MaxIterations);
    EXPECT_THROW(run(inst, {InitMethod::FirstK, 8, 0, {}}, RunOptions{0, false}), Error);
}

TEST(Run, DeterministicTraces) {
    const auto inst = fuzz_instance(8, 120, 3, 0.1);
    const InitSpec init{InitMethod::UniformPoints, 6, 77, {}};
    const auto a = run(inst, init);
    const auto b = run(inst, init);
    EXPECT_EQ(a, b);
    std::ostringstream sa, sb;
    write_trace(sa, a);
    write_trace(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(Run, FuzzInvariantsHold) {
    std::size_t fours = 0;
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        Rng rng(seed);
        const std::size_t n = 10 + rng.below(80), d = 1 + rng.below(4), k = 2 + rng.below(6);
        const double sigma = 0.01 + 0.5 * rng.uniform01();
        const auto inst = fuzz_instance(seed, n, d, sigma);
        const auto t = run(inst, {InitMethod::UniformPoints, k, seed, {}}, RunOptions{100000, true});
        const auto rep = check_run_invariants(t);
        EXPECT_TRUE(rep.ok()) << (rep.violations.empty() ? "" : rep.violations.front());
        EXPECT_EQ(rep.repeated_clusterings, 0u);
        EXPECT_LE(rep.max_epoch_length, 4u);
        fours += rep.epochs_of_length_four;
    }
    RecordProperty("epochs_of_length_four", static_cast<int>(fours));
}

namespace {
RunTrace synthetic_trace(const std::vector<std::vector<double>>& center_seq_per_record) {
    RunTrace t;
    std::size_t it = 1;
    for (const auto& cs : center_seq_per_record) {
        IterationRecord r;
        r.iteration = it++;
        for (double c : cs) r.centers_after.push_back(std::vector<double>{c});
        t.records.push_back(r);
    }
    return t;
}
}  // namespace

TEST(DetectEpochs, ConstantCentersGiveOneEpoch) {
    const auto t = synthetic_trace({{1, 5}, {1, 5}, {1, 5}, {1, 5}, {1, 5}, {1, 5}});
    const auto e = detect_epochs(t);
    ASSERT_EQ(e.size(), 1u);
    EXPECT_EQ(e[0].start, 1u);
    EXPECT_EQ(e[0].end, 6u);
    EXPECT_EQ(e[0].distinct_positions, (std::vector<std::size_t>{1, 1}));
}

TEST(DetectEpochs, ThirdPositionStartsNewEpoch) {
    // cluster 0: A, B, A, C; cluster 1 constant
    const auto t = synthetic_trace({{1, 5}, {2, 5}, {1, 5}, {3, 5}});
    const auto e = detect_epochs(t);
    ASSERT_EQ(e.size(), 2u);
    EXPECT_EQ(e[0].start, 1u);
    EXPECT_EQ(e[0].end, 3u);
    EXPECT_EQ(e[0].distinct_positions, (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(e[1].start, 4u);
    EXPECT_EQ(e[1].end, 4u);
}

TEST(DetectEpochs, PositionsCompareBitExactly) {
    const double a = 0.1 + 0.2, b = 0.3;  // differ in the last bit
    ASSERT_NE(a, b);
    const auto t = synthetic_trace({{a}, {b}, {1.0}});
    EXPECT_EQ(detect_epochs(t).size(), 2u);
}

TEST(TraceIo, RoundTripIsExact) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto inst = fuzz_instance(seed, 40, 2, 0.1);
        const auto t = run(inst, {InitMethod::UniformPoints, 4, seed, {}});
        std::stringstream ss;
        write_trace(ss, t);
        const auto back = read_trace(ss);
        EXPECT_EQ(back.records, t.records);
        EXPECT_EQ(back.termination, t.termination);
        EXPECT_EQ(back.initial_centers, t.initial_centers);
        EXPECT_EQ(back.final_assignment, t.final_assignment);
        EXPECT_EQ(back.seed, t.seed);
    }
}

TEST(TraceIo, FieldsFollowRecordOrder) {
    const auto t = run(line({0, 1, 10, 11}), {InitMethod::Explicit, 2, 0, line({0, 11})});
    std::ostringstream os;
    write_trace(os, t);
    std::istringstream is(os.str());
    std::string header, first;
    std::getline(is, header);
    std::getline(is, first);
    const char* order[] = {"\"iteration\"", "\"potential_before\"", "\"potential_after\"", "\"drop\"",
                           "\"reassigned\"", "\"active_clusters\"", "\"center_movements\"",
                           "\"min_center_distance\"", "\"empty_cluster_events\""};
    std::size_t pos = 0;
    for (const char* key : order) {
        const auto p = first.find(key);
        ASSERT_NE(p, std::string::npos) << key;
        EXPECT_GT(p, pos);
        pos = p;
    }
}

TEST(TraceIo, MalformedInputRejected) {
    std::istringstream no_header("{\"kind\":\"iteration\"}\n");
    EXPECT_THROW(read_trace(no_header), std::exception);
    std::istringstream garbage("not json\n");
    EXPECT_THROW(read_trace(garbage), Error);
}
