#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "smoothkm/core_model.hpp"
#include "smoothkm/rng.hpp"

using namespace smoothkm;

namespace {

PointSet random_points(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    PointSet ps(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) ps[i][j] = scale * (2.0 * rng.uniform01() - 1.0);
    return ps;
}

// Extended-precision re-summation, pairwise over long doubles.
long double potential_oracle(const PointSet& pts, const Assignment& a, const PointSet& c) {
    long double total = 0.0L;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.dim(); ++j) {
            const long double t = static_cast<long double>(pts[i][j]) - static_cast<long double>(c[a[i]][j]);
            total += t * t;
        }
    return total;
}

}  // namespace

TEST(Potential, SinglePointAtItsCenterIsZero) {
    const auto pts = PointSet::from_rows({{3, 4}});
    const auto c = PointSet::from_rows({{3, 4}});
    EXPECT_EQ(potential(pts, Assignment{0}, c), 0.0);
}

TEST(Potential, TwoPointsAroundMidpoint) {
    const auto pts = PointSet::from_rows({{0, 0}, {2, 0}});
    const auto c = PointSet::from_rows({{1, 0}});
    EXPECT_DOUBLE_EQ(potential(pts, Assignment{0, 0}, c), 2.0);
}

TEST(Potential, MatchesExtendedPrecisionOracle) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto pts = random_points(6, 3, seed);
        const auto c = random_points(2, 3, seed + 100);
        Assignment a{0, 1, 1, 0, 1, 0};
        const double got = potential(pts, a, c);
        const long double want = potential_oracle(pts, a, c);
        EXPECT_NEAR(got, static_cast<double>(want), 1e-12 * static_cast<double>(want));
    }
}

TEST(Potential, DimensionMismatchThrows) {
    const auto pts = PointSet::from_rows({{0, 0}, {2, 0}});
    const auto c = PointSet::from_rows({{1, 0, 0}});
    try {
        potential(pts, Assignment{0, 0}, c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
    EXPECT_THROW(potential(pts, Assignment{0}, PointSet::from_rows({{1, 0}})), Error);
}

TEST(Potential, PermutationAndTranslationInvariant) {
    Rng rng(77);
    for (int rep = 0; rep < 50; ++rep) {
        const auto pts = random_points(12, 2, 1000 + rep, 5.0);
        const auto c = random_points(3, 2, 2000 + rep, 5.0);
        Assignment a(12);
        for (auto& x : a) x = rng.below(3);
        const double base = potential(pts, a, c);

        // reverse point order (permutes members within each cluster)
        PointSet rp(12, 2);
        Assignment ra(12);
        for (std::size_t i = 0; i < 12; ++i) {
            std::copy(pts[11 - i].begin(), pts[11 - i].end(), rp[i].begin());
            ra[i] = a[11 - i];
        }
        EXPECT_NEAR(potential(rp, ra, c), base, 1e-9 * base);

        const double sx = 3.25, sy = -7.5;
        PointSet tp = pts, tc = c;
        for (std::size_t i = 0; i < tp.size(); ++i) tp[i][0] += sx, tp[i][1] += sy;
        for (std::size_t i = 0; i < tc.size(); ++i) tc[i][0] += sx, tc[i][1] += sy;
        EXPECT_NEAR(potential(tp, a, tc), base, 1e-9 * base);
    }
}

TEST(Potential, CentersOfMassAreOptimalForFixedAssignment) {
    Rng rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const auto pts = random_points(15, 3, 300 + rep);
        Assignment a(15);
        for (std::size_t i = 0; i < 15; ++i) a[i] = i % 3;  // every cluster non-empty
        PointSet cm(3, 3);
        for (std::size_t c = 0; c < 3; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < 15; ++i)
                if (a[i] == c) members.push_back(i);
            const auto m = center_of_mass(pts, members);
            std::copy(m.begin(), m.end(), cm[c].begin());
        }
        const auto other = random_points(3, 3, 900 + rep);
        EXPECT_LE(potential(pts, a, cm), potential(pts, a, other));
    }
}

TEST(CenterOfMass, Basic) {
    const auto pts = PointSet::from_rows({{0, 0}, {2, 0}, {1, 1}});
    EXPECT_EQ(center_of_mass(pts, std::vector<std::size_t>{0, 1}), (Point{1, 0}));
    EXPECT_EQ(center_of_mass(pts, std::vector<std::size_t>{2}), (Point{1, 1}));
}

TEST(CenterOfMass, MatchesExtendedPrecisionMean) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto pts = random_points(5, 4, seed, 100.0);
        const auto got = center_of_mass(pts);
        for (std::size_t j = 0; j < 4; ++j) {
            long double s = 0.0L;
            for (std::size_t i = 0; i < 5; ++i) s += pts[i][j];
            const double want = static_cast<double>(s / 5.0L);
            EXPECT_NEAR(got[j], want, 1e-14 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST(CenterOfMass, EmptySubsetThrows) {
    const auto pts = PointSet::from_rows({{0, 0}});
    try {
        center_of_mass(pts, std::vector<std::size_t>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyCluster);
    }
}

TEST(AssignNearest, MovesToStrictlyCloser) {
    const auto c = PointSet::from_rows({{0, 0}, {5, 0}});
    EXPECT_EQ(assign_nearest(Point{1, 0}, c, 1), 0u);
}

TEST(AssignNearest, StaysOnTie) {
    const auto c = PointSet::from_rows({{0, 0}, {2, 0}});
    EXPECT_EQ(assign_nearest(Point{1, 0}, c, 1), 1u);
    EXPECT_EQ(assign_nearest(Point{1, 0}, c, 0), 0u);
}

TEST(AssignNearest, LowestIndexAmongStrictlyCloserTies) {
    const auto c = PointSet::from_rows({{5, 5}, {0, 1}, {0, -1}, {10, 0}});
    EXPECT_EQ(assign_nearest(Point{0, 0}, c, 3), 1u);
    EXPECT_EQ(assign_nearest(Point{0, 0}, c), 1u);
}

TEST(AssignNearest, FuzzAgainstExhaustiveArgminAndIdempotent) {
    Rng rng(11);
    for (int rep = 0; rep < 2000; ++rep) {
        const std::size_t k = 1 + rng.below(8);
        const auto c = random_points(k, 3, 5000 + rep);
        const auto x = random_points(1, 3, 9000 + rep);
        const std::size_t current = rng.below(k);
        const std::size_t got = assign_nearest(x[0], c, current);
        double best = INFINITY;
        for (std::size_t i = 0; i < k; ++i) best = std::min(best, squared_distance(x[0], c[i]));
        EXPECT_LE(squared_distance(x[0], c[got]), best * (1 + 1e-12));
        EXPECT_EQ(assign_nearest(x[0], c, got), got);
    }
}

TEST(BisectorDistance, AxisAligned) {
    EXPECT_DOUBLE_EQ(bisector_distance(Point{1, 0}, Point{0, 0}, Point{4, 0}), 1.0);
    EXPECT_DOUBLE_EQ(bisector_distance(Point{2, 7}, Point{0, 0}, Point{4, 0}), 0.0);
}

TEST(BisectorDistance, MatchesExplicitHyperplaneProjection) {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto t = random_points(3, 3, seed, 4.0);
        const auto x = t[0], ci = t[1], cj = t[2];
        // hyperplane {y : n·y = b} through the midpoint with normal cj - ci
        double nrm[3], mid[3], len = 0.0;
        for (int j = 0; j < 3; ++j) {
            nrm[j] = cj[j] - ci[j];
            mid[j] = 0.5 * (ci[j] + cj[j]);
            len += nrm[j] * nrm[j];
        }
        len = std::sqrt(len);
        double b = 0.0, proj = 0.0;
        for (int j = 0; j < 3; ++j) {
            nrm[j] /= len;
            b += nrm[j] * mid[j];
            proj += nrm[j] * x[j];
        }
        // projected foot must lie on the plane; distance is |x - foot|
        double foot[3], dist2 = 0.0;
        for (int j = 0; j < 3; ++j) {
            foot[j] = x[j] - (proj - b) * nrm[j];
            dist2 += (x[j] - foot[j]) * (x[j] - foot[j]);
        }
        EXPECT_NEAR(bisector_distance(x, ci, cj), std::sqrt(dist2), 1e-12 * (1 + std::sqrt(dist2)));
        EXPECT_DOUBLE_EQ(bisector_distance(x, ci, cj), bisector_distance(x, cj, ci));
    }
}

TEST(BisectorDistance, CoincidentCentersThrow) {
    try {
        bisector_distance(Point{1, 0}, Point{2, 2}, Point{2, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DegenerateBisector);
    }
}

TEST(MinCenterDistance, Examples) {
    EXPECT_DOUBLE_EQ(*min_center_distance(PointSet::from_rows({{0, 0}, {3, 4}, {10, 0}})), 5.0);
    EXPECT_DOUBLE_EQ(*min_center_distance(PointSet::from_rows({{1, 1}, {1, 1}})), 0.0);
    EXPECT_FALSE(min_center_distance(PointSet::from_rows({{1, 1}})).has_value());
    EXPECT_FALSE(min_center_distance(PointSet::from_rows({{1, 1}, {2, 2}}), {false, true}).has_value());
}

TEST(MinCenterDistance, EmptyFlaggedCentersExcluded) {
    const auto c = PointSet::from_rows({{0, 0}, {0.1, 0}, {3, 4}});
    EXPECT_DOUBLE_EQ(*min_center_distance(c, {false, true, false}), 5.0);
}

TEST(MinCenterDistance, MatchesExhaustivePairs) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto c = random_points(8, 2, seed);
        double best = INFINITY;
        for (std::size_t a = 0; a < 8; ++a)
            for (std::size_t b = 0; b < 8; ++b)
                if (a != b) {
                    const double dx = c[a][0] - c[b][0], dy = c[a][1] - c[b][1];
                    best = std::min(best, std::sqrt(dx * dx + dy * dy));
                }
        EXPECT_EQ(*min_center_distance(c), best);
    }
}

TEST(Instance, ValidateRejectsNonFinite) {
    Instance inst{PointSet::from_rows({{0, NAN}}), {}};
    EXPECT_THROW(inst.validate(), Error);
    Instance empty;
    EXPECT_THROW(empty.validate(), Error);
    EXPECT_THROW(PointSet::from_rows({{0, 1}, {2}}), Error);
}
