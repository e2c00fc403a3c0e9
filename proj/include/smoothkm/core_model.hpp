#pragma once

// Domain types and exact geometric primitives for k-means.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smoothkm/error.hpp"

namespace smoothkm {

using Point = std::vector<double>;

/// Cluster index per point.
using Assignment = std::vector<std::size_t>;

inline constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

/// Dense row-major set of points sharing one dimension.
class PointSet {
public:
    PointSet() = default;

    PointSet(std::size_t count, std::size_t dim) : dim_(dim), data_(count * dim, 0.0) {}

    PointSet(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
        if (dim_ == 0 || data_.size() % dim_ != 0)
            throw Error(Errc::DimensionMismatch, "flat data length is not a multiple of dim");
    }

    static PointSet from_rows(const std::vector<Point>& rows) {
        if (rows.empty()) return {};
        PointSet out(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != out.dim_)
                throw Error(Errc::DimensionMismatch,
                            "row " + std::to_string(i) + " has dimension " +
                                std::to_string(rows[i].size()) + ", expected " +
                                std::to_string(out.dim_));
            std::copy(rows[i].begin(), rows[i].end(), out[i].begin());
        }
        return out;
    }

    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return data_.empty(); }

    std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<double> operator[](std::size_t i) { return {data_.data() + i * dim_, dim_}; }

    const std::vector<double>& data() const { return data_; }

    Point row(std::size_t i) const { return {(*this)[i].begin(), (*this)[i].end()}; }

    std::vector<Point> rows() const {
        std::vector<Point> out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) out.push_back(row(i));
        return out;
    }

    void push_back(std::span<const double> p) {
        if (dim_ == 0) dim_ = p.size();
        if (p.size() != dim_) throw Error(Errc::DimensionMismatch, "push_back dimension mismatch");
        data_.insert(data_.end(), p.begin(), p.end());
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    bool operator==(const PointSet&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Smoothed-analysis provenance of an instance.
struct PerturbationMeta {
    PointSet means;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    double kappa = 1.0;
    double D = 1.0;
};

struct Instance {
    PointSet points;
    std::optional<PerturbationMeta> meta;

    std::size_t n() const { return points.size(); }
    std::size_t dim() const { return points.dim(); }

    void validate() const {
        if (points.size() == 0) throw Error(Errc::InvalidArgument, "instance has no points");
        if (points.dim() == 0) throw Error(Errc::InvalidArgument, "instance dimension is zero");
        if (!points.all_finite()) throw Error(Errc::InvalidArgument, "instance has non-finite coordinates");
    }
};

/// Directed crossing of one point from one Voronoi cell into another.
struct BisectorCrossing {
    std::size_t point_index = 0;
    std::size_t from_cluster = 0;
    std::size_t to_cluster = 0;
    double distance_to_bisector = 0.0;

    bool operator==(const BisectorCrossing&) const = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

/// Sum over points of the squared distance to the center of the assigned cluster.
inline double potential(const PointSet& points, std::span<const std::size_t> assignment,
                        const PointSet& centers) {
    if (assignment.size() != points.size())
        throw Error(Errc::DimensionMismatch, "assignment length " + std::to_string(assignment.size()) +
                                                 " != point count " + std::to_string(points.size()));
    if (centers.dim() != points.dim())
        throw Error(Errc::DimensionMismatch, "center dimension " + std::to_string(centers.dim()) +
                                                 " != point dimension " + std::to_string(points.dim()));
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (assignment[i] >= centers.size())
            throw Error(Errc::DimensionMismatch, "assignment index out of range at point " + std::to_string(i));
        total += squared_distance(points[i], centers[assignment[i]]);
    }
    return total;
}

inline double potential(const Instance& instance, std::span<const std::size_t> assignment,
                        const PointSet& centers) {
    return potential(instance.points, assignment, centers);
}

/// Arithmetic mean of the listed points, summed in the given index order.
inline Point center_of_mass(const PointSet& points, std::span<const std::size_t> members) {
    if (members.empty()) throw Error(Errc::EmptyCluster, "center of mass of an empty subset");
    Point c(points.dim(), 0.0);
    for (std::size_t idx : members) {
        const auto p = points[idx];
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += p[j];
    }
    const double m = static_cast<double>(members.size());
    for (double& v : c) v /= m;
    return c;
}

inline Point center_of_mass(const PointSet& points) {
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return center_of_mass(points, all);
}

/// Nearest center under the strict-improvement rule: `current` is kept unless
/// another center is strictly closer; among strictly closer centers the lowest
/// index wins. Pass kUnassigned for a plain argmin with lowest-index ties.
inline std::size_t assign_nearest(std::span<const double> point, const PointSet& centers,
                                  std::size_t current = kUnassigned) {
    std::size_t best = current;
    double best_d = current == kUnassigned ? std::numeric_limits<double>::infinity()
                                           : squared_distance(point, centers[current]);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double dc = squared_distance(point, centers[c]);
        if (dc < best_d) {
            best_d = dc;
            best = c;
        }
    }
    // Strictly-closer ties resolve to the lowest index because the scan is
    // ascending and replaces only on strict improvement.
    return best;
}

/// Distance from `point` to the hyperplane bisecting ci and cj.
inline double bisector_distance(std::span<const double> point, std::span<const double> ci,
                                std::span<const double> cj) {
    const double gap2 = squared_distance(ci, cj);
    if (gap2 == 0.0) throw Error(Errc::DegenerateBisector, "bisector of coincident centers");
    const double diff = squared_distance(point, ci) - squared_distance(point, cj);
    return std::abs(diff) / (2.0 * std::sqrt(gap2));
}

/// Minimum pairwise distance among centers not flagged empty (Δ).
/// Empty optional when fewer than two centers are included.
inline std::optional<double> min_center_distance(const PointSet& centers,
                                                 const std::vector<bool>& empty_flags = {}) {
    std::vector<std::size_t> included;
    for (std::size_t c = 0; c < centers.size(); ++c)
        if (empty_flags.empty() || !empty_flags[c]) included.push_back(c);
    if (included.size() < 2) return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < included.size(); ++a)
        for (std::size_t b = a + 1; b < included.size(); ++b)
            best = std::min(best, squared_distance(centers[included[a]], centers[included[b]]));
    return std::sqrt(best);
}

}  // namespace smoothkm
