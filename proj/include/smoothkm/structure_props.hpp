#pragma once

// Checkers for the structural properties used in the running-time analysis
// (ε-separated, δ-sparse, ε-spreaded) and the associated constants, all
// carried in log space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "smoothkm/core_model.hpp"
#include "smoothkm/lloyd.hpp"
#include "smoothkm/perturbation.hpp"

namespace smoothkm {

enum class VerdictStatus { Holds, Violated, Unknown };

constexpr std::string_view to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::Holds: return "Holds";
        case VerdictStatus::Violated: return "Violated";
        case VerdictStatus::Unknown: return "Unknown";
    }
    return "?";
}

/// {x : normal·x = offset}, unit normal.
struct Hyperplane {
    Point normal;
    double offset = 0.0;

    double distance(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t j = 0; j < normal.size(); ++j) s += normal[j] * x[j];
        return std::abs(s - offset);
    }
};

/// (s/t)·cm(subset).
struct KeyValue {
    std::int64_t s = 1;
    std::int64_t t = 1;
    std::vector<std::size_t> subset;
    Point value;
};

struct Witness {
    std::vector<std::size_t> points;
    std::optional<Hyperplane> hyperplane;
    std::optional<std::pair<double, double>> interval;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<KeyValue> key_values;  // K1, K2, K3, K4
    std::string description;
};

struct PropertyVerdict {
    VerdictStatus status = VerdictStatus::Unknown;
    std::optional<Witness> witness;
    std::string note;

    bool holds() const { return status == VerdictStatus::Holds; }
    bool violated() const { return status == VerdictStatus::Violated; }
};

// ---- constants -------------------------------------------------------------

/// ln ε for the bisector-distance threshold
/// ε = σ⁴/(32n²dD²) · (σ/(3Dn^{3+2κ}))^{4a}.
inline double lemma_epsilon_log(double n, double d, double k, double a, double sigma, double D,
                                double kappa = 1.0) {
    if (a < 1.0 || a > k) throw Error(Errc::InvalidArgument, "a must lie in [1, k]");
    if (!(sigma > 0.0) || !(D > 0.0)) throw Error(Errc::InvalidArgument, "sigma and D must be positive");
    const double ln = std::log(n);
    return 4.0 * std::log(sigma) - std::log(32.0) - 2.0 * ln - std::log(d) - 2.0 * std::log(D) +
           4.0 * a * (std::log(sigma) - std::log(3.0) - std::log(D) - (3.0 + 2.0 * kappa) * ln);
}

struct LemmaConstants {
    double kappa = 1.0;
    double W_log = 0.0;  // κkd·ln n
    double eps_log = 0.0;
    double D = 1.0;
    ClampReason D_clamp = ClampReason::None;
    std::size_t a = 1;
};

inline LemmaConstants lemma_constants(std::size_t n, std::size_t d, std::size_t k, std::size_t a,
                                      double sigma, double kappa = 1.0,
                                      std::optional<double> D_override = {}) {
    LemmaConstants c;
    c.kappa = kappa;
    c.a = a;
    c.W_log = kappa * static_cast<double>(k) * static_cast<double>(d) * std::log(static_cast<double>(n));
    if (D_override) {
        c.D = *D_override;
    } else {
        const auto hd = hypercube_D(n, d, k, sigma, kappa);
        c.D = hd.value;
        c.D_clamp = hd.clamp;
    }
    c.eps_log = lemma_epsilon_log(static_cast<double>(n), static_cast<double>(d), static_cast<double>(k),
                                  static_cast<double>(a), sigma, c.D, kappa);
    return c;
}

/// exp(log_value) when |log_value| < 700, else empty.
inline std::optional<double> materialize(double log_value) {
    if (std::isinf(log_value) && log_value < 0) return 0.0;
    if (std::abs(log_value) < 700.0) return std::exp(log_value);
    return std::nullopt;
}

struct DropContext {
    std::optional<double> n, d, k, a, delta, eps, eps_log, Delta, D;
};

enum class DropBound { DeltaSparse, EpsSeparated, Spreaded1D, UpperSequence };

struct NamedBound {
    DropBound kind;
    std::string name;
    double log_value = 0.0;
    std::optional<double> value;
    std::string applies_when;
};

namespace detail {
inline double need(const std::optional<double>& v, const char* field) {
    if (!v) throw Error(Errc::MissingField, field);
    return *v;
}
inline double eps_log_of(const DropContext& c) {
    if (c.eps_log) return *c.eps_log;
    return std::log(need(c.eps, "eps"));
}
}  // namespace detail

inline NamedBound drop_lower_bound(DropBound kind, const DropContext& c) {
    using detail::need;
    NamedBound b{kind, {}, 0.0, {}, {}};
    switch (kind) {
        case DropBound::DeltaSparse:
            b.name = "delta_sparse";
            b.log_value = 2.0 * std::log(need(c.delta, "delta")) - std::log(4.0) - 4.0 * std::log(need(c.n, "n"));
            b.applies_when = "delta-sparse instance; 4 consecutive non-terminal iterations, each with <= sqrt(k) "
                             "active clusters and every cluster gaining/losing <= 2d*sqrt(k) points";
            break;
        case DropBound::EpsSeparated:
            b.name = "eps_separated";
            b.log_value = std::log(2.0) + 2.0 * detail::eps_log_of(c) - std::log(need(c.n, "n"));
            b.applies_when = "eps-separated instance; iteration with <= sqrt(k) active clusters and some "
                             "cluster gaining/losing > 2d*sqrt(k) points";
            break;
        case DropBound::Spreaded1D:
            b.name = "spreaded_1d";
            b.log_value = 2.0 * detail::eps_log_of(c) - std::log(4.0) - 2.0 * std::log(need(c.n, "n"));
            b.applies_when = "d = 1, eps-spreaded instance; every iteration that reassigns a point";
            break;
        case DropBound::UpperSequence: {
            b.name = "upper_sequence";
            const double d = need(c.d, "d");
            const double k = need(c.k, "k");
            const double a = need(c.a, "a");
            const double Delta = need(c.Delta, "Delta");
            const double D = need(c.D, "D");
            const double min_sq = std::min(Delta * Delta, 1.0);
            b.log_value = 2.0 * detail::eps_log_of(c) + std::log(min_sq) - std::log(36.0) - std::log(d) -
                          2.0 * std::log(D) - (k * d / a) * std::log(k);
            b.applies_when = "any k^{kd/a}+1 consecutive steps after the first, with Delta the smallest "
                             "center distance in the window";
            break;
        }
    }
    b.value = materialize(b.log_value);
    return b;
}

inline std::vector<NamedBound> drop_lower_bounds(
    const DropContext& c, const std::vector<DropBound>& kinds = {DropBound::DeltaSparse, DropBound::EpsSeparated,
                                                                 DropBound::Spreaded1D, DropBound::UpperSequence}) {
    std::vector<NamedBound> out;
    for (DropBound kind : kinds) out.push_back(drop_lower_bound(kind, c));
    return out;
}

/// Iteration qualifies for the ε-separated drop: at most √k active clusters
/// and some cluster gaining or losing more than 2d√k points.
inline bool eps_separated_drop_applies(const IterationRecord& rec, std::size_t k, std::size_t d) {
    const double rk = std::sqrt(static_cast<double>(k));
    if (static_cast<double>(rec.active_clusters) > rk) return false;
    const auto flow = cluster_exchange_counts(rec, k);
    const double limit = 2.0 * static_cast<double>(d) * rk;
    return std::any_of(flow.begin(), flow.end(), [&](std::size_t f) { return static_cast<double>(f) > limit; });
}

// ---- ε-separated -----------------------------------------------------------

namespace detail {

inline std::vector<std::size_t> sorted_order_1d(const PointSet& points) {
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return points[a][0] < points[b][0]; });
    return idx;
}

inline double binomial(std::size_t n, std::size_t r) {
    if (r > n) return 0.0;
    double out = 1.0;
    for (std::size_t i = 0; i < r; ++i) out = out * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return out;
}

/// Calls f(subset) for every r-subset in lexicographic order until f returns true.
template <class F>
bool for_each_subset(std::size_t n, std::size_t r, F&& f) {
    if (r > n) return false;
    std::vector<std::size_t> s(r);
    std::iota(s.begin(), s.end(), std::size_t{0});
    while (true) {
        if (f(std::as_const(s))) return true;
        std::size_t i = r;
        while (i > 0 && s[i - 1] == n - r + i - 1) --i;
        if (i == 0) return false;
        ++s[i - 1];
        for (std::size_t j = i; j < r; ++j) s[j] = s[j - 1] + 1;
    }
}

}  // namespace detail

struct StripResult {
    double width = std::numeric_limits<double>::infinity();
    Hyperplane center_line;
    std::vector<std::size_t> points;
};

/// Exact minimum width of a closed strip containing `m` points of a planar set.
/// The thinnest strip around any m-subset has a convex hull edge (a,b) on its
/// boundary, so it suffices to scan every pair and, on each side of line ab,
/// take the m−2 nearest remaining points. O(n³ log n).
inline StripResult min_strip_width_2d(const PointSet& points, std::size_t m) {
    const std::size_t n = points.size();
    StripResult best;
    if (points.dim() != 2) throw Error(Errc::WrongDimension, "planar strip width needs d = 2");
    if (m > n || m < 2) return best;

    // m coincident points: width 0.
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> same{i};
        for (std::size_t j = 0; j < n && same.size() < m; ++j)
            if (j != i && points[j][0] == points[i][0] && points[j][1] == points[i][1]) same.push_back(j);
        if (same.size() == m) {
            best.width = 0.0;
            best.center_line = {{1.0, 0.0}, points[i][0]};
            best.points = same;
            return best;
        }
    }

    std::vector<std::pair<double, std::size_t>> plus, minus;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const double ex = points[b][0] - points[a][0];
            const double ey = points[b][1] - points[a][1];
            const double len = std::hypot(ex, ey);
            if (len == 0.0) continue;
            const Point u{-ey / len, ex / len};
            const double base = u[0] * points[a][0] + u[1] * points[a][1];
            plus.clear();
            minus.clear();
            for (std::size_t c = 0; c < n; ++c) {
                if (c == a || c == b) continue;
                const double s = u[0] * points[c][0] + u[1] * points[c][1] - base;
                if (s >= 0.0) plus.emplace_back(s, c);
                if (s <= 0.0) minus.emplace_back(-s, c);
            }
            for (int side = 0; side < 2; ++side) {
                auto& v = side == 0 ? plus : minus;
                const std::size_t need = m - 2;
                if (v.size() < need) continue;
                double w = 0.0;
                if (need > 0) {
                    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(need - 1), v.end());
                    w = v[need - 1].first;
                }
                if (w < best.width) {
                    best.width = w;
                    const double sign = side == 0 ? 1.0 : -1.0;
                    best.center_line = {u, base + sign * w / 2.0};
                    best.points = {a, b};
                    if (need > 0) {
                        std::sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(need));
                        for (std::size_t q = 0; q < need; ++q) best.points.push_back(v[q].second);
                    }
                }
            }
        }
    }
    return best;
}

inline constexpr std::size_t kDefaultSubsetBudget = 1'000'000;

/// ε-separated: every hyperplane has at most 2d points within distance ε.
/// d = 1 and d = 2 are decided exactly. For d >= 3 a (2d+1)-subset whose
/// extent along its smallest principal axis is <= 2ε proves a violation;
/// otherwise the verdict is Unknown.
inline PropertyVerdict check_eps_separated(const PointSet& points, double eps,
                                           std::size_t subset_budget = kDefaultSubsetBudget) {
    if (!(eps > 0.0)) throw Error(Errc::InvalidArgument, "eps must be positive");
    const std::size_t n = points.size();
    const std::size_t d = points.dim();
    const std::size_t m = 2 * d + 1;
    PropertyVerdict v;
    if (n < m) {
        v.status = VerdictStatus::Holds;
        v.note = "fewer than 2d+1 points";
        return v;
    }
    if (d == 1) {
        const auto idx = detail::sorted_order_1d(points);
        for (std::size_t i = 0; i + 2 < n; ++i) {
            const double lo = points[idx[i]][0], hi = points[idx[i + 2]][0];
            if (hi - lo <= 2.0 * eps) {
                Witness w;
                w.points = {idx[i], idx[i + 1], idx[i + 2]};
                w.hyperplane = Hyperplane{{1.0}, (lo + hi) / 2.0};
                w.description = "3 points within eps of a point";
                v.status = VerdictStatus::Violated;
                v.witness = std::move(w);
                return v;
            }
        }
        v.status = VerdictStatus::Holds;
        return v;
    }
    if (d == 2) {
        const auto strip = min_strip_width_2d(points, m);
        if (strip.width <= 2.0 * eps) {
            Witness w;
            w.points = strip.points;
            w.hyperplane = strip.center_line;
            w.description = "5 points within eps of a line";
            v.status = VerdictStatus::Violated;
            v.witness = std::move(w);
        } else {
            v.status = VerdictStatus::Holds;
        }
        return v;
    }

    if (detail::binomial(n, m) > static_cast<double>(subset_budget)) {
        v.status = VerdictStatus::Unknown;
        v.note = "subset enumeration exceeds budget of " + std::to_string(subset_budget);
        return v;
    }
    const bool found = detail::for_each_subset(n, m, [&](const std::vector<std::size_t>& sub) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < d; ++j) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = points[sub[r]][j];
        const Eigen::RowVectorXd mean = X.colwise().mean();
        const Eigen::MatrixXd centered = X.rowwise() - mean;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(centered.transpose() * centered);
        const Eigen::VectorXd u = es.eigenvectors().col(0);  // ascending eigenvalues
        const Eigen::VectorXd proj = X * u;
        const double lo = proj.minCoeff(), hi = proj.maxCoeff();
        if (hi - lo <= 2.0 * eps) {
            Witness w;
            w.points = sub;
            w.hyperplane = Hyperplane{Point(u.data(), u.data() + u.size()), (lo + hi) / 2.0};
            w.description = "2d+1 points within eps of the subset's principal hyperplane";
            v.status = VerdictStatus::Violated;
            v.witness = std::move(w);
            return true;
        }
        return false;
    });
    if (!found) {
        v.status = VerdictStatus::Unknown;
        v.note = "no principal-axis witness; d >= 3 is not certified";
    }
    return v;
}

/// Re-derives a separation violation from its witness alone.
inline bool witness_confirms_separation_violation(const PointSet& points, double eps, const Witness& w) {
    if (!w.hyperplane || w.points.size() < 2 * points.dim() + 1) return false;
    const double tol = 1e-12 * (1.0 + eps);
    return std::all_of(w.points.begin(), w.points.end(),
                       [&](std::size_t i) { return w.hyperplane->distance(points[i]) <= eps + tol; });
}

// ---- ε-spreaded (d = 1) ----------------------------------------------------

/// ε-spreaded: no closed interval of length ε holds three points, and there are
/// no two pairs (x1,x2), (x3,x4), each within ε, that use distinct points apart
/// from the allowed coincidence x2 = x3. Any two distinct close pairs either
/// share a point or are disjoint, so the second condition fails exactly when
/// two or more pairs lie within ε.
inline PropertyVerdict check_eps_spreaded(const PointSet& points, double eps) {
    if (points.dim() != 1) throw Error(Errc::WrongDimension, "spreadedness is defined for d = 1");
    if (!(eps >= 0.0)) throw Error(Errc::InvalidArgument, "eps must be non-negative");
    const std::size_t n = points.size();
    const auto idx = detail::sorted_order_1d(points);
    auto x = [&](std::size_t r) { return points[idx[r]][0]; };
    PropertyVerdict v;

    for (std::size_t i = 0; i + 2 < n; ++i)
        if (x(i + 2) - x(i) <= eps) {
            Witness w;
            w.points = {idx[i], idx[i + 1], idx[i + 2]};
            w.interval = std::make_pair(x(i), x(i) + eps);
            w.description = "interval of length eps with three points";
            v.status = VerdictStatus::Violated;
            v.witness = std::move(w);
            return v;
        }

    std::vector<std::pair<std::size_t, std::size_t>> close;
    for (std::size_t i = 0; i < n && close.size() < 2; ++i)
        for (std::size_t j = i + 1; j < n && x(j) - x(i) <= eps && close.size() < 2; ++j)
            close.emplace_back(idx[i], idx[j]);
    if (close.size() >= 2) {
        Witness w;
        w.pairs = close;
        w.points = {close[0].first, close[0].second, close[1].first, close[1].second};
        w.description = "two pairs within eps";
        v.status = VerdictStatus::Violated;
        v.witness = std::move(w);
        return v;
    }
    v.status = VerdictStatus::Holds;
    return v;
}

inline bool witness_confirms_spreaded_violation(const PointSet& points, double eps, const Witness& w) {
    if (w.interval) {
        if (w.points.size() < 3) return false;
        if (w.interval->second - w.interval->first > eps * (1 + 1e-15) + 1e-300) return false;
        return std::all_of(w.points.begin(), w.points.end(), [&](std::size_t i) {
            return points[i][0] >= w.interval->first && points[i][0] <= w.interval->second;
        });
    }
    if (w.pairs.size() != 2 || w.pairs[0] == w.pairs[1]) return false;
    return std::all_of(w.pairs.begin(), w.pairs.end(), [&](const auto& p) {
        return p.first != p.second && std::abs(points[p.first][0] - points[p.second][0]) <= eps;
    });
}

// ---- δ-sparse --------------------------------------------------------------

struct SparseCaps {
    std::int64_t s_cap = 4;
    std::int64_t t_cap = 3;
    std::size_t size_cap = 2;
};

inline constexpr std::size_t kDefaultPairBudget = 4'000'000;

namespace detail {
// Sparse coefficient vector over point indices, numerators over a common denominator.
using Coeffs = std::vector<std::pair<std::size_t, std::int64_t>>;

inline Coeffs add_coeffs(const Coeffs& a, const Coeffs& b) {
    Coeffs out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.push_back(b[j++]);
        } else {
            out.emplace_back(a[i].first, a[i].second + b[j].second);
            ++i;
            ++j;
        }
    }
    return out;
}
}  // namespace detail

/// δ-sparse: for all key-values K1..K4 (within caps) with ‖K1+K2−K3−K4‖ <= δ,
/// K1+K2 and K3+K4 have identical per-point coefficients. Coefficients are
/// compared as exact integers over a common denominator.
inline PropertyVerdict check_delta_sparse(const PointSet& points, double delta, const SparseCaps& caps = {},
                                          std::size_t pair_budget = kDefaultPairBudget) {
    if (!(delta >= 0.0)) throw Error(Errc::InvalidArgument, "delta must be non-negative");
    const std::size_t n = points.size();
    const std::size_t d = points.dim();
    PropertyVerdict v;
    const std::int64_t s_max = std::min<std::int64_t>(caps.s_cap, static_cast<std::int64_t>(n * n));
    const std::int64_t t_max = std::min<std::int64_t>(caps.t_cap, static_cast<std::int64_t>(n) - 1);
    const std::size_t size_max = std::min(caps.size_cap, n);
    if (s_max < 1 || t_max < 1 || size_max < 1) {
        v.status = VerdictStatus::Holds;
        v.note = "no key-values within caps";
        return v;
    }

    std::int64_t L = 1;
    for (std::int64_t t = 1; t <= t_max; ++t)
        for (std::size_t m = 1; m <= size_max; ++m) L = std::lcm(L, t * static_cast<std::int64_t>(m));

    struct Kv {
        KeyValue kv;
        detail::Coeffs coeffs;
    };
    std::map<detail::Coeffs, Kv> unique_kvs;
    for (std::size_t m = 1; m <= size_max; ++m) {
        detail::for_each_subset(n, m, [&](const std::vector<std::size_t>& sub) {
            const Point cm = center_of_mass(points, sub);
            for (std::int64_t t = 1; t <= t_max; ++t)
                for (std::int64_t s = 1; s <= s_max; ++s) {
                    const std::int64_t num = s * (L / (t * static_cast<std::int64_t>(m)));
                    detail::Coeffs c;
                    for (std::size_t i : sub) c.emplace_back(i, num);
                    if (unique_kvs.contains(c)) continue;
                    KeyValue kv{s, t, sub, cm};
                    for (double& x : kv.value) x *= static_cast<double>(s) / static_cast<double>(t);
                    unique_kvs.emplace(c, Kv{std::move(kv), c});
                }
            return false;
        });
    }
    std::vector<const Kv*> kvs;
    for (const auto& [c, kv] : unique_kvs) kvs.push_back(&kv);

    const double pairs = static_cast<double>(kvs.size()) * static_cast<double>(kvs.size() + 1) / 2.0;
    if (pairs > static_cast<double>(pair_budget)) {
        v.status = VerdictStatus::Unknown;
        v.note = "pair-sum enumeration exceeds budget of " + std::to_string(pair_budget);
        return v;
    }

    struct PairSum {
        Point value;
        std::size_t i, j;
    };
    std::map<detail::Coeffs, PairSum> sums;
    for (std::size_t i = 0; i < kvs.size(); ++i)
        for (std::size_t j = i; j < kvs.size(); ++j) {
            auto c = detail::add_coeffs(kvs[i]->coeffs, kvs[j]->coeffs);
            if (sums.contains(c)) continue;
            Point val = kvs[i]->kv.value;
            for (std::size_t q = 0; q < d; ++q) val[q] += kvs[j]->kv.value[q];
            sums.emplace(std::move(c), PairSum{std::move(val), i, j});
        }

    std::vector<const PairSum*> order;
    order.reserve(sums.size());
    for (const auto& [c, ps] : sums) order.push_back(&ps);
    std::stable_sort(order.begin(), order.end(),
                     [](const PairSum* a, const PairSum* b) { return a->value[0] < b->value[0]; });
    const double delta2 = delta * delta;
    for (std::size_t p = 0; p < order.size(); ++p)
        for (std::size_t q = p + 1; q < order.size() && order[q]->value[0] - order[p]->value[0] <= delta; ++q)
            if (squared_distance(order[p]->value, order[q]->value) <= delta2) {
                Witness w;
                w.key_values = {kvs[order[p]->i]->kv, kvs[order[p]->j]->kv, kvs[order[q]->i]->kv,
                                kvs[order[q]->j]->kv};
                w.description = "K1+K2 within delta of K3+K4 with different coefficients";
                for (const auto& kv : w.key_values)
                    w.points.insert(w.points.end(), kv.subset.begin(), kv.subset.end());
                v.status = VerdictStatus::Violated;
                v.witness = std::move(w);
                return v;
            }
    v.status = VerdictStatus::Holds;
    return v;
}

/// Per-point rational coefficient of a key-value as (numerator, denominator).
inline std::vector<std::pair<std::int64_t, std::int64_t>> key_value_coefficients(const KeyValue& kv, std::size_t n) {
    std::vector<std::pair<std::int64_t, std::int64_t>> c(n, {0, 1});
    const std::int64_t den = kv.t * static_cast<std::int64_t>(kv.subset.size());
    const std::int64_t g = std::gcd(kv.s, den);
    for (std::size_t i : kv.subset) c[i] = {kv.s / g, den / g};
    return c;
}

}  // namespace smoothkm
