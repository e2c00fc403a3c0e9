#pragma once

// Smoothed input model: adversarial means in [0,1]^d plus independent
// Gaussian noise of standard deviation sigma on every coordinate.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smoothkm/core_model.hpp"
#include "smoothkm/rng.hpp"

namespace smoothkm {

enum class MeanGenerator { UniformGrid, UniformRandom, FromFile };

constexpr std::string_view to_string(MeanGenerator g) {
    switch (g) {
        case MeanGenerator::UniformGrid: return "uniform-grid";
        case MeanGenerator::UniformRandom: return "uniform-random";
        case MeanGenerator::FromFile: return "from-file";
    }
    return "unknown";
}

inline MeanGenerator parse_mean_generator(std::string_view s) {
    if (s == "uniform-grid") return MeanGenerator::UniformGrid;
    if (s == "uniform-random") return MeanGenerator::UniformRandom;
    if (s == "from-file") return MeanGenerator::FromFile;
    throw Error(Errc::InvalidArgument, "unknown mean generator '" + std::string(s) + "'");
}

/// First n points, in lexicographic order, of the regular grid with
/// ceil(n^(1/d)) nodes per axis spanning [0,1]^d.
inline PointSet uniform_grid_means(std::size_t n, std::size_t d) {
    std::size_t side = 1;
    while (true) {
        double cells = 1.0;
        for (std::size_t j = 0; j < d; ++j) cells *= static_cast<double>(side);
        if (cells >= static_cast<double>(n)) break;
        ++side;
    }
    PointSet out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        for (std::size_t j = d; j-- > 0;) {
            const std::size_t node = rem % side;
            rem /= side;
            out[i][j] = side == 1 ? 0.5 : static_cast<double>(node) / static_cast<double>(side - 1);
        }
    }
    return out;
}

inline PointSet uniform_random_means(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x6d65616eULL));
    PointSet out(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i][j] = rng.uniform01();
    return out;
}

inline PointSet make_means(MeanGenerator g, std::size_t n, std::size_t d, std::uint64_t seed) {
    switch (g) {
        case MeanGenerator::UniformGrid: return uniform_grid_means(n, d);
        case MeanGenerator::UniformRandom: return uniform_random_means(n, d, seed);
        case MeanGenerator::FromFile: break;
    }
    throw Error(Errc::InvalidArgument, "from-file means must be loaded, not generated");
}

/// Warnings for mean coordinates outside [0,1]. Such means are allowed.
inline std::vector<std::string> validate_means(const PointSet& means) {
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < means.size(); ++i)
        for (double v : means[i])
            if (!(v >= 0.0 && v <= 1.0)) {
                warnings.push_back("mean " + std::to_string(i) + " has a coordinate outside [0,1]");
                break;
            }
    return warnings;
}

enum class ClampReason { None, BelowOne, NonPositiveLog };

struct HypercubeD {
    double value = 1.0;
    ClampReason clamp = ClampReason::None;
    double log_argument = 0.0;  // ln(n^{1+κkd} d σ)
};

/// D = sqrt(2σ² ln(n^{1+κkd}·d·σ)), with the logarithm expanded term by term
/// and the result clamped to at least 1.
inline HypercubeD hypercube_D(std::size_t n, std::size_t d, std::size_t k, double sigma, double kappa = 1.0) {
    if (n < 1 || d < 1 || k < 1) throw Error(Errc::InvalidArgument, "n, d, k must be >= 1");
    if (!(sigma > 0.0)) throw Error(Errc::InvalidSigma, "sigma must be positive");
    HypercubeD out;
    const double kd = static_cast<double>(k) * static_cast<double>(d);
    out.log_argument = (1.0 + kappa * kd) * std::log(static_cast<double>(n)) +
                       std::log(static_cast<double>(d)) + std::log(sigma);
    if (out.log_argument <= 0.0) {
        out.value = 1.0;
        out.clamp = ClampReason::NonPositiveLog;
        return out;
    }
    const double raw = std::sqrt(2.0 * sigma * sigma * out.log_argument);
    if (raw < 1.0) {
        out.value = 1.0;
        out.clamp = ClampReason::BelowOne;
    } else {
        out.value = raw;
    }
    return out;
}

/// Adds N(0, σ²) noise to every coordinate. Point i draws from its own stream
/// seeded by (seed, i), so the result does not depend on evaluation order.
inline Instance perturb(const PointSet& means, double sigma, std::uint64_t seed, double kappa = 1.0,
                        std::size_t k_for_D = 1) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(Errc::InvalidSigma, "sigma must be positive and finite");
    if (means.size() == 0) throw Error(Errc::InvalidArgument, "no means");
    Instance inst;
    inst.points = means;
    for (std::size_t i = 0; i < means.size(); ++i) {
        Rng rng(derive_seed(seed, i));
        for (double& v : inst.points[i]) v += sigma * rng.normal();
    }
    inst.meta = PerturbationMeta{means, sigma, seed, kappa,
                                 hypercube_D(means.size(), means.dim(), k_for_D, sigma, kappa).value};
    return inst;
}

struct TailCheck {
    double empirical = 0.0;
    double bound = 0.0;
    double sampling_error = 0.0;
    std::size_t samples = 0;
    bool in_lemma_range = true;  // t >= 1

    bool passed() const { return empirical <= bound + 3.0 * sampling_error; }
};

/// Monte Carlo estimate of Pr[x ∉ [−t, 1+t]] for x ~ N(mu, σ²) against σ·exp(−t²/2σ²).
inline TailCheck tail_probability_check(double sigma, double t, double mu, std::size_t samples,
                                        std::uint64_t seed) {
    if (!(sigma > 0.0)) throw Error(Errc::InvalidSigma, "sigma must be positive");
    if (samples == 0) throw Error(Errc::InvalidArgument, "samples must be positive");
    TailCheck out;
    out.in_lemma_range = t >= 1.0;
    out.samples = samples;
    out.bound = sigma * std::exp(-t * t / (2.0 * sigma * sigma));
    Rng rng(derive_seed(seed, 0x7461696cULL));
    std::size_t outside = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = rng.normal(mu, sigma);
        if (x < -t || x > 1.0 + t) ++outside;
    }
    out.empirical = static_cast<double>(outside) / static_cast<double>(samples);
    out.sampling_error = std::sqrt(std::min(out.bound, 1.0) / static_cast<double>(samples));
    return out;
}

struct Rescaled {
    PointSet means;
    double sigma = 1.0;
    double scale_factor = 1.0;  // multiply original coordinates by this
    bool applied = false;
};

/// For σ > 1: shrink the means by 1/σ and use unit noise. σ <= 1 is a no-op.
inline Rescaled rescale_for_large_sigma(const PointSet& means, double sigma) {
    Rescaled out{means, sigma, 1.0, false};
    if (!(sigma > 1.0)) return out;
    out.applied = true;
    out.sigma = 1.0;
    out.scale_factor = 1.0 / sigma;
    for (std::size_t i = 0; i < out.means.size(); ++i)
        for (double& v : out.means[i]) v /= sigma;
    return out;
}

// ---- instance files -------------------------------------------------------
//
// {"schema":1, "dim":d, "n":n, "sigma":s, "seed":u, "kappa":κ,
//  "means":[[...],...], "points":[[...],...]}
// "points" holds realized coordinates; when present no perturbation happens.

inline constexpr int kInstanceSchema = 1;

namespace detail {
inline nlohmann::json rows_json(const PointSet& ps) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < ps.size(); ++i) out.push_back(ps.row(i));
    return out;
}
inline PointSet rows_from(const nlohmann::json& j, std::string_view field) {
    try {
        return PointSet::from_rows(j.get<std::vector<Point>>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, std::string(field) + ": " + e.what());
    }
}
}  // namespace detail

inline nlohmann::ordered_json instance_to_json(const Instance& inst) {
    nlohmann::ordered_json j;
    j["schema"] = kInstanceSchema;
    j["dim"] = inst.dim();
    j["n"] = inst.n();
    if (inst.meta) {
        j["sigma"] = inst.meta->sigma;
        j["seed"] = inst.meta->seed;
        j["kappa"] = inst.meta->kappa;
        j["means"] = detail::rows_json(inst.meta->means);
    }
    j["points"] = detail::rows_json(inst.points);
    return j;
}

/// Parses an instance document. Without "points", perturbs "means" using the
/// document's sigma/seed, or the overrides when given.
inline Instance instance_from_json(const nlohmann::json& j, std::optional<double> sigma_override = {},
                                   std::optional<std::uint64_t> seed_override = {}) {
    if (j.contains("schema") && j.at("schema").get<int>() != kInstanceSchema)
        throw Error(Errc::Parse, "unsupported instance schema");
    Instance inst;
    if (j.contains("points")) {
        inst.points = detail::rows_from(j.at("points"), "points");
        if (j.contains("means") && j.contains("sigma")) {
            PerturbationMeta m;
            m.means = detail::rows_from(j.at("means"), "means");
            m.sigma = j.at("sigma").get<double>();
            m.seed = j.value("seed", std::uint64_t{0});
            m.kappa = j.value("kappa", 1.0);
            m.D = hypercube_D(inst.n(), inst.dim(), 1, m.sigma, m.kappa).value;
            inst.meta = std::move(m);
        }
    } else if (j.contains("means")) {
        const PointSet means = detail::rows_from(j.at("means"), "means");
        std::optional<double> sigma = sigma_override;
        if (!sigma && j.contains("sigma")) sigma = j.at("sigma").get<double>();
        std::optional<std::uint64_t> seed = seed_override;
        if (!seed && j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
        if (!sigma) throw Error(Errc::MissingField, "sigma");
        if (!seed) throw Error(Errc::MissingField, "seed");
        inst = perturb(means, *sigma, *seed, j.value("kappa", 1.0));
    } else {
        throw Error(Errc::MissingField, "points or means");
    }
    if (j.contains("dim") && j.at("dim").get<std::size_t>() != inst.dim())
        throw Error(Errc::DimensionMismatch, "declared dim does not match coordinates");
    if (j.contains("n") && j.at("n").get<std::size_t>() != inst.n())
        throw Error(Errc::DimensionMismatch, "declared n does not match coordinates");
    inst.validate();
    return inst;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::Io, "cannot open " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, path + ": " + e.what());
    }
}

inline Instance load_instance_file(const std::string& path, std::optional<double> sigma_override = {},
                                   std::optional<std::uint64_t> seed_override = {}) {
    return instance_from_json(read_json_file(path), sigma_override, seed_override);
}

inline void save_instance_file(const std::string& path, const Instance& inst) {
    std::ofstream os(path);
    if (!os) throw Error(Errc::Io, "cannot open " + path + " for writing");
    os << instance_to_json(inst).dump(1) << '\n';
}

}  // namespace smoothkm
