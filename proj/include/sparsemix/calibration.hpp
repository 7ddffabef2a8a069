#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sparsemix/error.hpp"
#include "sparsemix/mixture.hpp"
#include "sparsemix/normal.hpp"
#include "sparsemix/parallel.hpp"
#include "sparsemix/random.hpp"
#include "sparsemix/statistics.hpp"

namespace sparsemix {

enum class CalibrationMethod { Empirical, Thresh, EVI, EVII, Cal1, Cal2 };

inline constexpr std::array<CalibrationMethod, 6> kAllMethods{
    CalibrationMethod::Empirical, CalibrationMethod::Thresh, CalibrationMethod::EVI,
    CalibrationMethod::EVII,      CalibrationMethod::Cal1,   CalibrationMethod::Cal2};

constexpr std::string_view to_string(CalibrationMethod method) noexcept {
    switch (method) {
        case CalibrationMethod::Empirical: return "empirical";
        case CalibrationMethod::Thresh: return "thresh";
        case CalibrationMethod::EVI: return "evi";
        case CalibrationMethod::EVII: return "evii";
        case CalibrationMethod::Cal1: return "cal1";
        case CalibrationMethod::Cal2: return "cal2";
    }
    return "?";
}

inline std::optional<CalibrationMethod> parse_method(std::string_view text) {
    for (auto method : kAllMethods)
        if (to_string(method) == text) return method;
    return std::nullopt;
}

/// thresh/EVI/EVII exist for HC and BJ only, the limit-law calibrations for
/// ALR only; empirical works for everything.
constexpr bool method_supports(CalibrationMethod method, StatisticKind kind) noexcept {
    switch (method) {
        case CalibrationMethod::Empirical: return true;
        case CalibrationMethod::Thresh:
        case CalibrationMethod::EVI:
        case CalibrationMethod::EVII: return kind != StatisticKind::ALR;
        case CalibrationMethod::Cal1:
        case CalibrationMethod::Cal2: return kind == StatisticKind::ALR;
    }
    return false;
}

inline constexpr std::size_t kMinReplicates = 100;

/// Sorted Monte Carlo replicates of one statistic under H0. ALR replicates
/// are log values.
struct NullSample {
    StatisticKind kind = StatisticKind::HC;
    std::size_t n = 0;
    std::vector<double> replicates;
    std::uint64_t master_seed = 0;

    std::size_t size() const noexcept { return replicates.size(); }
    bool operator==(const NullSample&) const = default;
};

struct NullSimulationOptions {
    unsigned threads = 0;
    SamplerPath path = SamplerPath::Direct;
};

/// Simulates R null replicates and evaluates every requested statistic on
/// each of them. Replicate j is drawn from stream (master_seed, j), so the
/// samples returned here equal those of separate single-kind runs.
inline std::vector<NullSample> simulate_null_distributions(std::span<const StatisticKind> kinds, std::size_t n,
                                                           std::size_t replicates, std::uint64_t master_seed,
                                                           const NullSimulationOptions& options = {}) {
    require(n >= 2, ErrorCode::SampleTooSmall, "null simulation needs n >= 2");
    require(replicates >= kMinReplicates, ErrorCode::InsufficientReplicates,
            "need at least " + std::to_string(kMinReplicates) + " replicates");
    require(!kinds.empty(), ErrorCode::ConfigError, "no statistics requested");
    std::array<bool, 3> want{};
    for (auto kind : kinds) {
        require(kind != StatisticKind::ALR || n >= kMinAlrSampleSize, ErrorCode::SampleTooSmall,
                "ALR needs n >= 4, got " + std::to_string(n));
        want[index_of(kind)] = true;
    }

    const StatisticEvaluator evaluator(n);
    std::array<std::vector<double>, 3> values;
    for (std::size_t k = 0; k < 3; ++k)
        if (want[k]) values[k].resize(replicates);

    const unsigned workers = resolve_threads(options.threads);
    std::vector<SamplerWorkspace> workspaces(workers);
    parallel_for(replicates, workers, [&](unsigned worker, std::size_t begin, std::size_t end) {
        auto& ws = workspaces[worker];
        for (std::size_t j = begin; j < end; ++j) {
            auto rng = RandomStream{master_seed, j}.generator();
            const auto stats = evaluator.evaluate(fill_null(n, rng, ws, options.path), want);
            for (std::size_t k = 0; k < 3; ++k)
                if (want[k]) values[k][j] = stats[k];
        }
    });

    std::vector<NullSample> out;
    out.reserve(kinds.size());
    for (auto kind : kinds) {
        NullSample sample{kind, n, values[index_of(kind)], master_seed};
        std::sort(sample.replicates.begin(), sample.replicates.end());
        out.push_back(std::move(sample));
    }
    return out;
}

inline NullSample simulate_null_distribution(StatisticKind kind, std::size_t n, std::size_t replicates,
                                             std::uint64_t master_seed, const NullSimulationOptions& options = {}) {
    const std::array kinds{kind};
    return std::move(simulate_null_distributions(kinds, n, replicates, master_seed, options).front());
}

inline void require_alpha(double alpha) {
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, ErrorCode::AlphaOutOfRange,
            "alpha must lie in (0, 1), got " + std::to_string(alpha));
}

/// 1-based order-statistic index k = ceil((1 - alpha)(R + 1)), capped at R.
inline std::size_t empirical_cv_index(std::size_t replicates, double alpha) {
    require_alpha(alpha);
    const double target = (1.0 - alpha) * static_cast<double>(replicates + 1);
    // Absorb rounding when the product is an integer in exact arithmetic.
    const auto k = static_cast<std::size_t>(std::ceil(target - 1e-9 * target));
    return std::clamp<std::size_t>(k, 1, replicates);
}

/// Critical value for "reject iff statistic > cv" with size at most alpha.
inline double empirical_cv(const NullSample& sample, double alpha) {
    require_alpha(alpha);
    const double expected_exceedances = static_cast<double>(sample.size()) * alpha;
    require(expected_exceedances >= 5.0, ErrorCode::InsufficientReplicates,
            "R * alpha = " + std::to_string(expected_exceedances) + " < 5; quantile not estimable");
    return sample.replicates[empirical_cv_index(sample.size(), alpha) - 1];
}

/// Fraction of replicates strictly above cv.
inline double exceedance_fraction(const NullSample& sample, double cv) {
    const auto above = sample.replicates.end() -
                       std::upper_bound(sample.replicates.begin(), sample.replicates.end(), cv);
    return static_cast<double>(above) / static_cast<double>(sample.size());
}

// ----------------------------------------------------------------------------
// Asymptotic approximations for HC and BJ.

namespace detail {

inline void require_hc_or_bj(StatisticKind kind) {
    require(kind != StatisticKind::ALR, ErrorCode::UnsupportedStatistic,
            "asymptotic thresholds exist for hc and bj only");
}

inline double log_log_n(std::size_t n) {
    require(n >= 16, ErrorCode::DomainError, "asymptotic thresholds need n >= 16, got " + std::to_string(n));
    return std::log(std::log(static_cast<double>(n)));
}

// -log(-log(1 - alpha)): the Gumbel (E_v^1) upper quantile.
inline double gumbel_upper_quantile(double alpha) {
    require_alpha(alpha);
    return -std::log(-std::log1p(-alpha));
}

inline double to_hc_scale(double q) {
    require(q > 0.0, ErrorCode::NegativeQ, "q_alpha = " + std::to_string(q) + " <= 0; no HC threshold");
    return std::sqrt(2.0 * q);
}

}  // namespace detail

/// sqrt(2 log log n) for HC, log log n for BJ.
inline double thresh_cv(StatisticKind kind, std::size_t n) {
    detail::require_hc_or_bj(kind);
    const double ll = detail::log_log_n(n);
    return kind == StatisticKind::BJ ? ll : std::sqrt(2.0 * ll);
}

/// Extreme-value threshold q_alpha = log log n + 1/2 log log log n
/// - 1/2 log(4 pi) - log(-log(1 - alpha)); sqrt(2 q_alpha) for HC.
inline double evi_cv(StatisticKind kind, std::size_t n, double alpha) {
    detail::require_hc_or_bj(kind);
    const double ll = detail::log_log_n(n);
    const double q = ll + 0.5 * std::log(ll) - 0.5 * std::log(4.0 * std::numbers::pi) +
                     detail::gumbel_upper_quantile(alpha);
    return kind == StatisticKind::BJ ? q : detail::to_hc_scale(q);
}

/// As evi_cv with the centering c_n^2 / (2 b_n^2), where
/// c_n = 2 log log n + 1/2 log log log n - 1/2 log(4 pi) and b_n^2 = 2 log log n.
inline double evii_cv(StatisticKind kind, std::size_t n, double alpha) {
    detail::require_hc_or_bj(kind);
    const double ll = detail::log_log_n(n);
    const double c = 2.0 * ll + 0.5 * std::log(ll) - 0.5 * std::log(4.0 * std::numbers::pi);
    const double b2 = 2.0 * ll;
    const double q = c * c / (2.0 * b2) + detail::gumbel_upper_quantile(alpha);
    return kind == StatisticKind::BJ ? q : detail::to_hc_scale(q);
}

// ----------------------------------------------------------------------------
// Limit-law calibrations for ALR.

/// Limit of LR_{n,1}: (exp(E) / (e E))^{1(E < 1)} for E ~ Exp(1).
inline double first_term_limit(double e) noexcept { return e < 1.0 ? std::exp(e - 1.0 - std::log(e)) : 1.0; }

/// 1/2 (exp(E)/(eE))^{1(E<1)} + 1/2 exp(Z+^2 / 2).
inline double alr_limit_value(double e, double z) noexcept {
    const double zp = std::max(z, 0.0);
    return 0.5 * first_term_limit(e) + 0.5 * std::exp(0.5 * zp * zp);
}

inline double sample_alr_limit_cal1(Xoshiro256& rng) noexcept {
    const double e = draw_exponential(rng);
    const double z = draw_normal(rng);
    return alr_limit_value(e, z);
}

inline double sample_alr_limit_cal1(RandomStream stream) noexcept {
    auto rng = stream.generator();
    return sample_alr_limit_cal1(rng);
}

/// A Brownian bridge observed on a log-spaced grid over [1/n, 1/2].
struct BridgePath {
    std::vector<double> t_grid;
    std::vector<double> b_values;
};

inline constexpr std::size_t kDefaultBridgeGrid = 4096;

inline void require_ln_domain(std::size_t n, std::size_t grid) {
    require(n >= 16, ErrorCode::DomainError, "L_n needs n >= 16, got " + std::to_string(n));
    require(grid >= 256, ErrorCode::DomainError, "L_n needs at least 256 grid intervals");
}

/// M + 1 points t_j = exp(log(1/n) + j (log(1/2) - log(1/n)) / M); endpoints exact.
inline std::vector<double> log_spaced_grid(std::size_t n, std::size_t grid) {
    require_ln_domain(n, grid);
    const double lo = 1.0 / static_cast<double>(n);
    const double u0 = std::log(lo);
    const double du = (std::log(0.5) - u0) / static_cast<double>(grid);
    std::vector<double> t(grid + 1);
    for (std::size_t j = 0; j <= grid; ++j) t[j] = std::exp(u0 + du * static_cast<double>(j));
    t.front() = lo;
    t.back() = 0.5;
    return t;
}

/// Draws L_n = (1/log n) int_{1/n}^{1/2} t^-1 exp(B+(t)^2 / (2t(1-t))) dt.
/// The bridge is advanced with its exact Gaussian transition between grid
/// points; the integral is a trapezoid rule in u = log t, where the 1/t
/// weight disappears.
class LnSampler {
public:
    LnSampler(std::size_t n, std::size_t grid = kDefaultBridgeGrid)
        : n_(n), t_(log_spaced_grid(n, grid)) {
        const std::size_t points = t_.size();
        scale_.resize(points);
        for (std::size_t j = 0; j < points; ++j) scale_[j] = 1.0 / (2.0 * t_[j] * (1.0 - t_[j]));
        drift_.resize(points - 1);
        step_sd_.resize(points - 1);
        for (std::size_t j = 0; j + 1 < points; ++j) {
            const double a = t_[j], b = t_[j + 1];
            drift_[j] = (1.0 - b) / (1.0 - a);
            step_sd_[j] = std::sqrt((b - a) * (1.0 - b) / (1.0 - a));
        }
        start_sd_ = std::sqrt(t_[0] * (1.0 - t_[0]));
        du_ = (std::log(t_.back()) - std::log(t_.front())) / static_cast<double>(grid);
        inv_log_n_ = 1.0 / std::log(static_cast<double>(n));
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t grid() const noexcept { return t_.size() - 1; }
    std::span<const double> t_grid() const noexcept { return t_; }

    BridgePath sample_path(Xoshiro256& rng) const {
        BridgePath path{t_, std::vector<double>(t_.size())};
        double b = start_sd_ * draw_normal(rng);
        path.b_values[0] = b;
        for (std::size_t j = 0; j + 1 < t_.size(); ++j) {
            b = drift_[j] * b + step_sd_[j] * draw_normal(rng);
            path.b_values[j + 1] = b;
        }
        return path;
    }

    /// Functional of a given path; b must be sampled on this sampler's grid.
    double functional(std::span<const double> b) const {
        require(b.size() == t_.size(), ErrorCode::DomainError, "bridge path does not match the grid");
        double sum = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double w = (j == 0 || j + 1 == b.size()) ? 0.5 : 1.0;
            sum += w * integrand(j, b[j]);
        }
        return sum * du_ * inv_log_n_;
    }

    /// Streams the path without storing it; same draws and value as
    /// functional(sample_path(rng).b_values).
    double draw(Xoshiro256& rng) const {
        double b = start_sd_ * draw_normal(rng);
        double sum = 0.5 * integrand(0, b);
        const std::size_t last = t_.size() - 1;
        for (std::size_t j = 0; j < last; ++j) {
            b = drift_[j] * b + step_sd_[j] * draw_normal(rng);
            sum += (j + 1 == last ? 0.5 : 1.0) * integrand(j + 1, b);
        }
        return sum * du_ * inv_log_n_;
    }

private:
    double integrand(std::size_t j, double b) const noexcept {
        return b > 0.0 ? std::exp(b * b * scale_[j]) : 1.0;
    }

    std::size_t n_;
    std::vector<double> t_;
    std::vector<double> scale_;
    std::vector<double> drift_;
    std::vector<double> step_sd_;
    double start_sd_ = 0.0;
    double du_ = 0.0;
    double inv_log_n_ = 0.0;
};

/// Doubles the resolution of a path: each new point sits at the geometric
/// midpoint of its neighbours and is drawn from the bridge law conditional on
/// them, N(x + w (y - x), (s - a)(b - s) / (b - a)) with w = (s - a) / (b - a).
/// The coarse values are kept, so coarse and refined paths are coupled.
inline BridgePath refine_bridge(const BridgePath& coarse, Xoshiro256& rng) {
    require(coarse.t_grid.size() >= 2 && coarse.t_grid.size() == coarse.b_values.size(), ErrorCode::DomainError,
            "malformed bridge path");
    const std::size_t points = 2 * coarse.t_grid.size() - 1;
    BridgePath fine{std::vector<double>(points), std::vector<double>(points)};
    for (std::size_t j = 0; j < coarse.t_grid.size(); ++j) {
        fine.t_grid[2 * j] = coarse.t_grid[j];
        fine.b_values[2 * j] = coarse.b_values[j];
    }
    for (std::size_t j = 0; j + 1 < coarse.t_grid.size(); ++j) {
        const double a = coarse.t_grid[j], b = coarse.t_grid[j + 1];
        const double s = std::sqrt(a * b);
        const double w = (s - a) / (b - a);
        const double mean = coarse.b_values[j] + w * (coarse.b_values[j + 1] - coarse.b_values[j]);
        const double sd = std::sqrt((s - a) * (b - s) / (b - a));
        fine.t_grid[2 * j + 1] = s;
        fine.b_values[2 * j + 1] = mean + sd * draw_normal(rng);
    }
    return fine;
}

inline double sample_ln(std::size_t n, std::size_t grid, RandomStream stream) {
    const LnSampler sampler(n, grid);
    auto rng = stream.generator();
    return sampler.draw(rng);
}

/// log(n/2) / log n: L_n for the zero bridge, and a lower bound for any path.
inline double ln_floor(std::size_t n) {
    return std::log(static_cast<double>(n) / 2.0) / std::log(static_cast<double>(n));
}

enum class AlrLimitVariant { Cal1, Cal2 };

constexpr std::string_view to_string(AlrLimitVariant variant) noexcept {
    return variant == AlrLimitVariant::Cal1 ? "cal1" : "cal2";
}

inline std::optional<AlrLimitVariant> parse_variant(std::string_view text) {
    if (text == "cal1") return AlrLimitVariant::Cal1;
    if (text == "cal2") return AlrLimitVariant::Cal2;
    return std::nullopt;
}

struct AlrLimitConfig {
    AlrLimitVariant variant = AlrLimitVariant::Cal1;
    std::size_t replicates = 100000;
    std::size_t n_for_l = 100000;
    std::size_t grid = kDefaultBridgeGrid;
    std::uint64_t master_seed = 0;
    unsigned threads = 0;
};

/// Draws from the conjectured ALR limit law (cal1), or from the variant where
/// the exp(Z+^2/2) half is replaced by L_{n_for_l} (cal2). Returned as a
/// NullSample of LOG values, n = 0 for cal1 and n_for_l for cal2.
inline NullSample simulate_alr_limit(const AlrLimitConfig& config) {
    require(config.replicates >= kMinReplicates, ErrorCode::InsufficientReplicates,
            "need at least " + std::to_string(kMinReplicates) + " replicates");
    std::optional<LnSampler> ln;
    if (config.variant == AlrLimitVariant::Cal2) ln.emplace(config.n_for_l, config.grid);

    std::vector<double> values(config.replicates);
    parallel_for(config.replicates, config.threads, [&](unsigned, std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            auto rng = RandomStream{config.master_seed, j}.generator();
            double v;
            if (ln) {
                const double e = draw_exponential(rng);
                v = 0.5 * first_term_limit(e) + 0.5 * ln->draw(rng);
            } else {
                v = sample_alr_limit_cal1(rng);
            }
            values[j] = std::log(v);
        }
    }, 64);
    std::sort(values.begin(), values.end());
    return {StatisticKind::ALR, ln ? config.n_for_l : 0, std::move(values), config.master_seed};
}

/// Log-domain (1 - alpha) quantile of the chosen limit law.
inline double alr_limit_cv(const AlrLimitConfig& config, double alpha) {
    require_alpha(alpha);
    require(config.replicates >= 10000, ErrorCode::InsufficientReplicates, "limit-law calibration needs R >= 1e4");
    return empirical_cv(simulate_alr_limit(config), alpha);
}

/// Reference limit-law critical values (raw scale) for alpha = 5% and 10%.
inline double reference_alr_limit_cv(AlrLimitVariant variant, double alpha) {
    require_alpha(alpha);
    const bool five = std::fabs(alpha - 0.05) < 1e-12;
    const bool ten = std::fabs(alpha - 0.10) < 1e-12;
    require(five || ten, ErrorCode::AlphaOutOfRange, "reference constants exist for alpha = 0.05 and 0.10 only");
    if (variant == AlrLimitVariant::Cal1) return std::log(five ? 6.05 : 3.42);
    return std::log(five ? 6.16 : 3.60);
}

// ----------------------------------------------------------------------------

struct CriticalValueEntry {
    double alpha;
    double cv;
    bool operator==(const CriticalValueEntry&) const = default;
};

/// Critical values of one statistic at one n by one method. ALR values are
/// log-domain. replicates/master_seed are set for Monte Carlo methods.
struct CriticalValueTable {
    StatisticKind kind = StatisticKind::HC;
    std::size_t n = 0;
    CalibrationMethod method = CalibrationMethod::Empirical;
    std::vector<CriticalValueEntry> entries;
    std::optional<std::size_t> replicates;
    std::optional<std::uint64_t> master_seed;

    double at(double alpha) const {
        for (const auto& e : entries)
            if (std::fabs(e.alpha - alpha) < 1e-12) return e.cv;
        fail(ErrorCode::AlphaOutOfRange, "no critical value for alpha " + std::to_string(alpha));
    }

    /// Entries sorted by alpha with non-increasing values; constant for thresh.
    void validate() const {
        require(method_supports(method, kind), ErrorCode::IncompatibleMethod,
                std::string(to_string(method)) + " does not apply to " + std::string(to_string(kind)));
        for (std::size_t k = 0; k < entries.size(); ++k) {
            require_alpha(entries[k].alpha);
            if (k == 0) continue;
            require(entries[k].alpha > entries[k - 1].alpha, ErrorCode::ConfigError, "alphas must be increasing");
            if (method == CalibrationMethod::Thresh)
                require(entries[k].cv == entries[k - 1].cv, ErrorCode::ConfigError, "thresh is alpha-independent");
            else
                require(entries[k].cv <= entries[k - 1].cv, ErrorCode::ConfigError,
                        "critical values must not increase with alpha");
        }
    }

    bool operator==(const CriticalValueTable&) const = default;
};

namespace detail {
inline std::vector<double> sorted_unique_alphas(std::span<const double> alphas) {
    std::vector<double> out(alphas.begin(), alphas.end());
    for (double a : out) require_alpha(a);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    require(!out.empty(), ErrorCode::ConfigError, "no alpha levels given");
    return out;
}
}  // namespace detail

inline CriticalValueTable empirical_table(const NullSample& sample, std::span<const double> alphas) {
    CriticalValueTable table{sample.kind, sample.n, CalibrationMethod::Empirical, {}, sample.size(),
                             sample.master_seed};
    for (double a : detail::sorted_unique_alphas(alphas)) table.entries.push_back({a, empirical_cv(sample, a)});
    table.validate();
    return table;
}

/// thresh, EVI or EVII for HC/BJ.
inline CriticalValueTable asymptotic_table(StatisticKind kind, std::size_t n, CalibrationMethod method,
                                           std::span<const double> alphas) {
    require(method == CalibrationMethod::Thresh || method == CalibrationMethod::EVI ||
                method == CalibrationMethod::EVII,
            ErrorCode::IncompatibleMethod, "not an asymptotic method: " + std::string(to_string(method)));
    require(method_supports(method, kind), ErrorCode::IncompatibleMethod,
            std::string(to_string(method)) + " does not apply to " + std::string(to_string(kind)));
    CriticalValueTable table{kind, n, method, {}, std::nullopt, std::nullopt};
    for (double a : detail::sorted_unique_alphas(alphas)) {
        double cv = 0.0;
        switch (method) {
            case CalibrationMethod::Thresh: cv = thresh_cv(kind, n); break;
            case CalibrationMethod::EVI: cv = evi_cv(kind, n, a); break;
            default: cv = evii_cv(kind, n, a); break;
        }
        table.entries.push_back({a, cv});
    }
    table.validate();
    return table;
}

inline CriticalValueTable alr_limit_table(const AlrLimitConfig& config, std::span<const double> alphas) {
    require(config.replicates >= 10000, ErrorCode::InsufficientReplicates, "limit-law calibration needs R >= 1e4");
    const auto sample = simulate_alr_limit(config);
    const auto method = config.variant == AlrLimitVariant::Cal1 ? CalibrationMethod::Cal1 : CalibrationMethod::Cal2;
    CriticalValueTable table{StatisticKind::ALR, sample.n, method, {}, sample.size(), config.master_seed};
    for (double a : detail::sorted_unique_alphas(alphas)) table.entries.push_back({a, empirical_cv(sample, a)});
    table.validate();
    return table;
}

}  // namespace sparsemix
