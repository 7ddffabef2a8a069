#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sparsemix/calibration.hpp"
#include "sparsemix/error.hpp"
#include "sparsemix/mixture.hpp"
#include "sparsemix/parallel.hpp"
#include "sparsemix/statistics.hpp"

namespace sparsemix {

/// Ten equally spaced sparsity levels, right end included.
inline std::vector<double> beta_grid_default() {
    return {0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 1.00};
}

// Stream-id layout under one master seed. Null calibration uses ids
// [0, R); everything else sits in high, disjoint ranges.
inline constexpr std::uint64_t kAlrLimitStreamBase = std::uint64_t{1} << 61;
inline constexpr std::uint64_t kPowerStreamBase = std::uint64_t{1} << 62;
inline constexpr std::uint64_t kPowerStreamStride = std::uint64_t{1} << 40;

struct SizeTableRow {
    std::size_t n = 0;
    StatisticKind kind = StatisticKind::HC;
    CalibrationMethod method = CalibrationMethod::Empirical;
    double nominal_alpha = 0.0;
    double realized_size = 0.0;
    double critical_value = 0.0;
    std::size_t replicates = 0;
    std::uint64_t master_seed = 0;

    /// Monte Carlo standard error of realized_size.
    double standard_error() const {
        return std::sqrt(realized_size * (1.0 - realized_size) / static_cast<double>(replicates));
    }
};

/// Where cal1/cal2 critical values come from in a size study.
enum class AlrLimitSource { Simulate, Reference };

struct SizeTableConfig {
    std::vector<std::size_t> ns;
    std::vector<StatisticKind> kinds;
    std::vector<CalibrationMethod> methods;
    std::vector<double> alphas;
    std::size_t replicates = 100000;
    std::uint64_t master_seed = 0;
    unsigned threads = 0;
    AlrLimitSource alr_limit_source = AlrLimitSource::Simulate;
    std::size_t alr_limit_replicates = 100000;
    std::size_t n_for_l = 100000;
    std::size_t bridge_grid = kDefaultBridgeGrid;
};

namespace detail {

inline void validate_size_config(const SizeTableConfig& config) {
    require(!config.ns.empty() && !config.kinds.empty() && !config.methods.empty() && !config.alphas.empty(),
            ErrorCode::ConfigError, "size table needs at least one n, statistic, method and alpha");
    for (double a : config.alphas) require_alpha(a);
    bool any = false;
    for (auto kind : config.kinds)
        for (auto method : config.methods) any = any || method_supports(method, kind);
    // A method that fits none of the requested statistics is a configuration
    // mistake; mixed lists (e.g. hc,alr with evi,cal1) pair up where they fit.
    for (auto method : config.methods) {
        bool fits = false;
        for (auto kind : config.kinds) fits = fits || method_supports(method, kind);
        require(fits, ErrorCode::IncompatibleMethod,
                std::string(to_string(method)) + " applies to none of the requested statistics");
    }
    require(any, ErrorCode::IncompatibleMethod, "no compatible statistic/method pair");
}

}  // namespace detail

/// Realized null rejection rates of each (n, statistic, method, alpha) cell.
/// Rows come out ordered by n, then statistic, then method, then alpha.
inline std::vector<SizeTableRow> size_table(const SizeTableConfig& config) {
    detail::validate_size_config(config);
    const auto alphas = detail::sorted_unique_alphas(config.alphas);

    // Limit-law critical values do not depend on n; compute them once.
    std::map<CalibrationMethod, CriticalValueTable> limit_tables;
    for (auto method : config.methods) {
        if (method != CalibrationMethod::Cal1 && method != CalibrationMethod::Cal2) continue;
        const auto variant = method == CalibrationMethod::Cal1 ? AlrLimitVariant::Cal1 : AlrLimitVariant::Cal2;
        if (config.alr_limit_source == AlrLimitSource::Reference) {
            CriticalValueTable table{StatisticKind::ALR, 0, method, {}, std::nullopt, std::nullopt};
            for (double a : alphas) table.entries.push_back({a, reference_alr_limit_cv(variant, a)});
            limit_tables.emplace(method, std::move(table));
        } else {
            AlrLimitConfig lc{variant, config.alr_limit_replicates, config.n_for_l, config.bridge_grid,
                              config.master_seed, config.threads};
            // Separate stream range from the null replicates.
            lc.master_seed = config.master_seed ^ kAlrLimitStreamBase;
            limit_tables.emplace(method, alr_limit_table(lc, alphas));
        }
    }

    std::vector<SizeTableRow> rows;
    for (std::size_t n : config.ns) {
        const auto samples = simulate_null_distributions(config.kinds, n, config.replicates, config.master_seed,
                                                         {config.threads, SamplerPath::Direct});
        for (const auto& sample : samples) {
            for (auto method : config.methods) {
                if (!method_supports(method, sample.kind)) continue;
                CriticalValueTable table;
                if (method == CalibrationMethod::Empirical)
                    table = empirical_table(sample, alphas);
                else if (method == CalibrationMethod::Cal1 || method == CalibrationMethod::Cal2)
                    table = limit_tables.at(method);
                else
                    table = asymptotic_table(sample.kind, n, method, alphas);
                for (const auto& entry : table.entries) {
                    rows.push_back({n, sample.kind, method, entry.alpha, exceedance_fraction(sample, entry.cv),
                                    entry.cv, sample.size(), config.master_seed});
                }
            }
        }
    }
    return rows;
}

struct PowerCurvePoint {
    double beta = 0.0;
    StatisticKind kind = StatisticKind::HC;
    double power = 0.0;
    std::size_t n = 0;
    std::size_t cal_replicates = 0;
    std::size_t power_replicates = 0;
    double cv_used = 0.0;
    std::uint64_t master_seed = 0;
};

struct PowerCurveConfig {
    std::size_t n = 10000;
    std::vector<double> beta_grid = beta_grid_default();
    std::vector<StatisticKind> kinds{kAllStatistics.begin(), kAllStatistics.end()};
    double alpha = 0.05;
    std::size_t cal_replicates = 100000;
    std::size_t power_replicates = 10000;
    std::uint64_t master_seed = 0;
    unsigned threads = 0;
    SamplerPath path = SamplerPath::Direct;
    /// Maps (n, beta) to the alternative; mixture_from(n, beta) when empty.
    std::function<MixtureSpec(std::size_t, double)> alternative;
};

/// Power against the mixture alternative at each beta, using empirical
/// critical values from a separate null calibration. Every statistic is
/// evaluated on the same alternative samples.
inline std::vector<PowerCurvePoint> power_curve(const PowerCurveConfig& config) {
    require_alpha(config.alpha);
    require(!config.beta_grid.empty() && !config.kinds.empty(), ErrorCode::ConfigError,
            "power curve needs a beta grid and at least one statistic");
    require(config.power_replicates >= 1, ErrorCode::ConfigError, "need at least one power replicate");
    require(config.beta_grid.size() < (kPowerStreamBase / kPowerStreamStride), ErrorCode::ConfigError,
            "beta grid too long");
    require(config.power_replicates < kPowerStreamStride, ErrorCode::ConfigError, "too many power replicates");
    if (!config.alternative)
        for (double beta : config.beta_grid) require_sparse_beta(beta);

    const auto nulls = simulate_null_distributions(config.kinds, config.n, config.cal_replicates,
                                                   config.master_seed, {config.threads, config.path});
    std::array<double, 3> cv{};
    std::array<bool, 3> want{};
    for (const auto& sample : nulls) {
        cv[index_of(sample.kind)] = empirical_cv(sample, config.alpha);
        want[index_of(sample.kind)] = true;
    }

    const StatisticEvaluator evaluator(config.n);
    const unsigned workers = resolve_threads(config.threads);
    std::vector<SamplerWorkspace> workspaces(workers);
    std::vector<PowerCurvePoint> points;
    for (std::size_t b = 0; b < config.beta_grid.size(); ++b) {
        const double beta = config.beta_grid[b];
        const MixtureSpec spec = config.alternative ? config.alternative(config.n, beta) : mixture_from(config.n, beta);
        spec.validate();
        require(spec.n == config.n, ErrorCode::ConfigError, "alternative spec has the wrong n");
        const std::uint64_t base = kPowerStreamBase + b * kPowerStreamStride;

        std::vector<std::array<std::uint8_t, 3>> rejected(config.power_replicates);
        parallel_for(config.power_replicates, workers, [&](unsigned worker, std::size_t begin, std::size_t end) {
            auto& ws = workspaces[worker];
            for (std::size_t j = begin; j < end; ++j) {
                auto rng = RandomStream{config.master_seed, base + j}.generator();
                fill_alternative(spec, rng, ws, config.path);
                const auto stats = evaluator.evaluate(ws.values, want);
                for (std::size_t k = 0; k < 3; ++k) rejected[j][k] = want[k] && stats[k] > cv[k];
            }
        });

        for (auto kind : config.kinds) {
            std::size_t count = 0;
            for (const auto& r : rejected) count += r[index_of(kind)];
            points.push_back({beta, kind,
                              static_cast<double>(count) / static_cast<double>(config.power_replicates), config.n,
                              config.cal_replicates, config.power_replicates, cv[index_of(kind)],
                              config.master_seed});
        }
    }
    return points;
}

}  // namespace sparsemix
