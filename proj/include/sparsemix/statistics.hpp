#pragma once

// Higher criticism, one-sided Berk-Jones and the average likelihood ratio,
// all evaluated on the lower half (i <= floor(n/2)) of the order statistics.
//
// The ALR is carried in the log domain throughout: under alternatives the
// individual log-likelihood-ratio terms reach the thousands and exp() of them
// is not representable.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparsemix/error.hpp"
#include "sparsemix/pvalues.hpp"

namespace sparsemix {

enum class StatisticKind { HC, BJ, ALR };

inline constexpr std::array<StatisticKind, 3> kAllStatistics{StatisticKind::HC, StatisticKind::BJ,
                                                             StatisticKind::ALR};

constexpr std::string_view to_string(StatisticKind kind) noexcept {
    switch (kind) {
        case StatisticKind::HC: return "hc";
        case StatisticKind::BJ: return "bj";
        case StatisticKind::ALR: return "alr";
    }
    return "?";
}

inline std::optional<StatisticKind> parse_statistic(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "hc") return StatisticKind::HC;
    if (lower == "bj") return StatisticKind::BJ;
    if (lower == "alr") return StatisticKind::ALR;
    return std::nullopt;
}

constexpr std::size_t index_of(StatisticKind kind) noexcept { return static_cast<std::size_t>(kind); }

/// value is HC*, BJ+, or log(ALR) depending on kind.
struct StatisticResult {
    StatisticKind kind;
    double value;
};

/// ALR needs log(n/3) > 0.
inline constexpr std::size_t kMinAlrSampleSize = 4;

namespace detail {

// Caller guarantees 1 <= i <= n and 0 < p < 1.
inline double log_lr_unchecked(double n, double i, double p) noexcept {
    const double frac = i / n;
    if (!(p < frac)) return 0.0;
    const double head = i * std::log(frac / p);
    const double tail = (n - i) * (std::log1p(-frac) - std::log1p(-p));
    // Nonnegative in exact arithmetic; rounding can leave -1e-16 near p = i/n.
    return std::max(0.0, head + tail);
}

inline double hc_term_unchecked(double sqrt_n, double n, double i, double p) noexcept {
    // i - n p with the product's rounding error recovered, so the difference
    // keeps full relative accuracy when p sits on i/n.
    const double np = n * p;
    const double np_err = std::fma(n, p, -np);
    const double gap = (i - np) - np_err;
    return sqrt_n * (gap / n) / std::sqrt(p * (1.0 - p));
}

// Running max-shifted sum of exponentials; never exponentiates a positive number.
class LogSumExp {
public:
    void add(double x) noexcept {
        if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        }
    }
    double value() const noexcept { return max_ + std::log(sum_); }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

}  // namespace detail

/// One-sided binomial log-likelihood ratio for the count of p-values in (0, p]
/// when p is the i-th order statistic out of n. Zero unless p < i/n.
inline double log_lr_term(std::size_t n, std::size_t i, double p) {
    require(i >= 1 && i <= n, ErrorCode::DomainError,
            "index " + std::to_string(i) + " outside [1, " + std::to_string(n) + "]");
    require(p > 0.0 && p < 1.0, ErrorCode::DomainError, "p must lie in (0, 1)");
    return detail::log_lr_unchecked(static_cast<double>(n), static_cast<double>(i), p);
}

/// log(1/2) for i = 1 and log(1/(2 i log(n/3))) for i >= 2, i = 1..floor(n/2).
inline std::vector<double> alr_log_weights(std::size_t n) {
    require(n >= kMinAlrSampleSize, ErrorCode::SampleTooSmall,
            "ALR needs n >= 4, got " + std::to_string(n));
    const std::size_t m = n / 2;
    const double log_half = std::log(0.5);
    const double log_norm = std::log(std::log(static_cast<double>(n) / 3.0));
    std::vector<double> w(m);
    w[0] = log_half;
    for (std::size_t i = 2; i <= m; ++i) w[i - 1] = log_half - std::log(static_cast<double>(i)) - log_norm;
    return w;
}

/// log ALR from precomputed log-LR terms ell[0..m-1] (ell[i-1] belongs to index i).
inline double log_alr_from_terms(std::size_t n, std::span<const double> ell) {
    const auto w = alr_log_weights(n);
    require(ell.size() == w.size(), ErrorCode::DomainError,
            "expected " + std::to_string(w.size()) + " log-LR terms");
    detail::LogSumExp acc;
    for (std::size_t k = 0; k < w.size(); ++k) acc.add(w[k] + ell[k]);
    return acc.value();
}

/// Evaluates the statistics for a fixed n. Holds the ALR weights so Monte
/// Carlo loops do not recompute them per replicate. Inputs are sorted, clamped
/// spans of length n.
class StatisticEvaluator {
public:
    explicit StatisticEvaluator(std::size_t n)
        : n_(n), nd_(static_cast<double>(n)), sqrt_n_(std::sqrt(static_cast<double>(n))) {
        require(n >= 2, ErrorCode::EmptyOrSingleton, "need n >= 2");
        if (n >= kMinAlrSampleSize) log_weights_ = alr_log_weights(n);
    }

    std::size_t n() const noexcept { return n_; }
    bool supports(StatisticKind kind) const noexcept {
        return kind != StatisticKind::ALR || n_ >= kMinAlrSampleSize;
    }

    double hc(std::span<const double> p) const noexcept {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i <= n_ / 2; ++i)
            best = std::max(best, detail::hc_term_unchecked(sqrt_n_, nd_, static_cast<double>(i), p[i - 1]));
        return best;
    }

    double bj(std::span<const double> p) const noexcept {
        double best = 0.0;
        for (std::size_t i = 1; i <= n_ / 2; ++i)
            best = std::max(best, detail::log_lr_unchecked(nd_, static_cast<double>(i), p[i - 1]));
        return best;
    }

    double log_alr(std::span<const double> p) const {
        require(n_ >= kMinAlrSampleSize, ErrorCode::SampleTooSmall, "ALR needs n >= 4");
        detail::LogSumExp acc;
        for (std::size_t i = 1; i <= n_ / 2; ++i)
            acc.add(log_weights_[i - 1] + detail::log_lr_unchecked(nd_, static_cast<double>(i), p[i - 1]));
        return acc.value();
    }

    /// Computes the requested statistics in a single pass. Slots of kinds not
    /// requested are left NaN. Values are bitwise identical to hc/bj/log_alr.
    std::array<double, 3> evaluate(std::span<const double> p, std::array<bool, 3> want) const {
        const bool want_hc = want[index_of(StatisticKind::HC)];
        const bool want_bj = want[index_of(StatisticKind::BJ)];
        const bool want_alr = want[index_of(StatisticKind::ALR)];
        require(!want_alr || n_ >= kMinAlrSampleSize, ErrorCode::SampleTooSmall, "ALR needs n >= 4");
        double hc_best = -std::numeric_limits<double>::infinity();
        double bj_best = 0.0;
        detail::LogSumExp acc;
        for (std::size_t i = 1; i <= n_ / 2; ++i) {
            const double id = static_cast<double>(i);
            const double pi = p[i - 1];
            if (want_hc) hc_best = std::max(hc_best, detail::hc_term_unchecked(sqrt_n_, nd_, id, pi));
            if (want_bj || want_alr) {
                const double ell = detail::log_lr_unchecked(nd_, id, pi);
                bj_best = std::max(bj_best, ell);
                if (want_alr) acc.add(log_weights_[i - 1] + ell);
            }
        }
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        return {want_hc ? hc_best : nan, want_bj ? bj_best : nan, want_alr ? acc.value() : nan};
    }

private:
    std::size_t n_;
    double nd_;
    double sqrt_n_;
    std::vector<double> log_weights_;
};

inline double hc_star(const SortedPValues& sp) { return StatisticEvaluator(sp.n()).hc(sp.values()); }

inline double bj_plus(const SortedPValues& sp) { return StatisticEvaluator(sp.n()).bj(sp.values()); }

inline double log_alr(const SortedPValues& sp) {
    require(sp.n() >= kMinAlrSampleSize, ErrorCode::SampleTooSmall,
            "ALR needs n >= 4, got " + std::to_string(sp.n()));
    return StatisticEvaluator(sp.n()).log_alr(sp.values());
}

inline StatisticResult compute(StatisticKind kind, const SortedPValues& sp) {
    switch (kind) {
        case StatisticKind::HC: return {kind, hc_star(sp)};
        case StatisticKind::BJ: return {kind, bj_plus(sp)};
        case StatisticKind::ALR: return {kind, log_alr(sp)};
    }
    fail(ErrorCode::UnsupportedStatistic, "unknown statistic");
}

/// Lower end of exp(log_alr): every log-LR term zero, i.e. 1/2 (1 + S_n / log(n/3))
/// with S_n the harmonic sum over 2..floor(n/2).
inline double alr_floor(std::size_t n) {
    require(n >= kMinAlrSampleSize, ErrorCode::SampleTooSmall, "ALR needs n >= 4");
    double s = 0.0;
    for (std::size_t i = 2; i <= n / 2; ++i) s += 1.0 / static_cast<double>(i);
    return 0.5 * (1.0 + s / std::log(static_cast<double>(n) / 3.0));
}

}  // namespace sparsemix
