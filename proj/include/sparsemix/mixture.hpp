#pragma once

// Sparse normal mixture: H0 is N(0,1), H1 is (1 - eps) N(0,1) + eps N(mu,1)
// with eps = n^-beta and mu = sqrt(2 r log n).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparsemix/error.hpp"
#include "sparsemix/normal.hpp"
#include "sparsemix/pvalues.hpp"
#include "sparsemix/random.hpp"

namespace sparsemix {

inline void require_sparse_beta(double beta) {
    require(std::isfinite(beta) && beta > 0.5 && beta <= 1.0, ErrorCode::DomainError,
            "beta must lie in (1/2, 1], got " + std::to_string(beta));
}

/// Detection boundary: beta - 1/2 up to 3/4, (1 - sqrt(1 - beta))^2 beyond.
inline double rho_star(double beta) {
    require_sparse_beta(beta);
    if (beta <= 0.75) return beta - 0.5;
    const double gap = 1.0 - std::sqrt(1.0 - beta);
    return gap * gap;
}

/// Signal strength used by the power studies, 1.2 rho*(beta) + 0.1.
inline double r_of_beta(double beta) { return 1.2 * rho_star(beta) + 0.1; }

struct SparsityParams {
    double beta = 0.75;
    double r = 0.4;
    std::size_t n = 2;

    void validate() const {
        require_sparse_beta(beta);
        require(std::isfinite(r) && r > 0.0, ErrorCode::DomainError, "r must be positive");
        require(n >= 2, ErrorCode::DomainError, "n must be at least 2");
    }
};

/// One sampling configuration. mixture_from() builds the sparse alternatives;
/// callers may also build degenerate specs (eps = 0 or mu = 0) by hand.
struct MixtureSpec {
    std::size_t n = 2;
    double eps = 0.0;
    double mu = 0.0;

    void validate() const {
        require(n >= 2, ErrorCode::DomainError, "n must be at least 2");
        require(std::isfinite(eps) && eps >= 0.0 && eps < 1.0, ErrorCode::DomainError, "eps must lie in [0, 1)");
        require(std::isfinite(mu) && mu >= 0.0, ErrorCode::DomainError, "mu must be finite and non-negative");
    }

    bool operator==(const MixtureSpec&) const = default;
};

inline MixtureSpec mixture_from(const SparsityParams& params) {
    params.validate();
    const double log_n = std::log(static_cast<double>(params.n));
    return {params.n, std::pow(static_cast<double>(params.n), -params.beta), std::sqrt(2.0 * params.r * log_n)};
}

inline MixtureSpec mixture_from(std::size_t n, double beta) {
    return mixture_from(SparsityParams{beta, r_of_beta(beta), n});
}

/// How unshifted observations become p-values. Direct draws the uniform
/// p-value itself; ViaNormal draws Z = Phi^-1(1 - U) and applies pvalue(Z).
/// The two are equal in law (and equal up to rounding draw for draw).
enum class SamplerPath { Direct, ViaNormal };

/// Reusable buffers for the samplers. One per worker thread.
struct SamplerWorkspace {
    std::vector<double> values;
    std::vector<double> scratch;
    std::vector<std::uint32_t> counts;
};

namespace detail {

// Ascending sort of values in [0, 1]: bucket scatter followed by an insertion
// pass. For (near-)uniform data this is linear; the result is identical to
// std::sort since doubles without NaN have a unique ascending order.
inline void sort_unit_interval(std::vector<double>& v, SamplerWorkspace& ws) {
    const std::size_t n = v.size();
    ws.counts.assign(n + 1, 0);
    ws.scratch.resize(n);
    const double scale = static_cast<double>(n);
    auto bucket = [&](double x) { return std::min(n - 1, static_cast<std::size_t>(x * scale)); };
    for (double x : v) ++ws.counts[bucket(x) + 1];
    for (std::size_t b = 1; b <= n; ++b) ws.counts[b] += ws.counts[b - 1];
    for (double x : v) ws.scratch[ws.counts[bucket(x)]++] = x;
    for (std::size_t k = 1; k < n; ++k) {
        const double x = ws.scratch[k];
        std::size_t j = k;
        while (j > 0 && ws.scratch[j - 1] > x) {
            ws.scratch[j] = ws.scratch[j - 1];
            --j;
        }
        ws.scratch[j] = x;
    }
    v.swap(ws.scratch);
}

}  // namespace detail

/// Fills ws.values with a sorted, clamped null sample of size n.
inline std::span<const double> fill_null(std::size_t n, Xoshiro256& rng, SamplerWorkspace& ws,
                                         SamplerPath path = SamplerPath::Direct) {
    ws.values.resize(n);
    if (path == SamplerPath::Direct) {
        for (auto& p : ws.values) p = clamp_pvalue(rng.uniform());
    } else {
        for (auto& p : ws.values) p = clamp_pvalue(pvalue(-normal_quantile(rng.uniform())));
    }
    detail::sort_unit_interval(ws.values, ws);
    return ws.values;
}

/// Fills ws.values with a sorted, clamped sample from the mixture; returns the
/// number of shifted components. Each slot consumes two uniforms: one for the
/// Bernoulli(eps) label, one for the normal draw.
inline std::size_t fill_alternative(const MixtureSpec& spec, Xoshiro256& rng, SamplerWorkspace& ws,
                                    SamplerPath path = SamplerPath::Direct) {
    ws.values.resize(spec.n);
    std::size_t shifted = 0;
    for (auto& p : ws.values) {
        const bool is_shifted = rng.uniform() < spec.eps;
        const double u = rng.uniform();
        shifted += is_shifted ? 1 : 0;
        if (!is_shifted && path == SamplerPath::Direct) {
            p = clamp_pvalue(u);
        } else {
            // Z = Phi^-1(1 - u), so pvalue(Z) = u when unshifted.
            const double z = -normal_quantile(u);
            p = clamp_pvalue(pvalue(is_shifted ? z + spec.mu : z));
        }
    }
    detail::sort_unit_interval(ws.values, ws);
    return shifted;
}

inline SortedPValues sample_null(std::size_t n, RandomStream stream, SamplerPath path = SamplerPath::Direct) {
    require(n >= 2, ErrorCode::EmptyOrSingleton, "need n >= 2");
    auto rng = stream.generator();
    SamplerWorkspace ws;
    fill_null(n, rng, ws, path);
    return SortedPValues::adopt_sorted(std::move(ws.values));
}

inline SortedPValues sample_alternative(const MixtureSpec& spec, RandomStream stream,
                                        SamplerPath path = SamplerPath::Direct) {
    spec.validate();
    auto rng = stream.generator();
    SamplerWorkspace ws;
    fill_alternative(spec, rng, ws, path);
    return SortedPValues::adopt_sorted(std::move(ws.values));
}

}  // namespace sparsemix
