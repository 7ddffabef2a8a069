#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsemix/error.hpp"

namespace sparsemix {

/// Smallest p-value kept after clamping. A p-value that underflowed to 0
/// would make the log-likelihood-ratio terms infinite.
inline constexpr double kPMin = 1e-300;
/// Largest p-value kept after clamping. 1 - 1e-300 rounds to 1.0 in binary64,
/// so the upper clamp is the largest double below one.
inline constexpr double kPMax = 1.0 - 0x1p-53;

inline double clamp_pvalue(double p) noexcept { return std::clamp(p, kPMin, kPMax); }

/// Ascending, clamped p-value sample. All three statistics read only this.
class SortedPValues {
public:
    /// Sorts (stable) and clamps; validates length, finiteness and range.
    static SortedPValues prepare(std::span<const double> raw) {
        require(raw.size() >= 2, ErrorCode::EmptyOrSingleton,
                "need at least 2 p-values, got " + std::to_string(raw.size()));
        std::vector<double> values(raw.begin(), raw.end());
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double p = values[k];
            require(std::isfinite(p), ErrorCode::NonFinite,
                    "p-value at position " + std::to_string(k) + " is not finite");
            require(p >= 0.0 && p <= 1.0, ErrorCode::OutOfRange,
                    "p-value at position " + std::to_string(k) + " outside [0, 1]");
            values[k] = clamp_pvalue(p);
        }
        std::stable_sort(values.begin(), values.end());
        return SortedPValues(std::move(values));
    }

    /// Adopts values that the caller guarantees are already ascending and
    /// inside [kPMin, kPMax]. Used by the samplers, which sort in place.
    static SortedPValues adopt_sorted(std::vector<double> values) {
        require(values.size() >= 2, ErrorCode::EmptyOrSingleton, "need at least 2 p-values");
        return SortedPValues(std::move(values));
    }

    std::span<const double> values() const noexcept { return values_; }
    std::size_t n() const noexcept { return values_.size(); }
    std::size_t m() const noexcept { return values_.size() / 2; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }

    bool operator==(const SortedPValues&) const = default;

private:
    explicit SortedPValues(std::vector<double> values) : values_(std::move(values)) {}

    std::vector<double> values_;
};

inline SortedPValues prepare(std::span<const double> raw) { return SortedPValues::prepare(raw); }

inline SortedPValues prepare(std::initializer_list<double> raw) {
    return SortedPValues::prepare(std::span<const double>(raw.begin(), raw.size()));
}

}  // namespace sparsemix
