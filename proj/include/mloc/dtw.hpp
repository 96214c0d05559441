#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mloc/common.hpp"

namespace mloc {

/// Monotone, continuous alignment between two series: starts at (0,0), ends
/// at (n-1,m-1), each step advances i, j, or both by one.
struct WarpingPath {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    std::size_t length() const { return pairs.size(); }
};

struct DtwResult {
    double cost = 0.0;           // cumulative squared point difference
    std::size_t path_length = 0; // cells on the optimal path

    /// Cost per aligned cell. Comparable across series of different lengths,
    /// which is what a single accept threshold needs.
    double normalized() const {
        return path_length == 0 ? cost : cost / static_cast<double>(path_length);
    }
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cells outside the band around the (rescaled) diagonal are excluded:
// |i*m/n - j| <= band. No band means the full grid is reachable.
inline bool in_band(std::size_t i, std::size_t j, std::size_t n, std::size_t m,
                    const std::optional<int>& band) {
    if (!band) return true;
    double diag = static_cast<double>(i) * static_cast<double>(m) / static_cast<double>(n);
    return std::abs(diag - static_cast<double>(j)) <= static_cast<double>(*band);
}

}  // namespace detail

/// Dynamic-programming DTW over two scalar series with squared point cost.
/// When `path_out` is non-null the optimal warping path is reconstructed
/// (ties broken diagonal-first, then the i-predecessor, then the
/// j-predecessor, so results are deterministic).
inline DtwResult dtw_distance(std::span<const double> a, std::span<const double> b,
                              std::optional<int> band = std::nullopt,
                              WarpingPath* path_out = nullptr) {
    if (a.empty() || b.empty()) throw EmptyInputError("dtw_distance: empty input series");
    const std::size_t n = a.size();
    const std::size_t m = b.size();

    // D has a virtual empty row/column: D[0][0] = 0, D[i][0] = D[0][j] = inf.
    std::vector<double> D((n + 1) * (m + 1), detail::kInf);
    auto at = [m](std::size_t i, std::size_t j) -> std::size_t { return i * (m + 1) + j; };
    D[at(0, 0)] = 0.0;

    for (std::size_t i = 1; i <= n; ++i) {
        // Only cells within the band are reachable; skip the rest outright.
        std::size_t j_lo = 1, j_hi = m;
        if (band) {
            double diag = static_cast<double>(i - 1) * static_cast<double>(m) /
                          static_cast<double>(n);
            double lo = diag - static_cast<double>(*band);
            double hi = diag + static_cast<double>(*band);
            j_lo = lo > 0 ? static_cast<std::size_t>(lo) + 1 : 1;
            j_hi = hi < static_cast<double>(m - 1) ? static_cast<std::size_t>(hi) + 1 : m;
        }
        for (std::size_t j = j_lo; j <= j_hi; ++j) {
            if (!detail::in_band(i - 1, j - 1, n, m, band)) continue;
            double best = std::min({D[at(i - 1, j - 1)], D[at(i - 1, j)], D[at(i, j - 1)]});
            if (best == detail::kInf) continue;
            double d = a[i - 1] - b[j - 1];
            D[at(i, j)] = best + d * d;
        }
    }

    DtwResult res;
    res.cost = D[at(n, m)];
    if (res.cost == detail::kInf) {
        // Band too narrow to connect the corners. Report as-is.
        res.path_length = 0;
        if (path_out) path_out->pairs.clear();
        return res;
    }

    // Backtrack to measure (and optionally emit) the optimal path.
    std::vector<std::pair<std::size_t, std::size_t>> rev;
    std::size_t i = n, j = m;
    while (i > 0 && j > 0) {
        rev.emplace_back(i - 1, j - 1);
        double diag = D[at(i - 1, j - 1)];
        double up = D[at(i - 1, j)];
        double left = D[at(i, j - 1)];
        if (diag <= up && diag <= left) {
            --i;
            --j;
        } else if (up <= left) {
            --i;
        } else {
            --j;
        }
    }
    res.path_length = rev.size();
    if (path_out) {
        path_out->pairs.assign(rev.rbegin(), rev.rend());
    }
    return res;
}

inline DtwResult dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                              std::optional<int> band = std::nullopt,
                              WarpingPath* path_out = nullptr) {
    return dtw_distance(std::span<const double>(a), std::span<const double>(b), band, path_out);
}

/// Mean squared pointwise difference. Requires equal lengths; DTW is the
/// tool for series that warp in time.
inline double mse_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw EmptyInputError("mse_distance: empty input series");
    if (a.size() != b.size())
        throw LengthMismatchError("mse_distance: lengths " + std::to_string(a.size()) + " vs " +
                                  std::to_string(b.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

inline double mse_distance(const std::vector<double>& a, const std::vector<double>& b) {
    return mse_distance(std::span<const double>(a), std::span<const double>(b));
}

/// Linear resampling to a target length, used to length-equalize series so
/// MSE can be evaluated at all.
inline std::vector<double> resample_linear(std::span<const double> x, std::size_t target) {
    if (x.empty()) throw EmptyInputError("resample_linear: empty input");
    if (target == 0) return {};
    std::vector<double> out(target);
    if (target == 1 || x.size() == 1) {
        for (auto& v : out) v = x[0];
        return out;
    }
    double scale = static_cast<double>(x.size() - 1) / static_cast<double>(target - 1);
    for (std::size_t i = 0; i < target; ++i) {
        double pos = static_cast<double>(i) * scale;
        std::size_t lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= x.size()) {
            out[i] = x[x.size() - 1];
        } else {
            double frac = pos - static_cast<double>(lo);
            out[i] = x[lo] * (1.0 - frac) + x[lo + 1] * frac;
        }
    }
    return out;
}

}  // namespace mloc
