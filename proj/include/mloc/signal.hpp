#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mloc/common.hpp"
#include "mloc/types.hpp"

namespace mloc {

/// First-difference feature series. One element shorter than its source;
/// t[i] is the midpoint of the two source timestamps that produced v[i].
struct VarianceSeries {
    std::vector<double> t;
    std::vector<double> v;
    std::string source;  // channel tag: "accel", "baro", "mag"

    std::size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
};

enum class Axis { X, Y, Z };

inline const char* to_string(Axis a) {
    switch (a) {
        case Axis::X: return "X";
        case Axis::Y: return "Y";
        default: return "Z";
    }
}

/// Combined acceleration variance plus the informational dominant-axis data.
struct AccelVariance {
    VarianceSeries combined;       // sqrt of summed squared per-axis diffs
    Axis dominant_axis = Axis::X;  // axis maximizing summed |diff|
    std::vector<int> direction;    // sign of the dominant-axis diff, 0 -> +1
};

namespace detail {

inline double median_of(std::vector<double> w) {
    std::sort(w.begin(), w.end());
    std::size_t n = w.size();
    return n % 2 ? w[n / 2] : 0.5 * (w[n / 2 - 1] + w[n / 2]);
}

// Robust spike mask: a point is a spike when it deviates from its local
// median by more than k * MAD. A perfectly flat neighborhood has MAD = 0;
// any deviation from it is then a spike (a 6*MAD rule alone can never fire
// there, and single-sample sparks on flat stretches are the main target).
inline std::vector<bool> spike_mask(const std::vector<double>& x, int half_window = 2,
                                    double k = 6.0) {
    const std::size_t n = x.size();
    std::vector<bool> spike(n, false);
    if (n < 3) return spike;
    std::vector<double> window;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= static_cast<std::size_t>(half_window) ? i - half_window : 0;
        std::size_t hi = std::min(n - 1, i + half_window);
        window.assign(x.begin() + lo, x.begin() + hi + 1);
        double med = median_of(window);
        std::vector<double> devs;
        devs.reserve(window.size());
        for (double w : window) devs.push_back(std::abs(w - med));
        double mad = median_of(devs);
        double dev = std::abs(x[i] - med);
        spike[i] = mad > 0 ? dev > k * mad : dev > 0;
    }
    return spike;
}

}  // namespace detail

/// Removes spark noise and smooths with a centered moving average.
/// Spikes are replaced by linear interpolation between the nearest non-spike
/// neighbors; the smoothing window shrinks symmetrically at the edges.
/// Output length always equals input length.
inline std::vector<double> clean_series(const std::vector<double>& values, int window = 10) {
    if (values.empty()) throw EmptyInputError("clean_series: empty input");
    const std::size_t n = values.size();

    std::vector<bool> spike = detail::spike_mask(values);
    std::vector<double> fixed = values;
    // All-spike degenerate input: nothing to interpolate from.
    if (std::find(spike.begin(), spike.end(), false) != spike.end()) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!spike[i]) continue;
            std::ptrdiff_t left = static_cast<std::ptrdiff_t>(i) - 1;
            while (left >= 0 && spike[static_cast<std::size_t>(left)]) --left;
            std::size_t right = i + 1;
            while (right < n && spike[right]) ++right;
            if (left >= 0 && right < n) {
                double t = static_cast<double>(i - left) / static_cast<double>(right - left);
                fixed[i] = values[static_cast<std::size_t>(left)] * (1.0 - t) + values[right] * t;
            } else if (left >= 0) {
                fixed[i] = values[static_cast<std::size_t>(left)];
            } else if (right < n) {
                fixed[i] = values[right];
            }
        }
    }

    const std::size_t radius = static_cast<std::size_t>(std::max(0, window / 2));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = std::min({radius, i, n - 1 - i});
        double sum = 0.0;
        for (std::size_t j = i - r; j <= i + r; ++j) sum += fixed[j];
        out[i] = sum / static_cast<double>(2 * r + 1);
    }
    return out;
}

/// First differences of a timestamped scalar stream: v[i] = x[i+1] - x[i].
/// Constant drift cancels exactly, which is what makes uncalibrated
/// magnetometers comparable across phones.
inline VarianceSeries scalar_variance(const std::vector<double>& t, const std::vector<double>& x,
                                      std::string source = "") {
    if (t.size() != x.size()) throw LengthMismatchError("scalar_variance: t/x length mismatch");
    if (x.size() < 2) throw InsufficientDataError("scalar_variance: need at least 2 samples");
    VarianceSeries out;
    out.source = std::move(source);
    out.t.reserve(x.size() - 1);
    out.v.reserve(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        out.t.push_back(0.5 * (t[i] + t[i + 1]));
        out.v.push_back(x[i + 1] - x[i]);
    }
    return out;
}

inline VarianceSeries scalar_variance(const std::vector<BaroSample>& baro) {
    std::vector<double> t, p;
    t.reserve(baro.size());
    p.reserve(baro.size());
    for (const auto& s : baro) {
        t.push_back(s.t);
        p.push_back(s.baro);
    }
    return scalar_variance(t, p, "baro");
}

/// Per-axis first differences combined into an orientation- and
/// gravity-invariant series: combined[i] is the norm of the 3-axis sample
/// difference vector. The dominant axis is the one with the largest summed
/// absolute difference, and direction is the sign of its diffs (+1 at zero).
inline AccelVariance accel_variance(const std::vector<AccelSample>& accel) {
    if (accel.size() < 2) throw InsufficientDataError("accel_variance: need at least 2 samples");
    const std::size_t n = accel.size() - 1;

    std::vector<double> dx(n), dy(n), dz(n);
    double sum_x = 0, sum_y = 0, sum_z = 0;
    AccelVariance out;
    out.combined.source = "accel";
    out.combined.t.reserve(n);
    out.combined.v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        dx[i] = accel[i + 1].x - accel[i].x;
        dy[i] = accel[i + 1].y - accel[i].y;
        dz[i] = accel[i + 1].z - accel[i].z;
        sum_x += std::abs(dx[i]);
        sum_y += std::abs(dy[i]);
        sum_z += std::abs(dz[i]);
        out.combined.t.push_back(0.5 * (accel[i].t + accel[i + 1].t));
        out.combined.v.push_back(std::sqrt(dx[i] * dx[i] + dy[i] * dy[i] + dz[i] * dz[i]));
    }

    out.dominant_axis = Axis::X;
    const std::vector<double>* dom = &dx;
    if (sum_y > sum_x && sum_y >= sum_z) {
        out.dominant_axis = Axis::Y;
        dom = &dy;
    } else if (sum_z > sum_x && sum_z > sum_y) {
        out.dominant_axis = Axis::Z;
        dom = &dz;
    }
    out.direction.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.direction.push_back((*dom)[i] < 0 ? -1 : +1);
    return out;
}

}  // namespace mloc
