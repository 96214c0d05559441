#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "mloc/dtw.hpp"
#include "mloc/signal.hpp"
#include "mloc/types.hpp"

namespace mloc {

namespace detail {

/// Runs fn(0..n-1) across a worker pool. Each index must write only its own
/// output slot, which keeps results identical to the serial order. Small jobs
/// stay on the calling thread.
template <typename Fn>
inline void parallel_for(std::size_t n, Fn&& fn, std::size_t min_grain = 16) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n < 2 * min_grain) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t workers = std::min<std::size_t>(hw, n / min_grain);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

struct MatchConfig {
    double dtw_threshold = 8.0;  // accept threshold on the normalized fused cost
    double mag_weight = 1.0;
    double baro_weight = 1.0;
    std::optional<int> band_radius;  // Sakoe-Chiba band; unset = unconstrained
    double baro_scale = 1.0;  // puts hPa^2 costs on the magnetometer cost scale
};

/// Operating point calibrated for the bundled synthetic world. The field
/// threshold of 8 belongs to the original deployment's sensors and units;
/// synthetic normalized costs separate around a much smaller value. The band
/// suppresses cross-tunnel warp-gaming (and speeds up the DP); the slow
/// synthetic pressure relief carries no tunnel identity, so tunnel matching
/// runs on the magnetometer alone.
inline MatchConfig simulator_calibrated_config() {
    MatchConfig cfg;
    cfg.dtw_threshold = 0.03;
    cfg.band_radius = 20;
    cfg.baro_weight = 0.0;
    return cfg;
}

/// Cleaned first-difference features of one running event, ready for DTW.
/// Computing these once per event and reusing them is what keeps corpus-scale
/// matching cheap.
struct EventFeatures {
    VarianceSeries mag;
    std::optional<VarianceSeries> baro;

    bool has_baro() const { return baro.has_value(); }
};

inline EventFeatures event_features(const RunningEvent& re) {
    if (re.m_trace.size() < 2)
        throw InsufficientDataError("event_features: running event needs >= 2 mag samples");
    EventFeatures f;
    std::vector<double> t, x;
    t.reserve(re.m_trace.size());
    x.reserve(re.m_trace.size());
    for (const auto& s : re.m_trace) {
        t.push_back(s.t);
        x.push_back(s.m);
    }
    f.mag = scalar_variance(t, clean_series(x), "mag");
    if (re.b_trace.size() >= 2) {
        std::vector<double> bt, bp;
        bt.reserve(re.b_trace.size());
        bp.reserve(re.b_trace.size());
        for (const auto& s : re.b_trace) {
            bt.push_back(s.t);
            bp.push_back(s.baro);
        }
        f.baro = scalar_variance(bt, clean_series(bp), "baro");
    }
    return f;
}

/// Fused, length-normalized distance between two running events.
/// Each modality cost is the DTW cost divided by its warping-path length, so
/// tunnels of different durations are directly comparable. The barometer term
/// is dropped (weight folded into the magnetometer) when either side has no
/// pressure data.
inline double event_distance(const EventFeatures& a, const EventFeatures& b,
                             const MatchConfig& cfg) {
    if (a.mag.empty() || b.mag.empty())
        throw InsufficientDataError("event_distance: missing magnetometer features");

    double weight_sum = 0.0;
    double cost = 0.0;
    if (cfg.mag_weight > 0.0) {
        cost += cfg.mag_weight * dtw_distance(a.mag.v, b.mag.v, cfg.band_radius).normalized();
        weight_sum += cfg.mag_weight;
    }
    if (cfg.baro_weight > 0.0 && a.has_baro() && b.has_baro()) {
        cost += cfg.baro_weight * cfg.baro_scale *
                dtw_distance(a.baro->v, b.baro->v, cfg.band_radius).normalized();
        weight_sum += cfg.baro_weight;
    }
    if (weight_sum == 0.0) {
        // All configured modalities unavailable; fall back to magnetometer.
        return dtw_distance(a.mag.v, b.mag.v, cfg.band_radius).normalized();
    }
    return cost / weight_sum;
}

inline double event_distance(const RunningEvent& a, const RunningEvent& b,
                             const MatchConfig& cfg) {
    return event_distance(event_features(a), event_features(b), cfg);
}

/// Ratio of corpus-median magnetometer cost to corpus-median barometer cost
/// over sampled event pairs. Multiplying barometer costs by this puts the two
/// modalities on one scale before fusing. Returns 1 when no pair has pressure
/// data on both sides.
inline double calibrate_baro_scale(const std::vector<const EventFeatures*>& events,
                                   const MatchConfig& cfg, std::size_t max_pairs = 200) {
    std::vector<double> mag_costs, baro_costs;
    std::size_t n = events.size();
    for (std::size_t i = 0; i < n && mag_costs.size() < max_pairs; ++i) {
        for (std::size_t j = i + 1; j < n && mag_costs.size() < max_pairs; ++j) {
            const EventFeatures& a = *events[i];
            const EventFeatures& b = *events[j];
            if (!a.has_baro() || !b.has_baro()) continue;
            mag_costs.push_back(dtw_distance(a.mag.v, b.mag.v, cfg.band_radius).normalized());
            baro_costs.push_back(dtw_distance(a.baro->v, b.baro->v, cfg.band_radius).normalized());
        }
    }
    if (baro_costs.empty()) return 1.0;
    auto median = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        std::size_t k = v.size();
        return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
    };
    double med_baro = median(baro_costs);
    if (med_baro <= 0.0) return 1.0;
    return median(mag_costs) / med_baro;
}

}  // namespace mloc
