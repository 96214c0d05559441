#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mloc/signal.hpp"
#include "mloc/types.hpp"

namespace mloc {

struct DetectorConfig {
    double accel_crest_threshold = 0.4;  // m/s^2, variance above this is a crest
    double accel_stable_threshold = 0.1; // m/s^2, variance below this is quiet
    double stable_min_seconds = 10.0;
    double baro_step_threshold = 0.3;    // hPa, door open/close step size
    double baro_stable_threshold = 0.15; // hPa, per-sample pressure change
    double baro_stable_min_seconds = 10.0;
    double confirm_margin_seconds = 15.0; // door search slack around [bt, et]
    double min_running_seconds = 30.0;    // shorter gaps collapse into one stop
    double crest_gap_seconds = 2.0;       // a crest ends after this long below threshold
    double baro_step_window_seconds = 5.0; // drops/rises measured over windows this long
};

/*
 * Accelerometer stop detection.
 *
 * A stop shows up in the combined variance as: sharp crest (braking jerk),
 * a quiet stretch of at least stable_min_seconds (standing at the platform),
 * then another sharp crest (departure jerk). bt is the end of the first
 * crest, et the start of the second.
 *
 * Crest regions are closed once the signal has stayed below the crest
 * threshold for crest_gap_seconds. Quiet runs are tracked independently of
 * crest bookkeeping; once a run of stable_min_seconds completes after a
 * candidate crest, the candidate stays armed until the next crest arrives,
 * so brief mid-dwell bustle between the quiet stretch and departure does not
 * lose the event.
 */
inline std::vector<StopEvent> detect_accel_stops(const AccelVariance& var,
                                                 const DetectorConfig& cfg) {
    std::vector<StopEvent> out;
    const auto& t = var.combined.t;
    const auto& v = var.combined.v;

    bool in_crest = false;
    double crest_last_above = 0.0;
    std::optional<double> candidate_bt;  // end of the most recent completed crest
    bool had_stable = false;
    std::optional<double> quiet_start;

    for (std::size_t i = 0; i < v.size(); ++i) {
        const double ti = t[i];
        const double vi = v[i];

        if (vi < cfg.accel_stable_threshold) {
            if (!quiet_start) quiet_start = ti;
            if (candidate_bt && !had_stable) {
                double run_start = std::max(*quiet_start, *candidate_bt);
                if (ti - run_start >= cfg.stable_min_seconds) had_stable = true;
            }
        } else {
            quiet_start.reset();
        }

        if (vi > cfg.accel_crest_threshold) {
            if (in_crest && ti - crest_last_above <= cfg.crest_gap_seconds) {
                crest_last_above = ti;
            } else {
                if (candidate_bt && had_stable) {
                    StopEvent se;
                    se.bt = *candidate_bt;
                    se.et = ti;
                    out.push_back(se);
                }
                in_crest = true;
                crest_last_above = ti;
                candidate_bt.reset();
                had_stable = false;
            }
        } else if (in_crest && ti - crest_last_above > cfg.crest_gap_seconds) {
            in_crest = false;
            candidate_bt = crest_last_above;
            had_stable = false;
        }
    }
    return out;
}

enum class BaroConfirm {
    confirmed,  // door open/close signature found
    rejected,   // barometer data present, no signature
    no_data,    // no barometer; acceleration evidence stands alone
};

/*
 * Door-signature check: within [bt - margin, et + margin] the pressure must
 * drop by more than step_threshold (doors open against the cabin
 * overpressure), hold stable for baro_stable_min_seconds, then rise by more
 * than step_threshold (doors close). Steps are measured against the rolling
 * extremum over the trailing step window, so a step split across a couple of
 * samples still counts. Everything is differential: a constant pressure
 * offset cannot change the outcome.
 */
inline BaroConfirm confirm_stop_baro(const StopEvent& candidate,
                                     const std::vector<BaroSample>& baro,
                                     const DetectorConfig& cfg) {
    if (baro.empty()) return BaroConfirm::no_data;

    const double lo = candidate.bt - cfg.confirm_margin_seconds;
    const double hi = candidate.et + cfg.confirm_margin_seconds;
    std::vector<const BaroSample*> w;
    for (const auto& s : baro)
        if (s.t >= lo && s.t <= hi) w.push_back(&s);
    if (w.size() < 3) return BaroConfirm::rejected;

    bool dropped = false;
    bool stable_ok = false;
    std::size_t drop_idx = 0;
    std::optional<double> quiet_start;

    for (std::size_t j = 0; j < w.size(); ++j) {
        const double tj = w[j]->t;
        const double pj = w[j]->baro;

        if (!dropped) {
            double recent_max = pj;
            for (std::size_t k = j; k-- > 0;) {
                if (tj - w[k]->t > cfg.baro_step_window_seconds) break;
                recent_max = std::max(recent_max, w[k]->baro);
            }
            if (recent_max - pj > cfg.baro_step_threshold) {
                dropped = true;
                drop_idx = j;
                quiet_start.reset();
            }
            continue;
        }

        // After the drop: watch for a stable stretch, then the closing rise.
        if (j > drop_idx) {
            double step = std::abs(pj - w[j - 1]->baro);
            if (step < cfg.baro_stable_threshold) {
                if (!quiet_start) quiet_start = w[j - 1]->t;
                if (tj - *quiet_start >= cfg.baro_stable_min_seconds) stable_ok = true;
            } else {
                quiet_start.reset();
            }
        }
        double recent_min = pj;
        for (std::size_t k = j; k-- > drop_idx;) {
            if (tj - w[k]->t > cfg.baro_step_window_seconds) break;
            recent_min = std::min(recent_min, w[k]->baro);
        }
        if (stable_ok && pj - recent_min > cfg.baro_step_threshold) return BaroConfirm::confirmed;
    }
    return BaroConfirm::rejected;
}

/// Detects stops, filters them with the barometer when one is present, and
/// slices the magnetometer/barometer streams into the alternating
/// stop/running sequence. Stops separated by less than min_running_seconds
/// collapse into one (double door cycles, platform shuffles).
inline UserTrace segment_trace(const SensorTrace& trace, const DetectorConfig& cfg,
                               bool use_baro_confirm = true) {
    AccelVariance av = accel_variance(trace.accel);
    std::vector<StopEvent> candidates = detect_accel_stops(av, cfg);

    std::vector<StopEvent> kept;
    for (auto& c : candidates) {
        BaroConfirm r = use_baro_confirm ? confirm_stop_baro(c, trace.baro, cfg)
                                         : BaroConfirm::no_data;
        if (r == BaroConfirm::rejected) continue;
        c.baro_confirmed = (r == BaroConfirm::confirmed);
        kept.push_back(c);
    }

    std::vector<StopEvent> merged;
    for (const auto& s : kept) {
        if (!merged.empty() && s.bt - merged.back().et < cfg.min_running_seconds) {
            merged.back().et = s.et;
            merged.back().baro_confirmed = merged.back().baro_confirmed || s.baro_confirmed;
        } else {
            merged.push_back(s);
        }
    }

    if (merged.size() < 2)
        throw TooShortTripError("segment_trace: fewer than 2 confirmed stops (trip " +
                                trace.trip_id + ")");

    UserTrace ut;
    ut.trip_id = trace.trip_id;
    ut.stops = merged;
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
        RunningEvent re;
        re.bt = merged[i].et;
        re.et = merged[i + 1].bt;
        for (const auto& s : trace.mag)
            if (s.t > re.bt && s.t < re.et) re.m_trace.push_back(s);
        for (const auto& s : trace.baro)
            if (s.t > re.bt && s.t < re.et) re.b_trace.push_back(s);
        ut.runs.push_back(std::move(re));
    }
    return ut;
}

}  // namespace mloc
