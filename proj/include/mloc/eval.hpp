#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mloc/detect.hpp"
#include "mloc/io.hpp"
#include "mloc/locate.hpp"
#include "mloc/map_builder.hpp"
#include "mloc/simulate.hpp"

namespace mloc {

struct StopDetectionRow {
    std::string bucket;  // trip length bucket by station count
    int trips = 0;
    int true_stops = 0;
    int matched = 0;       // baro-confirmed pipeline
    int false_pos = 0;
    int ao_matched = 0;    // acceleration-only, no barometer filtering
    int ao_false_pos = 0;

    double recall() const { return true_stops ? static_cast<double>(matched) / true_stops : 0.0; }
    double precision() const {
        int det = matched + false_pos;
        return det ? static_cast<double>(matched) / det : 1.0;
    }
    double ao_precision() const {
        int det = ao_matched + ao_false_pos;
        return det ? static_cast<double>(ao_matched) / det : 1.0;
    }
};

struct LocalizationRow {
    int stations = 0;  // tunnels traversed before the fix
    int trials = 0;
    int correct = 0;

    double accuracy() const { return trials ? static_cast<double>(correct) / trials : 0.0; }
};

struct SeparationSummary {
    double same_mean = 0, cross_mean = 0;
    double ratio = 0;  // cross / same
    double threshold = 0;
    double overlap_error = 0;  // misclassification rate of the single threshold
    int same_n = 0, cross_n = 0;
};

struct DtwMseRow {
    double dtw = 0, mse = 0;
};

struct EvalReport {
    std::vector<StopDetectionRow> stop_detection;
    std::vector<LocalizationRow> localization;
    std::vector<std::pair<int, double>> coverage;
    SeparationSummary separation;
    std::vector<DtwMseRow> dtw_vs_mse;
    double dtw_median = 0, mse_median = 0;
};

struct EvalOptions {
    int eval_trips = 250;
    std::uint64_t eval_seed = 9001;
    int max_locate_len = 5;
    DetectorConfig detector;
    std::size_t max_pairs = 400;  // cap for separation sampling
};

namespace detail {

inline bool intervals_overlap(double a0, double a1, double b0, double b1) {
    return a0 < b1 && b0 < a1;
}

/// Matches each detected run to the ground-truth tunnel whose interval it
/// reproduces. Returns one optional key per run.
inline std::vector<std::optional<TunnelKey>> label_runs(const UserTrace& ut,
                                                        const GroundTruth& gt,
                                                        double tol = 8.0) {
    std::vector<std::optional<TunnelKey>> out(ut.runs.size());
    for (std::size_t i = 0; i < ut.runs.size(); ++i) {
        for (const auto& t : gt.tunnels) {
            if (std::abs(ut.runs[i].bt - t.bt) <= tol && std::abs(ut.runs[i].et - t.et) <= tol) {
                out[i] = TunnelKey{t.from, t.to};
                break;
            }
        }
    }
    return out;
}

inline double median_of_sorted_copy(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0.0;
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Compares pipeline output to ground truth over the whole corpus and emits
/// the evaluation tables. Deterministic given its inputs.
inline EvalReport run_eval(const SyntheticWorld& world, const std::vector<SimTrip>& corpus,
                           const PatternMap& map, const MatchConfig& cfg,
                           const EvalOptions& opts = {}) {
    for (const auto& trip : corpus)
        if (trip.truth.tunnels.empty() && trip.truth.stops.size() < 2)
            throw Error("run_eval: corpus trip without usable ground truth");

    EvalReport rep;

    // --- stop detection ----------------------------------------------------
    auto bucket_of = [](std::size_t stations) {
        if (stations < 4) return std::string("<4");
        if (stations <= 12) return std::string("4-12");
        return std::string(">12");
    };
    std::map<std::string, StopDetectionRow> buckets;
    for (const char* b : {"<4", "4-12", ">12"}) buckets[b].bucket = b;

    for (const auto& trip : corpus) {
        AccelVariance av = accel_variance(trip.trace.accel);
        std::vector<StopEvent> cands = detect_accel_stops(av, opts.detector);
        std::vector<StopEvent> confirmed;
        for (const auto& c : cands) {
            if (confirm_stop_baro(c, trip.trace.baro, opts.detector) != BaroConfirm::rejected)
                confirmed.push_back(c);
        }
        auto score = [&](const std::vector<StopEvent>& dets, int& matched, int& false_pos) {
            std::vector<bool> truth_hit(trip.truth.stops.size(), false);
            for (const auto& d : dets) {
                bool hit = false;
                for (std::size_t k = 0; k < trip.truth.stops.size(); ++k) {
                    if (truth_hit[k]) continue;
                    const auto& s = trip.truth.stops[k];
                    if (detail::intervals_overlap(d.bt, d.et, s.bt, s.et)) {
                        truth_hit[k] = true;
                        hit = true;
                        break;
                    }
                }
                if (hit)
                    ++matched;
                else
                    ++false_pos;
            }
        };
        StopDetectionRow& row = buckets[bucket_of(trip.truth.stops.size())];
        row.trips++;
        row.true_stops += static_cast<int>(trip.truth.stops.size());
        score(confirmed, row.matched, row.false_pos);
        score(cands, row.ao_matched, row.ao_false_pos);
    }
    StopDetectionRow all;
    all.bucket = "all";
    for (const char* b : {"<4", "4-12", ">12"}) {
        const auto& r = buckets[b];
        rep.stop_detection.push_back(r);
        all.trips += r.trips;
        all.true_stops += r.true_stops;
        all.matched += r.matched;
        all.false_pos += r.false_pos;
        all.ao_matched += r.ao_matched;
        all.ao_false_pos += r.ao_false_pos;
    }
    rep.stop_detection.push_back(all);

    // --- localization on held-out trips ------------------------------------
    {
        CorpusConfig held;
        held.n_trips = opts.eval_trips;
        for (int L = 1; L <= opts.max_locate_len; ++L)
            rep.localization.push_back({L, 0, 0});
        std::vector<SimTrip> eval_trips = gen_corpus(world, held, opts.eval_seed);
        for (const auto& trip : eval_trips) {
            UserTrace ut;
            bool segmented = true;
            try {
                ut = segment_trace(trip.trace, opts.detector);
            } catch (const TooShortTripError&) {
                segmented = false;
            }
            int max_l = std::min<int>(opts.max_locate_len,
                                      static_cast<int>(trip.truth.tunnels.size()));
            for (int L = 1; L <= max_l; ++L) {
                LocalizationRow& row = rep.localization[static_cast<std::size_t>(L - 1)];
                row.trials++;
                if (!segmented || static_cast<int>(ut.runs.size()) < L) continue;
                try {
                    std::vector<RunningEvent> evs(ut.runs.begin(), ut.runs.begin() + L);
                    LocationEstimate est = locate_sequence(evs, map, cfg);
                    if (est.station_id == trip.truth.tunnels[static_cast<std::size_t>(L - 1)].to)
                        row.correct++;
                } catch (const NoFixError&) {
                }
            }
        }
    }

    // --- coverage curve -----------------------------------------------------
    rep.coverage = map.stats.coverage_curve;

    // --- same/cross tunnel separation ---------------------------------------
    {
        std::map<TunnelKey, std::vector<EventFeatures>> pools;
        for (const auto& trip : corpus) {
            UserTrace ut;
            try {
                ut = segment_trace(trip.trace, opts.detector);
            } catch (const TooShortTripError&) {
                continue;
            }
            auto labels = detail::label_runs(ut, trip.truth);
            for (std::size_t i = 0; i < ut.runs.size(); ++i) {
                if (!labels[i] || ut.runs[i].m_trace.size() < 2) continue;
                pools[*labels[i]].push_back(event_features(ut.runs[i]));
            }
        }
        std::vector<double> same, cross;
        for (const auto& [key, evs] : pools) {
            for (std::size_t i = 0; i < evs.size() && same.size() < opts.max_pairs; ++i)
                for (std::size_t j = i + 1; j < evs.size() && same.size() < opts.max_pairs; ++j)
                    same.push_back(event_distance(evs[i], evs[j], cfg));
        }
        {
            std::vector<const std::vector<EventFeatures>*> pool_list;
            std::vector<TunnelKey> pool_keys;
            for (const auto& [key, evs] : pools) {
                pool_list.push_back(&evs);
                pool_keys.push_back(key);
            }
            for (std::size_t a = 0; a < pool_list.size() && cross.size() < opts.max_pairs; ++a)
                for (std::size_t b = a + 1; b < pool_list.size() && cross.size() < opts.max_pairs;
                     ++b)
                    if (!pool_list[a]->empty() && !pool_list[b]->empty())
                        cross.push_back(
                            event_distance(pool_list[a]->front(), pool_list[b]->front(), cfg));
        }
        SeparationSummary& s = rep.separation;
        s.same_n = static_cast<int>(same.size());
        s.cross_n = static_cast<int>(cross.size());
        for (double v : same) s.same_mean += v;
        if (!same.empty()) s.same_mean /= static_cast<double>(same.size());
        for (double v : cross) s.cross_mean += v;
        if (!cross.empty()) s.cross_mean /= static_cast<double>(cross.size());
        s.ratio = s.same_mean > 0 ? s.cross_mean / s.same_mean : 0.0;
        s.threshold = cfg.dtw_threshold;
        int wrong = 0;
        for (double v : same) wrong += v >= s.threshold;
        for (double v : cross) wrong += v < s.threshold;
        int total = s.same_n + s.cross_n;
        s.overlap_error = total ? static_cast<double>(wrong) / total : 0.0;

        // --- DTW vs MSE on warped same-tunnel pairs (magnetometer channel) --
        std::size_t want = 50;
        for (const auto& [key, evs] : pools) {
            for (std::size_t i = 0; i + 1 < evs.size() && rep.dtw_vs_mse.size() < want; i += 2) {
                const auto& a = evs[i].mag.v;
                const auto& b = evs[i + 1].mag.v;
                DtwMseRow row;
                row.dtw = dtw_distance(a, b).normalized();
                row.mse = mse_distance(resample_linear(a, b.size()), b);
                rep.dtw_vs_mse.push_back(row);
            }
            if (rep.dtw_vs_mse.size() >= want) break;
        }
        std::vector<double> d, m;
        for (const auto& r : rep.dtw_vs_mse) {
            d.push_back(r.dtw);
            m.push_back(r.mse);
        }
        rep.dtw_median = detail::median_of_sorted_copy(d);
        rep.mse_median = detail::median_of_sorted_copy(m);
    }

    return rep;
}

// ---------------------------------------------------------------------------
// Report serialization (CSV tables, one file per figure/table analog)
// ---------------------------------------------------------------------------

inline void write_report(const EvalReport& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
    using detail::fmt9;

    {
        std::ostringstream o;
        o << "bucket,trips,true_stops,matched,false_positives,recall,precision,"
             "accel_only_matched,accel_only_false_positives,accel_only_precision\n";
        for (const auto& r : rep.stop_detection)
            o << r.bucket << "," << r.trips << "," << r.true_stops << "," << r.matched << ","
              << r.false_pos << "," << fmt9(r.recall()) << "," << fmt9(r.precision()) << ","
              << r.ao_matched << "," << r.ao_false_pos << "," << fmt9(r.ao_precision()) << "\n";
        atomic_write_file(path("stop_detection.csv"), o.str());
    }
    {
        std::ostringstream o;
        o << "stations_traveled,trials,correct,accuracy\n";
        for (const auto& r : rep.localization)
            o << r.stations << "," << r.trials << "," << r.correct << "," << fmt9(r.accuracy())
              << "\n";
        atomic_write_file(path("localization.csv"), o.str());
    }
    {
        std::ostringstream o;
        o << "traces_merged,coverage\n";
        for (const auto& [n, c] : rep.coverage) o << n << "," << fmt9(c) << "\n";
        atomic_write_file(path("coverage.csv"), o.str());
    }
    {
        std::ostringstream o;
        o << "same_mean,cross_mean,ratio,threshold,overlap_error,same_pairs,cross_pairs\n";
        const auto& s = rep.separation;
        o << fmt9(s.same_mean) << "," << fmt9(s.cross_mean) << "," << fmt9(s.ratio) << ","
          << fmt9(s.threshold) << "," << fmt9(s.overlap_error) << "," << s.same_n << ","
          << s.cross_n << "\n";
        atomic_write_file(path("dtw_separation.csv"), o.str());
    }
    {
        std::ostringstream o;
        o << "pair,dtw,mse\n";
        for (std::size_t i = 0; i < rep.dtw_vs_mse.size(); ++i)
            o << i << "," << fmt9(rep.dtw_vs_mse[i].dtw) << "," << fmt9(rep.dtw_vs_mse[i].mse)
              << "\n";
        atomic_write_file(path("dtw_vs_mse.csv"), o.str());
    }
    {
        std::ostringstream o;
        o << "key,value\n";
        const auto& all = rep.stop_detection.back();
        o << "stop_recall," << fmt9(all.recall()) << "\n";
        o << "stop_precision," << fmt9(all.precision()) << "\n";
        o << "stop_accel_only_precision," << fmt9(all.ao_precision()) << "\n";
        for (const auto& r : rep.localization)
            o << "locate_accuracy_" << r.stations << "," << fmt9(r.accuracy()) << "\n";
        o << "separation_ratio," << fmt9(rep.separation.ratio) << "\n";
        o << "separation_overlap_error," << fmt9(rep.separation.overlap_error) << "\n";
        o << "dtw_median," << fmt9(rep.dtw_median) << "\n";
        o << "mse_median," << fmt9(rep.mse_median) << "\n";
        atomic_write_file(path("summary.csv"), o.str());
    }
}

}  // namespace mloc
