#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mloc/map_builder.hpp"
#include "mloc/matching.hpp"

namespace mloc {

struct LocationEstimate {
    std::string station_id;              // end of the last matched tunnel
    std::vector<TunnelKey> tunnel_path;  // contiguous directed path in the metro map
    double confidence = 1.0;             // 1 = unambiguous, ~0 = best and runner-up tie
    std::size_t events_used = 0;
    double cost = 0.0;                   // mean event distance of the winning path
};

/// Matches one running event against every stored tunnel pattern. Returns the
/// minimum-cost tunnel when the minimum clears the accept threshold, nothing
/// otherwise. Ties break on the lexicographically smaller tunnel key.
inline std::optional<std::pair<TunnelKey, double>> locate_event(const RunningEvent& re,
                                                                const PatternMap& map,
                                                                const MatchConfig& cfg) {
    if (map.tunnel_patterns.empty()) throw EmptyInputError("locate_event: empty pattern map");
    EventFeatures f = event_features(re);
    std::optional<std::pair<TunnelKey, double>> best;
    for (const auto& [key, pat] : map.tunnel_patterns) {
        double d = event_distance(f, pat.features, cfg);
        if (!best || d < best->second) best = {key, d};
    }
    if (!best || best->second >= cfg.dtw_threshold) return std::nullopt;
    return best;
}

namespace detail {

// All directed station windows of the given length, per line. A trip stays
// on one line and keeps its direction, so these are the only feasible
// tunnel sequences.
inline std::vector<std::vector<TunnelKey>> candidate_paths(const MetroMap& metro,
                                                           std::size_t len) {
    std::vector<std::vector<TunnelKey>> out;
    for (const auto& line : metro.lines) {
        long n = static_cast<long>(line.stations.size());
        for (int dir : {1, -1}) {
            for (long start = 0; start < n; ++start) {
                long last = start + dir * static_cast<long>(len);
                if (last < 0 || last >= n) continue;
                std::vector<TunnelKey> path;
                for (std::size_t e = 0; e < len; ++e) {
                    long a = start + dir * static_cast<long>(e);
                    path.emplace_back(line.stations[static_cast<std::size_t>(a)],
                                      line.stations[static_cast<std::size_t>(a + dir)]);
                }
                out.push_back(std::move(path));
            }
        }
    }
    return out;
}

}  // namespace detail

/// Sequential localization: scores every directed metro path of the trip's
/// length against the observed running events and returns the best terminal
/// station. Paths touching tunnels missing from the map are skipped. Throws
/// NoFixError when nothing clears the threshold (the caller can wait for the
/// next running event and retry).
inline LocationEstimate locate_sequence(std::span<const RunningEvent> events,
                                        const PatternMap& map, const MatchConfig& cfg) {
    if (events.empty()) throw EmptyInputError("locate_sequence: no running events");

    std::vector<EventFeatures> feats;
    feats.reserve(events.size());
    for (const auto& e : events) feats.push_back(event_features(e));

    // Costs against a given tunnel recur across overlapping paths; evaluate
    // the whole (event x stored tunnel) table up front. The cells are
    // independent, so they can be farmed out.
    std::vector<const TunnelPattern*> patterns;
    std::map<TunnelKey, std::size_t> tunnel_index;
    for (const auto& [key, pat] : map.tunnel_patterns) {
        tunnel_index[key] = patterns.size();
        patterns.push_back(&pat);
    }
    std::vector<double> cost_table(feats.size() * patterns.size());
    detail::parallel_for(cost_table.size(), [&](std::size_t k) {
        std::size_t e = k / patterns.size(), t = k % patterns.size();
        cost_table[k] = event_distance(feats[e], patterns[t]->features, cfg);
    });
    auto cost_of = [&](std::size_t ev, std::size_t tunnel_idx) {
        return cost_table[ev * patterns.size() + tunnel_idx];
    };

    const std::vector<std::vector<TunnelKey>> paths =
        detail::candidate_paths(map.metro, events.size());
    std::optional<std::vector<TunnelKey>> best_path;
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    for (const auto& path : paths) {
        bool known = true;
        for (const auto& k : path)
            if (!tunnel_index.count(k)) {
                known = false;
                break;
            }
        if (!known) continue;
        double sum = 0;
        for (std::size_t e = 0; e < path.size(); ++e) sum += cost_of(e, tunnel_index.at(path[e]));
        double mean = sum / static_cast<double>(path.size());
        bool wins = mean < best || (mean == best && best_path && path < *best_path);
        if (wins) {
            second = best;
            best = mean;
            best_path = path;
        } else if (mean < second) {
            second = mean;
        }
    }

    if (!best_path || best >= cfg.dtw_threshold)
        throw NoFixError("locate_sequence: no candidate path below threshold (" +
                         std::to_string(events.size()) + " events)");

    LocationEstimate est;
    est.tunnel_path = *best_path;
    est.station_id = best_path->back().second;
    est.events_used = events.size();
    est.cost = best;
    est.confidence = std::isfinite(second) && second > 0
                         ? std::clamp(1.0 - best / second, 0.0, 1.0)
                         : 1.0;
    return est;
}

inline LocationEstimate locate_sequence(const std::vector<RunningEvent>& events,
                                        const PatternMap& map, const MatchConfig& cfg) {
    return locate_sequence(std::span<const RunningEvent>(events), map, cfg);
}

}  // namespace mloc
