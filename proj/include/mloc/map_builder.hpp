#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mloc/matching.hpp"
#include "mloc/types.hpp"

namespace mloc {

struct AnchoringError : Error {
    explicit AnchoringError(const std::string& msg) : Error(msg) {}
};

struct AmbiguityError : Error {
    std::vector<std::string> candidates;
    AmbiguityError(const std::string& msg, std::vector<std::string> cands)
        : Error(msg), candidates(std::move(cands)) {}
};

/// Result of sliding one trace against another: the index shift of trace 2's
/// running events relative to trace 1's, how many events overlapped, and the
/// mean event distance over the overlap.
struct TraceAlignment {
    int offset = 0;
    std::size_t overlap_len = 0;
    double mean_cost = 0.0;
};

namespace detail {

/// Scans every overlap offset of a precomputed cost matrix
/// (cost[i][j] = distance between a's event i and b's event j). Offset d
/// aligns a[i] with b[i-d]; both sliding directions are covered by the sign
/// of d. Returns the accepted minimum or nothing.
inline std::optional<TraceAlignment> best_overlap_matrix(
    const std::vector<std::vector<double>>& cost, std::size_t na, std::size_t nb,
    double threshold, int min_overlap) {
    std::optional<TraceAlignment> best;
    for (long d = -(static_cast<long>(nb) - 1); d <= static_cast<long>(na) - 1; ++d) {
        // a[i] pairs with b[i - d]; the overlap is i in [max(0,d), min(na, nb+d)).
        long lo = std::max<long>(0, d);
        long hi = std::min<long>(static_cast<long>(na), static_cast<long>(nb) + d);
        if (lo >= hi) continue;
        std::size_t len = static_cast<std::size_t>(hi - lo);
        if (len < static_cast<std::size_t>(min_overlap)) continue;
        double sum = 0;
        for (long i = lo; i < hi; ++i)
            sum += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(i - d)];
        double mean = sum / static_cast<double>(len);
        if (mean >= threshold) continue;
        if (!best || mean < best->mean_cost)
            best = TraceAlignment{static_cast<int>(d), len, mean};
    }
    return best;
}

}  // namespace detail

/// Evaluates every overlap offset between two event-feature sequences and
/// returns the minimum-mean-cost alignment, if any offset both clears the
/// accept threshold and spans at least min_overlap events.
inline std::optional<TraceAlignment> best_overlap_features(
    const std::vector<const EventFeatures*>& a, const std::vector<const EventFeatures*>& b,
    const MatchConfig& cfg, int min_overlap) {
    if (a.empty() || b.empty()) return std::nullopt;
    std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size(), 0.0));
    detail::parallel_for(a.size() * b.size(), [&](std::size_t k) {
        std::size_t i = k / b.size(), j = k % b.size();
        cost[i][j] = event_distance(*a[i], *b[j], cfg);
    });
    return detail::best_overlap_matrix(cost, a.size(), b.size(), cfg.dtw_threshold, min_overlap);
}

inline std::optional<TraceAlignment> best_overlap(const UserTrace& ut1, const UserTrace& ut2,
                                                  const MatchConfig& cfg, int min_overlap = 4) {
    std::vector<EventFeatures> fa, fb;
    for (const auto& r : ut1.runs) fa.push_back(event_features(r));
    for (const auto& r : ut2.runs) fb.push_back(event_features(r));
    std::vector<const EventFeatures*> pa, pb;
    for (const auto& f : fa) pa.push_back(&f);
    for (const auto& f : fb) pb.push_back(&f);
    return best_overlap_features(pa, pb, cfg, min_overlap);
}

// ---------------------------------------------------------------------------
// Pattern graph
// ---------------------------------------------------------------------------

/// One tunnel cluster: all running events matched to the same (still
/// anonymous) tunnel, with the medoid member as representative.
struct EdgeCluster {
    std::vector<RunningEvent> members;
    std::vector<EventFeatures> features;
    std::vector<std::string> trip_ids;
    std::vector<std::vector<double>> dist;  // symmetric pairwise distances
    std::size_t medoid = 0;
    std::uint64_t version = 0;  // bumped whenever the representative may change

    const EventFeatures& representative() const { return features[medoid]; }
    const RunningEvent& representative_event() const { return members[medoid]; }

    void add_member(RunningEvent re, EventFeatures f, std::string trip, const MatchConfig& cfg) {
        std::size_t n = members.size();
        std::vector<double> row(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            row[i] = event_distance(features[i], f, cfg);
            dist[i].push_back(row[i]);
        }
        dist.push_back(std::move(row));
        members.push_back(std::move(re));
        features.push_back(std::move(f));
        trip_ids.push_back(std::move(trip));
        recompute_medoid();
        ++version;
    }

    void absorb(EdgeCluster& other, const MatchConfig& cfg) {
        std::size_t n = members.size(), m = other.members.size();
        for (std::size_t i = 0; i < n; ++i) dist[i].resize(n + m);
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> row(n + m, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double d = event_distance(features[i], other.features[j], cfg);
                dist[i][n + j] = d;
                row[i] = d;
            }
            for (std::size_t j2 = 0; j2 < m; ++j2) row[n + j2] = other.dist[j][j2];
            dist.push_back(std::move(row));
        }
        std::move(other.members.begin(), other.members.end(), std::back_inserter(members));
        std::move(other.features.begin(), other.features.end(), std::back_inserter(features));
        std::move(other.trip_ids.begin(), other.trip_ids.end(), std::back_inserter(trip_ids));
        recompute_medoid();
        ++version;
    }

    /// Medoid: member minimizing summed distance to all others; ties broken
    /// by earliest bt, then trip id, so recomputation is deterministic.
    void recompute_medoid() {
        std::size_t best = 0;
        double best_sum = 0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            double s = 0;
            for (std::size_t j = 0; j < members.size(); ++j) s += dist[i][j];
            bool better;
            if (i == 0) {
                better = true;
            } else if (s != best_sum) {
                better = s < best_sum;
            } else {
                auto key = [&](std::size_t k) {
                    return std::make_pair(members[k].bt, trip_ids[k]);
                };
                better = key(i) < key(best);
            }
            if (better) {
                best = i;
                best_sum = s;
            }
        }
        medoid = best;
    }
};

/// Returns the cluster's representative running event (the medoid member).
inline const RunningEvent& representative_pattern(const EdgeCluster& cluster) {
    if (cluster.members.empty()) throw EmptyInputError("representative_pattern: empty cluster");
    return cluster.representative_event();
}

/// Merged running/stop-event graph. Components are directed paths of edge
/// clusters; nodes are implicit (component with k edges has k+1 nodes, named
/// "c<component>.n<position>" for the hints interface).
struct PatternGraph {
    std::vector<EdgeCluster> clusters;
    std::vector<bool> alive;                           // false once absorbed
    std::vector<std::vector<std::size_t>> components;  // cluster ids in path order

    // representative-vs-representative distance memo, validated by versions
    mutable std::map<std::pair<std::size_t, std::size_t>,
                     std::tuple<std::uint64_t, std::uint64_t, double>>
        rep_memo;

    std::size_t live_cluster_count() const {
        std::size_t n = 0;
        for (bool a : alive) n += a;
        return n;
    }

    double rep_distance(std::size_t a, std::size_t b, const MatchConfig& cfg) const {
        auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        auto it = rep_memo.find(key);
        if (it != rep_memo.end()) {
            auto& [va, vb, d] = it->second;
            if (va == clusters[key.first].version && vb == clusters[key.second].version) return d;
        }
        double d = event_distance(clusters[key.first].representative(),
                                  clusters[key.second].representative(), cfg);
        rep_memo[key] = {clusters[key.first].version, clusters[key.second].version, d};
        return d;
    }
};

namespace detail {

inline std::optional<TraceAlignment> align_component_to_features(
    const PatternGraph& g, const std::vector<std::size_t>& comp,
    const std::vector<const EventFeatures*>& fb, const MatchConfig& cfg, int min_overlap) {
    std::vector<std::vector<double>> cost(comp.size(), std::vector<double>(fb.size(), 0.0));
    parallel_for(comp.size() * fb.size(), [&](std::size_t k) {
        std::size_t i = k / fb.size(), j = k % fb.size();
        cost[i][j] = event_distance(g.clusters[comp[i]].representative(), *fb[j], cfg);
    });
    return best_overlap_matrix(cost, comp.size(), fb.size(), cfg.dtw_threshold, min_overlap);
}

inline std::optional<TraceAlignment> align_components(const PatternGraph& g,
                                                      const std::vector<std::size_t>& a,
                                                      const std::vector<std::size_t>& b,
                                                      const MatchConfig& cfg, int min_overlap) {
    std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) cost[i][j] = g.rep_distance(a[i], b[j], cfg);
    return best_overlap_matrix(cost, a.size(), b.size(), cfg.dtw_threshold, min_overlap);
}

// Fuse component bi into ai at the given alignment, then drop bi.
inline void fuse_components(PatternGraph& g, std::size_t ai, std::size_t bi,
                            const TraceAlignment& al, const MatchConfig& cfg) {
    std::vector<std::size_t>& A = g.components[ai];
    std::vector<std::size_t>& B = g.components[bi];
    std::vector<std::size_t> merged;
    // B cluster r sits at A position r + offset.
    for (long pos = al.offset < 0 ? al.offset : 0;
         pos < std::max<long>(static_cast<long>(A.size()),
                              static_cast<long>(B.size()) + al.offset);
         ++pos) {
        long r = pos - al.offset;
        bool in_a = pos >= 0 && pos < static_cast<long>(A.size());
        bool in_b = r >= 0 && r < static_cast<long>(B.size());
        if (in_a && in_b) {
            g.clusters[A[static_cast<std::size_t>(pos)]].absorb(
                g.clusters[B[static_cast<std::size_t>(r)]], cfg);
            g.alive[B[static_cast<std::size_t>(r)]] = false;
            merged.push_back(A[static_cast<std::size_t>(pos)]);
        } else if (in_a) {
            merged.push_back(A[static_cast<std::size_t>(pos)]);
        } else {
            merged.push_back(B[static_cast<std::size_t>(r)]);
        }
    }
    A = std::move(merged);
    g.components.erase(g.components.begin() + static_cast<long>(bi));
}

// After a component grew, see whether it now bridges to any other component.
inline void consolidate(PatternGraph& g, std::size_t touched, const MatchConfig& cfg,
                        int min_overlap) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t other = 0; other < g.components.size(); ++other) {
            if (other == touched) continue;
            auto al = align_components(g, g.components[touched], g.components[other], cfg,
                                       min_overlap);
            if (!al) continue;
            fuse_components(g, touched, other, *al, cfg);
            if (other < touched) --touched;
            changed = true;
            break;
        }
    }
}

}  // namespace detail

enum class MergeOutcome {
    merged,         // joined an existing component
    new_component,  // no alignment accepted; trace seeded a new path
    skipped_short,  // fewer running events than min_overlap: unusable for building
};

/// Merges one user trace into the graph: aligns it against every component,
/// joins the best-matching one (extending the path with any unmatched prefix
/// or suffix events), or starts a new component when nothing matches. After a
/// successful merge, components that the grown path now bridges are fused.
///
/// A trace with fewer running events than min_overlap can never satisfy the
/// overlap rule, now or later; admitting it would only seed permanent
/// fragments, so it is skipped (it remains perfectly usable for phase-two
/// localization).
inline MergeOutcome merge_into_graph(PatternGraph& graph, const UserTrace& ut,
                                     const MatchConfig& cfg, int min_overlap = 4) {
    if (ut.runs.size() < static_cast<std::size_t>(std::max(1, min_overlap)))
        return MergeOutcome::skipped_short;
    std::vector<EventFeatures> feats;
    for (const auto& r : ut.runs) feats.push_back(event_features(r));
    std::vector<const EventFeatures*> fptr;
    for (const auto& f : feats) fptr.push_back(&f);

    std::optional<TraceAlignment> best;
    std::size_t best_ci = 0;
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci) {
        auto al = detail::align_component_to_features(graph, graph.components[ci], fptr, cfg,
                                                      min_overlap);
        if (al && (!best || al->mean_cost < best->mean_cost)) {
            best = al;
            best_ci = ci;
        }
    }

    auto new_cluster = [&](std::size_t run_idx) {
        EdgeCluster c;
        c.add_member(ut.runs[run_idx], std::move(feats[run_idx]), ut.trip_id, cfg);
        graph.clusters.push_back(std::move(c));
        graph.alive.push_back(true);
        return graph.clusters.size() - 1;
    };

    if (!best) {
        std::vector<std::size_t> comp;
        for (std::size_t r = 0; r < ut.runs.size(); ++r) comp.push_back(new_cluster(r));
        graph.components.push_back(std::move(comp));
        return MergeOutcome::new_component;
    }

    // Trace run r aligns with component position r + offset.
    std::vector<std::size_t>& comp = graph.components[best_ci];
    std::vector<std::size_t> merged;
    long k = static_cast<long>(comp.size());
    long n = static_cast<long>(ut.runs.size());
    for (long pos = std::min<long>(0, best->offset); pos < std::max(k, n + best->offset); ++pos) {
        long r = pos - best->offset;
        bool in_comp = pos >= 0 && pos < k;
        bool in_trace = r >= 0 && r < n;
        if (in_comp && in_trace) {
            graph.clusters[comp[static_cast<std::size_t>(pos)]].add_member(
                ut.runs[static_cast<std::size_t>(r)], std::move(feats[static_cast<std::size_t>(r)]),
                ut.trip_id, cfg);
            merged.push_back(comp[static_cast<std::size_t>(pos)]);
        } else if (in_comp) {
            merged.push_back(comp[static_cast<std::size_t>(pos)]);
        } else {
            merged.push_back(new_cluster(static_cast<std::size_t>(r)));
        }
    }
    comp = std::move(merged);
    detail::consolidate(graph, best_ci, cfg, min_overlap);
    return MergeOutcome::merged;
}

// ---------------------------------------------------------------------------
// Anchoring
// ---------------------------------------------------------------------------

/// Stored per-tunnel pattern: the representative member's features plus
/// provenance.
struct TunnelPattern {
    EventFeatures features;
    std::string source_trip;
    double duration = 0.0;  // seconds the representative took through the tunnel
};

struct BuildStats {
    double coverage = 0.0;  // anchored directed tunnels / all directed tunnels
    int trace_count = 0;
    int merges_accepted = 0;
    int merges_rejected = 0;
    std::vector<std::pair<int, double>> coverage_curve;  // (traces merged, cluster coverage)
};

struct PatternMap {
    MetroMap metro;
    std::map<TunnelKey, TunnelPattern> tunnel_patterns;
    BuildStats stats;
    MatchConfig config;
};

namespace detail {

struct Placement {
    std::size_t line = 0;
    int dir = 1;    // +1 along the line order, -1 against it
    int start = 0;  // station index of node 0

    std::string describe(const MetroMap& metro) const {
        const auto& l = metro.lines[line];
        return l.name + (dir > 0 ? " forward" : " backward") + " from " +
               l.stations[static_cast<std::size_t>(start)];
    }
};

inline std::vector<Placement> placements_for(const MetroMap& metro, std::size_t path_len,
                                             const std::vector<std::pair<int, std::string>>& node_hints) {
    std::vector<Placement> out;
    for (std::size_t li = 0; li < metro.lines.size(); ++li) {
        const auto& st = metro.lines[li].stations;
        long n = static_cast<long>(st.size());
        for (int dir : {1, -1}) {
            for (long start = 0; start < n; ++start) {
                long last = start + dir * static_cast<long>(path_len);
                if (last < 0 || last >= n) continue;
                bool ok = true;
                for (const auto& [node, sid] : node_hints) {
                    long idx = start + dir * node;
                    if (st[static_cast<std::size_t>(idx)] != sid) {
                        ok = false;
                        break;
                    }
                }
                if (ok) out.push_back({li, dir, static_cast<int>(start)});
            }
        }
    }
    return out;
}

}  // namespace detail

/// Maps the graph's path components onto the metro topology. Every component
/// must place onto a directed line subpath of matching length, all placements
/// must claim pairwise-disjoint directed tunnels, and the joint assignment
/// must be unique. Hints ("c<i>.n<j>" -> station id) pin nodes to stations;
/// a lone symmetric path needs at least one to fix its orientation.
inline PatternMap anchor_graph(const PatternGraph& graph, const MetroMap& metro,
                               const std::vector<std::pair<std::string, std::string>>& hints = {}) {
    // Parse hints into per-component (node index, station) lists.
    std::vector<std::vector<std::pair<int, std::string>>> comp_hints(graph.components.size());
    for (const auto& [node, sid] : hints) {
        if (node.size() < 4 || node[0] != 'c')
            throw AnchoringError("anchor_graph: malformed hint node id '" + node + "'");
        auto dot = node.find(".n");
        if (dot == std::string::npos)
            throw AnchoringError("anchor_graph: malformed hint node id '" + node + "'");
        std::size_t ci = std::stoul(node.substr(1, dot - 1));
        int nj = std::stoi(node.substr(dot + 2));
        if (ci >= graph.components.size() ||
            nj > static_cast<int>(graph.components[ci].size()))
            throw AnchoringError("anchor_graph: hint node '" + node + "' out of range");
        comp_hints[ci].emplace_back(nj, sid);
    }

    // Candidate placements per component, hint-filtered.
    std::vector<std::vector<detail::Placement>> cands;
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci) {
        auto p = detail::placements_for(metro, graph.components[ci].size(), comp_hints[ci]);
        if (p.empty())
            throw AnchoringError(
                "anchor_graph: component " + std::to_string(ci) + " (path of " +
                std::to_string(graph.components[ci].size()) +
                " tunnels) fits no line of the metro map under the given hints");
        cands.push_back(std::move(p));
    }

    // Longest components first: they are the most constrained.
    std::vector<std::size_t> order(graph.components.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return graph.components[a].size() > graph.components[b].size();
    });

    std::vector<std::vector<detail::Placement>> solutions;
    std::vector<detail::Placement> current(graph.components.size());
    std::set<TunnelKey> used;
    const std::size_t kMaxSolutions = 8;

    auto tunnels_of = [&](std::size_t ci, const detail::Placement& p) {
        std::vector<TunnelKey> keys;
        const auto& st = metro.lines[p.line].stations;
        for (std::size_t e = 0; e < graph.components[ci].size(); ++e) {
            long a = p.start + p.dir * static_cast<long>(e);
            long b = a + p.dir;
            keys.emplace_back(st[static_cast<std::size_t>(a)], st[static_cast<std::size_t>(b)]);
        }
        return keys;
    };

    std::function<void(std::size_t)> search = [&](std::size_t depth) {
        if (solutions.size() >= kMaxSolutions) return;
        if (depth == order.size()) {
            solutions.push_back(current);
            return;
        }
        std::size_t ci = order[depth];
        for (const auto& p : cands[ci]) {
            auto keys = tunnels_of(ci, p);
            bool clash = false;
            for (const auto& k : keys)
                if (used.count(k)) {
                    clash = true;
                    break;
                }
            if (clash) continue;
            for (const auto& k : keys) used.insert(k);
            current[ci] = p;
            search(depth + 1);
            for (const auto& k : keys) used.erase(k);
            if (solutions.size() >= kMaxSolutions) return;
        }
    };
    search(0);

    if (solutions.empty())
        throw AnchoringError(
            "anchor_graph: no conflict-free joint placement of all components exists");
    if (solutions.size() > 1) {
        std::vector<std::string> msgs;
        for (const auto& sol : solutions) {
            std::string s;
            for (std::size_t ci = 0; ci < sol.size(); ++ci) {
                if (ci) s += "; ";
                s += "c" + std::to_string(ci) + " -> " + sol[ci].describe(metro);
            }
            msgs.push_back(s);
        }
        // Name each component's provenance so whoever supplies hints can pin
        // node 0 from a trip whose direction they know.
        std::string who;
        for (std::size_t ci = 0; ci < graph.components.size(); ++ci) {
            const EdgeCluster& first = graph.clusters[graph.components[ci][0]];
            who += " c" + std::to_string(ci) + ": " +
                   std::to_string(graph.components[ci].size()) +
                   " tunnels, first tunnel seen in trip '" + first.trip_ids[first.medoid] + "'.";
        }
        throw AmbiguityError("anchor_graph: " + std::to_string(solutions.size()) +
                                 (solutions.size() >= kMaxSolutions ? "+" : "") +
                                 " candidate mappings; add hints to disambiguate." + who,
                             std::move(msgs));
    }

    PatternMap pm;
    pm.metro = metro;
    const auto& sol = solutions.front();
    for (std::size_t ci = 0; ci < graph.components.size(); ++ci) {
        auto keys = tunnels_of(ci, sol[ci]);
        for (std::size_t e = 0; e < keys.size(); ++e) {
            const EdgeCluster& cl = graph.clusters[graph.components[ci][e]];
            TunnelPattern tp;
            tp.features = cl.representative();
            tp.source_trip = cl.trip_ids[cl.medoid];
            tp.duration = cl.representative_event().duration();
            pm.tunnel_patterns[keys[e]] = std::move(tp);
        }
    }
    std::size_t total = metro.num_directed_tunnels();
    pm.stats.coverage = total ? static_cast<double>(pm.tunnel_patterns.size()) /
                                    static_cast<double>(total)
                              : 0.0;
    return pm;
}

// ---------------------------------------------------------------------------
// End-to-end build
// ---------------------------------------------------------------------------

struct BuildReport {
    int traces_in = 0;
    int traces_merged = 0;   // matched an existing component
    int traces_new = 0;      // started a new component
    int traces_skipped = 0;  // no running events
    double baro_scale = 1.0;
    std::vector<std::pair<int, double>> coverage_curve;
};

/// Incrementally merges all traces (input order), then anchors the graph.
/// The barometer cost scale is calibrated from the corpus before merging.
inline PatternMap build_map(const std::vector<UserTrace>& traces, const MetroMap& metro,
                            MatchConfig cfg, int min_overlap = 4,
                            const std::vector<std::pair<std::string, std::string>>& hints = {},
                            BuildReport* report = nullptr, PatternGraph* graph_out = nullptr) {
    BuildReport local;
    BuildReport& rep = report ? *report : local;
    rep = BuildReport{};
    rep.traces_in = static_cast<int>(traces.size());

    // Scale calibration sample: features of the first events across traces.
    {
        std::vector<EventFeatures> sample;
        for (const auto& ut : traces) {
            for (const auto& r : ut.runs) {
                if (sample.size() >= 24) break;
                if (r.m_trace.size() >= 2) sample.push_back(event_features(r));
            }
            if (sample.size() >= 24) break;
        }
        std::vector<const EventFeatures*> ptrs;
        for (const auto& f : sample) ptrs.push_back(&f);
        cfg.baro_scale = calibrate_baro_scale(ptrs, cfg);
        rep.baro_scale = cfg.baro_scale;
    }

    PatternGraph graph;
    std::size_t total = metro.num_directed_tunnels();
    int seen = 0;
    double best_cov = 0.0;
    for (const auto& ut : traces) {
        ++seen;
        MergeOutcome out = ut.runs.empty() ? MergeOutcome::skipped_short
                                           : merge_into_graph(graph, ut, cfg, min_overlap);
        switch (out) {
            case MergeOutcome::merged: rep.traces_merged++; break;
            case MergeOutcome::new_component: rep.traces_new++; break;
            case MergeOutcome::skipped_short: rep.traces_skipped++; break;
        }
        // Cluster count both under- and over-shoots true tunnel coverage
        // around consolidation events; the running best is the estimate that
        // is monotone like the quantity it tracks.
        double cov = total ? std::min(1.0, static_cast<double>(graph.live_cluster_count()) /
                                               static_cast<double>(total))
                           : 0.0;
        best_cov = std::max(best_cov, cov);
        rep.coverage_curve.emplace_back(seen, best_cov);
    }

    if (graph_out) *graph_out = graph;  // before anchoring, which may throw
    PatternMap pm = anchor_graph(graph, metro, hints);
    pm.stats.trace_count = seen;
    pm.stats.merges_accepted = rep.traces_merged;
    pm.stats.merges_rejected = rep.traces_new;
    pm.stats.coverage_curve = rep.coverage_curve;
    pm.config = cfg;
    return pm;
}

}  // namespace mloc
