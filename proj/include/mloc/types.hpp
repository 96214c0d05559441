#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mloc/common.hpp"

namespace mloc {

// All timestamps are seconds since the start of the owning trace.

struct AccelSample {
    double t = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;  // m/s^2, gravity included
};

struct BaroSample {
    double t = 0.0;
    double baro = 0.0;  // hPa
};

struct MagSample {
    double t = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;  // uT per axis
    double m = 0.0;                    // magnitude, uT
};

/// Magnitude of a magnetic field vector. Rotation-invariant, which is why the
/// matching pipeline works on it instead of the device-frame axes.
inline double mag_magnitude(double mx, double my, double mz) {
    if (!std::isfinite(mx) || !std::isfinite(my) || !std::isfinite(mz)) {
        throw InvalidSampleError("mag_magnitude: non-finite component");
    }
    return std::sqrt(mx * mx + my * my + mz * mz);
}

inline MagSample make_mag_sample(double t, double x, double y, double z) {
    return MagSample{t, x, y, z, mag_magnitude(x, y, z)};
}

struct SensorTrace {
    std::string trip_id;
    std::string device_id;
    std::vector<AccelSample> accel;
    std::vector<MagSample> mag;
    std::vector<BaroSample> baro;  // empty when the device has no barometer
    double accel_rate_hz = 5.0;
    double mag_rate_hz = 5.0;
    double baro_rate_hz = 3.0;

    bool has_barometer() const { return !baro.empty(); }
};

struct StopEvent {
    double bt = 0.0;  // train comes to rest
    double et = 0.0;  // train starts moving again
    std::optional<std::string> station_id;  // unknown until anchoring
    bool baro_confirmed = false;  // false also when no barometer was present

    double duration() const { return et - bt; }
};

struct RunningEvent {
    double bt = 0.0;
    double et = 0.0;
    std::vector<BaroSample> b_trace;  // may be empty (no barometer)
    std::vector<MagSample> m_trace;
    std::optional<std::pair<std::string, std::string>> tunnel;  // unknown until anchoring

    double duration() const { return et - bt; }
};

/// Alternating stop/running sequence segmented from one trip.
/// events = <SE1, RE1, SE2, RE2, ..., SEn> for a complete trip.
struct UserTrace {
    std::string trip_id;
    std::vector<StopEvent> stops;
    std::vector<RunningEvent> runs;  // runs[i] sits between stops[i] and stops[i+1]

    std::size_t num_stops() const { return stops.size(); }
    std::size_t num_runs() const { return runs.size(); }
};

// ---------------------------------------------------------------------------
// Metro topology
// ---------------------------------------------------------------------------

struct MetroLine {
    std::string name;
    std::vector<std::string> stations;  // ordered along the line
};

/// Directed station pair identifying a tunnel. (A,B) and (B,A) are distinct
/// keys; the sensor pattern of a tunnel depends on travel direction.
using TunnelKey = std::pair<std::string, std::string>;

inline std::string tunnel_key_str(const TunnelKey& k) { return k.first + "->" + k.second; }

struct MetroMap {
    std::vector<MetroLine> lines;
    std::map<std::string, std::string> station_names;  // id -> display name

    std::set<std::string> stations() const {
        std::set<std::string> out;
        for (const auto& l : lines)
            for (const auto& s : l.stations) out.insert(s);
        return out;
    }

    /// Stations appearing on two or more lines.
    std::set<std::string> transfer_stations() const {
        std::map<std::string, int> count;
        for (const auto& l : lines) {
            std::set<std::string> seen(l.stations.begin(), l.stations.end());
            for (const auto& s : seen) count[s]++;
        }
        std::set<std::string> out;
        for (const auto& [s, c] : count)
            if (c >= 2) out.insert(s);
        return out;
    }

    /// All directed tunnels, both travel directions of every adjacent pair.
    std::vector<TunnelKey> directed_tunnels() const {
        std::vector<TunnelKey> out;
        std::set<TunnelKey> seen;
        for (const auto& l : lines) {
            for (std::size_t i = 0; i + 1 < l.stations.size(); ++i) {
                TunnelKey fwd{l.stations[i], l.stations[i + 1]};
                TunnelKey bwd{l.stations[i + 1], l.stations[i]};
                if (seen.insert(fwd).second) out.push_back(fwd);
                if (seen.insert(bwd).second) out.push_back(bwd);
            }
        }
        return out;
    }

    std::size_t num_directed_tunnels() const { return directed_tunnels().size(); }

    bool has_tunnel(const TunnelKey& k) const {
        for (const auto& l : lines)
            for (std::size_t i = 0; i + 1 < l.stations.size(); ++i)
                if ((l.stations[i] == k.first && l.stations[i + 1] == k.second) ||
                    (l.stations[i + 1] == k.first && l.stations[i] == k.second))
                    return true;
        return false;
    }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string stream;  // "accel", "mag", "baro", "trace"
    std::size_t index = 0;
    std::string rule;
    std::string detail;
};

inline std::string to_string(const Violation& v) {
    return v.stream + "[" + std::to_string(v.index) + "]: " + v.rule +
           (v.detail.empty() ? "" : " (" + v.detail + ")");
}

/// Checks every type invariant of a SensorTrace. Violations are data, not
/// failures: an empty result means the trace is well formed.
inline std::vector<Violation> validate_trace(const SensorTrace& trace) {
    std::vector<Violation> out;
    auto check_times = [&](const auto& stream, const char* name) {
        for (std::size_t i = 0; i < stream.size(); ++i) {
            if (!std::isfinite(stream[i].t)) {
                out.push_back({name, i, "non-finite time", ""});
            } else if (stream[i].t < 0) {
                out.push_back({name, i, "negative time", ""});
            }
            if (i > 0 && !(stream[i].t > stream[i - 1].t)) {
                out.push_back({name, i, "non-increasing time", ""});
            }
        }
    };
    check_times(trace.accel, "accel");
    check_times(trace.mag, "mag");
    check_times(trace.baro, "baro");

    for (std::size_t i = 0; i < trace.accel.size(); ++i) {
        const auto& s = trace.accel[i];
        if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z))
            out.push_back({"accel", i, "non-finite value", ""});
    }
    for (std::size_t i = 0; i < trace.mag.size(); ++i) {
        const auto& s = trace.mag[i];
        if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z) ||
            !std::isfinite(s.m)) {
            out.push_back({"mag", i, "non-finite value", ""});
            continue;
        }
        double expect = std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z);
        if (std::abs(s.m - expect) > 1e-9) {
            out.push_back({"mag", i, "magnitude mismatch",
                           "stored " + std::to_string(s.m) + " computed " + std::to_string(expect)});
        }
    }
    for (std::size_t i = 0; i < trace.baro.size(); ++i) {
        const auto& s = trace.baro[i];
        if (!std::isfinite(s.baro)) {
            out.push_back({"baro", i, "non-finite value", ""});
        } else if (s.baro < 800.0 || s.baro > 1100.0) {
            out.push_back({"baro", i, "pressure out of band", std::to_string(s.baro) + " hPa"});
        }
    }
    if (trace.mag.empty()) out.push_back({"mag", 0, "empty mag stream", ""});
    if (trace.accel_rate_hz <= 0) out.push_back({"trace", 0, "non-positive accel rate", ""});
    if (trace.mag_rate_hz <= 0) out.push_back({"trace", 0, "non-positive mag rate", ""});
    if (!trace.baro.empty() && trace.baro_rate_hz <= 0)
        out.push_back({"trace", 0, "non-positive baro rate", ""});
    return out;
}

/// Cross-checks the alternation and ordering invariants of a segmented trace.
inline std::vector<Violation> validate_user_trace(const UserTrace& ut) {
    std::vector<Violation> out;
    if (ut.stops.size() != ut.runs.size() + 1 && !(ut.stops.empty() && ut.runs.empty()))
        out.push_back({"trace", 0, "event alternation broken",
                       std::to_string(ut.stops.size()) + " stops, " +
                           std::to_string(ut.runs.size()) + " runs"});
    for (std::size_t i = 0; i < ut.stops.size(); ++i) {
        if (!(ut.stops[i].bt < ut.stops[i].et))
            out.push_back({"stop", i, "bt >= et", ""});
        if (i < ut.runs.size()) {
            if (std::abs(ut.runs[i].bt - ut.stops[i].et) > 1e-9 ||
                (i + 1 < ut.stops.size() && std::abs(ut.runs[i].et - ut.stops[i + 1].bt) > 1e-9))
                out.push_back({"run", i, "interval not contiguous with stops", ""});
            for (const auto& s : ut.runs[i].m_trace)
                if (s.t < ut.runs[i].bt - 1e-9 || s.t > ut.runs[i].et + 1e-9) {
                    out.push_back({"run", i, "mag sample outside interval", ""});
                    break;
                }
            for (const auto& s : ut.runs[i].b_trace)
                if (s.t < ut.runs[i].bt - 1e-9 || s.t > ut.runs[i].et + 1e-9) {
                    out.push_back({"run", i, "baro sample outside interval", ""});
                    break;
                }
        }
    }
    return out;
}

}  // namespace mloc
