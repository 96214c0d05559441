#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "mloc/common.hpp"
#include "mloc/types.hpp"

namespace mloc {

// ---------------------------------------------------------------------------
// Deterministic RNG. std::normal_distribution is implementation-defined, so
// the generators here are self-contained: splitmix64 for the stream and
// Box-Muller for normals. Every simulator output is a pure function of its
// explicit seed.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    int uniform_int(int a, int b) {  // inclusive bounds
        return a + static_cast<int>(next_u64() % static_cast<std::uint64_t>(b - a + 1));
    }

    double normal(double mu = 0.0, double sigma = 1.0) {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double u2 = uniform();
        return mu + sigma * std::sqrt(-2.0 * std::log(u1)) *
                        std::cos(2.0 * std::numbers::pi * u2);
    }

    int poisson(double lambda) {
        // Knuth inversion; lambdas here are small.
        double limit = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    Rng fork(std::uint64_t salt) {
        std::uint64_t z = state_ ^ (salt + 0x9e3779b97f4a7c15ULL + (state_ << 6) + (state_ >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        return Rng(z ^ (z >> 27));
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t hash_str(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    Rng r(a ^ (b * 0xff51afd7ed558ccdULL));
    return r.next_u64();
}

// ---------------------------------------------------------------------------
// Small vector/rotation helpers for synthesizing device-frame readings.
// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0, y = 0, z = 0;
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct Mat3 {
    double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    Vec3 apply(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    static Mat3 from_euler(double yaw, double pitch, double roll) {
        double cy = std::cos(yaw), sy = std::sin(yaw);
        double cp = std::cos(pitch), sp = std::sin(pitch);
        double cr = std::cos(roll), sr = std::sin(roll);
        Mat3 r;
        r.m[0] = cy * cp;
        r.m[1] = cy * sp * sr - sy * cr;
        r.m[2] = cy * sp * cr + sy * sr;
        r.m[3] = sy * cp;
        r.m[4] = sy * sp * sr + cy * cr;
        r.m[5] = sy * sp * cr - cy * sr;
        r.m[6] = -sp;
        r.m[7] = cp * sr;
        r.m[8] = cp * cr;
        return r;
    }
};

inline Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
    // Rodrigues rotation; axis must be unit length.
    double c = std::cos(angle), s = std::sin(angle);
    Vec3 k = axis;
    double dot = k.x * v.x + k.y * v.y + k.z * v.z;
    Vec3 cross{k.y * v.z - k.z * v.y, k.z * v.x - k.x * v.z, k.x * v.y - k.y * v.x};
    return v * c + cross * s + k * (dot * (1 - c));
}

// ---------------------------------------------------------------------------
// Latent world
// ---------------------------------------------------------------------------

struct GaussBump {
    double center = 0, width = 0.1, amp = 0;
};

struct SineWave {
    double amp = 0, freq = 1, phase = 0;
};

/// Latent sensor environment of one directed tunnel, evaluated over
/// normalized position u in [0,1]. Endpoints are pinned to the two stations'
/// ambient values so readings stay continuous across stop boundaries.
struct TunnelProfile {
    double base_duration = 60.0;  // seconds at nominal speed
    std::vector<GaussBump> bumps;
    double mag_from = 50.0, mag_to = 50.0;
    std::vector<SineWave> waves;
    double baro_from = 0.0, baro_to = 0.0;  // station offsets, hPa

    double mag_at(double u) const {
        double raw = 0, raw0 = 0, raw1 = 0;
        for (const auto& b : bumps) {
            auto g = [&](double p) {
                double d = (p - b.center) / b.width;
                return b.amp * std::exp(-0.5 * d * d);
            };
            raw += g(u);
            raw0 += g(0.0);
            raw1 += g(1.0);
        }
        double lin = mag_from * (1.0 - u) + mag_to * u;
        return lin + raw - (raw0 * (1.0 - u) + raw1 * u);
    }

    double baro_at(double u) const {
        double raw = 0, raw0 = 0, raw1 = 0;
        for (const auto& w : waves) {
            auto f = [&](double p) {
                return w.amp * std::sin(2.0 * std::numbers::pi * w.freq * p + w.phase);
            };
            raw += f(u);
            raw0 += f(0.0);
            raw1 += f(1.0);
        }
        double lin = baro_from * (1.0 - u) + baro_to * u;
        return lin + raw - (raw0 * (1.0 - u) + raw1 * u);
    }
};

struct StationProfile {
    double mag_value = 50.0;  // ambient field magnitude at the platform, uT
    double baro_offset = 0.0; // elevation-ish pressure offset, hPa
};

/// Fixed physical constants of the synthetic world. Sensor noise levels live
/// in TripSpec; these describe the trains and tunnels themselves.
struct SimConstants {
    double base_pressure = 1013.0;     // hPa
    double gravity = 9.81;             // m/s^2
    double dwell_min = 22.0, dwell_max = 60.0;
    double duration_min = 40.0, duration_max = 80.0;  // tunnel base durations
    int bumps_min = 10, bumps_max = 18;
    double bump_amp_min = 8.0, bump_amp_max = 20.0;   // uT, sign randomized
    double bump_width_min = 0.05, bump_width_max = 0.10;
    double station_mag_sigma = 4.0;    // spread of per-station field values
    double station_baro_sigma = 0.25;  // spread of station pressure offsets
    double station_baro_clamp = 0.35;
    double vibration_sigma = 0.08;     // per-axis accel noise while cruising
    double coast_speed_factor = 0.05;  // vibration fraction while coasting
    double brake_accel_min = 0.9, brake_accel_max = 1.3;   // m/s^2
    double depart_accel_min = 0.8, depart_accel_max = 1.2;
    double hold_min = 3.5, hold_max = 5.5;  // brake/throttle hold seconds
    double door_open_delay_min = 2.0, door_open_delay_max = 3.5;
    double door_close_lead_min = 3.0, door_close_lead_max = 5.0;
    double decoy_coast_min = 12.0, decoy_coast_max = 18.0;
    double decoy_hold_min = 2.5, decoy_hold_max = 4.0;
    double mag_dir_walk_sigma = 0.008;  // rad/sample drift of the field direction
    // Nonlinear per-traversal time warp (traffic, driver behavior); these
    // bound the sine amplitudes of the monotone warp.
    double time_warp_a1_max = 0.045;
    double time_warp_a2_max = 0.02;
};

struct SyntheticWorld {
    MetroMap metro;
    std::map<std::string, StationProfile> stations;
    std::map<TunnelKey, TunnelProfile> tunnels;
    double station_dwell_mean = 32.0;
    double station_dwell_sigma = 5.0;
    double cabin_overpressure = 0.4;  // hPa between closed cabin and platform
    std::uint64_t seed = 0;
    SimConstants consts;
};

inline SyntheticWorld gen_world(const MetroMap& metro, std::uint64_t seed,
                                const SimConstants& consts = {}) {
    SyntheticWorld w;
    w.metro = metro;
    w.seed = seed;
    w.consts = consts;
    const SimConstants& c = w.consts;

    for (const auto& sid : metro.stations()) {
        Rng r(hash_combine(seed, hash_str("station:" + sid)));
        StationProfile sp;
        sp.mag_value = std::clamp(50.0 + r.normal(0.0, c.station_mag_sigma), 38.0, 65.0);
        sp.baro_offset = std::clamp(r.normal(0.0, c.station_baro_sigma), -c.station_baro_clamp,
                                    c.station_baro_clamp);
        w.stations[sid] = sp;
    }

    for (const auto& key : metro.directed_tunnels()) {
        Rng r(hash_combine(seed, hash_str("tunnel:" + tunnel_key_str(key))));
        TunnelProfile tp;
        tp.base_duration = r.uniform(c.duration_min, c.duration_max);
        int nb = r.uniform_int(c.bumps_min, c.bumps_max);
        for (int i = 0; i < nb; ++i) {
            GaussBump b;
            b.center = r.uniform(0.05, 0.95);
            b.width = r.uniform(c.bump_width_min, c.bump_width_max);
            b.amp = r.uniform(c.bump_amp_min, c.bump_amp_max) * (r.uniform() < 0.5 ? -1.0 : 1.0);
            tp.bumps.push_back(b);
        }
        // Slow pressure relief along the tunnel. Amplitudes start generous
        // and are rescaled below so the worst-case gradient stays far under
        // the door-step threshold: a moving train must never fake a door.
        double amps[3] = {0.12, 0.06, 0.03};
        double freqs[3] = {0.5, 1.0, 2.0};
        for (int i = 0; i < 3; ++i) {
            SineWave sw;
            sw.amp = amps[i] * r.uniform(0.5, 1.5);
            sw.freq = freqs[i];
            sw.phase = r.uniform(0.0, 2.0 * std::numbers::pi);
            tp.waves.push_back(sw);
        }
        tp.mag_from = w.stations.at(key.first).mag_value;
        tp.mag_to = w.stations.at(key.second).mag_value;
        tp.baro_from = w.stations.at(key.first).baro_offset;
        tp.baro_to = w.stations.at(key.second).baro_offset;

        // Cap the pressure slope: fastest position rate is the smoothstep
        // peak (1.5/duration) at the strongest speed warp, times the
        // steepest nonlinear traversal warp (< 1.27).
        {
            const double max_time_slope = 0.028;  // hPa/s, well under 0.3 hPa per 5 s
            double du_dt = 1.5 / (tp.base_duration * 0.85);
            double worst = 0.0;
            for (int g = 0; g <= 200; ++g) {
                double u0 = g / 201.0, u1 = (g + 1) / 201.0;
                worst = std::max(worst, std::abs(tp.baro_at(u1) - tp.baro_at(u0)) / (u1 - u0));
            }
            double slope = worst * du_dt;
            if (slope > max_time_slope) {
                double lerp_du = std::abs(tp.baro_to - tp.baro_from);
                double budget = max_time_slope / du_dt;  // allowed du-slope
                double wave_worst = worst - lerp_du;     // pessimistic split
                double wave_budget = std::max(0.0, budget - lerp_du);
                double scale = wave_worst > 0 ? wave_budget / wave_worst : 0.0;
                for (auto& sw : tp.waves) sw.amp *= scale;
            }
        }
        w.tunnels[key] = tp;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Trip generation
// ---------------------------------------------------------------------------

struct TripSpec {
    std::string line;
    std::string boarding;
    std::string alighting;
    double mag_sigma = 0.4;     // uT
    double accel_sigma = 0.015; // m/s^2 sensor noise (vibration is separate)
    double baro_sigma = 0.02;   // hPa
    double mag_drift = 0.0;     // constant uncalibrated offset, uT
    double rot_yaw = 0.0, rot_pitch = 0.0, rot_roll = 0.0;  // device orientation
    double decoy_decel_rate = 0.0;  // expected mid-tunnel false decelerations per tunnel
    bool has_barometer = true;
    double speed_warp_min = 0.85, speed_warp_max = 1.25;
    std::string trip_id = "trip";
    std::string device_id = "dev";
};

struct GtStop {
    std::string station_id;
    double bt = 0, et = 0;  // standstill interval
};

struct GtTunnel {
    std::string from, to;
    double bt = 0, et = 0;  // departure to arrival standstill
};

struct GtDecoy {
    double bt = 0, et = 0;  // coasting interval of the false deceleration
};

struct GroundTruth {
    std::string trip_id;
    std::string line;
    std::vector<GtStop> stops;
    std::vector<GtTunnel> tunnels;
    std::vector<GtDecoy> decoys;
};

struct SimTrip {
    SensorTrace trace;
    GroundTruth truth;
};

namespace detail {

struct SpeedSeg {
    double t0 = 0, t1 = 0, f0 = 0, f1 = 0;  // vibration factor lerps f0 -> f1
};

struct Pulse {
    double t0 = 0, t1 = 0, a = 0;  // longitudinal train acceleration
};

struct AmbientSeg {
    double t0 = 0, t1 = 0;
    bool tunnel = false;
    std::string a, b;  // station (a) or directed tunnel (a->b)
    // Per-traversal nonlinear time warp: position progresses as
    // w(smoothstep(s)) with w(s) = s + wa1*sin(pi s) + wa2*sin(2 pi s).
    // Monotone as long as wa1 + 2*wa2 < 1/pi.
    double wa1 = 0, wa2 = 0;
};

struct TripScript {
    std::vector<SpeedSeg> speed;
    std::vector<Pulse> pulses;
    std::vector<AmbientSeg> ambient;
    std::vector<std::pair<double, double>> doors_open;
    double end_time = 0;

    double speed_factor(double t) const {
        for (const auto& s : speed)
            if (t >= s.t0 && t < s.t1)
                return s.f0 + (s.f1 - s.f0) * (t - s.t0) / std::max(1e-9, s.t1 - s.t0);
        return 0.0;
    }

    double longitudinal(double t) const {
        for (const auto& p : pulses)
            if (t >= p.t0 && t < p.t1) return p.a;
        return 0.0;
    }

    const AmbientSeg* ambient_at(double t) const {
        for (const auto& s : ambient)
            if (t >= s.t0 && t < s.t1) return &s;
        return ambient.empty() ? nullptr : &ambient.back();
    }

    bool doors_are_open(double t) const {
        for (const auto& d : doors_open)
            if (t >= d.first && t < d.second) return true;
        return false;
    }
};

inline double smoothstep01(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

inline double traversal_position(const AmbientSeg& seg, double s) {
    double u = smoothstep01(s);
    return u + seg.wa1 * std::sin(std::numbers::pi * u) +
           seg.wa2 * std::sin(2.0 * std::numbers::pi * u);
}

}  // namespace detail

inline SimTrip gen_trip(const SyntheticWorld& world, const TripSpec& spec, std::uint64_t seed) {
    const SimConstants& c = world.consts;

    const MetroLine* line = nullptr;
    for (const auto& l : world.metro.lines)
        if (l.name == spec.line) line = &l;
    if (!line) throw SpecError("gen_trip: unknown line " + spec.line);
    auto find_idx = [&](const std::string& s) {
        for (std::size_t i = 0; i < line->stations.size(); ++i)
            if (line->stations[i] == s) return static_cast<int>(i);
        return -1;
    };
    int bi = find_idx(spec.boarding);
    int ai = find_idx(spec.alighting);
    if (bi < 0 || ai < 0) throw SpecError("gen_trip: station not on line " + spec.line);
    if (bi == ai) throw SpecError("gen_trip: boarding equals alighting");
    if (spec.mag_sigma < 0 || spec.accel_sigma < 0 || spec.baro_sigma < 0)
        throw SpecError("gen_trip: negative noise level");
    int step = ai > bi ? 1 : -1;

    std::vector<std::string> visit;
    for (int i = bi;; i += step) {
        visit.push_back(line->stations[static_cast<std::size_t>(i)]);
        if (i == ai) break;
    }

    Rng layout(hash_combine(seed, hash_str("layout:" + spec.trip_id)));
    Rng rng_accel(hash_combine(seed, hash_str("accel:" + spec.trip_id)));
    Rng rng_mag(hash_combine(seed, hash_str("mag:" + spec.trip_id)));
    Rng rng_baro(hash_combine(seed, hash_str("baro:" + spec.trip_id)));

    detail::TripScript sc;
    GroundTruth gt;
    gt.trip_id = spec.trip_id;
    gt.line = spec.line;

    auto dwell_for = [&]() {
        return std::clamp(layout.normal(world.station_dwell_mean, world.station_dwell_sigma),
                          c.dwell_min, c.dwell_max);
    };

    // Approach into the boarding station: cruise, then brake to a stand.
    double t = 0;
    double pre = layout.uniform(8.0, 12.0);
    double brake_hold = layout.uniform(c.hold_min, c.hold_max);
    double brake_a = layout.uniform(c.brake_accel_min, c.brake_accel_max);
    sc.speed.push_back({0, pre, 1.0, 1.0});
    sc.speed.push_back({pre, pre + brake_hold, 1.0, 0.15});
    sc.pulses.push_back({pre, pre + brake_hold, -brake_a});
    sc.ambient.push_back({0, pre + brake_hold, false, visit.front(), ""});
    t = pre + brake_hold;

    for (std::size_t k = 0; k < visit.size(); ++k) {
        // Stop at station visit[k].
        double bt = t;
        double dwell = dwell_for();
        double et = bt + dwell;
        double open_at = bt + layout.uniform(c.door_open_delay_min, c.door_open_delay_max);
        double close_at = et - layout.uniform(c.door_close_lead_min, c.door_close_lead_max);
        sc.doors_open.emplace_back(open_at, close_at);
        sc.speed.push_back({bt, et, 0.0, 0.0});
        sc.ambient.push_back({bt, et, false, visit[k], ""});
        gt.stops.push_back({visit[k], bt, et});
        t = et;

        bool last = (k + 1 == visit.size());
        double depart_hold = layout.uniform(c.hold_min, c.hold_max);
        double depart_a = layout.uniform(c.depart_accel_min, c.depart_accel_max);
        if (last) {
            // Train departs; recording stops shortly after.
            double tail = layout.uniform(5.0, 8.0);
            sc.pulses.push_back({t, t + depart_hold, depart_a});
            sc.speed.push_back({t, t + depart_hold, 0.15, 1.0});
            sc.speed.push_back({t + depart_hold, t + depart_hold + tail, 1.0, 1.0});
            sc.ambient.push_back({t, t + depart_hold + tail, false, visit[k], ""});
            t += depart_hold + tail;
            break;
        }

        // Tunnel to the next station.
        TunnelKey key{visit[k], visit[k + 1]};
        const TunnelProfile& tp = world.tunnels.at(key);
        double warp = layout.uniform(spec.speed_warp_min, spec.speed_warp_max);
        double dur = tp.base_duration * warp;
        double t_arr_hold = layout.uniform(c.hold_min, c.hold_max);
        double arr_a = layout.uniform(c.brake_accel_min, c.brake_accel_max);

        sc.pulses.push_back({t, t + depart_hold, depart_a});
        sc.speed.push_back({t, t + depart_hold, 0.15, 1.0});

        // Decoy decelerations: driver slows mid-tunnel, coasts, speeds up.
        int n_decoys = spec.decoy_decel_rate > 0 ? layout.poisson(spec.decoy_decel_rate) : 0;
        double cruise_from = t + depart_hold;
        double cruise_to = t + dur - t_arr_hold;
        std::vector<std::pair<double, double>> coasts;
        for (int d = 0; d < n_decoys; ++d) {
            double hold = layout.uniform(c.decoy_hold_min, c.decoy_hold_max);
            double coast = layout.uniform(c.decoy_coast_min, c.decoy_coast_max);
            double need = 2 * hold + coast;
            double lo = cruise_from + 6.0;
            double hi = cruise_to - 6.0 - need;
            // Skip decoys that no longer fit (short tunnels, crowded schedule).
            double center = layout.uniform(0.0, 1.0);
            if (hi <= lo) continue;
            double start = lo + (hi - lo) * center;
            bool clash = false;
            for (const auto& cs : coasts)
                if (start < cs.second + 8.0 && start + need > cs.first - 8.0 - 2 * hold) clash = true;
            if (clash) continue;

            double brake2 = layout.uniform(c.brake_accel_min, c.brake_accel_max) * 0.8;
            sc.pulses.push_back({start, start + hold, -brake2});
            sc.speed.push_back({start, start + hold, 1.0, 0.3});
            double c0 = start + hold, c1 = c0 + coast;
            sc.speed.push_back({c0, c1, c.coast_speed_factor, c.coast_speed_factor});
            sc.pulses.push_back({c1, c1 + hold, brake2});
            sc.speed.push_back({c1, c1 + hold, 0.3, 1.0});
            coasts.emplace_back(c0, c1);
            gt.decoys.push_back({c0, c1});
        }
        std::sort(coasts.begin(), coasts.end());

        // Cruise segments between decoy structures keep full vibration.
        {
            double cur = cruise_from;
            for (const auto& cs : coasts) {
                if (cs.first > cur) sc.speed.push_back({cur, cs.first, 1.0, 1.0});
                cur = cs.second;
            }
            if (cur < cruise_to) sc.speed.push_back({cur, cruise_to, 1.0, 1.0});
        }

        sc.pulses.push_back({t + dur - t_arr_hold, t + dur, -arr_a});
        sc.speed.push_back({cruise_to, t + dur, 1.0, 0.15});
        detail::AmbientSeg seg{t, t + dur, true, visit[k], visit[k + 1]};
        seg.wa1 = layout.uniform(-c.time_warp_a1_max, c.time_warp_a1_max);
        seg.wa2 = layout.uniform(-c.time_warp_a2_max, c.time_warp_a2_max);
        sc.ambient.push_back(seg);
        gt.tunnels.push_back({visit[k], visit[k + 1], t, t + dur});
        t += dur;
    }
    sc.end_time = t;

    // Speed segments were pushed per phase; decoy segments overlap the cruise
    // entries they carve out. First match wins in speed_factor(), so order
    // them decoys-first within equal start times.
    std::stable_sort(sc.speed.begin(), sc.speed.end(),
                     [](const detail::SpeedSeg& a, const detail::SpeedSeg& b) {
                         if (a.t0 != b.t0) return a.t0 < b.t0;
                         return (a.t1 - a.t0) < (b.t1 - b.t0);
                     });

    // ---- emit sensor streams -------------------------------------------
    SensorTrace trace;
    trace.trip_id = spec.trip_id;
    trace.device_id = spec.device_id;
    trace.accel_rate_hz = 5.0;
    trace.mag_rate_hz = 5.0;
    trace.baro_rate_hz = 3.0;
    Mat3 rot = Mat3::from_euler(spec.rot_yaw, spec.rot_pitch, spec.rot_roll);

    auto position_u = [&](const detail::AmbientSeg& seg, double tt) {
        return detail::traversal_position(seg, (tt - seg.t0) / std::max(1e-9, seg.t1 - seg.t0));
    };
    auto ambient_mag = [&](double tt) {
        const detail::AmbientSeg* seg = sc.ambient_at(tt);
        if (!seg) return 50.0;
        if (!seg->tunnel) return world.stations.at(seg->a).mag_value;
        return world.tunnels.at(TunnelKey{seg->a, seg->b}).mag_at(position_u(*seg, tt));
    };
    auto ambient_baro = [&](double tt) {
        const detail::AmbientSeg* seg = sc.ambient_at(tt);
        if (!seg) return c.base_pressure;
        if (!seg->tunnel) return c.base_pressure + world.stations.at(seg->a).baro_offset;
        const TunnelProfile& tp = world.tunnels.at(TunnelKey{seg->a, seg->b});
        return c.base_pressure + tp.baro_at(position_u(*seg, tt));
    };

    const long n_accel = static_cast<long>(sc.end_time * trace.accel_rate_hz);
    for (long k = 0; k <= n_accel; ++k) {
        double tt = static_cast<double>(k) / trace.accel_rate_hz;
        double f = sc.speed_factor(tt);
        Vec3 world_acc{sc.longitudinal(tt), 0.0, c.gravity};
        Vec3 vib{rng_accel.normal(0, c.vibration_sigma * f),
                 rng_accel.normal(0, c.vibration_sigma * f),
                 rng_accel.normal(0, c.vibration_sigma * f)};
        Vec3 v = rot.apply(world_acc + vib);
        trace.accel.push_back({tt, v.x + rng_accel.normal(0, spec.accel_sigma),
                               v.y + rng_accel.normal(0, spec.accel_sigma),
                               v.z + rng_accel.normal(0, spec.accel_sigma)});
    }

    // Field direction wanders slowly; magnitude carries the fingerprint.
    Vec3 dir{1, 0, 0};
    {
        double a1 = rng_mag.uniform(0, 2 * std::numbers::pi);
        double a2 = rng_mag.uniform(-1.0, 1.0);
        double s = std::sqrt(1 - a2 * a2);
        dir = {s * std::cos(a1), s * std::sin(a1), a2};
    }
    const long n_mag = static_cast<long>(sc.end_time * trace.mag_rate_hz);
    for (long k = 0; k <= n_mag; ++k) {
        double tt = static_cast<double>(k) / trace.mag_rate_hz;
        double m = ambient_mag(tt) + spec.mag_drift + rng_mag.normal(0, spec.mag_sigma);
        m = std::max(0.1, m);
        double a1 = rng_mag.uniform(0, 2 * std::numbers::pi);
        double a2 = rng_mag.uniform(-1.0, 1.0);
        double s = std::sqrt(1 - a2 * a2);
        Vec3 axis{s * std::cos(a1), s * std::sin(a1), a2};
        dir = rotate_about(dir, axis, rng_mag.normal(0, c.mag_dir_walk_sigma));
        double n = dir.norm();
        dir = dir * (1.0 / n);
        Vec3 v = rot.apply(dir * m);
        trace.mag.push_back(make_mag_sample(tt, v.x, v.y, v.z));
    }

    if (spec.has_barometer) {
        const long n_baro = static_cast<long>(sc.end_time * trace.baro_rate_hz);
        for (long k = 0; k <= n_baro; ++k) {
            double tt = static_cast<double>(k) / trace.baro_rate_hz;
            double p = ambient_baro(tt);
            if (!sc.doors_are_open(tt)) p += world.cabin_overpressure;
            trace.baro.push_back({tt, p + rng_baro.normal(0, spec.baro_sigma)});
        }
    }

    return SimTrip{std::move(trace), std::move(gt)};
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

struct CorpusConfig {
    int n_trips = 162;
    double geometric_p = 0.18;  // short-skewed trip length distribution
    int min_tunnels = 1;
    int max_tunnels = 15;
    double terminus_bias = 0.45;  // fraction of trips starting or ending at a line terminus
    double mag_sigma = 0.4;
    double accel_sigma = 0.015;
    double baro_sigma = 0.02;
    double decoy_decel_rate = 0.0;  // criterion-specific corpora inject decoys explicitly
    int n_devices = 10;
    double baro_device_fraction = 0.7;  // 7 of 10 phones had a barometer
    double drift_max = 8.0;             // uT, uniform per device
};

/// Devices are a fixed pool: each gets its own drift, orientation and
/// barometer presence, and trips are dealt across them.
inline std::vector<SimTrip> gen_corpus(const SyntheticWorld& world, const CorpusConfig& cfg,
                                       std::uint64_t seed) {
    if (cfg.n_trips < 1) throw SpecError("gen_corpus: need at least one trip");
    struct Device {
        std::string id;
        double drift;
        double yaw, pitch, roll;
        bool has_baro;
    };
    Rng dev_rng(hash_combine(seed, hash_str("devices")));
    std::vector<Device> devices;
    for (int d = 0; d < cfg.n_devices; ++d) {
        Device dv;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "dev-%02d", d);
        dv.id = buf;
        dv.drift = dev_rng.uniform(-cfg.drift_max, cfg.drift_max);
        dv.yaw = dev_rng.uniform(0, 2 * std::numbers::pi);
        dv.pitch = dev_rng.uniform(-0.5, 0.5);
        dv.roll = dev_rng.uniform(0, 2 * std::numbers::pi);
        dv.has_baro = d < static_cast<int>(std::round(cfg.baro_device_fraction * cfg.n_devices));
        devices.push_back(dv);
    }

    std::vector<SimTrip> out;
    out.reserve(static_cast<std::size_t>(cfg.n_trips));
    for (int i = 0; i < cfg.n_trips; ++i) {
        Rng r(hash_combine(seed, hash_combine(0x7472697055ULL, static_cast<std::uint64_t>(i))));
        const MetroLine& line =
            world.metro.lines[static_cast<std::size_t>(r.uniform_int(0, static_cast<int>(world.metro.lines.size()) - 1))];
        int tunnels_on_line = static_cast<int>(line.stations.size()) - 1;
        int max_len = std::min(cfg.max_tunnels, tunnels_on_line);
        double u = r.uniform();
        int len = cfg.min_tunnels +
                  static_cast<int>(std::log(std::max(1e-12, 1.0 - u)) / std::log(1.0 - cfg.geometric_p));
        len = std::clamp(len, cfg.min_tunnels, max_len);
        int dir = r.uniform() < 0.5 ? 1 : -1;
        // Termini are boarding hubs; bias some trips to touch a line end so
        // the rarely-ridden end tunnels still get covered.
        int lo;
        double tb = r.uniform();
        if (tb < cfg.terminus_bias / 2)
            lo = 0;
        else if (tb < cfg.terminus_bias)
            lo = tunnels_on_line - len;
        else
            lo = r.uniform_int(0, tunnels_on_line - len);
        int b = dir > 0 ? lo : lo + len;
        int a = dir > 0 ? lo + len : lo;

        const Device& dv = devices[static_cast<std::size_t>(r.uniform_int(0, cfg.n_devices - 1))];
        TripSpec spec;
        spec.line = line.name;
        spec.boarding = line.stations[static_cast<std::size_t>(b)];
        spec.alighting = line.stations[static_cast<std::size_t>(a)];
        spec.mag_sigma = cfg.mag_sigma;
        spec.accel_sigma = cfg.accel_sigma;
        spec.baro_sigma = cfg.baro_sigma;
        spec.mag_drift = dv.drift;
        spec.rot_yaw = dv.yaw;
        spec.rot_pitch = dv.pitch;
        spec.rot_roll = dv.roll;
        spec.decoy_decel_rate = cfg.decoy_decel_rate;
        spec.has_barometer = dv.has_baro;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "trip-%04d", i);
        spec.trip_id = buf;
        spec.device_id = dv.id;
        out.push_back(gen_trip(world, spec, hash_combine(seed, static_cast<std::uint64_t>(i))));
    }
    return out;
}

}  // namespace mloc
