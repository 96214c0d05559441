#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mloc/map_builder.hpp"
#include "mloc/matching.hpp"
#include "mloc/simulate.hpp"
#include "mloc/types.hpp"

namespace mloc {

using ordered_json = nlohmann::ordered_json;

constexpr int kMapFileVersion = 1;

namespace detail {

inline std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t p = s.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, int line_no, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

}  // namespace detail

/// Whole-file atomic write: the content lands under a temporary name first
/// and is renamed into place, so a failed write leaves no partial file.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed for " + tmp);
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ec2;
        fs::remove(tmp, ec2);
        throw IoError("rename to " + path + " failed: " + ec.message());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Trace files: CSV with '#'-prefixed metadata lines.
//   t,sensor,a,b,c  where sensor is ACC | MAG | BARO.
//   ACC/MAG carry a,b,c = x,y,z; BARO carries a = pressure and empty b,c.
// ---------------------------------------------------------------------------

inline std::string trace_to_string(const SensorTrace& trace) {
    std::ostringstream out;
    out << "# trip_id=" << trace.trip_id << "\n";
    out << "# device_id=" << trace.device_id << "\n";
    out << "# accel_rate_hz=" << detail::fmt9(trace.accel_rate_hz) << "\n";
    out << "# mag_rate_hz=" << detail::fmt9(trace.mag_rate_hz) << "\n";
    if (!trace.baro.empty())
        out << "# baro_rate_hz=" << detail::fmt9(trace.baro_rate_hz) << "\n";
    out << "t,sensor,a,b,c\n";
    for (const auto& s : trace.accel)
        out << detail::fmt9(s.t) << ",ACC," << detail::fmt9(s.x) << "," << detail::fmt9(s.y)
            << "," << detail::fmt9(s.z) << "\n";
    for (const auto& s : trace.mag)
        out << detail::fmt9(s.t) << ",MAG," << detail::fmt9(s.x) << "," << detail::fmt9(s.y)
            << "," << detail::fmt9(s.z) << "\n";
    for (const auto& s : trace.baro)
        out << detail::fmt9(s.t) << ",BARO," << detail::fmt9(s.baro) << ",,\n";
    return out.str();
}

inline void write_trace(const SensorTrace& trace, const std::string& path) {
    auto violations = validate_trace(trace);
    if (!violations.empty()) {
        std::string msg = "write_trace: invalid trace:";
        for (const auto& v : violations) msg += "\n  " + to_string(v);
        throw ValidationError(msg);
    }
    atomic_write_file(path, trace_to_string(trace));
}

inline SensorTrace trace_from_string(const std::string& text) {
    SensorTrace trace;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string meta = detail::trim(line.substr(1));
            auto eq = meta.find('=');
            if (eq == std::string::npos) continue;
            std::string key = detail::trim(meta.substr(0, eq));
            std::string val = detail::trim(meta.substr(eq + 1));
            if (key == "trip_id") trace.trip_id = val;
            else if (key == "device_id") trace.device_id = val;
            else if (key == "accel_rate_hz") trace.accel_rate_hz = detail::parse_double(val, line_no, "rate");
            else if (key == "mag_rate_hz") trace.mag_rate_hz = detail::parse_double(val, line_no, "rate");
            else if (key == "baro_rate_hz") trace.baro_rate_hz = detail::parse_double(val, line_no, "rate");
            continue;
        }
        if (!header_seen) {
            if (line != "t,sensor,a,b,c")
                throw ParseError("line " + std::to_string(line_no) +
                                 ": expected header 't,sensor,a,b,c', got '" + line + "'");
            header_seen = true;
            continue;
        }
        auto fields = detail::split(line, ',');
        if (fields.size() != 5)
            throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        double t = detail::parse_double(fields[0], line_no, "timestamp");
        const std::string& kind = fields[1];
        if (kind == "ACC") {
            trace.accel.push_back({t, detail::parse_double(fields[2], line_no, "x"),
                                   detail::parse_double(fields[3], line_no, "y"),
                                   detail::parse_double(fields[4], line_no, "z")});
        } else if (kind == "MAG") {
            trace.mag.push_back(make_mag_sample(t, detail::parse_double(fields[2], line_no, "x"),
                                                detail::parse_double(fields[3], line_no, "y"),
                                                detail::parse_double(fields[4], line_no, "z")));
        } else if (kind == "BARO") {
            if (!detail::trim(fields[3]).empty() || !detail::trim(fields[4]).empty())
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": BARO record must leave fields b,c empty");
            trace.baro.push_back({t, detail::parse_double(fields[2], line_no, "pressure")});
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": unknown sensor '" + kind + "'");
        }
    }
    if (!header_seen) throw ParseError("missing header line 't,sensor,a,b,c'");
    auto violations = validate_trace(trace);
    if (!violations.empty()) {
        std::string msg = "trace violates invariants:";
        for (const auto& v : violations) msg += "\n  " + to_string(v);
        throw ValidationError(msg);
    }
    return trace;
}

inline SensorTrace read_trace(const std::string& path) { return trace_from_string(read_file(path)); }

// ---------------------------------------------------------------------------
// Topology files: one line per metro line, `line <name>: A - B - C`.
// ---------------------------------------------------------------------------

inline MetroMap parse_topology(const std::string& text) {
    MetroMap metro;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("line ", 0) != 0)
            throw ParseError("line " + std::to_string(line_no) + ": expected 'line <name>: ...'");
        auto colon = line.find(':');
        if (colon == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": missing ':'");
        MetroLine ml;
        ml.name = detail::trim(line.substr(5, colon - 5));
        if (ml.name.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty line name");
        for (auto& tok : detail::split(line.substr(colon + 1), '-')) {
            std::string s = detail::trim(tok);
            if (s.empty())
                throw ParseError("line " + std::to_string(line_no) + ": empty station name");
            ml.stations.push_back(s);
        }
        if (ml.stations.size() < 2)
            throw ParseError("line " + std::to_string(line_no) + ": a line needs >= 2 stations");
        metro.lines.push_back(std::move(ml));
    }
    if (metro.lines.empty()) throw ParseError("topology file defines no lines");
    for (const auto& s : metro.stations()) metro.station_names[s] = s;
    return metro;
}

inline MetroMap read_topology(const std::string& path) { return parse_topology(read_file(path)); }

inline std::string topology_to_string(const MetroMap& metro) {
    std::ostringstream out;
    for (const auto& l : metro.lines) {
        out << "line " << l.name << ": ";
        for (std::size_t i = 0; i < l.stations.size(); ++i) {
            if (i) out << " - ";
            out << l.stations[i];
        }
        out << "\n";
    }
    return out.str();
}

/// Hints file: `node_id = station_id` pairs, '#' comments.
inline std::vector<std::pair<std::string, std::string>> parse_hints(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("hints line " + std::to_string(line_no) + ": expected 'node = station'");
        out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pattern-map files: versioned JSON.
// ---------------------------------------------------------------------------

namespace detail {

inline ordered_json series_to_json(const VarianceSeries& s) {
    double period = s.t.size() > 1 ? s.t[1] - s.t[0] : 0.0;
    ordered_json j;
    j["period"] = period;
    j["values"] = s.v;
    return j;
}

inline VarianceSeries series_from_json(const ordered_json& j, const std::string& source) {
    VarianceSeries s;
    s.source = source;
    double period = j.at("period").get<double>();
    s.v = j.at("values").get<std::vector<double>>();
    s.t.reserve(s.v.size());
    for (std::size_t i = 0; i < s.v.size(); ++i) s.t.push_back(static_cast<double>(i) * period);
    return s;
}

inline ordered_json metro_to_json(const MetroMap& metro) {
    ordered_json j;
    j["lines"] = ordered_json::array();
    for (const auto& l : metro.lines) {
        ordered_json jl;
        jl["name"] = l.name;
        jl["stations"] = l.stations;
        j["lines"].push_back(jl);
    }
    j["station_names"] = ordered_json::object();
    for (const auto& [id, name] : metro.station_names) j["station_names"][id] = name;
    return j;
}

inline MetroMap metro_from_json(const ordered_json& j) {
    MetroMap metro;
    for (const auto& jl : j.at("lines")) {
        MetroLine l;
        l.name = jl.at("name").get<std::string>();
        l.stations = jl.at("stations").get<std::vector<std::string>>();
        metro.lines.push_back(std::move(l));
    }
    if (j.contains("station_names"))
        for (auto it = j.at("station_names").begin(); it != j.at("station_names").end(); ++it)
            metro.station_names[it.key()] = it.value().get<std::string>();
    return metro;
}

inline ordered_json config_to_json(const MatchConfig& cfg) {
    ordered_json j;
    j["dtw_threshold"] = cfg.dtw_threshold;
    j["mag_weight"] = cfg.mag_weight;
    j["baro_weight"] = cfg.baro_weight;
    if (cfg.band_radius)
        j["band_radius"] = *cfg.band_radius;
    else
        j["band_radius"] = nullptr;
    j["baro_scale"] = cfg.baro_scale;
    return j;
}

inline MatchConfig config_from_json(const ordered_json& j) {
    MatchConfig cfg;
    cfg.dtw_threshold = j.at("dtw_threshold").get<double>();
    cfg.mag_weight = j.at("mag_weight").get<double>();
    cfg.baro_weight = j.at("baro_weight").get<double>();
    if (!j.at("band_radius").is_null()) cfg.band_radius = j.at("band_radius").get<int>();
    cfg.baro_scale = j.at("baro_scale").get<double>();
    return cfg;
}

}  // namespace detail

inline std::string map_to_string(const PatternMap& pm) {
    ordered_json j;
    j["version"] = kMapFileVersion;
    j["metro"] = detail::metro_to_json(pm.metro);
    j["config"] = detail::config_to_json(pm.config);
    ordered_json stats;
    stats["coverage"] = pm.stats.coverage;
    stats["trace_count"] = pm.stats.trace_count;
    stats["merges_accepted"] = pm.stats.merges_accepted;
    stats["merges_rejected"] = pm.stats.merges_rejected;
    ordered_json curve = ordered_json::array();
    for (const auto& [n, c] : pm.stats.coverage_curve) curve.push_back(ordered_json::array({n, c}));
    stats["coverage_curve"] = curve;
    j["build_stats"] = stats;
    ordered_json pats = ordered_json::object();
    for (const auto& [key, pat] : pm.tunnel_patterns) {
        ordered_json jp;
        jp["source_trip"] = pat.source_trip;
        jp["duration"] = pat.duration;
        jp["mag"] = detail::series_to_json(pat.features.mag);
        if (pat.features.baro)
            jp["baro"] = detail::series_to_json(*pat.features.baro);
        else
            jp["baro"] = nullptr;
        pats[tunnel_key_str(key)] = jp;
    }
    j["tunnel_patterns"] = pats;
    return j.dump(2) + "\n";
}

inline void write_map(const PatternMap& pm, const std::string& path) {
    atomic_write_file(path, map_to_string(pm));
}

inline PatternMap map_from_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("map file: ") + e.what());
    }
    try {
        int version = j.at("version").get<int>();
        if (version != kMapFileVersion)
            throw UnsupportedVersionError("map file version " + std::to_string(version) +
                                          " is not supported (expected " +
                                          std::to_string(kMapFileVersion) + ")");
        PatternMap pm;
        pm.metro = detail::metro_from_json(j.at("metro"));
        pm.config = detail::config_from_json(j.at("config"));
        const auto& stats = j.at("build_stats");
        pm.stats.coverage = stats.at("coverage").get<double>();
        pm.stats.trace_count = stats.at("trace_count").get<int>();
        pm.stats.merges_accepted = stats.at("merges_accepted").get<int>();
        pm.stats.merges_rejected = stats.at("merges_rejected").get<int>();
        for (const auto& pt : stats.at("coverage_curve"))
            pm.stats.coverage_curve.emplace_back(pt.at(0).get<int>(), pt.at(1).get<double>());
        for (auto it = j.at("tunnel_patterns").begin(); it != j.at("tunnel_patterns").end(); ++it) {
            auto arrow = it.key().find("->");
            if (arrow == std::string::npos)
                throw ParseError("map file: bad tunnel key '" + it.key() + "'");
            TunnelKey key{it.key().substr(0, arrow), it.key().substr(arrow + 2)};
            TunnelPattern tp;
            tp.source_trip = it.value().at("source_trip").get<std::string>();
            tp.duration = it.value().at("duration").get<double>();
            tp.features.mag = detail::series_from_json(it.value().at("mag"), "mag");
            if (!it.value().at("baro").is_null())
                tp.features.baro = detail::series_from_json(it.value().at("baro"), "baro");
            pm.tunnel_patterns[key] = std::move(tp);
        }
        return pm;
    } catch (const UnsupportedVersionError&) {
        throw;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(std::string("map file: ") + e.what());
    }
}

inline PatternMap read_map(const std::string& path) { return map_from_string(read_file(path)); }

// ---------------------------------------------------------------------------
// Ground truth and world files (simulator output, consumed by eval).
// ---------------------------------------------------------------------------

inline std::string truth_to_string(const GroundTruth& gt) {
    ordered_json j;
    j["trip_id"] = gt.trip_id;
    j["line"] = gt.line;
    j["stops"] = ordered_json::array();
    for (const auto& s : gt.stops) {
        ordered_json js;
        js["station"] = s.station_id;
        js["bt"] = s.bt;
        js["et"] = s.et;
        j["stops"].push_back(js);
    }
    j["tunnels"] = ordered_json::array();
    for (const auto& t : gt.tunnels) {
        ordered_json jt;
        jt["from"] = t.from;
        jt["to"] = t.to;
        jt["bt"] = t.bt;
        jt["et"] = t.et;
        j["tunnels"].push_back(jt);
    }
    j["decoys"] = ordered_json::array();
    for (const auto& d : gt.decoys) j["decoys"].push_back(ordered_json::array({d.bt, d.et}));
    return j.dump(2) + "\n";
}

inline GroundTruth truth_from_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("truth file: ") + e.what());
    }
    GroundTruth gt;
    gt.trip_id = j.at("trip_id").get<std::string>();
    gt.line = j.at("line").get<std::string>();
    for (const auto& js : j.at("stops"))
        gt.stops.push_back({js.at("station").get<std::string>(), js.at("bt").get<double>(),
                            js.at("et").get<double>()});
    for (const auto& jt : j.at("tunnels"))
        gt.tunnels.push_back({jt.at("from").get<std::string>(), jt.at("to").get<std::string>(),
                              jt.at("bt").get<double>(), jt.at("et").get<double>()});
    for (const auto& jd : j.at("decoys"))
        gt.decoys.push_back({jd.at(0).get<double>(), jd.at(1).get<double>()});
    return gt;
}

struct WorldFile {
    std::uint64_t seed = 0;
    MetroMap metro;
    CorpusConfig corpus;
};

inline std::string world_to_string(const WorldFile& w) {
    ordered_json j;
    j["seed"] = w.seed;
    j["metro"] = detail::metro_to_json(w.metro);
    ordered_json c;
    c["n_trips"] = w.corpus.n_trips;
    c["geometric_p"] = w.corpus.geometric_p;
    c["min_tunnels"] = w.corpus.min_tunnels;
    c["max_tunnels"] = w.corpus.max_tunnels;
    c["mag_sigma"] = w.corpus.mag_sigma;
    c["accel_sigma"] = w.corpus.accel_sigma;
    c["baro_sigma"] = w.corpus.baro_sigma;
    c["decoy_decel_rate"] = w.corpus.decoy_decel_rate;
    c["n_devices"] = w.corpus.n_devices;
    c["baro_device_fraction"] = w.corpus.baro_device_fraction;
    c["drift_max"] = w.corpus.drift_max;
    j["corpus"] = c;
    return j.dump(2) + "\n";
}

inline WorldFile world_from_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("world file: ") + e.what());
    }
    WorldFile w;
    w.seed = j.at("seed").get<std::uint64_t>();
    w.metro = detail::metro_from_json(j.at("metro"));
    const auto& c = j.at("corpus");
    w.corpus.n_trips = c.at("n_trips").get<int>();
    w.corpus.geometric_p = c.at("geometric_p").get<double>();
    w.corpus.min_tunnels = c.at("min_tunnels").get<int>();
    w.corpus.max_tunnels = c.at("max_tunnels").get<int>();
    w.corpus.mag_sigma = c.at("mag_sigma").get<double>();
    w.corpus.accel_sigma = c.at("accel_sigma").get<double>();
    w.corpus.baro_sigma = c.at("baro_sigma").get<double>();
    w.corpus.decoy_decel_rate = c.at("decoy_decel_rate").get<double>();
    w.corpus.n_devices = c.at("n_devices").get<int>();
    w.corpus.baro_device_fraction = c.at("baro_device_fraction").get<double>();
    w.corpus.drift_max = c.at("drift_max").get<double>();
    return w;
}

}  // namespace mloc
