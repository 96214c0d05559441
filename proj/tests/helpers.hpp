#pragma once

#include <string>
#include <vector>

#include "mloc/simulate.hpp"
#include "mloc/types.hpp"

namespace test_helpers {

inline mloc::MetroLine make_line(const std::string& name, const std::string& prefix, int n) {
    mloc::MetroLine l;
    l.name = name;
    for (int i = 1; i <= n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%s%02d", prefix.c_str(), i);
        l.stations.push_back(buf);
    }
    return l;
}

inline mloc::MetroMap single_line_metro(int n_stations, const std::string& name = "Red") {
    mloc::MetroMap m;
    m.lines.push_back(make_line(name, "S", n_stations));
    for (const auto& s : m.stations()) m.station_names[s] = s;
    return m;
}

/// 3 lines, 55 distinct stations, 3 transfer stations (X1 on A+B, X2 on B+C,
/// X3 on A+C). Line lengths differ (18/19/21 stations) so anchoring can tell
/// the lines apart by path length.
inline mloc::MetroMap three_line_metro() {
    mloc::MetroMap m;
    mloc::MetroLine a{"A", {}};
    for (int i = 1; i <= 8; ++i) a.stations.push_back("A0" + std::to_string(i));
    a.stations.push_back("X1");
    for (int i = 9; i <= 15; ++i)
        a.stations.push_back(i < 10 ? "A0" + std::to_string(i) : "A" + std::to_string(i));
    a.stations.push_back("X3");
    a.stations.push_back("A16");

    mloc::MetroLine b{"B", {}};
    for (int i = 1; i <= 4; ++i) b.stations.push_back("B0" + std::to_string(i));
    b.stations.push_back("X1");
    for (int i = 5; i <= 12; ++i)
        b.stations.push_back(i < 10 ? "B0" + std::to_string(i) : "B" + std::to_string(i));
    b.stations.push_back("X2");
    for (int i = 13; i <= 17; ++i) b.stations.push_back("B" + std::to_string(i));

    mloc::MetroLine c{"C", {}};
    for (int i = 1; i <= 9; ++i) c.stations.push_back("C0" + std::to_string(i));
    c.stations.push_back("X2");
    for (int i = 10; i <= 19; ++i) c.stations.push_back("C" + std::to_string(i));
    c.stations.push_back("X3");

    m.lines = {a, b, c};
    for (const auto& s : m.stations()) m.station_names[s] = s;
    return m;
}

/// Zero-noise spec for clean-signal tests.
inline mloc::TripSpec quiet_trip(const std::string& line, const std::string& from,
                                 const std::string& to) {
    mloc::TripSpec s;
    s.line = line;
    s.boarding = from;
    s.alighting = to;
    s.mag_sigma = 0.0;
    s.accel_sigma = 0.0;
    s.baro_sigma = 0.0;
    s.decoy_decel_rate = 0.0;
    return s;
}

}  // namespace test_helpers
