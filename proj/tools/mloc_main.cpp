// mloc: build tunnel pattern maps from crowdsourced metro sensor traces and
// locate trips against them. A deterministic simulator stands in for the
// phones.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mloc/mloc.hpp"

namespace fs = std::filesystem;
using namespace mloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPipeline = 3;

std::string four_digits(int n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", n);
    return buf;
}

int cmd_simulate(const std::string& metro_path, int trips, std::uint64_t seed,
                 const std::string& out_dir, double decoy_rate, double mag_sigma,
                 double accel_sigma, double baro_sigma) {
    MetroMap metro = read_topology(metro_path);
    SyntheticWorld world = gen_world(metro, seed);
    CorpusConfig cc;
    cc.n_trips = trips;
    cc.decoy_decel_rate = decoy_rate;
    cc.mag_sigma = mag_sigma;
    cc.accel_sigma = accel_sigma;
    cc.baro_sigma = baro_sigma;
    auto corpus = gen_corpus(world, cc, seed);

    fs::create_directories(fs::path(out_dir) / "trips");
    fs::create_directories(fs::path(out_dir) / "truth");
    WorldFile wf{seed, metro, cc};
    atomic_write_file((fs::path(out_dir) / "world.json").string(), world_to_string(wf));
    atomic_write_file((fs::path(out_dir) / "metro.txt").string(), topology_to_string(metro));
    for (int i = 0; i < static_cast<int>(corpus.size()); ++i) {
        std::string stem = "trip-" + four_digits(i);
        write_trace(corpus[static_cast<std::size_t>(i)].trace,
                    (fs::path(out_dir) / "trips" / (stem + ".csv")).string());
        atomic_write_file((fs::path(out_dir) / "truth" / (stem + ".json")).string(),
                          truth_to_string(corpus[static_cast<std::size_t>(i)].truth));
    }
    std::cout << "wrote " << corpus.size() << " trips to " << out_dir << "\n";
    return kExitOk;
}

int cmd_detect(const std::string& trace_path, bool no_baro_confirm, const std::string& out_path) {
    SensorTrace trace = read_trace(trace_path);
    UserTrace ut = segment_trace(trace, DetectorConfig{}, !no_baro_confirm);
    std::string csv = "kind,bt,et,baro_confirmed\n";
    for (std::size_t i = 0; i < ut.stops.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "STOP,%.3f,%.3f,%d\n", ut.stops[i].bt, ut.stops[i].et,
                      ut.stops[i].baro_confirmed ? 1 : 0);
        csv += buf;
        if (i < ut.runs.size()) {
            std::snprintf(buf, sizeof(buf), "RUN,%.3f,%.3f,\n", ut.runs[i].bt, ut.runs[i].et);
            csv += buf;
        }
    }
    atomic_write_file(out_path, csv);
    std::cout << ut.num_stops() << " stops, " << ut.num_runs() << " running events -> "
              << out_path << "\n";
    return kExitOk;
}

MatchConfig make_config(bool calibrated, double threshold, int band, double baro_weight,
                        bool threshold_set, bool band_set, bool baro_weight_set) {
    MatchConfig cfg = calibrated ? simulator_calibrated_config() : MatchConfig{};
    if (threshold_set) cfg.dtw_threshold = threshold;
    if (band_set) cfg.band_radius = band;
    if (baro_weight_set) cfg.baro_weight = baro_weight;
    return cfg;
}

int cmd_build_map(const std::string& traces_dir, const std::string& metro_path,
                  const std::string& hints_path, int min_overlap, const MatchConfig& cfg,
                  const std::string& out_path) {
    MetroMap metro = read_topology(metro_path);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(traces_dir))
        if (e.is_regular_file() && e.path().extension() == ".csv")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "no .csv traces under " << traces_dir << "\n";
        return kExitData;
    }

    std::vector<UserTrace> traces;
    int too_short = 0;
    for (const auto& f : files) {
        try {
            traces.push_back(segment_trace(read_trace(f), DetectorConfig{}));
        } catch (const TooShortTripError&) {
            ++too_short;
        }
    }
    if (too_short)
        std::cerr << too_short << " trace(s) had fewer than 2 detectable stops and were skipped\n";

    std::vector<std::pair<std::string, std::string>> hints;
    if (!hints_path.empty()) hints = parse_hints(read_file(hints_path));

    BuildReport rep;
    PatternMap pm = build_map(traces, metro, cfg, min_overlap, hints, &rep);
    write_map(pm, out_path);
    std::cout << "map: " << pm.tunnel_patterns.size() << " tunnel patterns, coverage "
              << pm.stats.coverage << " (merged " << rep.traces_merged << ", new "
              << rep.traces_new << ", short " << rep.traces_skipped << ") -> " << out_path
              << "\n";
    return kExitOk;
}

int cmd_locate(const std::string& map_path, const std::string& trace_path, bool stream,
               const MatchConfig* override_cfg) {
    PatternMap pm = read_map(map_path);
    MatchConfig cfg = override_cfg ? *override_cfg : pm.config;
    SensorTrace trace = read_trace(trace_path);
    UserTrace ut = segment_trace(trace, DetectorConfig{});
    if (ut.runs.empty()) {
        std::cerr << "no running events detected\n";
        return kExitPipeline;
    }

    auto print_fix = [](const LocationEstimate& est) {
        std::cout << "at " << est.station_id << " (cost " << est.cost << ", confidence "
                  << est.confidence << ", events " << est.events_used << ", path";
        for (const auto& k : est.tunnel_path) std::cout << " " << tunnel_key_str(k);
        std::cout << ")\n";
    };

    if (stream) {
        bool any = false;
        for (std::size_t l = 1; l <= ut.runs.size(); ++l) {
            std::vector<RunningEvent> evs(ut.runs.begin(),
                                          ut.runs.begin() + static_cast<long>(l));
            std::cout << "after " << l << " tunnel(s): ";
            try {
                LocationEstimate est = locate_sequence(evs, pm, cfg);
                print_fix(est);
                any = true;
            } catch (const NoFixError&) {
                std::cout << "no fix yet\n";
            }
        }
        return any ? kExitOk : kExitPipeline;
    }
    LocationEstimate est = locate_sequence(ut.runs, pm, cfg);
    print_fix(est);
    return kExitOk;
}

int cmd_eval(const std::string& world_dir, const std::string& map_path,
             const std::string& out_dir, int eval_trips, std::uint64_t eval_seed) {
    WorldFile wf = world_from_string(read_file((fs::path(world_dir) / "world.json").string()));
    SyntheticWorld world = gen_world(wf.metro, wf.seed);
    PatternMap pm = read_map(map_path);

    std::vector<SimTrip> corpus;
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(fs::path(world_dir) / "trips"))
        if (e.is_regular_file() && e.path().extension() == ".csv")
            files.push_back(e.path().stem().string());
    std::sort(files.begin(), files.end());
    for (const auto& stem : files) {
        SimTrip trip;
        trip.trace = read_trace((fs::path(world_dir) / "trips" / (stem + ".csv")).string());
        trip.truth = truth_from_string(
            read_file((fs::path(world_dir) / "truth" / (stem + ".json")).string()));
        corpus.push_back(std::move(trip));
    }
    if (corpus.empty()) {
        std::cerr << "no trips under " << world_dir << "\n";
        return kExitData;
    }

    EvalOptions opts;
    opts.eval_trips = eval_trips;
    opts.eval_seed = eval_seed;
    EvalReport report = run_eval(world, corpus, pm, pm.config, opts);
    write_report(report, out_dir);
    const auto& all = report.stop_detection.back();
    std::cout << "stop detection: recall " << all.recall() << ", precision " << all.precision()
              << "\n";
    for (const auto& r : report.localization)
        std::cout << "locate @" << r.stations << ": " << r.accuracy() << " (" << r.trials
                  << " trials)\n";
    std::cout << "separation ratio " << report.separation.ratio << ", overlap error "
              << report.separation.overlap_error << "\n";
    std::cout << "report -> " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metro tunnel fingerprinting: simulate, detect, build pattern maps, locate"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a labeled synthetic trip corpus");
    std::string sim_metro, sim_out;
    int sim_trips = 162;
    std::uint64_t sim_seed = 42;
    double sim_decoy = 0.0, sim_mag = 0.4, sim_accel = 0.015, sim_baro = 0.02;
    sim->add_option("--metro", sim_metro, "topology file")->required();
    sim->add_option("--trips", sim_trips, "number of trips");
    sim->add_option("--seed", sim_seed, "world and corpus seed");
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--decoy-rate", sim_decoy, "expected mid-tunnel false decelerations per tunnel");
    sim->add_option("--mag-sigma", sim_mag, "magnetometer noise, uT");
    sim->add_option("--accel-sigma", sim_accel, "accelerometer noise, m/s^2");
    sim->add_option("--baro-sigma", sim_baro, "barometer noise, hPa");

    // detect
    auto* det = app.add_subcommand("detect", "segment one trace into stop/running events");
    std::string det_trace, det_out = "events.csv";
    bool det_no_baro = false;
    det->add_option("--trace", det_trace, "trace csv")->required();
    det->add_flag("--no-baro-confirm", det_no_baro, "skip barometer confirmation");
    det->add_option("--out", det_out, "events csv path");

    // build-map
    auto* bld = app.add_subcommand("build-map", "merge traces and anchor the pattern map");
    std::string bld_traces, bld_metro, bld_hints, bld_out = "map.json";
    int bld_min_overlap = 4;
    double bld_threshold = 8.0, bld_baro_weight = 1.0;
    int bld_band = 0;
    bool bld_calibrated = false;
    bld->add_option("--traces", bld_traces, "directory of trace csv files")->required();
    bld->add_option("--metro", bld_metro, "topology file")->required();
    bld->add_option("--hints", bld_hints, "hints file (node = station)");
    bld->add_option("--min-overlap", bld_min_overlap, "running events required to merge");
    auto* opt_th = bld->add_option("--dtw-threshold", bld_threshold, "accept threshold");
    auto* opt_band = bld->add_option("--band-radius", bld_band, "Sakoe-Chiba band");
    auto* opt_bw = bld->add_option("--baro-weight", bld_baro_weight, "barometer weight");
    bld->add_flag("--calibrated", bld_calibrated,
                  "start from the simulator-calibrated config instead of the field-deployment defaults");
    bld->add_option("--out", bld_out, "map json path");

    // locate
    auto* loc = app.add_subcommand("locate", "locate a trace against a pattern map");
    std::string loc_map, loc_trace;
    bool loc_stream = false;
    double loc_threshold = 0.0;
    loc->add_option("--map", loc_map, "map json")->required();
    loc->add_option("--trace", loc_trace, "trace csv")->required();
    loc->add_flag("--stream", loc_stream, "print a fix after every running event");
    auto* loc_th = loc->add_option("--dtw-threshold", loc_threshold,
                                   "override the map's accept threshold");

    // eval
    auto* evl = app.add_subcommand("eval", "score the pipeline against ground truth");
    std::string evl_world, evl_map, evl_out = "report";
    int evl_trips = 250;
    std::uint64_t evl_seed = 9001;
    evl->add_option("--world", evl_world, "simulate output directory")->required();
    evl->add_option("--map", evl_map, "map json")->required();
    evl->add_option("--out", evl_out, "report directory");
    evl->add_option("--eval-trips", evl_trips, "held-out localization trips");
    evl->add_option("--eval-seed", evl_seed, "held-out corpus seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(sim_metro, sim_trips, sim_seed, sim_out, sim_decoy, sim_mag,
                                sim_accel, sim_baro);
        if (det->parsed()) return cmd_detect(det_trace, det_no_baro, det_out);
        if (bld->parsed()) {
            MatchConfig cfg = make_config(bld_calibrated, bld_threshold, bld_band,
                                          bld_baro_weight, opt_th->count() > 0,
                                          opt_band->count() > 0, opt_bw->count() > 0);
            return cmd_build_map(bld_traces, bld_metro, bld_hints, bld_min_overlap, cfg, bld_out);
        }
        if (loc->parsed()) {
            MatchConfig override_cfg;
            bool has_override = loc_th->count() > 0;
            if (has_override) {
                // Start from the map's own config, adjust the threshold only.
                PatternMap pm = read_map(loc_map);
                override_cfg = pm.config;
                override_cfg.dtw_threshold = loc_threshold;
            }
            return cmd_locate(loc_map, loc_trace, loc_stream,
                              has_override ? &override_cfg : nullptr);
        }
        if (evl->parsed()) return cmd_eval(evl_world, evl_map, evl_out, evl_trips, evl_seed);
    } catch (const AmbiguityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const auto& c : e.candidates) std::cerr << "  candidate: " << c << "\n";
        return kExitPipeline;
    } catch (const AnchoringError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const NoFixError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const TooShortTripError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const UnsupportedVersionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
    return kExitUsage;
}
