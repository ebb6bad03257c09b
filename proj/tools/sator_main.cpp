// Command-line front end: ingest -> simulate -> calibrate/dualhome/
// deploy-eval/adversary/correlate/report, every stage reproducible from
// (config, seed) and stamped with the config hash.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "sator/calibrate.hpp"
#include "sator/config.hpp"
#include "sator/dualhome.hpp"
#include "sator/geo.hpp"
#include "sator/graph.hpp"
#include "sator/io.hpp"
#include "sator/rng.hpp"
#include "sator/sim.hpp"
#include "sator/speeds.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sator;

namespace {

constexpr int kExitError = 2;

void ensure_dir(const fs::path& p) { fs::create_directories(p); }

json stamped(const config::ExperimentConfig& cfg) {
    return json{{"config_hash", cfg.hash()}, {"seed", cfg.seed}};
}

void check_stamp(const json& j, const config::ExperimentConfig& cfg,
                 const std::string& artifact) {
    if (j.value("config_hash", "") != cfg.hash() ||
        j.value("seed", std::uint64_t{0}) != cfg.seed)
        throw std::runtime_error(artifact + " was produced under a different config/seed; "
                                            "rerun the earlier stage");
}

void check_csv_stamp(const std::string& comment, const config::ExperimentConfig& cfg,
                     const std::string& artifact) {
    if (comment != cfg.stamp())
        throw std::runtime_error(artifact + " was produced under a different config/seed; "
                                            "rerun the earlier stage");
}

json load_stamped_json(const std::string& path, const config::ExperimentConfig& cfg,
                       const std::string& stage_hint) {
    if (!fs::exists(path))
        throw std::runtime_error("missing artifact " + path + " (run '" + stage_hint +
                                 "' first)");
    const json j = json::parse(io::read_file(path));
    check_stamp(j, cfg, path);
    return j;
}

std::vector<int> full_percentile_grid() {
    std::vector<int> grid;
    for (int p = 1; p <= 99; ++p) grid.push_back(p);
    return grid;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const config::ExperimentConfig& cfg) {
    const auto models_dir = fs::path(cfg.out_dir) / "models";
    ensure_dir(models_dir);

    const auto terr_rows = io::load_terrestrial_baseline(cfg.require_path("terrestrial_baseline"));
    const auto model = speeds::ingest_terrestrial(terr_rows, cfg.bucket_km, cfg.n_delimiters);
    std::cout << "terrestrial baseline: rows=" << model.total_rows
              << " superluminal_rejected=" << model.rejected_superluminal
              << " zero_distance_rejected=" << model.rejected_zero_distance
              << " buckets=" << model.buckets.size() << "\n";

    const auto sat_rows = io::load_satellite_baseline(cfg.require_path("satellite_baseline"));
    const auto sat = speeds::ingest_satellite(sat_rows, cfg.n_delimiters);
    std::cout << "satellite baseline: rows=" << sat.total_rows
              << " superluminal_rejected=" << sat.rejected_superluminal
              << " pooled_samples=" << sat.ecdf.sample_count << "\n";

    const std::string tle_path = cfg.require_path("tle");
    const auto parsed = geo::parse_tle(io::read_file(tle_path));
    for (const auto& issue : parsed.issues)
        std::cerr << tle_path << ":" << issue.line_number << ": record "
                  << issue.record_index << ": " << issue.message
                  << (issue.fatal ? " (fatal)" : "") << "\n";
    if (!parsed.ok()) {
        std::cerr << "error: TLE file has unparseable records\n";
        return kExitError;
    }

    std::size_t stale = 0, implausible = 0;
    for (const auto& e : parsed.elements) {
        if (geo::tle_age_days(e, cfg.timeline.start) > 30.0) ++stale;
        if (!geo::leo_plausible(geo::propagate(e, cfg.timeline.start))) ++implausible;
    }
    if (stale)
        std::cerr << "warning: " << stale << " TLE records older than 30 days "
                  << "relative to timeline.start\n";
    if (implausible)
        std::cerr << "warning: " << implausible << " satellites outside the "
                  << "(100,3000) km LEO altitude band\n";
    std::cout << "constellation: satellites=" << parsed.elements.size()
              << " rejected_records=" << parsed.issues.size() << "\n";

    const auto stations = io::load_sites(cfg.require_path("stations"));
    const auto pops = io::load_sites(cfg.require_path("pops"));
    std::cout << "ground segment: stations=" << stations.size()
              << " pops=" << pops.size() << "\n";

    json terr_json = stamped(cfg);
    terr_json["model"] = speeds::to_json(model);
    io::write_file((models_dir / "terrestrial_model.json").string(), terr_json.dump(2));

    json sat_json = stamped(cfg);
    sat_json["model"] = speeds::to_json(sat.ecdf);
    sat_json["rejected_superluminal"] = sat.rejected_superluminal;
    sat_json["total_rows"] = sat.total_rows;
    io::write_file((models_dir / "satellite_model.json").string(), sat_json.dump(2));

    json constellation = stamped(cfg);
    json sats = json::array();
    for (const auto& e : parsed.elements)
        sats.push_back({{"sat_id", e.sat_id},
                        {"inclination_deg", e.inclination_deg},
                        {"raan_deg", e.raan_deg},
                        {"mean_anomaly_epoch_deg", e.mean_anomaly_epoch_deg},
                        {"mean_motion_rev_day", e.mean_motion_rev_day},
                        {"epoch", e.epoch},
                        {"eccentricity", e.eccentricity}});
    constellation["satellites"] = sats;
    constellation["planes"] = graph::infer_planes(parsed.elements);
    constellation["stale_records"] = stale;
    io::write_file((models_dir / "constellation.json").string(), constellation.dump(2));

    std::cout << "models written to " << models_dir.string() << "\n";
    return 0;
}

// -------------------------------------------------------------- simulate

struct World {
    sim::Environment env;
    std::vector<sim::Relay> relays;
    std::vector<sim::Circuit> circuits;
    std::map<std::string, sim::Relay> relay_by_fp;
};

World load_world(const config::ExperimentConfig& cfg) {
    World w;
    w.relays = io::load_relays(cfg.require_path("relays"));
    w.circuits = io::load_circuits(cfg.require_path("circuits"));
    for (const auto& r : w.relays) {
        if (!w.relay_by_fp.emplace(r.fingerprint, r).second)
            throw std::runtime_error("duplicate relay fingerprint: " + r.fingerprint);
    }
    for (const auto& c : w.circuits)
        for (const auto& fp : {c.entry, c.middle, c.exit})
            if (!w.relay_by_fp.count(fp))
                throw std::runtime_error("circuit references unknown relay: " + fp);

    const auto models_dir = fs::path(cfg.out_dir) / "models";
    const json terr = load_stamped_json((models_dir / "terrestrial_model.json").string(),
                                        cfg, "ingest");
    const json sat = load_stamped_json((models_dir / "satellite_model.json").string(),
                                       cfg, "ingest");
    const json constellation = load_stamped_json((models_dir / "constellation.json").string(),
                                                 cfg, "ingest");

    w.env.terrestrial = std::make_shared<const speeds::BucketedSpeedModel>(
        speeds::bucketed_from_json(terr.at("model")));
    w.env.satellite = std::make_shared<const speeds::SpeedEcdf>(
        speeds::ecdf_from_json(sat.at("model")));
    for (const auto& s : constellation.at("satellites")) {
        geo::OrbitalElements e;
        e.sat_id = s.at("sat_id").get<std::string>();
        e.inclination_deg = s.at("inclination_deg").get<double>();
        e.raan_deg = s.at("raan_deg").get<double>();
        e.mean_anomaly_epoch_deg = s.at("mean_anomaly_epoch_deg").get<double>();
        e.mean_motion_rev_day = s.at("mean_motion_rev_day").get<double>();
        e.epoch = s.at("epoch").get<double>();
        e.eccentricity = s.at("eccentricity").get<double>();
        w.env.constellation.push_back(std::move(e));
    }
    w.env.planes = constellation.at("planes").get<std::vector<int>>();
    w.env.stations = io::load_sites(cfg.require_path("stations"));
    w.env.pops = io::load_sites(cfg.require_path("pops"));
    w.env.graph_config = cfg.graph;
    w.env.top_k = cfg.top_k;
    return w;
}

std::vector<std::pair<std::string, std::string>> unique_hops(
    const std::vector<sim::Circuit>& circuits) {
    std::set<std::pair<std::string, std::string>> hops;
    for (const auto& c : circuits) {
        hops.insert({c.entry, c.middle});
        hops.insert({c.middle, c.exit});
    }
    return {hops.begin(), hops.end()};
}

int cmd_simulate(const config::ExperimentConfig& cfg) {
    const World w = load_world(cfg);
    const auto hops = unique_hops(w.circuits);
    const auto series_dir = fs::path(cfg.out_dir) / "series";
    ensure_dir(series_dir);
    const std::string store_path = (series_dir / "store.csv").string();
    const std::string manifest_path = (series_dir / "manifest.json").string();

    sim::SeriesStore store;
    std::set<std::string> completed;
    if (fs::exists(manifest_path) && fs::exists(store_path)) {
        try {
            const json manifest = json::parse(io::read_file(manifest_path));
            check_stamp(manifest, cfg, manifest_path);
            auto loaded = io::load_series_store(store_path);
            check_csv_stamp(loaded.comment_line, cfg, store_path);
            for (const auto& id : manifest.at("completed"))
                if (loaded.store.count(id.get<std::string>()))
                    completed.insert(id.get<std::string>());
            for (const auto& id : completed) store[id] = loaded.store.at(id);
        } catch (const std::exception& e) {
            std::cerr << "warning: ignoring stale series store (" << e.what() << ")\n";
            store.clear();
            completed.clear();
        }
    }

    std::vector<std::pair<std::string, std::string>> todo;
    for (const auto& h : hops)
        if (!completed.count(sim::pair_id(h.first, h.second))) todo.push_back(h);
    std::cout << "simulate: pairs=" << hops.size() << " cached=" << completed.size()
              << " recompute=" << todo.size() << " steps=" << cfg.timeline.steps()
              << "\n";

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::exception_ptr worker_error;
    const auto t0 = std::chrono::steady_clock::now();

    const auto checkpoint = [&]() {
        io::save_series_store(store_path, store, cfg.stamp());
        json manifest = stamped(cfg);
        json ids = json::array();
        for (const auto& [id, pair] : store) ids.push_back(id);
        manifest["completed"] = ids;
        io::write_file(manifest_path, manifest.dump(2));
    };
    // rewriting the whole store per pair is quadratic; batch on larger runs
    const std::size_t checkpoint_every = todo.size() <= 128 ? 1 : 32;

    const auto worker = [&]() {
        try {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= todo.size()) return;
                const auto& [src, dst] = todo[i];
                const auto& a = w.relay_by_fp.at(src);
                const auto& b = w.relay_by_fp.at(dst);
                sim::PairSeries pair;
                pair.satellite = sim::simulate_pair(a, b, cfg.timeline, cfg.graph.strategy,
                                                    w.env, cfg.seed);
                pair.terrestrial = sim::simulate_pair(a, b, cfg.timeline,
                                                      graph::RoutingStrategy::TerrestrialOnly,
                                                      w.env, cfg.seed);
                std::lock_guard<std::mutex> lock(mu);
                store[sim::pair_id(src, dst)] = std::move(pair);
                const std::size_t n = ++done;
                if (n % checkpoint_every == 0) checkpoint();
                const double secs = std::chrono::duration<double>(
                                        std::chrono::steady_clock::now() - t0)
                                        .count();
                std::cerr << "simulate: " << n << "/" << todo.size() << " pairs ("
                          << io::format_double(secs > 0 ? n / secs : 0.0) << " pairs/s)\n";
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (!worker_error) worker_error = std::current_exception();
        }
    };

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1 || todo.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (worker_error) std::rethrow_exception(worker_error);
    checkpoint();

    std::size_t invalid = 0;
    for (const auto& [id, pair] : store)
        if (!pair.satellite.valid() || !pair.terrestrial.valid()) ++invalid;
    std::cout << "simulate: store=" << store_path << " pairs=" << store.size()
              << " invalid_series=" << invalid << "\n";
    return 0;
}

// -------------------------------------------------------------- calibrate

sim::SeriesStore load_store_checked(const config::ExperimentConfig& cfg) {
    const std::string store_path =
        (fs::path(cfg.out_dir) / "series" / "store.csv").string();
    if (!fs::exists(store_path))
        throw std::runtime_error("missing artifact " + store_path +
                                 " (run 'simulate' first)");
    auto loaded = io::load_series_store(store_path);
    check_csv_stamp(loaded.comment_line, cfg, store_path);
    return std::move(loaded.store);
}

// circuit-level simulated series (hop sums) per interface
std::map<std::string, sim::LatencySeries> circuit_level_series(
    const std::vector<sim::Circuit>& circuits, const sim::SeriesStore& store,
    sim::Interface iface) {
    std::map<std::string, sim::LatencySeries> out;
    for (const auto& c : circuits) {
        const auto& h1 = store.at(sim::pair_id(c.entry, c.middle));
        const auto& h2 = store.at(sim::pair_id(c.middle, c.exit));
        const auto& s1 = iface == sim::Interface::Satellite ? h1.satellite : h1.terrestrial;
        const auto& s2 = iface == sim::Interface::Satellite ? h2.satellite : h2.terrestrial;
        out[c.id()] = sim::circuit_series(c.id(), s1, s2);
    }
    return out;
}

int cmd_calibrate(const config::ExperimentConfig& cfg) {
    const auto store = load_store_checked(cfg);
    const auto circuits = io::load_circuits(cfg.require_path("circuits"));
    const auto measured = io::load_measured(cfg.require_path("measured"));
    const auto out_dir = fs::path(cfg.out_dir) / "calibrate";
    ensure_dir(out_dir);

    // measured ids decide the granularity: e>m>x is a circuit, e>m a pair
    bool circuit_level = false;
    if (!measured.empty())
        circuit_level = std::count(measured.begin()->first.begin(),
                                   measured.begin()->first.end(), '>') == 2;

    const auto grid = full_percentile_grid();
    json model_json = stamped(cfg);
    std::ostringstream table;
    table << "# " << cfg.stamp() << "\n";
    table << "id,interface,percentile,raw_ms,mean_ms,ci_low_ms,ci_high_ms\n";

    for (const sim::Interface iface :
         {sim::Interface::Satellite, sim::Interface::Terrestrial}) {
        std::map<std::string, sim::LatencySeries> sim_series;
        if (circuit_level) {
            sim_series = circuit_level_series(circuits, store, iface);
        } else {
            for (const auto& [id, pair] : store)
                sim_series[id] = iface == sim::Interface::Satellite ? pair.satellite
                                                                    : pair.terrestrial;
        }
        std::map<std::string, sim::LatencySeries> measured_series;
        for (const auto& [id, by_iface] : measured) {
            auto it = by_iface.find(iface);
            if (it != by_iface.end()) measured_series[id] = it->second;
        }

        const auto model = calibrate::build_error_model(sim_series, measured_series, grid);
        model_json[sim::to_string(iface)] = calibrate::to_json(model);
        std::cout << "calibrate: interface=" << sim::to_string(iface)
                  << " circuits=" << model.errors.begin()->second.size()
                  << " skipped=" << model.skipped_circuits
                  << " clamped=" << model.clamped_errors << "\n";

        for (const auto& [id, series] : sim_series) {
            if (!measured_series.count(id)) continue;
            for (int p : cfg.report_percentiles) {
                const double raw = sim::percentile(series, p);
                const auto est = calibrate::calibrate_estimate(
                    raw, model, p, cfg.calib_r,
                    mix_u64(cfg.seed, fnv1a(id + sim::to_string(iface))));
                table << id << ',' << sim::to_string(iface) << ',' << p << ','
                      << io::format_double(raw) << ',' << io::format_double(est.mean_ms)
                      << ',' << io::format_double(est.ci_low_ms) << ','
                      << io::format_double(est.ci_high_ms) << "\n";
            }
        }
    }

    io::write_file((out_dir / "error_model.json").string(), model_json.dump(2));
    io::write_file((out_dir / "calibrated.csv").string(), table.str());
    std::cout << "calibrate: wrote " << (out_dir / "calibrated.csv").string() << "\n";
    return 0;
}

// -------------------------------------------------------------- dualhome

void write_level_csv(std::ostringstream& out, const std::string& level,
                     const dualhome::LevelReport& report) {
    for (const auto& r : report.rows)
        out << level << ',' << r.percentile << ',' << io::format_double(r.frac_reduced)
            << ',' << io::format_double(r.mean_delta_ms) << ','
            << io::format_double(r.mean_reduction_ms) << ','
            << io::format_double(r.mean_reduction_pct) << ','
            << io::format_double(r.mean_increase_ms) << ',' << r.link_count << "\n";
    const auto& avg = report.all_percentile_avg;
    out << level << ",avg," << io::format_double(avg.frac_reduced) << ','
        << io::format_double(avg.mean_delta_ms) << ','
        << io::format_double(avg.mean_reduction_ms) << ','
        << io::format_double(avg.mean_reduction_pct) << ','
        << io::format_double(avg.mean_increase_ms) << ',' << avg.link_count << "\n";
}

void write_report_files(const config::ExperimentConfig& cfg, const fs::path& dir,
                        const std::string& basename,
                        const dualhome::ReductionReport& report) {
    json j = stamped(cfg);
    j["report"] = dualhome::to_json(report);
    io::write_file((dir / (basename + ".json")).string(), j.dump(2));

    std::ostringstream csv;
    csv << "# " << cfg.stamp() << "\n";
    csv << "level,percentile,frac_reduced,mean_delta_ms,mean_reduction_ms,"
           "mean_reduction_pct,mean_increase_ms,link_count\n";
    write_level_csv(csv, "pairs", report.pairs);
    write_level_csv(csv, "circuits", report.circuits);
    io::write_file((dir / (basename + ".csv")).string(), csv.str());
}

int cmd_dualhome(const config::ExperimentConfig& cfg) {
    const auto store = load_store_checked(cfg);
    const auto circuits = io::load_circuits(cfg.require_path("circuits"));
    const auto relays = io::load_relays(cfg.require_path("relays"));
    const auto out_dir = fs::path(cfg.out_dir) / "dualhome";
    ensure_dir(out_dir);

    // best case: every relay dual-homed
    dualhome::DeploymentPlan plan;
    plan.scenario = dualhome::DeploymentScenario::TopN;
    plan.n = relays.size();
    plan.seed = cfg.seed;
    for (const auto& r : relays) plan.members.insert(r.fingerprint);

    const auto report = dualhome::evaluate_deployment(circuits, store, plan,
                                                      cfg.scheduler,
                                                      full_percentile_grid());
    write_report_files(cfg, out_dir, "report", report);

    // effective per-pair series for plotting
    std::map<std::string, std::map<std::string, sim::PairSeries>> by_source;
    for (const auto& [id, pair] : store) {
        const auto sep = id.find('>');
        by_source[id.substr(0, sep)][id.substr(sep + 1)] = pair;
    }
    std::ostringstream eff;
    eff << "# " << cfg.stamp() << "\n";
    eff << "id,t,rtt_ms\n";
    for (const auto& [src, peers] : by_source) {
        const auto& timeline = peers.begin()->second.terrestrial.timeline;
        const auto replayed = dualhome::run_dual_homing(peers, cfg.scheduler, timeline,
                                                        cfg.seed);
        for (const auto& [dst, series] : replayed)
            for (std::size_t i = 0; i < series.rtt_ms.size(); ++i) {
                eff << sim::pair_id(src, dst) << ','
                    << io::format_double(series.timeline.time_at(i)) << ',';
                if (!std::isnan(series.rtt_ms[i]))
                    eff << io::format_double(series.rtt_ms[i]);
                eff << "\n";
            }
    }
    io::write_file((out_dir / "effective.csv").string(), eff.str());
    std::cout << "dualhome: pairs avg reduction "
              << io::format_double(report.pairs.all_percentile_avg.mean_delta_ms)
              << " ms, circuits avg "
              << io::format_double(report.circuits.all_percentile_avg.mean_delta_ms)
              << " ms\n";
    return 0;
}

// ------------------------------------------------------------ deploy-eval

int cmd_deploy_eval(const config::ExperimentConfig& cfg) {
    const auto store = load_store_checked(cfg);
    const auto circuits = io::load_circuits(cfg.require_path("circuits"));
    const auto relays = io::load_relays(cfg.require_path("relays"));
    const auto out_dir = fs::path(cfg.out_dir) / "deploy";
    ensure_dir(out_dir);

    for (const auto scenario : cfg.deploy_scenarios) {
        for (const std::size_t n : cfg.deploy_n) {
            const auto plan = dualhome::assign_deployment(relays, scenario, n, cfg.seed);
            if (plan.capped)
                std::cerr << "warning: deployment n capped to population ("
                          << plan.n << ")\n";
            const auto report = dualhome::evaluate_deployment(
                circuits, store, plan, cfg.scheduler, full_percentile_grid());
            std::ostringstream base;
            base << "report_" << dualhome::to_string(scenario) << "_" << n;
            write_report_files(cfg, out_dir, base.str(), report);

            json plan_json = stamped(cfg);
            plan_json["plan"] = dualhome::to_json(plan);
            io::write_file((out_dir / ("plan_" + std::string(dualhome::to_string(scenario)) +
                                       "_" + std::to_string(n) + ".json"))
                               .string(),
                           plan_json.dump(2));
            std::cout << "deploy-eval: " << dualhome::to_string(scenario) << " n=" << n
                      << " circuits frac_reduced(avg)="
                      << io::format_double(
                             report.circuits.all_percentile_avg.frac_reduced)
                      << "\n";
        }
    }
    return 0;
}

// -------------------------------------------------------------- adversary

int cmd_adversary(const config::ExperimentConfig& cfg) {
    const auto circuits = io::load_circuits(cfg.require_path("circuits"));
    const auto relays = io::load_relays(cfg.require_path("relays"));
    const auto out_dir = fs::path(cfg.out_dir) / "adversary";
    ensure_dir(out_dir);

    const auto hops = unique_hops(circuits);
    std::ostringstream csv;
    csv << "# " << cfg.stamp() << "\n";
    csv << "scenario,n,pair_fraction,circuit_fraction\n";

    const std::size_t population = relays.size();
    const int points = std::max(1, cfg.adversary_points);
    for (const auto scenario : cfg.deploy_scenarios) {
        std::set<std::size_t> grid;
        for (int i = 1; i <= points; ++i)
            grid.insert(static_cast<std::size_t>(
                std::llround(static_cast<double>(population) * i / points)));
        grid.insert(population);
        for (const std::size_t n : grid) {
            if (n == 0) continue;
            const auto plan = dualhome::assign_deployment(relays, scenario, n, cfg.seed);
            const auto vis = dualhome::adversary_visibility(plan, hops, circuits);
            csv << dualhome::to_string(scenario) << ',' << n << ','
                << io::format_double(vis.pair_fraction) << ','
                << io::format_double(vis.circuit_fraction) << "\n";
        }
    }
    io::write_file((out_dir / "visibility.csv").string(), csv.str());
    std::cout << "adversary: wrote " << (out_dir / "visibility.csv").string() << "\n";
    return 0;
}

// -------------------------------------------------------------- correlate

int cmd_correlate(const config::ExperimentConfig& cfg) {
    const auto store = load_store_checked(cfg);
    const auto out_dir = fs::path(cfg.out_dir) / "correlate";
    ensure_dir(out_dir);

    std::ostringstream csv;
    csv << "# " << cfg.stamp() << "\n";
    csv << "id,q,p_sat_tail_given_ter,p_ter_tail_given_sat\n";
    std::size_t skipped = 0;
    for (const auto& [id, pair] : store) {
        try {
            const double st = dualhome::tail_correlation(pair.terrestrial, pair.satellite,
                                                         cfg.tail_q);
            const double ts = dualhome::tail_correlation(pair.satellite, pair.terrestrial,
                                                         cfg.tail_q);
            csv << id << ',' << cfg.tail_q << ',' << io::format_double(st) << ','
                << io::format_double(ts) << "\n";
        } catch (const std::runtime_error&) {
            ++skipped;
        }
    }
    io::write_file((out_dir / "tail_correlation.csv").string(), csv.str());
    std::cout << "correlate: pairs=" << store.size() << " skipped=" << skipped << "\n";
    return 0;
}

// ----------------------------------------------------------------- report

int cmd_report(const config::ExperimentConfig& cfg) {
    const auto store = load_store_checked(cfg);
    const auto relays = io::load_relays(cfg.require_path("relays"));
    const auto out_dir = fs::path(cfg.out_dir) / "report";
    ensure_dir(out_dir);

    std::map<std::string, sim::Relay> by_fp;
    for (const auto& r : relays) by_fp[r.fingerprint] = r;

    sim::SeriesStore usable;
    std::size_t skipped = 0;
    for (const auto& [id, pair] : store) {
        if (pair.satellite.valid() && pair.terrestrial.valid() &&
            pair.satellite.present_values().size() >= sim::kMinPercentileSamples &&
            pair.terrestrial.present_values().size() >= sim::kMinPercentileSamples)
            usable[id] = pair;
        else
            ++skipped;
    }
    if (skipped) std::cerr << "warning: " << skipped << " pairs lack usable series\n";

    // Table-II style reduction bins at the configured percentiles
    const auto rows = sim::reduction_table(usable, cfg.report_percentiles);
    std::ostringstream table;
    table << "# " << cfg.stamp() << "\n";
    table << "percentile,frac_lt20,frac_20_40,frac_40_60,frac_60_80,frac_80_100,"
             "frac_gt20,avg_reduction_gt20,pair_count\n";
    for (const auto& r : rows)
        table << r.percentile << ',' << io::format_double(r.frac_below_20) << ','
              << io::format_double(r.frac_20_40) << ',' << io::format_double(r.frac_40_60)
              << ',' << io::format_double(r.frac_60_80) << ','
              << io::format_double(r.frac_80_100) << ','
              << io::format_double(r.frac_above_20) << ','
              << io::format_double(r.avg_reduction_above_20) << ',' << r.pair_count
              << "\n";
    io::write_file((out_dir / "reduction_table.csv").string(), table.str());

    // per-percentile single-homed comparison curve (plot data)
    std::ostringstream curve;
    curve << "# " << cfg.stamp() << "\n";
    curve << "percentile,frac_reduced,mean_delta_ms,mean_reduction_ms,"
             "mean_reduction_pct,mean_increase_ms\n";
    for (int p = 1; p <= 99; ++p) {
        double delta_sum = 0, red_ms = 0, red_pct = 0, inc_ms = 0;
        std::size_t reduced = 0, worsened = 0, count = 0;
        for (const auto& [id, pair] : usable) {
            const double ter = sim::percentile(pair.terrestrial, p);
            const double sat = sim::percentile(pair.satellite, p);
            const double delta = ter - sat;
            ++count;
            delta_sum += delta;
            if (delta > 0) { ++reduced; red_ms += delta; red_pct += delta / ter * 100.0; }
            else if (delta < 0) { ++worsened; inc_ms += -delta; }
        }
        if (count == 0) break;
        curve << p << ',' << io::format_double(static_cast<double>(reduced) / count) << ','
              << io::format_double(delta_sum / count) << ','
              << io::format_double(reduced ? red_ms / reduced : 0.0) << ','
              << io::format_double(reduced ? red_pct / reduced : 0.0) << ','
              << io::format_double(worsened ? inc_ms / worsened : 0.0) << "\n";
    }
    io::write_file((out_dir / "percentile_curve.csv").string(), curve.str());

    // reduction grouped by one-way endpoint distance (mean over the
    // configured percentiles)
    std::vector<double> distances, reductions;
    for (const auto& [id, pair] : usable) {
        const auto sep = id.find('>');
        const auto& a = by_fp.at(id.substr(0, sep));
        const auto& b = by_fp.at(id.substr(sep + 1));
        double sum = 0.0;
        for (int p : cfg.report_percentiles)
            sum += sim::relative_reduction(sim::percentile(pair.terrestrial, p),
                                           sim::percentile(pair.satellite, p));
        distances.push_back(geo::haversine_km(a.position, b.position));
        reductions.push_back(sum / static_cast<double>(cfg.report_percentiles.size()));
    }
    const auto hist = sim::group_reduction_by_distance(distances, reductions, cfg.bucket_km);
    std::ostringstream histcsv;
    histcsv << "# " << cfg.stamp() << "\n";
    histcsv << "bucket_low_km,bucket_high_km,pair_count,mean_reduction_pct,"
               "mean_increase_pct,reduced_count,worsened_count\n";
    for (const auto& [bucket, stat] : hist)
        histcsv << io::format_double(bucket * cfg.bucket_km) << ','
                << io::format_double((bucket + 1) * cfg.bucket_km) << ',' << stat.count
                << ',' << io::format_double(stat.mean_reduction_pct) << ','
                << io::format_double(stat.mean_increase_pct) << ',' << stat.reduced_count
                << ',' << stat.worsened_count << "\n";
    io::write_file((out_dir / "distance_histogram.csv").string(), histcsv.str());

    std::cout << "report: wrote reduction_table.csv, percentile_curve.csv, "
                 "distance_histogram.csv under "
              << out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"satellite-overlay latency simulator for relay networks"};
    app.require_subcommand(1);

    std::string config_path;
    config::Overrides overrides;
    std::uint64_t seed_flag = 0;
    std::string out_flag;
    int jobs_flag = 0;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        cmd->add_option("--seed", seed_flag, "override the config seed");
        cmd->add_option("--out", out_flag, "override the output directory");
        cmd->add_option("--jobs", jobs_flag, "worker threads for simulate");
    };

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const config::ExperimentConfig&);
    };
    const std::vector<Sub> subs = {
        {"ingest", "build speed models and the constellation manifest", cmd_ingest},
        {"simulate", "simulate per-pair latency series", cmd_simulate},
        {"calibrate", "build the error model and calibrated estimates", cmd_calibrate},
        {"dualhome", "best-case dual-homing evaluation", cmd_dualhome},
        {"deploy-eval", "evaluate deployment scenarios", cmd_deploy_eval},
        {"adversary", "adversary visibility over deployment size", cmd_adversary},
        {"correlate", "tail-latency correlation between interfaces", cmd_correlate},
        {"report", "reduction tables and plot data", cmd_report},
    };
    for (const auto& sub : subs) add_common(app.add_subcommand(sub.name, sub.help));

    CLI11_PARSE(app, argc, argv);

    for (const auto& sub : subs) {
        const auto* cmd = app.get_subcommand(sub.name);
        if (!cmd->parsed()) continue;
        try {
            if (cmd->count("--seed")) overrides.seed = seed_flag;
            if (cmd->count("--out")) overrides.out_dir = out_flag;
            if (cmd->count("--jobs")) overrides.jobs = jobs_flag;
            const auto cfg = config::load_config(config_path, overrides);
            return sub.run(cfg);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitError;
        }
    }
    return kExitError;
}
