#include "sator/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sator/rng.hpp"

namespace sator::config {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    return out;
}

const std::vector<std::string> kPathKeys = {
    "relays", "circuits", "tle", "stations", "pops",
    "terrestrial_baseline", "satellite_baseline", "measured"};

} // namespace

std::string ExperimentConfig::require_path(const std::string& key) const {
    auto it = paths.find(key);
    if (it == paths.end())
        throw std::runtime_error("config is missing required input path '" + key + "'");
    return it->second;
}

std::string ExperimentConfig::hash() const {
    // canonical serialization of everything except seed/out/jobs and the
    // measured path (a calibrate-stage input, not simulation lineage)
    std::ostringstream s;
    for (const auto& [k, v] : paths)
        if (k != "measured") s << k << '=' << v << '\n';
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "timeline=%.6f,%.6f,%.6f k=%d bucket=%.6f ndelim=%d "
                  "strategy=%s elev=%.6f gpl=%.6f islproc=%.6f isltopo=%d islk=%d "
                  "schedT=%.6f schedN=%d schedA=%.6f slack=%.6f advpts=%d tailq=%d calibr=%d",
                  timeline.start, timeline.duration_s, timeline.step_s, top_k, bucket_km,
                  n_delimiters, graph::to_string(graph.strategy), graph.elevation_min_deg,
                  graph.gpl_latency_ms, graph.isl_processing_ms,
                  static_cast<int>(graph.isl_topology), graph.isl_nearest_k,
                  scheduler.interval_s, scheduler.budget, scheduler.mix_a,
                  scheduler.slack_percent, adversary_points, tail_q, calib_r);
    s << buf << '\n';
    for (int p : report_percentiles) s << p << ',';
    s << '\n';
    for (auto sc : deploy_scenarios) s << dualhome::to_string(sc) << ',';
    s << '\n';
    for (auto n : deploy_n) s << n << ',';
    char out[32];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(fnv1a(s.str())));
    return out;
}

std::string ExperimentConfig::stamp() const {
    return "config_hash=" + hash() + " seed=" + std::to_string(seed);
}

ExperimentConfig load_config(const std::string& path, const Overrides& overrides) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);

    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (kv.count(key))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": duplicate key '" + key + "'");
        kv[key] = value;
    }

    ExperimentConfig cfg;
    bool have_seed = false;

    const auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    const auto bad_value = [&](const std::string& key, const std::string& v) {
        return std::runtime_error(path + ": bad value for '" + key + "': '" + v + "'");
    };
    const auto take_double = [&](const std::string& key, double& into) {
        if (auto v = take(key)) {
            try {
                into = std::stod(*v);
            } catch (const std::exception&) {
                throw bad_value(key, *v);
            }
        }
    };
    const auto take_int = [&](const std::string& key, int& into) {
        if (auto v = take(key)) {
            try {
                into = std::stoi(*v);
            } catch (const std::exception&) {
                throw bad_value(key, *v);
            }
        }
    };

    for (const auto& key : kPathKeys)
        if (auto v = take(key)) cfg.paths[key] = *v;

    if (auto v = take("seed")) {
        try {
            cfg.seed = std::stoull(*v);
        } catch (const std::exception&) {
            throw bad_value("seed", *v);
        }
        have_seed = true;
    }
    if (auto v = take("out")) cfg.out_dir = *v;
    take_int("jobs", cfg.jobs);

    take_double("timeline.start", cfg.timeline.start);
    take_double("timeline.duration_s", cfg.timeline.duration_s);
    take_double("timeline.step_s", cfg.timeline.step_s);
    take_int("k", cfg.top_k);
    take_double("bucket_km", cfg.bucket_km);
    take_int("n_delimiters", cfg.n_delimiters);

    if (auto v = take("strategy")) cfg.graph.strategy = graph::strategy_from_string(*v);
    take_double("elevation_min_deg", cfg.graph.elevation_min_deg);
    take_double("gpl_ms", cfg.graph.gpl_latency_ms);
    take_double("isl_processing_ms", cfg.graph.isl_processing_ms);
    if (auto v = take("isl_topology")) {
        if (*v == "plus_grid") cfg.graph.isl_topology = graph::IslTopology::PlusGrid;
        else if (*v == "nearest_k") cfg.graph.isl_topology = graph::IslTopology::NearestK;
        else throw std::runtime_error("config: isl_topology must be plus_grid|nearest_k");
    }
    take_int("isl_nearest_k", cfg.graph.isl_nearest_k);

    take_double("scheduler.interval_s", cfg.scheduler.interval_s);
    take_int("scheduler.budget", cfg.scheduler.budget);
    take_double("scheduler.mix_a", cfg.scheduler.mix_a);
    take_double("scheduler.slack_percent", cfg.scheduler.slack_percent);

    if (auto v = take("percentiles")) {
        cfg.report_percentiles.clear();
        try {
            for (const auto& p : split(*v, ','))
                if (!p.empty()) cfg.report_percentiles.push_back(std::stoi(p));
        } catch (const std::exception&) {
            throw bad_value("percentiles", *v);
        }
        for (int p : cfg.report_percentiles)
            if (p < 1 || p > 99) throw bad_value("percentiles", *v);
    }
    if (auto v = take("deploy.scenarios")) {
        cfg.deploy_scenarios.clear();
        for (const auto& s : split(*v, ','))
            if (!s.empty()) cfg.deploy_scenarios.push_back(dualhome::scenario_from_string(s));
    }
    if (auto v = take("deploy.n")) {
        cfg.deploy_n.clear();
        try {
            for (const auto& n : split(*v, ','))
                if (!n.empty()) cfg.deploy_n.push_back(std::stoull(n));
        } catch (const std::exception&) {
            throw bad_value("deploy.n", *v);
        }
    }
    take_int("adversary.points", cfg.adversary_points);
    take_int("tail.q", cfg.tail_q);
    take_int("calib.r", cfg.calib_r);

    if (!kv.empty())
        throw std::runtime_error("config: unknown key '" + kv.begin()->first + "'");

    if (overrides.seed) {
        cfg.seed = *overrides.seed;
        have_seed = true;
    }
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (overrides.jobs) cfg.jobs = *overrides.jobs;

    if (!have_seed)
        throw std::runtime_error("config: 'seed' is mandatory (set it in the file or via --seed)");

    cfg.timeline.validate();
    for (const auto& [key, p] : cfg.paths) {
        if (!std::filesystem::exists(p))
            throw std::runtime_error("config: " + key + " file does not exist: " + p);
    }
    return cfg;
}

} // namespace sator::config
