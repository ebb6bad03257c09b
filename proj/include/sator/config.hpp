#ifndef SATOR_CONFIG_HPP
#define SATOR_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sator/dualhome.hpp"
#include "sator/graph.hpp"
#include "sator/sim.hpp"

namespace sator::config {

/// Flat key=value experiment configuration. Every key has a default except
/// the global seed and the input file paths; referenced files must exist at
/// load time.
struct ExperimentConfig {
    // input paths (no defaults; commands demand the ones they need)
    std::map<std::string, std::string> paths;  // relays, circuits, tle, stations,
                                               // pops, terrestrial_baseline,
                                               // satellite_baseline, measured

    std::uint64_t seed = 0;  // mandatory
    std::string out_dir = "out";
    int jobs = 1;

    sim::Timeline timeline{1704067200.0, 7200.0, 300.0};
    graph::GraphConfig graph;  // strategy applies to the satellite interface
    int top_k = 10;
    double bucket_km = 1000.0;
    int n_delimiters = 1000;

    dualhome::SchedulerConfig scheduler;
    std::vector<int> report_percentiles{90, 95, 98};
    std::vector<dualhome::DeploymentScenario> deploy_scenarios{
        dualhome::DeploymentScenario::TopN, dualhome::DeploymentScenario::WeightedN,
        dualhome::DeploymentScenario::RandomN};
    std::vector<std::size_t> deploy_n{50, 100};
    int adversary_points = 10;
    int tail_q = 95;
    int calib_r = 10000;

    std::string require_path(const std::string& key) const;

    /// Hash over every semantic key (paths and parameters, seed excluded).
    /// Stage outputs embed it; later stages refuse mismatched inputs.
    std::string hash() const;
    /// The "config_hash=... seed=..." line embedded in artifacts.
    std::string stamp() const;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> jobs;
};

ExperimentConfig load_config(const std::string& path, const Overrides& overrides);

} // namespace sator::config

#endif
