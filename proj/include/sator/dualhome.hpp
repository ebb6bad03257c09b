#ifndef SATOR_DUALHOME_HPP
#define SATOR_DUALHOME_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sator/sim.hpp"

#include "json.hpp"

namespace sator::dualhome {

struct IfaceRecord {
    double t = 0.0;
    double sat_ms = 0.0;
    double ter_ms = 0.0;
};

/// Measurement history toward one peer relay.
struct IfaceHistory {
    std::vector<IfaceRecord> records;
    std::optional<double> last_time;
};

struct SchedulerConfig {
    double interval_s = 300.0;   // T: pause between measurement rounds
    int budget = 50;             // N: peers measured per round
    double mix_a = 0.5;          // a: entropy vs staleness weight
    double slack_percent = 0.0;  // accepted for experiments; no effect by default
};

/// Binary entropy of "satellite is faster" over the history. Ties count as
/// terrestrial-faster; an empty history is maximally uncertain (1.0).
double faster_iface_entropy(const IfaceHistory& history);

/// Priority = a * entropy + (1-a) * normalized staleness. Staleness is
/// normalized by the maximum across measured peers so the two terms share a
/// [0,1] scale; never-measured peers get staleness 1.
std::map<std::string, double> update_priorities(
    const std::map<std::string, IfaceHistory>& state, double now, double a);

/// Replay the measurement scheduler over precomputed series. Measurement
/// rounds fire once each interval has elapsed (the first after start+T);
/// within a round the probe updates the interface choice before that step's
/// effective sample is read. Until a peer's first measurement its traffic
/// stays terrestrial.
std::map<std::string, sim::LatencySeries> run_dual_homing(
    const std::map<std::string, sim::PairSeries>& peers, const SchedulerConfig& cfg,
    const sim::Timeline& timeline, std::uint64_t seed);

enum class DeploymentScenario { TopN, WeightedN, RandomN };

const char* to_string(DeploymentScenario s);
DeploymentScenario scenario_from_string(const std::string& name);

struct DeploymentPlan {
    DeploymentScenario scenario = DeploymentScenario::TopN;
    std::size_t n = 0;
    std::set<std::string> members;
    std::uint64_t seed = 0;
    bool capped = false;  // n exceeded the population
};

DeploymentPlan assign_deployment(const std::vector<sim::Relay>& relays,
                                 DeploymentScenario scenario, std::size_t n,
                                 std::uint64_t seed);

struct DeploymentMetrics {
    int percentile = 0;
    double frac_reduced = 0.0;
    double mean_delta_ms = 0.0;      // signed, over all links
    double mean_reduction_ms = 0.0;  // over reduced links
    double mean_reduction_pct = 0.0; // over reduced links
    double mean_increase_ms = 0.0;   // over worsened links
    std::size_t link_count = 0;
};

struct LevelReport {
    std::vector<DeploymentMetrics> rows;
    DeploymentMetrics all_percentile_avg;
};

struct ReductionReport {
    LevelReport pairs;
    LevelReport circuits;
    std::uint64_t seed = 0;
};

/// Simulate the plan: member-sourced hops run the dual-homing scheduler,
/// everything else stays terrestrial; compare against the all-terrestrial
/// baseline at pair and circuit level.
ReductionReport evaluate_deployment(const std::vector<sim::Circuit>& circuits,
                                    const sim::SeriesStore& store,
                                    const DeploymentPlan& plan,
                                    const SchedulerConfig& cfg,
                                    const std::vector<int>& percentiles);

struct Visibility {
    double pair_fraction = 0.0;
    double circuit_fraction = 0.0;
};

/// Satellite-provider visibility: a directed pair X->Y is observable iff X
/// is a member; a circuit needs both entry and middle (satellite is
/// outbound-only and exits never run it).
Visibility adversary_visibility(const DeploymentPlan& plan,
                                const std::vector<std::pair<std::string, std::string>>& pairs,
                                const std::vector<sim::Circuit>& circuits);

/// P(b above its q-th percentile | a above its q-th percentile) over joint
/// time indices. Needs >= 100 joint samples.
double tail_correlation(const sim::LatencySeries& a, const sim::LatencySeries& b,
                        int q = 95);

double probe_overhead_bytes_per_day(int budget, double interval_s,
                                    double probe_exchange_bytes);

/// RTT-to-page-load-time conversion (about 20x during web browsing).
double rtt_to_plt_ms(double rtt_reduction_ms);

nlohmann::json to_json(const DeploymentPlan& plan);
DeploymentPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReductionReport& report);

} // namespace sator::dualhome

#endif
