#ifndef SATOR_SIM_HPP
#define SATOR_SIM_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sator/graph.hpp"

namespace sator::sim {

struct Relay {
    std::string fingerprint;
    geo::GeoCoord position;
    double bandwidth_weight = 0.0;
};

/// Ordered relay triple; only the two inter-relay hops are modeled.
struct Circuit {
    std::string entry;
    std::string middle;
    std::string exit;

    std::string id() const { return entry + ">" + middle + ">" + exit; }
};

inline std::string pair_id(const std::string& src, const std::string& dst) {
    return src + ">" + dst;
}

struct Timeline {
    double start = 0.0;
    double duration_s = 86400.0;
    double step_s = 300.0;

    std::size_t steps() const;
    double time_at(std::size_t step) const { return start + step_s * static_cast<double>(step); }
    void validate() const;
};

enum class Interface { Terrestrial, Satellite };

const char* to_string(Interface i);
Interface interface_from_string(const std::string& name);

/// Time-indexed RTT series; missing samples are NaN.
struct LatencySeries {
    std::string id;
    Interface iface = Interface::Terrestrial;
    Timeline timeline;
    std::vector<double> rtt_ms;

    std::size_t missing_count() const;
    std::vector<std::size_t> gaps() const;
    /// More than half missing invalidates the series.
    bool valid() const;
    std::vector<double> present_values() const;
};

/// World shared by every pair simulation.
struct Environment {
    std::vector<geo::OrbitalElements> constellation;
    std::vector<int> planes;  // optional; aligned with constellation
    std::vector<graph::GroundSite> stations;
    std::vector<graph::GroundSite> pops;
    std::shared_ptr<const speeds::BucketedSpeedModel> terrestrial;
    std::shared_ptr<const speeds::SpeedEcdf> satellite;
    graph::GraphConfig graph_config;
    int top_k = 10;
};

/// Latency series for one relay pair under the given strategy. Each step
/// rebuilds the routing graph, runs the K-shortest-path search and doubles
/// the one-way top-K mean into an RTT. Deterministic in (seed, pair,
/// timeline): every (pair, step) draws from its own derived stream.
LatencySeries simulate_pair(const Relay& a, const Relay& b, const Timeline& timeline,
                            graph::RoutingStrategy strategy, const Environment& env,
                            std::uint64_t seed);

/// Sum of the two hop RTTs; missing if either hop is missing.
std::optional<double> circuit_latency(std::optional<double> hop1_ms,
                                      std::optional<double> hop2_ms);

/// Pointwise hop sum over a full timeline.
LatencySeries circuit_series(const std::string& circuit_id, const LatencySeries& hop1,
                             const LatencySeries& hop2);

inline constexpr std::size_t kMinPercentileSamples = 20;

/// Nearest-rank percentile over valid samples; needs at least 20 of them.
double percentile(const LatencySeries& series, int p);

/// (l_ter - l_sat) / l_ter * 100. Negative when satellite is slower.
double relative_reduction(double l_ter_ms, double l_sat_ms);

/// One Table-II style row: fraction of pairs per relative-reduction bin plus
/// the mean reduction among pairs above 20%.
struct ReductionRow {
    int percentile = 0;
    double frac_below_20 = 0.0;
    double frac_20_40 = 0.0;
    double frac_40_60 = 0.0;
    double frac_60_80 = 0.0;
    double frac_80_100 = 0.0;
    double frac_above_20 = 0.0;
    double avg_reduction_above_20 = 0.0;  // percent; 0 when no such pair
    std::size_t pair_count = 0;
};

struct PairSeries {
    LatencySeries terrestrial;
    LatencySeries satellite;
};

using SeriesStore = std::map<std::string, PairSeries>;

std::vector<ReductionRow> reduction_table(const SeriesStore& store,
                                          const std::vector<int>& percentiles);

struct DistanceBucketStat {
    double mean_reduction_pct = 0.0;  // over pairs with positive reduction
    double mean_increase_pct = 0.0;   // mean -r over pairs with negative reduction
    std::size_t reduced_count = 0;
    std::size_t worsened_count = 0;
    std::size_t count = 0;
};

/// Reduction statistics grouped by one-way endpoint distance buckets.
std::map<int, DistanceBucketStat> group_reduction_by_distance(
    const std::vector<double>& pair_distances_km, const std::vector<double>& reductions_pct,
    double bucket_km = 1000.0);

} // namespace sator::sim

#endif
