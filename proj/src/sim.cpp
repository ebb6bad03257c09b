#include "sator/sim.hpp"

#include <cmath>
#include <stdexcept>

#include "sator/stats.hpp"

namespace sator::sim {

std::size_t Timeline::steps() const {
    validate();
    return static_cast<std::size_t>(duration_s / step_s + 0.5);
}

void Timeline::validate() const {
    if (step_s <= 0.0)
        throw std::invalid_argument("timeline: step_s must be > 0");
    if (duration_s <= 0.0)
        throw std::invalid_argument("timeline: duration_s must be > 0");
    const double ratio = duration_s / step_s;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw std::invalid_argument("timeline: duration_s must be a multiple of step_s");
}

const char* to_string(Interface i) {
    return i == Interface::Terrestrial ? "terrestrial" : "satellite";
}

Interface interface_from_string(const std::string& name) {
    if (name == "terrestrial") return Interface::Terrestrial;
    if (name == "satellite") return Interface::Satellite;
    throw std::invalid_argument("unknown interface: " + name);
}

std::size_t LatencySeries::missing_count() const {
    std::size_t n = 0;
    for (double v : rtt_ms)
        if (std::isnan(v)) ++n;
    return n;
}

std::vector<std::size_t> LatencySeries::gaps() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rtt_ms.size(); ++i)
        if (std::isnan(rtt_ms[i])) out.push_back(i);
    return out;
}

bool LatencySeries::valid() const {
    if (rtt_ms.empty()) return false;
    return missing_count() * 2 <= rtt_ms.size();
}

std::vector<double> LatencySeries::present_values() const {
    std::vector<double> out;
    out.reserve(rtt_ms.size());
    for (double v : rtt_ms)
        if (!std::isnan(v)) out.push_back(v);
    return out;
}

LatencySeries simulate_pair(const Relay& a, const Relay& b, const Timeline& timeline,
                            graph::RoutingStrategy strategy, const Environment& env,
                            std::uint64_t seed) {
    timeline.validate();
    const std::string id = pair_id(a.fingerprint, b.fingerprint);

    auto scene = std::make_shared<graph::Scene>();
    scene->endpoint_a = {a.fingerprint, a.position};
    scene->endpoint_b = {b.fingerprint, b.position};
    scene->stations = env.stations;
    scene->pops = env.pops;
    scene->elements = env.constellation;
    scene->planes = env.planes;

    graph::GraphConfig cfg = env.graph_config;
    cfg.strategy = strategy;

    LatencySeries series;
    series.id = id;
    series.iface = strategy == graph::RoutingStrategy::TerrestrialOnly
                       ? Interface::Terrestrial
                       : Interface::Satellite;
    series.timeline = timeline;
    series.rtt_ms.reserve(timeline.steps());

    for (std::size_t step = 0; step < timeline.steps(); ++step) {
        UniformStream stream = derived_stream(seed, id, step);
        const auto graph = graph::build_graph(scene, timeline.time_at(step), cfg,
                                              env.terrestrial, env.satellite, stream);
        const auto paths = graph::k_shortest_paths(graph, a.fingerprint, b.fingerprint,
                                                   env.top_k);
        if (paths.empty()) {
            series.rtt_ms.push_back(std::nan(""));
            continue;
        }
        series.rtt_ms.push_back(2.0 * graph::topk_latency_ms(paths, env.top_k));
    }
    return series;
}

std::optional<double> circuit_latency(std::optional<double> hop1_ms,
                                      std::optional<double> hop2_ms) {
    if (!hop1_ms || !hop2_ms) return std::nullopt;
    return *hop1_ms + *hop2_ms;
}

LatencySeries circuit_series(const std::string& circuit_id, const LatencySeries& hop1,
                             const LatencySeries& hop2) {
    if (hop1.rtt_ms.size() != hop2.rtt_ms.size())
        throw std::invalid_argument("circuit_series: hop series are not aligned");
    LatencySeries out;
    out.id = circuit_id;
    out.iface = hop1.iface;
    out.timeline = hop1.timeline;
    out.rtt_ms.reserve(hop1.rtt_ms.size());
    for (std::size_t i = 0; i < hop1.rtt_ms.size(); ++i) {
        if (std::isnan(hop1.rtt_ms[i]) || std::isnan(hop2.rtt_ms[i]))
            out.rtt_ms.push_back(std::nan(""));
        else
            out.rtt_ms.push_back(hop1.rtt_ms[i] + hop2.rtt_ms[i]);
    }
    return out;
}

double percentile(const LatencySeries& series, int p) {
    const auto values = series.present_values();
    if (values.size() < kMinPercentileSamples)
        throw std::runtime_error("percentile: fewer than " +
                                 std::to_string(kMinPercentileSamples) +
                                 " valid samples in series " + series.id);
    return nearest_rank_percentile(values, p);
}

double relative_reduction(double l_ter_ms, double l_sat_ms) {
    if (l_ter_ms <= 0.0)
        throw std::invalid_argument("relative_reduction: terrestrial latency must be > 0");
    return (l_ter_ms - l_sat_ms) / l_ter_ms * 100.0;
}

std::vector<ReductionRow> reduction_table(const SeriesStore& store,
                                          const std::vector<int>& percentiles) {
    std::vector<ReductionRow> rows;
    for (int p : percentiles) {
        ReductionRow row;
        row.percentile = p;
        double above20_sum = 0.0;
        std::size_t above20 = 0;
        for (const auto& [id, pair] : store) {
            const double r = relative_reduction(percentile(pair.terrestrial, p),
                                                percentile(pair.satellite, p));
            ++row.pair_count;
            if (r < 20.0) row.frac_below_20 += 1.0;
            else if (r < 40.0) row.frac_20_40 += 1.0;
            else if (r < 60.0) row.frac_40_60 += 1.0;
            else if (r < 80.0) row.frac_60_80 += 1.0;
            else row.frac_80_100 += 1.0;
            if (r >= 20.0) {
                above20_sum += r;
                ++above20;
            }
        }
        if (row.pair_count > 0) {
            const double n = static_cast<double>(row.pair_count);
            row.frac_below_20 /= n;
            row.frac_20_40 /= n;
            row.frac_40_60 /= n;
            row.frac_60_80 /= n;
            row.frac_80_100 /= n;
            row.frac_above_20 = 1.0 - row.frac_below_20;
            row.avg_reduction_above_20 =
                above20 ? above20_sum / static_cast<double>(above20) : 0.0;
        }
        rows.push_back(row);
    }
    return rows;
}

std::map<int, DistanceBucketStat> group_reduction_by_distance(
    const std::vector<double>& pair_distances_km, const std::vector<double>& reductions_pct,
    double bucket_km) {
    if (pair_distances_km.size() != reductions_pct.size())
        throw std::invalid_argument("group_reduction_by_distance: input size mismatch");
    if (bucket_km <= 0.0)
        throw std::invalid_argument("group_reduction_by_distance: bucket_km must be > 0");

    std::map<int, DistanceBucketStat> out;
    std::map<int, std::pair<double, double>> sums;  // (reduction sum, increase sum)
    for (std::size_t i = 0; i < pair_distances_km.size(); ++i) {
        const int bucket = static_cast<int>(std::floor(pair_distances_km[i] / bucket_km));
        auto& stat = out[bucket];
        auto& sum = sums[bucket];
        ++stat.count;
        const double r = reductions_pct[i];
        if (r > 0.0) {
            sum.first += r;
            ++stat.reduced_count;
        } else if (r < 0.0) {
            sum.second += -r;
            ++stat.worsened_count;
        }
    }
    for (auto& [bucket, stat] : out) {
        const auto& sum = sums[bucket];
        if (stat.reduced_count)
            stat.mean_reduction_pct = sum.first / static_cast<double>(stat.reduced_count);
        if (stat.worsened_count)
            stat.mean_increase_pct = sum.second / static_cast<double>(stat.worsened_count);
    }
    return out;
}

} // namespace sator::sim
