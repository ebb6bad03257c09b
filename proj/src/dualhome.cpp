#include "sator/dualhome.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sator/rng.hpp"
#include "sator/stats.hpp"

namespace sator::dualhome {

double faster_iface_entropy(const IfaceHistory& history) {
    if (history.records.empty()) return 1.0;
    std::size_t sat_faster = 0;
    for (const auto& r : history.records)
        if (r.sat_ms < r.ter_ms) ++sat_faster;
    const double p = static_cast<double>(sat_faster) /
                     static_cast<double>(history.records.size());
    double h = 0.0;
    for (double x : {p, 1.0 - p})
        if (x > 0.0) h -= x * std::log2(x);
    return h;
}

std::map<std::string, double> update_priorities(
    const std::map<std::string, IfaceHistory>& state, double now, double a) {
    if (a < 0.0 || a > 1.0)
        throw std::invalid_argument("update_priorities: a must be in [0,1]");

    double max_staleness = 0.0;
    for (const auto& [peer, h] : state)
        if (h.last_time)
            max_staleness = std::max(max_staleness, now - *h.last_time);

    std::map<std::string, double> scores;
    for (const auto& [peer, h] : state) {
        double staleness = 1.0;
        if (h.last_time)
            staleness = max_staleness > 0.0 ? (now - *h.last_time) / max_staleness : 0.0;
        scores[peer] = a * faster_iface_entropy(h) + (1.0 - a) * staleness;
    }
    return scores;
}

std::map<std::string, sim::LatencySeries> run_dual_homing(
    const std::map<std::string, sim::PairSeries>& peers, const SchedulerConfig& cfg,
    const sim::Timeline& timeline, std::uint64_t seed) {
    timeline.validate();
    if (cfg.interval_s <= 0.0)
        throw std::invalid_argument("run_dual_homing: interval must be > 0");
    if (cfg.budget < 0)
        throw std::invalid_argument("run_dual_homing: budget must be >= 0");

    const std::size_t steps = timeline.steps();
    for (const auto& [peer, series] : peers) {
        if (series.terrestrial.rtt_ms.size() != steps ||
            series.satellite.rtt_ms.size() != steps)
            throw std::invalid_argument("run_dual_homing: series not aligned to timeline: " + peer);
    }

    std::map<std::string, IfaceHistory> state;
    std::map<std::string, sim::Interface> selected;
    std::map<std::string, sim::LatencySeries> effective;
    for (const auto& [peer, series] : peers) {
        state[peer];
        selected[peer] = sim::Interface::Terrestrial;
        sim::LatencySeries s;
        s.id = peer;
        s.iface = sim::Interface::Terrestrial;  // label: scheduler output
        s.timeline = timeline;
        s.rtt_ms.reserve(steps);
        effective[peer] = std::move(s);
    }

    long long rounds_done = 0;
    for (std::size_t step = 0; step < steps; ++step) {
        const double now = timeline.time_at(step);
        const long long due = static_cast<long long>(
            std::floor((now - timeline.start) / cfg.interval_s + 1e-9));
        if (due > rounds_done && cfg.budget > 0 && !peers.empty()) {
            rounds_done = due;
            auto scores = update_priorities(state, now, cfg.mix_a);
            std::vector<std::string> order;
            order.reserve(scores.size());
            for (const auto& [peer, score] : scores) order.push_back(peer);
            std::sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
                if (scores[x] != scores[y]) return scores[x] > scores[y];
                return x < y;
            });
            const std::size_t take = std::min<std::size_t>(cfg.budget, order.size());
            for (std::size_t i = 0; i < take; ++i) {
                const auto& peer = order[i];
                const auto& series = peers.at(peer);
                const double sat = series.satellite.rtt_ms[step];
                const double ter = series.terrestrial.rtt_ms[step];
                if (std::isnan(sat) || std::isnan(ter)) continue;  // probe lost
                state[peer].records.push_back({now, sat, ter});
                state[peer].last_time = now;
                // tie keeps terrestrial
                selected[peer] = sat < ter ? sim::Interface::Satellite
                                           : sim::Interface::Terrestrial;
            }
        }
        for (const auto& [peer, series] : peers) {
            const auto& src = selected[peer] == sim::Interface::Satellite
                                  ? series.satellite
                                  : series.terrestrial;
            effective[peer].rtt_ms.push_back(src.rtt_ms[step]);
        }
    }
    (void)seed;
    return effective;
}

const char* to_string(DeploymentScenario s) {
    switch (s) {
        case DeploymentScenario::TopN: return "top";
        case DeploymentScenario::WeightedN: return "weighted";
        case DeploymentScenario::RandomN: return "random";
    }
    return "?";
}

DeploymentScenario scenario_from_string(const std::string& name) {
    if (name == "top") return DeploymentScenario::TopN;
    if (name == "weighted") return DeploymentScenario::WeightedN;
    if (name == "random") return DeploymentScenario::RandomN;
    throw std::invalid_argument("unknown deployment scenario: " + name);
}

DeploymentPlan assign_deployment(const std::vector<sim::Relay>& relays,
                                 DeploymentScenario scenario, std::size_t n,
                                 std::uint64_t seed) {
    DeploymentPlan plan;
    plan.scenario = scenario;
    plan.seed = seed;
    if (n > relays.size()) {
        plan.capped = true;
        n = relays.size();
    }
    plan.n = n;

    std::vector<std::size_t> order(relays.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    UniformStream stream(mix_u64(seed, fnv1a("deployment")));
    switch (scenario) {
        case DeploymentScenario::TopN: {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (relays[a].bandwidth_weight != relays[b].bandwidth_weight)
                    return relays[a].bandwidth_weight > relays[b].bandwidth_weight;
                return relays[a].fingerprint < relays[b].fingerprint;
            });
            for (std::size_t i = 0; i < n; ++i)
                plan.members.insert(relays[order[i]].fingerprint);
            break;
        }
        case DeploymentScenario::WeightedN: {
            std::vector<std::size_t> pool = order;
            while (plan.members.size() < n && !pool.empty()) {
                double total = 0.0;
                for (std::size_t i : pool) total += relays[i].bandwidth_weight;
                std::size_t chosen;
                if (total <= 0.0) {
                    chosen = static_cast<std::size_t>(stream.next_index(pool.size()));
                } else {
                    const double target = stream.next_unit() * total;
                    double acc = 0.0;
                    chosen = pool.size() - 1;
                    for (std::size_t i = 0; i < pool.size(); ++i) {
                        acc += relays[pool[i]].bandwidth_weight;
                        if (target < acc) { chosen = i; break; }
                    }
                }
                plan.members.insert(relays[pool[chosen]].fingerprint);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(chosen));
            }
            break;
        }
        case DeploymentScenario::RandomN: {
            std::vector<std::size_t> pool = order;
            while (plan.members.size() < n && !pool.empty()) {
                const std::size_t i = static_cast<std::size_t>(stream.next_index(pool.size()));
                plan.members.insert(relays[pool[i]].fingerprint);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
            }
            break;
        }
    }
    return plan;
}

namespace {

DeploymentMetrics metrics_for_percentile(
    int p, const std::vector<std::pair<const sim::LatencySeries*,
                                       const sim::LatencySeries*>>& links) {
    DeploymentMetrics m;
    m.percentile = p;
    double delta_sum = 0.0, red_ms = 0.0, red_pct = 0.0, inc_ms = 0.0;
    std::size_t reduced = 0, worsened = 0;
    for (const auto& [baseline, effective] : links) {
        const double base = sim::percentile(*baseline, p);
        const double eff = sim::percentile(*effective, p);
        const double delta = base - eff;
        ++m.link_count;
        delta_sum += delta;
        if (delta > 0.0) {
            ++reduced;
            red_ms += delta;
            red_pct += delta / base * 100.0;
        } else if (delta < 0.0) {
            ++worsened;
            inc_ms += -delta;
        }
    }
    if (m.link_count) {
        m.frac_reduced = static_cast<double>(reduced) / static_cast<double>(m.link_count);
        m.mean_delta_ms = delta_sum / static_cast<double>(m.link_count);
    }
    if (reduced) {
        m.mean_reduction_ms = red_ms / static_cast<double>(reduced);
        m.mean_reduction_pct = red_pct / static_cast<double>(reduced);
    }
    if (worsened) m.mean_increase_ms = inc_ms / static_cast<double>(worsened);
    return m;
}

LevelReport report_level(
    const std::vector<std::pair<const sim::LatencySeries*, const sim::LatencySeries*>>& links,
    const std::vector<int>& percentiles) {
    LevelReport out;
    for (int p : percentiles) out.rows.push_back(metrics_for_percentile(p, links));
    DeploymentMetrics avg;
    for (const auto& row : out.rows) {
        avg.frac_reduced += row.frac_reduced;
        avg.mean_delta_ms += row.mean_delta_ms;
        avg.mean_reduction_ms += row.mean_reduction_ms;
        avg.mean_reduction_pct += row.mean_reduction_pct;
        avg.mean_increase_ms += row.mean_increase_ms;
        avg.link_count = row.link_count;
    }
    if (!out.rows.empty()) {
        const double n = static_cast<double>(out.rows.size());
        avg.frac_reduced /= n;
        avg.mean_delta_ms /= n;
        avg.mean_reduction_ms /= n;
        avg.mean_reduction_pct /= n;
        avg.mean_increase_ms /= n;
    }
    out.all_percentile_avg = avg;
    return out;
}

} // namespace

ReductionReport evaluate_deployment(const std::vector<sim::Circuit>& circuits,
                                    const sim::SeriesStore& store,
                                    const DeploymentPlan& plan,
                                    const SchedulerConfig& cfg,
                                    const std::vector<int>& percentiles) {
    // scheduler replay per member source over its outbound peers
    std::map<std::string, std::map<std::string, sim::PairSeries>> by_source;
    for (const auto& [id, pair] : store) {
        const auto sep = id.find('>');
        if (sep == std::string::npos)
            throw std::invalid_argument("store id is not a pair id: " + id);
        const std::string src = id.substr(0, sep);
        const std::string dst = id.substr(sep + 1);
        if (plan.members.count(src)) by_source[src][dst] = pair;
    }

    std::map<std::string, sim::LatencySeries> effective;  // pair id -> series
    for (const auto& [src, peers] : by_source) {
        if (peers.empty()) continue;
        const auto& timeline = peers.begin()->second.terrestrial.timeline;
        auto replayed = run_dual_homing(peers, cfg, timeline, plan.seed);
        for (auto& [dst, series] : replayed)
            effective[sim::pair_id(src, dst)] = std::move(series);
    }

    const auto effective_of = [&](const std::string& id) -> const sim::LatencySeries& {
        auto it = effective.find(id);
        if (it != effective.end()) return it->second;
        return store.at(id).terrestrial;
    };

    std::vector<std::pair<const sim::LatencySeries*, const sim::LatencySeries*>> pair_links;
    for (const auto& [id, pair] : store)
        pair_links.push_back({&pair.terrestrial, &effective_of(id)});

    // circuit series are materialized here so pointers stay alive
    std::vector<sim::LatencySeries> circuit_base, circuit_eff;
    circuit_base.reserve(circuits.size());
    circuit_eff.reserve(circuits.size());
    for (const auto& c : circuits) {
        const std::string h1 = sim::pair_id(c.entry, c.middle);
        const std::string h2 = sim::pair_id(c.middle, c.exit);
        if (!store.count(h1) || !store.count(h2))
            throw std::invalid_argument("evaluate_deployment: circuit hop missing from store: " +
                                        c.id());
        circuit_base.push_back(sim::circuit_series(c.id(), store.at(h1).terrestrial,
                                                   store.at(h2).terrestrial));
        circuit_eff.push_back(sim::circuit_series(c.id(), effective_of(h1), effective_of(h2)));
    }
    std::vector<std::pair<const sim::LatencySeries*, const sim::LatencySeries*>> circuit_links;
    for (std::size_t i = 0; i < circuits.size(); ++i)
        circuit_links.push_back({&circuit_base[i], &circuit_eff[i]});

    ReductionReport report;
    report.seed = plan.seed;
    report.pairs = report_level(pair_links, percentiles);
    report.circuits = report_level(circuit_links, percentiles);
    return report;
}

Visibility adversary_visibility(const DeploymentPlan& plan,
                                const std::vector<std::pair<std::string, std::string>>& pairs,
                                const std::vector<sim::Circuit>& circuits) {
    Visibility v;
    if (!pairs.empty()) {
        std::size_t seen = 0;
        for (const auto& [src, dst] : pairs)
            if (plan.members.count(src)) ++seen;
        v.pair_fraction = static_cast<double>(seen) / static_cast<double>(pairs.size());
    }
    if (!circuits.empty()) {
        std::size_t seen = 0;
        for (const auto& c : circuits)
            if (plan.members.count(c.entry) && plan.members.count(c.middle)) ++seen;
        v.circuit_fraction = static_cast<double>(seen) / static_cast<double>(circuits.size());
    }
    return v;
}

double tail_correlation(const sim::LatencySeries& a, const sim::LatencySeries& b, int q) {
    if (a.rtt_ms.size() != b.rtt_ms.size())
        throw std::invalid_argument("tail_correlation: series not aligned");
    std::vector<double> va, vb;
    for (std::size_t i = 0; i < a.rtt_ms.size(); ++i) {
        if (std::isnan(a.rtt_ms[i]) || std::isnan(b.rtt_ms[i])) continue;
        va.push_back(a.rtt_ms[i]);
        vb.push_back(b.rtt_ms[i]);
    }
    if (va.size() < 100)
        throw std::runtime_error("tail_correlation: fewer than 100 joint samples");

    const double ta = nearest_rank_percentile(va, q);
    const double tb = nearest_rank_percentile(vb, q);
    std::size_t cond = 0, joint = 0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        if (va[i] > ta) {
            ++cond;
            if (vb[i] > tb) ++joint;
        }
    }
    if (cond == 0)
        throw std::runtime_error("tail_correlation: no samples above the conditioning threshold");
    return static_cast<double>(joint) / static_cast<double>(cond);
}

double probe_overhead_bytes_per_day(int budget, double interval_s,
                                    double probe_exchange_bytes) {
    if (budget < 0 || interval_s <= 0.0 || probe_exchange_bytes < 0.0)
        throw std::invalid_argument("probe_overhead: non-positive input");
    return 86400.0 / interval_s * static_cast<double>(budget) * 2.0 * probe_exchange_bytes;
}

double rtt_to_plt_ms(double rtt_reduction_ms) {
    if (rtt_reduction_ms < 0.0)
        throw std::invalid_argument("rtt_to_plt_ms: input must be >= 0");
    return 20.0 * rtt_reduction_ms;
}

nlohmann::json to_json(const DeploymentPlan& plan) {
    return nlohmann::json{{"scenario", to_string(plan.scenario)},
                          {"n", plan.n},
                          {"seed", plan.seed},
                          {"capped", plan.capped},
                          {"members", plan.members}};
}

DeploymentPlan plan_from_json(const nlohmann::json& j) {
    DeploymentPlan plan;
    plan.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    plan.n = j.at("n").get<std::size_t>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.capped = j.value("capped", false);
    for (const auto& m : j.at("members")) plan.members.insert(m.get<std::string>());
    return plan;
}

namespace {

nlohmann::json to_json(const DeploymentMetrics& m) {
    return nlohmann::json{{"percentile", m.percentile},
                          {"frac_reduced", m.frac_reduced},
                          {"mean_delta_ms", m.mean_delta_ms},
                          {"mean_reduction_ms", m.mean_reduction_ms},
                          {"mean_reduction_pct", m.mean_reduction_pct},
                          {"mean_increase_ms", m.mean_increase_ms},
                          {"link_count", m.link_count}};
}

nlohmann::json to_json(const LevelReport& level) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : level.rows) rows.push_back(to_json(r));
    return nlohmann::json{{"rows", rows},
                          {"all_percentile_avg", to_json(level.all_percentile_avg)}};
}

} // namespace

nlohmann::json to_json(const ReductionReport& report) {
    return nlohmann::json{{"seed", report.seed},
                          {"pairs", to_json(report.pairs)},
                          {"circuits", to_json(report.circuits)}};
}

} // namespace sator::dualhome
