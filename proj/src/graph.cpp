#include "sator/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>

namespace sator::graph {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec3 {
    double x, y, z;
};

Vec3 ecef_km(const geo::GeoCoord& p, double radius_km) {
    const double lat = p.lat * kPi / 180.0;
    const double lon = p.lon * kPi / 180.0;
    return {radius_km * std::cos(lat) * std::cos(lon),
            radius_km * std::cos(lat) * std::sin(lon),
            radius_km * std::sin(lat)};
}

double chord_km(const geo::SatState& a, const geo::SatState& b) {
    const Vec3 pa = ecef_km(a.position, geo::kEarthRadiusKm + a.altitude_km);
    const Vec3 pb = ecef_km(b.position, geo::kEarthRadiusKm + b.altitude_km);
    const double dx = pa.x - pb.x, dy = pa.y - pb.y, dz = pa.z - pb.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

} // namespace

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::User: return "user";
        case NodeKind::Satellite: return "satellite";
        case NodeKind::GroundStation: return "ground_station";
        case NodeKind::PoP: return "pop";
    }
    return "?";
}

const char* to_string(LinkKind k) {
    switch (k) {
        case LinkKind::IUL: return "IUL";
        case LinkKind::USL: return "USL";
        case LinkKind::ISL: return "ISL";
        case LinkKind::GSL: return "GSL";
        case LinkKind::GPL: return "GPL";
        case LinkKind::UPL: return "UPL";
    }
    return "?";
}

RoutingStrategy strategy_from_string(const std::string& name) {
    if (name == "terrestrial") return RoutingStrategy::TerrestrialOnly;
    if (name == "bent_pipe") return RoutingStrategy::SingleBentPipe;
    if (name == "isl") return RoutingStrategy::IslEnabled;
    throw std::invalid_argument("unknown routing strategy: " + name +
                                " (expected terrestrial|bent_pipe|isl)");
}

const char* to_string(RoutingStrategy s) {
    switch (s) {
        case RoutingStrategy::TerrestrialOnly: return "terrestrial";
        case RoutingStrategy::SingleBentPipe: return "bent_pipe";
        case RoutingStrategy::IslEnabled: return "isl";
    }
    return "?";
}

bool strategy_allows(RoutingStrategy s, LinkKind k) {
    switch (s) {
        case RoutingStrategy::TerrestrialOnly:
            return k == LinkKind::IUL;
        case RoutingStrategy::SingleBentPipe:
            return k == LinkKind::USL || k == LinkKind::GSL || k == LinkKind::GPL ||
                   k == LinkKind::UPL;
        case RoutingStrategy::IslEnabled:
            return k == LinkKind::USL || k == LinkKind::GSL || k == LinkKind::GPL ||
                   k == LinkKind::UPL || k == LinkKind::ISL;
    }
    return false;
}

bool link_endpoints_ok(LinkKind k, NodeKind a, NodeKind b) {
    const auto is = [&](NodeKind x, NodeKind y) {
        return (a == x && b == y) || (a == y && b == x);
    };
    switch (k) {
        case LinkKind::IUL: return is(NodeKind::User, NodeKind::User);
        case LinkKind::USL: return is(NodeKind::User, NodeKind::Satellite);
        case LinkKind::ISL: return is(NodeKind::Satellite, NodeKind::Satellite);
        case LinkKind::GSL: return is(NodeKind::GroundStation, NodeKind::Satellite);
        case LinkKind::GPL: return is(NodeKind::GroundStation, NodeKind::PoP);
        case LinkKind::UPL: return is(NodeKind::User, NodeKind::PoP);
    }
    return false;
}

std::vector<int> infer_planes(const std::vector<geo::OrbitalElements>& elements,
                              double raan_tolerance_deg) {
    // cluster by RAAN (and inclination) proximity; plane ids follow RAAN order
    std::vector<std::size_t> order(elements.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (elements[a].raan_deg != elements[b].raan_deg)
            return elements[a].raan_deg < elements[b].raan_deg;
        return elements[a].inclination_deg < elements[b].inclination_deg;
    });

    std::vector<int> planes(elements.size(), 0);
    int plane = -1;
    double last_raan = -1e9, last_incl = -1e9;
    for (std::size_t idx : order) {
        const auto& e = elements[idx];
        if (plane < 0 || std::abs(e.raan_deg - last_raan) > raan_tolerance_deg ||
            std::abs(e.inclination_deg - last_incl) > 1.0) {
            ++plane;
            last_raan = e.raan_deg;
            last_incl = e.inclination_deg;
        }
        planes[idx] = plane;
    }
    return planes;
}

int RoutingGraph::node_of(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end())
        throw std::invalid_argument("node not in graph: " + id);
    return it->second;
}

bool RoutingGraph::edges_well_formed() const {
    for (const auto& e : edges) {
        if (!link_endpoints_ok(e.kind, nodes[e.a].kind, nodes[e.b].kind)) return false;
        if (!strategy_allows(config.strategy, e.kind)) return false;
        if (!(e.latency_ms > 0.0)) return false;
    }
    return true;
}

namespace {

struct Builder {
    RoutingGraph g;

    int add_node(const std::string& id, NodeKind kind, geo::GeoCoord pos,
                 double altitude_km = 0.0) {
        if (g.index.count(id))
            throw std::invalid_argument("duplicate node id: " + id);
        const int idx = static_cast<int>(g.nodes.size());
        g.nodes.push_back({id, kind, pos, altitude_km});
        g.index.emplace(id, idx);
        return idx;
    }

    void add_edge(int a, int b, LinkKind kind, double length_km, double latency_ms) {
        g.edges.push_back({a, b, kind, length_km, latency_ms});
    }
};

double terrestrial_latency_ms(double one_way_km, const speeds::BucketedSpeedModel& model,
                              UniformStream& stream) {
    const double speed = speeds::sample_speed(model.ecdf_for_distance(one_way_km), stream);
    return one_way_km / speed * 1000.0;
}

} // namespace

RoutingGraph build_graph(std::shared_ptr<const Scene> scene, double t,
                         const GraphConfig& config,
                         std::shared_ptr<const speeds::BucketedSpeedModel> terrestrial,
                         std::shared_ptr<const speeds::SpeedEcdf> satellite,
                         UniformStream& stream) {
    if (!scene) throw std::invalid_argument("build_graph: null scene");

    const bool wants_sats = strategy_allows(config.strategy, LinkKind::USL) ||
                            strategy_allows(config.strategy, LinkKind::ISL) ||
                            strategy_allows(config.strategy, LinkKind::GSL);
    const bool wants_stations = strategy_allows(config.strategy, LinkKind::GSL) ||
                                strategy_allows(config.strategy, LinkKind::GPL);
    const bool wants_pops = strategy_allows(config.strategy, LinkKind::GPL) ||
                            strategy_allows(config.strategy, LinkKind::UPL);

    Builder b;
    b.g.snapshot_time = t;
    b.g.scene = scene;
    b.g.terrestrial_speeds = terrestrial;
    b.g.satellite_speeds = satellite;
    b.g.config = config;

    const int user_a = b.add_node(scene->endpoint_a.id, NodeKind::User, scene->endpoint_a.position);
    const int user_b = b.add_node(scene->endpoint_b.id, NodeKind::User, scene->endpoint_b.position);

    std::vector<geo::SatState> sats;
    std::vector<int> sat_nodes;
    if (wants_sats) {
        sats.reserve(scene->elements.size() + scene->fixed_sats.size());
        for (const auto& e : scene->elements) sats.push_back(geo::propagate(e, t));
        for (const auto& s : scene->fixed_sats) sats.push_back(s);
        for (const auto& s : sats)
            sat_nodes.push_back(b.add_node(s.sat_id, NodeKind::Satellite, s.position, s.altitude_km));
    }

    std::vector<int> station_nodes;
    if (wants_stations)
        for (const auto& s : scene->stations)
            station_nodes.push_back(b.add_node(s.id, NodeKind::GroundStation, s.position));

    std::vector<int> pop_nodes;
    if (wants_pops)
        for (const auto& p : scene->pops)
            pop_nodes.push_back(b.add_node(p.id, NodeKind::PoP, p.position));

    // Edge construction order is fixed; every sampled edge draws exactly once,
    // so a given (scene, t, stream state) always yields the same graph.
    if (strategy_allows(config.strategy, LinkKind::IUL)) {
        if (!terrestrial) throw std::invalid_argument("IUL needs a terrestrial speed model");
        const double d = geo::haversine_km(scene->endpoint_a.position, scene->endpoint_b.position);
        if (d > 0.0)
            b.add_edge(user_a, user_b, LinkKind::IUL, d,
                       terrestrial_latency_ms(d, *terrestrial, stream));
    }

    if (strategy_allows(config.strategy, LinkKind::USL)) {
        if (!satellite) throw std::invalid_argument("USL needs a satellite speed model");
        for (int user : {user_a, user_b}) {
            const auto& upos = b.g.nodes[user].position;
            for (std::size_t i = 0; i < sats.size(); ++i) {
                const auto geom = geo::slant_geometry(upos, sats[i]);
                if (geom.elevation_deg < config.elevation_min_deg) continue;
                const double speed = speeds::sample_speed(*satellite, stream);
                b.add_edge(user, sat_nodes[i], LinkKind::USL, geom.slant_km,
                           geom.slant_km / speed * 1000.0);
            }
        }
    }

    if (strategy_allows(config.strategy, LinkKind::ISL) && sats.size() >= 2) {
        std::set<std::pair<int, int>> linked;
        const auto add_isl = [&](std::size_t i, std::size_t j) {
            if (i == j) return;
            const auto key = std::minmax(sat_nodes[i], sat_nodes[j]);
            if (!linked.insert({key.first, key.second}).second) return;
            const double d = chord_km(sats[i], sats[j]);
            b.add_edge(key.first, key.second, LinkKind::ISL, d,
                       d / geo::kLightSpeedKmS * 1000.0 + config.isl_processing_ms);
        };

        const bool have_elements =
            !scene->elements.empty() && scene->fixed_sats.empty();
        if (config.isl_topology == IslTopology::PlusGrid && have_elements) {
            std::vector<int> planes = scene->planes.size() == scene->elements.size()
                                          ? scene->planes
                                          : infer_planes(scene->elements);
            const int plane_count = planes.empty() ? 0 : *std::max_element(planes.begin(), planes.end()) + 1;
            std::vector<std::vector<std::size_t>> members(plane_count);
            for (std::size_t i = 0; i < planes.size(); ++i)
                members[planes[i]].push_back(i);

            // intra-plane ring, ordered by mean anomaly at epoch
            for (auto& ring : members) {
                std::sort(ring.begin(), ring.end(), [&](std::size_t x, std::size_t y) {
                    return scene->elements[x].mean_anomaly_epoch_deg <
                           scene->elements[y].mean_anomaly_epoch_deg;
                });
                if (ring.size() == 2) add_isl(ring[0], ring[1]);
                else if (ring.size() > 2)
                    for (std::size_t i = 0; i < ring.size(); ++i)
                        add_isl(ring[i], ring[(i + 1) % ring.size()]);
            }
            // nearest neighbor in each adjacent plane (both directions)
            for (int p = 0; p < plane_count; ++p) {
                for (int delta : {1, plane_count - 1}) {
                    const int q = (p + delta) % plane_count;
                    if (q == p) continue;
                    for (std::size_t i : members[p]) {
                        double best = kInf;
                        std::size_t best_j = 0;
                        for (std::size_t j : members[q]) {
                            const double d = chord_km(sats[i], sats[j]);
                            if (d < best) { best = d; best_j = j; }
                        }
                        if (best < kInf) add_isl(i, best_j);
                    }
                }
            }
        } else {
            // nearest-k fallback (also used for fixed-state test scenes)
            for (std::size_t i = 0; i < sats.size(); ++i) {
                std::vector<std::pair<double, std::size_t>> dist;
                for (std::size_t j = 0; j < sats.size(); ++j)
                    if (j != i) dist.push_back({chord_km(sats[i], sats[j]), j});
                std::sort(dist.begin(), dist.end());
                const std::size_t k = std::min<std::size_t>(config.isl_nearest_k, dist.size());
                for (std::size_t j = 0; j < k; ++j) add_isl(i, dist[j].second);
            }
        }
    }

    if (strategy_allows(config.strategy, LinkKind::GSL)) {
        if (!satellite) throw std::invalid_argument("GSL needs a satellite speed model");
        for (std::size_t s = 0; s < station_nodes.size(); ++s) {
            const auto& spos = scene->stations[s].position;
            for (std::size_t i = 0; i < sats.size(); ++i) {
                const auto geom = geo::slant_geometry(spos, sats[i]);
                if (geom.elevation_deg < config.elevation_min_deg) continue;
                const double speed = speeds::sample_speed(*satellite, stream);
                b.add_edge(station_nodes[s], sat_nodes[i], LinkKind::GSL, geom.slant_km,
                           geom.slant_km / speed * 1000.0);
            }
        }
    }

    if (strategy_allows(config.strategy, LinkKind::GPL) && !pop_nodes.empty()) {
        for (std::size_t s = 0; s < station_nodes.size(); ++s) {
            double best = kInf;
            std::size_t best_p = 0;
            for (std::size_t p = 0; p < pop_nodes.size(); ++p) {
                const double d = geo::haversine_km(scene->stations[s].position,
                                                   scene->pops[p].position);
                if (d < best) { best = d; best_p = p; }
            }
            b.add_edge(station_nodes[s], pop_nodes[best_p], LinkKind::GPL, best,
                       config.gpl_latency_ms);
        }
    }

    if (strategy_allows(config.strategy, LinkKind::UPL)) {
        if (!terrestrial) throw std::invalid_argument("UPL needs a terrestrial speed model");
        for (int user : {user_a, user_b}) {
            const auto& upos = b.g.nodes[user].position;
            for (std::size_t p = 0; p < pop_nodes.size(); ++p) {
                const double d = geo::haversine_km(upos, scene->pops[p].position);
                if (d <= 0.0) continue;
                b.add_edge(user, pop_nodes[p], LinkKind::UPL, d,
                           terrestrial_latency_ms(d, *terrestrial, stream));
            }
        }
    }

    b.g.adjacency.assign(b.g.nodes.size(), {});
    for (std::size_t e = 0; e < b.g.edges.size(); ++e) {
        const auto& edge = b.g.edges[e];
        b.g.adjacency[edge.a].push_back({edge.b, static_cast<int>(e)});
        b.g.adjacency[edge.b].push_back({edge.a, static_cast<int>(e)});
    }
    return std::move(b.g);
}

RoutingGraph refresh_graph(const RoutingGraph& graph, double t, UniformStream& stream) {
    if (t < graph.snapshot_time)
        throw std::invalid_argument("refresh_graph: time must not move backwards");
    return build_graph(graph.scene, t, graph.config, graph.terrestrial_speeds,
                       graph.satellite_speeds, stream);
}

namespace {

// Dijkstra with node/edge bans; ties broken by node index for determinism.
std::optional<std::vector<int>> dijkstra(const RoutingGraph& g, int src, int dst,
                                         const std::vector<char>& banned_node,
                                         const std::vector<char>& banned_edge) {
    const std::size_t n = g.nodes.size();
    std::vector<double> dist(n, kInf);
    std::vector<int> parent(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;

    if (banned_node[src] || banned_node[dst]) return std::nullopt;
    dist[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        if (u == dst) break;
        for (const auto& [v, e] : g.adjacency[u]) {
            if (banned_node[v] || banned_edge[e]) continue;
            const double nd = d + g.edges[e].latency_ms;
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = u;
                pq.push({nd, v});
            }
        }
    }
    if (dist[dst] == kInf) return std::nullopt;
    std::vector<int> path;
    for (int v = dst; v != -1; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

int min_edge_between(const RoutingGraph& g, int u, int v) {
    int best = -1;
    for (const auto& [w, e] : g.adjacency[u])
        if (w == v && (best < 0 || g.edges[e].latency_ms < g.edges[best].latency_ms))
            best = e;
    return best;
}

// left-to-right sum; the canonical cost every caller compares against
double path_cost(const RoutingGraph& g, const std::vector<int>& hops) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
        const int e = min_edge_between(g, hops[i], hops[i + 1]);
        if (e < 0) throw std::logic_error("path uses a non-edge");
        total += g.edges[e].latency_ms;
    }
    return total;
}

} // namespace

std::vector<PathResult> k_shortest_paths(const RoutingGraph& graph,
                                         const std::string& src,
                                         const std::string& dst, int k) {
    if (k < 1) throw std::invalid_argument("k_shortest_paths: K must be >= 1");
    const int s = graph.node_of(src);
    const int t = graph.node_of(dst);
    if (s == t) throw std::invalid_argument("k_shortest_paths: src == dst");

    std::vector<char> no_nodes(graph.nodes.size(), 0);
    std::vector<char> no_edges(graph.edges.size(), 0);

    std::vector<std::vector<int>> accepted;
    auto first = dijkstra(graph, s, t, no_nodes, no_edges);
    if (!first) return {};
    accepted.push_back(*first);

    // candidates ordered by (cost, hop sequence); the set also deduplicates
    std::set<std::pair<double, std::vector<int>>> candidates;

    while (static_cast<int>(accepted.size()) < k) {
        const auto& prev = accepted.back();
        for (std::size_t i = 0; i + 1 < prev.size(); ++i) {
            std::vector<char> banned_node(graph.nodes.size(), 0);
            std::vector<char> banned_edge(graph.edges.size(), 0);

            const std::vector<int> root(prev.begin(), prev.begin() + i + 1);
            for (const auto& p : accepted) {
                if (p.size() > i + 1 &&
                    std::equal(root.begin(), root.end(), p.begin())) {
                    for (const auto& [w, e] : graph.adjacency[p[i]])
                        if (w == p[i + 1]) banned_edge[e] = 1;
                }
            }
            for (std::size_t j = 0; j + 1 < root.size(); ++j) banned_node[root[j]] = 1;

            auto spur = dijkstra(graph, prev[i], t, banned_node, banned_edge);
            if (!spur) continue;
            std::vector<int> total = root;
            total.insert(total.end(), spur->begin() + 1, spur->end());
            if (std::find(accepted.begin(), accepted.end(), total) != accepted.end())
                continue;
            candidates.insert({path_cost(graph, total), std::move(total)});
        }
        if (candidates.empty()) break;
        auto best = candidates.begin();
        accepted.push_back(best->second);
        candidates.erase(best);
    }

    std::vector<PathResult> out;
    out.reserve(accepted.size());
    for (const auto& hops : accepted) {
        if (std::set<int>(hops.begin(), hops.end()).size() != hops.size())
            throw std::logic_error("k_shortest_paths produced a non-simple path");
        PathResult r;
        r.latency_ms = path_cost(graph, hops);
        for (int nidx : hops) r.hops.push_back(graph.nodes[nidx].id);
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PathResult& a, const PathResult& b) {
                         return a.latency_ms < b.latency_ms;
                     });
    return out;
}

double topk_latency_ms(const std::vector<PathResult>& paths, int k) {
    if (paths.empty()) throw std::runtime_error("topk_latency_ms: no route");
    if (k < 1) throw std::invalid_argument("topk_latency_ms: K must be >= 1");
    const std::size_t take = std::min<std::size_t>(k, paths.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += paths[i].latency_ms;
    return sum / static_cast<double>(take);
}

nlohmann::json to_json(const RoutingGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes) {
        nlohmann::json j{{"id", n.id},
                         {"kind", to_string(n.kind)},
                         {"lat", n.position.lat},
                         {"lon", n.position.lon}};
        if (n.kind == NodeKind::Satellite) j["altitude_km"] = n.altitude_km;
        nodes.push_back(std::move(j));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges)
        edges.push_back({{"a", graph.nodes[e.a].id},
                         {"b", graph.nodes[e.b].id},
                         {"kind", to_string(e.kind)},
                         {"length_km", e.length_km},
                         {"latency_ms", e.latency_ms}});
    return nlohmann::json{{"snapshot_time", graph.snapshot_time},
                          {"strategy", to_string(graph.config.strategy)},
                          {"nodes", nodes},
                          {"edges", edges}};
}

} // namespace sator::graph
