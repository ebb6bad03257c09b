#ifndef SATOR_GRAPH_HPP
#define SATOR_GRAPH_HPP

#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sator/geo.hpp"
#include "sator/rng.hpp"
#include "sator/speeds.hpp"

#include "json.hpp"

namespace sator::graph {

enum class NodeKind { User, Satellite, GroundStation, PoP };

enum class LinkKind { IUL, USL, ISL, GSL, GPL, UPL };

const char* to_string(NodeKind k);
const char* to_string(LinkKind k);

/// Which link kinds a routing strategy may instantiate.
enum class RoutingStrategy {
    TerrestrialOnly,  // IUL only
    SingleBentPipe,   // USL, GSL, GPL, UPL
    IslEnabled,       // SingleBentPipe + ISL
};

RoutingStrategy strategy_from_string(const std::string& name);
const char* to_string(RoutingStrategy s);

bool strategy_allows(RoutingStrategy s, LinkKind k);

/// Endpoint-kind constraint table for every link kind.
bool link_endpoints_ok(LinkKind k, NodeKind a, NodeKind b);

enum class IslTopology { PlusGrid, NearestK };

struct GraphConfig {
    RoutingStrategy strategy = RoutingStrategy::IslEnabled;
    double elevation_min_deg = 25.0;   // USL/GSL reachability mask
    double gpl_latency_ms = 5.0;       // fixed station-to-PoP edge weight
    double isl_processing_ms = 0.0;    // optional per-ISL-hop delay
    IslTopology isl_topology = IslTopology::PlusGrid;
    int isl_nearest_k = 4;
};

struct GroundSite {
    std::string id;
    geo::GeoCoord position;
};

struct RelayEndpoint {
    std::string id;
    geo::GeoCoord position;
};

/// Static description of one pair's world: the two endpoint relays plus the
/// constellation and ground segment. Satellites come either as orbital
/// elements (re-propagated on refresh) or as fixed states (test scenes).
struct Scene {
    RelayEndpoint endpoint_a;
    RelayEndpoint endpoint_b;
    std::vector<GroundSite> stations;
    std::vector<GroundSite> pops;
    std::vector<geo::OrbitalElements> elements;
    std::vector<geo::SatState> fixed_sats;
    std::vector<int> planes;  // per-element plane id; empty => inferred/nearest-k
};

/// Group elements into orbital planes by (inclination, RAAN) proximity and
/// order each plane's members by mean anomaly. Used for +Grid ISLs.
std::vector<int> infer_planes(const std::vector<geo::OrbitalElements>& elements,
                              double raan_tolerance_deg = 3.0);

struct Node {
    std::string id;
    NodeKind kind = NodeKind::User;
    geo::GeoCoord position;
    double altitude_km = 0.0;  // satellites only
};

struct Edge {
    int a = 0;
    int b = 0;
    LinkKind kind = LinkKind::IUL;
    double length_km = 0.0;
    double latency_ms = 0.0;
};

struct RoutingGraph {
    double snapshot_time = 0.0;
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::unordered_map<std::string, int> index;
    std::vector<std::vector<std::pair<int, int>>> adjacency;  // (neighbor, edge)

    std::shared_ptr<const Scene> scene;
    std::shared_ptr<const speeds::BucketedSpeedModel> terrestrial_speeds;
    std::shared_ptr<const speeds::SpeedEcdf> satellite_speeds;
    GraphConfig config;

    int node_of(const std::string& id) const;
    /// Endpoint-kind constraints hold for every edge.
    bool edges_well_formed() const;
};

RoutingGraph build_graph(std::shared_ptr<const Scene> scene, double t,
                         const GraphConfig& config,
                         std::shared_ptr<const speeds::BucketedSpeedModel> terrestrial,
                         std::shared_ptr<const speeds::SpeedEcdf> satellite,
                         UniformStream& stream);

/// Rebuild the stored scene at time t: satellites re-propagated, edge
/// existence re-derived, every sampled edge speed redrawn. GPL stays fixed.
RoutingGraph refresh_graph(const RoutingGraph& graph, double t, UniformStream& stream);

struct PathResult {
    std::vector<std::string> hops;
    double latency_ms = 0.0;
};

/// Yen's loop-free K-shortest-paths, ascending latency. Unreachable
/// destination yields an empty list.
std::vector<PathResult> k_shortest_paths(const RoutingGraph& graph,
                                         const std::string& src,
                                         const std::string& dst, int k);

/// Mean latency of the min(K, available) cheapest paths.
double topk_latency_ms(const std::vector<PathResult>& paths, int k);

nlohmann::json to_json(const RoutingGraph& graph);

} // namespace sator::graph

#endif
