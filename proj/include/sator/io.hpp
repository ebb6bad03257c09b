#ifndef SATOR_IO_HPP
#define SATOR_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "sator/graph.hpp"
#include "sator/sim.hpp"
#include "sator/speeds.hpp"

namespace sator::io {

struct Csv {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;  // 1-based, aligned with rows
};

/// Read a simple (unquoted) CSV; rows must match the header width.
/// Leading '#' lines are collected as comments.
Csv read_csv(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// fingerprint,lat,lon,bandwidth_weight
std::vector<sim::Relay> load_relays(const std::string& path);

/// entry_fp,middle_fp,exit_fp
std::vector<sim::Circuit> load_circuits(const std::string& path);

/// id,lat,lon[,extra...]
std::vector<graph::GroundSite> load_sites(const std::string& path);

/// src_lat,src_lon,dst_lat,dst_lon,rtt_ms
std::vector<speeds::ProbePairSample> load_terrestrial_baseline(const std::string& path);

/// site_id,route_len_km,rtt_ms
std::vector<speeds::BaselineSample> load_satellite_baseline(const std::string& path);

/// circuit_id,interface,rtt_ms (repeated rows form each series)
std::map<std::string, std::map<sim::Interface, sim::LatencySeries>>
load_measured(const std::string& path);

/// Columnar store: id,interface,t,rtt_ms with one row per timeline step;
/// missing samples have an empty rtt field. Rows are sorted by
/// (id, interface, t) so identical runs serialize identically.
void save_series_store(const std::string& path, const sim::SeriesStore& store,
                       const std::string& comment_line);

struct LoadedStore {
    sim::SeriesStore store;
    std::string comment_line;  // first '#' line, if any
};

LoadedStore load_series_store(const std::string& path);

/// Shortest-round-trip decimal text for a double (std::to_chars).
std::string format_double(double v);

} // namespace sator::io

#endif
