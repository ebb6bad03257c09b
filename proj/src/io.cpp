#include "sator/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace sator::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double_at(const std::string& path, int line, const std::string& raw,
                       const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) fail_at(path, line, std::string("trailing junk in ") + what);
        return v;
    } catch (const std::exception&) {
        fail_at(path, line, std::string("unparseable ") + what + ": '" + raw + "'");
    }
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    Csv csv;
    csv.path = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '#') continue;
        if (csv.header.empty()) {
            csv.header = split_csv_line(line);
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() < csv.header.size())
            fail_at(path, lineno, "expected " + std::to_string(csv.header.size()) +
                                      " fields, got " + std::to_string(fields.size()));
        csv.rows.push_back(std::move(fields));
        csv.line_numbers.push_back(lineno);
    }
    if (csv.header.empty())
        throw std::runtime_error(path + ": empty file (missing header)");
    return csv;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

void expect_header(const Csv& csv, const std::vector<std::string>& prefix) {
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (i >= csv.header.size() || csv.header[i] != prefix[i]) {
            std::string want;
            for (const auto& h : prefix) want += (want.empty() ? "" : ",") + h;
            throw std::runtime_error(csv.path + ": unexpected header (want '" + want + "')");
        }
    }
}

} // namespace

std::vector<sim::Relay> load_relays(const std::string& path) {
    const Csv csv = read_csv(path);
    expect_header(csv, {"fingerprint", "lat", "lon", "bandwidth_weight"});
    std::vector<sim::Relay> out;
    out.reserve(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        const int ln = csv.line_numbers[i];
        sim::Relay r;
        r.fingerprint = row[0];
        try {
            r.position = geo::make_coord(parse_double_at(path, ln, row[1], "lat"),
                                         parse_double_at(path, ln, row[2], "lon"));
        } catch (const std::invalid_argument& e) {
            fail_at(path, ln, e.what());
        }
        r.bandwidth_weight = parse_double_at(path, ln, row[3], "bandwidth_weight");
        if (r.bandwidth_weight < 0.0) fail_at(path, ln, "negative bandwidth_weight");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<sim::Circuit> load_circuits(const std::string& path) {
    const Csv csv = read_csv(path);
    expect_header(csv, {"entry_fp", "middle_fp", "exit_fp"});
    std::vector<sim::Circuit> out;
    out.reserve(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        sim::Circuit c{row[0], row[1], row[2]};
        if (c.entry == c.middle || c.middle == c.exit || c.entry == c.exit)
            fail_at(path, csv.line_numbers[i], "circuit relays must be distinct");
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<graph::GroundSite> load_sites(const std::string& path) {
    const Csv csv = read_csv(path);
    expect_header(csv, {"id", "lat", "lon"});
    std::vector<graph::GroundSite> out;
    out.reserve(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        const int ln = csv.line_numbers[i];
        try {
            out.push_back({row[0], geo::make_coord(parse_double_at(path, ln, row[1], "lat"),
                                                   parse_double_at(path, ln, row[2], "lon"))});
        } catch (const std::invalid_argument& e) {
            fail_at(path, ln, e.what());
        }
    }
    return out;
}

std::vector<speeds::ProbePairSample> load_terrestrial_baseline(const std::string& path) {
    const Csv csv = read_csv(path);
    expect_header(csv, {"src_lat", "src_lon", "dst_lat", "dst_lon", "rtt_ms"});
    std::vector<speeds::ProbePairSample> out;
    out.reserve(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        const int ln = csv.line_numbers[i];
        speeds::ProbePairSample s;
        try {
            s.src = geo::make_coord(parse_double_at(path, ln, row[0], "src_lat"),
                                    parse_double_at(path, ln, row[1], "src_lon"));
            s.dst = geo::make_coord(parse_double_at(path, ln, row[2], "dst_lat"),
                                    parse_double_at(path, ln, row[3], "dst_lon"));
        } catch (const std::invalid_argument& e) {
            fail_at(path, ln, e.what());
        }
        s.rtt_ms = parse_double_at(path, ln, row[4], "rtt_ms");
        if (s.rtt_ms <= 0.0) fail_at(path, ln, "rtt_ms must be > 0");
        out.push_back(s);
    }
    return out;
}

std::vector<speeds::BaselineSample> load_satellite_baseline(const std::string& path) {
    const Csv csv = read_csv(path);
    expect_header(csv, {"site_id", "route_len_km", "rtt_ms"});
    std::vector<speeds::BaselineSample> out;
    out.reserve(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        const int ln = csv.line_numbers[i];
        speeds::BaselineSample s;
        s.kind = speeds::SampleKind::Satellite;
        s.route_len_km = parse_double_at(path, ln, row[1], "route_len_km");
        s.rtt_ms = parse_double_at(path, ln, row[2], "rtt_ms");
        if (s.route_len_km <= 0.0) fail_at(path, ln, "route_len_km must be > 0");
        if (s.rtt_ms <= 0.0) fail_at(path, ln, "rtt_ms must be > 0");
        out.push_back(s);
    }
    return out;
}

std::map<std::string, std::map<sim::Interface, sim::LatencySeries>>
load_measured(const std::string& path) {
    const Csv csv = read_csv(path);
    expect_header(csv, {"circuit_id", "interface", "rtt_ms"});
    std::map<std::string, std::map<sim::Interface, std::vector<double>>> raw;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        const int ln = csv.line_numbers[i];
        sim::Interface iface;
        try {
            iface = sim::interface_from_string(row[1]);
        } catch (const std::invalid_argument& e) {
            fail_at(path, ln, e.what());
        }
        const double rtt = parse_double_at(path, ln, row[2], "rtt_ms");
        if (rtt <= 0.0) fail_at(path, ln, "rtt_ms must be > 0");
        raw[row[0]][iface].push_back(rtt);
    }

    std::map<std::string, std::map<sim::Interface, sim::LatencySeries>> out;
    for (auto& [id, by_iface] : raw) {
        for (auto& [iface, values] : by_iface) {
            sim::LatencySeries s;
            s.id = id;
            s.iface = iface;
            s.timeline = {0.0, static_cast<double>(values.size()), 1.0};
            s.rtt_ms = std::move(values);
            out[id][iface] = std::move(s);
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, res.ptr);
}

void save_series_store(const std::string& path, const sim::SeriesStore& store,
                       const std::string& comment_line) {
    std::ostringstream out;
    if (!comment_line.empty()) out << "# " << comment_line << "\n";
    out << "id,interface,t,rtt_ms\n";
    for (const auto& [id, pair] : store) {
        for (const sim::LatencySeries* s : {&pair.satellite, &pair.terrestrial}) {
            if (s->rtt_ms.empty()) continue;
            for (std::size_t i = 0; i < s->rtt_ms.size(); ++i) {
                out << id << ',' << sim::to_string(s->iface) << ','
                    << format_double(s->timeline.time_at(i)) << ',';
                if (!std::isnan(s->rtt_ms[i])) out << format_double(s->rtt_ms[i]);
                out << '\n';
            }
        }
    }
    write_file(path, out.str());
}

LoadedStore load_series_store(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    LoadedStore out;
    std::map<std::string, std::map<sim::Interface, std::vector<std::pair<double, double>>>> raw;
    std::string line;
    int lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (out.comment_line.empty()) out.comment_line = line.substr(line.find_first_not_of("# "));
            continue;
        }
        if (!saw_header) {
            if (line != "id,interface,t,rtt_ms")
                fail_at(path, lineno, "unexpected store header: " + line);
            saw_header = true;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) fail_at(path, lineno, "expected 4 fields");
        const double t = parse_double_at(path, lineno, fields[2], "t");
        const double rtt = fields[3].empty()
                               ? std::nan("")
                               : parse_double_at(path, lineno, fields[3], "rtt_ms");
        sim::Interface iface;
        try {
            iface = sim::interface_from_string(fields[1]);
        } catch (const std::invalid_argument& e) {
            fail_at(path, lineno, e.what());
        }
        raw[fields[0]][iface].push_back({t, rtt});
    }

    for (auto& [id, by_iface] : raw) {
        for (auto& [iface, samples] : by_iface) {
            sim::LatencySeries s;
            s.id = id;
            s.iface = iface;
            const double start = samples.front().first;
            const double step = samples.size() > 1
                                    ? (samples.back().first - start) /
                                          static_cast<double>(samples.size() - 1)
                                    : 1.0;
            s.timeline = {start, step * static_cast<double>(samples.size()), step};
            for (const auto& [t, rtt] : samples) s.rtt_ms.push_back(rtt);
            auto& pair = out.store[id];
            if (iface == sim::Interface::Satellite) pair.satellite = std::move(s);
            else pair.terrestrial = std::move(s);
        }
    }
    return out;
}

} // namespace sator::io
