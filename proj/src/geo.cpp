#include "sator/geo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sator::geo {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

} // namespace

double normalize_lon(double lon_deg) {
    double l = std::fmod(lon_deg + 180.0, 360.0);
    if (l < 0.0) l += 360.0;
    return l - 180.0;
}

GeoCoord make_coord(double lat_deg, double lon_deg) {
    if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
        throw std::invalid_argument("latitude out of [-90,90]: " + std::to_string(lat_deg));
    if (!std::isfinite(lon_deg))
        throw std::invalid_argument("longitude not finite");
    return GeoCoord{lat_deg, normalize_lon(lon_deg)};
}

bool leo_plausible(const SatState& s) {
    return s.altitude_km > 100.0 && s.altitude_km < 3000.0;
}

double haversine_km(const GeoCoord& a, const GeoCoord& b) {
    const double p1 = deg2rad(a.lat);
    const double p2 = deg2rad(b.lat);
    const double dp = deg2rad(b.lat - a.lat);
    const double dl = deg2rad(b.lon - a.lon);
    const double s = std::sin(dp / 2.0) * std::sin(dp / 2.0) +
                     std::cos(p1) * std::cos(p2) * std::sin(dl / 2.0) * std::sin(dl / 2.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(s, 0.0, 1.0)));
}

namespace {

// Howard Hinnant's days-from-civil, for TLE epoch conversion.
long long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097LL + static_cast<long long>(doe) - 719468LL;
}

bool tle_checksum_ok(const std::string& line) {
    int sum = 0;
    for (std::size_t i = 0; i + 1 < line.size() && i < 68; ++i) {
        const char c = line[i];
        if (c >= '0' && c <= '9') sum += c - '0';
        else if (c == '-') sum += 1;
    }
    return line.size() >= 69 && line[68] == sum % 10 + '0';
}

double parse_field(const std::string& line, std::size_t col1, std::size_t col2,
                   const char* what) {
    // columns are 1-based and inclusive, per TLE convention
    const std::string raw = line.substr(col1 - 1, col2 - col1 + 1);
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        (void)used;
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("unparseable field ") + what + ": '" + raw + "'");
    }
}

double tle_epoch_to_unix(const std::string& line1) {
    const int yy = static_cast<int>(parse_field(line1, 19, 20, "epoch year"));
    const double doy = parse_field(line1, 21, 32, "epoch day");
    const int year = yy < 57 ? 2000 + yy : 1900 + yy;
    const double day_secs = (doy - 1.0) * 86400.0;
    return static_cast<double>(days_from_civil(year, 1, 1)) * 86400.0 + day_secs;
}

std::string rstrip(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t'))
        s.pop_back();
    return s;
}

} // namespace

TleParseResult parse_tle(const std::string& text) {
    TleParseResult result;
    std::vector<std::pair<int, std::string>> lines; // (1-based line number, content)
    {
        std::istringstream in(text);
        std::string line;
        int no = 0;
        while (std::getline(in, line)) {
            ++no;
            line = rstrip(line);
            if (!line.empty()) lines.emplace_back(no, line);
        }
    }

    int record_index = 0;
    std::string pending_name;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& [lineno, line] = lines[i];
        if (line.rfind("1 ", 0) != 0) {
            if (line.rfind("2 ", 0) == 0) {
                result.issues.push_back({record_index, lineno, "line 2 without a preceding line 1", true});
                continue;
            }
            pending_name = line;
            continue;
        }

        const int idx = record_index++;
        const std::string line1 = line;
        if (i + 1 >= lines.size() || lines[i + 1].second.rfind("2 ", 0) != 0) {
            result.issues.push_back({idx, lineno, "truncated record: missing line 2", true});
            pending_name.clear();
            continue;
        }
        const auto& [lineno2, line2] = lines[++i];

        if (line1.size() < 69 || line2.size() < 69) {
            result.issues.push_back({idx, lineno, "truncated record: line shorter than 69 columns", true});
            pending_name.clear();
            continue;
        }
        if (!tle_checksum_ok(line1)) {
            result.issues.push_back({idx, lineno, "checksum mismatch on line 1", false});
            pending_name.clear();
            continue;
        }
        if (!tle_checksum_ok(line2)) {
            result.issues.push_back({idx, lineno2, "checksum mismatch on line 2", false});
            pending_name.clear();
            continue;
        }

        try {
            OrbitalElements e;
            const std::string catnum = line1.substr(2, 5);
            e.sat_id = pending_name.empty() ? "NORAD-" + catnum : pending_name;
            e.epoch = tle_epoch_to_unix(line1);
            e.inclination_deg = parse_field(line2, 9, 16, "inclination");
            e.raan_deg = parse_field(line2, 18, 25, "raan");
            e.eccentricity = parse_field(line2, 27, 33, "eccentricity") * 1e-7;
            e.mean_anomaly_epoch_deg = parse_field(line2, 44, 51, "mean anomaly");
            e.mean_motion_rev_day = parse_field(line2, 53, 63, "mean motion");
            if (e.mean_motion_rev_day <= 0.0) {
                result.issues.push_back({idx, lineno2, "non-positive mean motion", false});
            } else {
                if (e.eccentricity > 0.05)
                    result.issues.push_back({idx, lineno2,
                        "eccentricity " + std::to_string(e.eccentricity) +
                        " above near-circular assumption", false});
                result.elements.push_back(std::move(e));
            }
        } catch (const std::exception& ex) {
            result.issues.push_back({idx, lineno, ex.what(), true});
        }
        pending_name.clear();
    }
    return result;
}

double tle_age_days(const OrbitalElements& elem, double t) {
    return std::abs(t - elem.epoch) / 86400.0;
}

SatState propagate(const OrbitalElements& elem, double t) {
    if (elem.mean_motion_rev_day <= 0.0)
        throw std::invalid_argument("propagate: mean_motion must be > 0");

    const double n_rad = elem.mean_motion_rev_day * 2.0 * kPi / 86400.0;
    const double a = std::cbrt(kEarthMuKm3S2 / (n_rad * n_rad));

    const double dt = t - elem.epoch;
    const double incl = deg2rad(elem.inclination_deg);
    // near-circular: argument of latitude advances at the mean motion
    const double u = deg2rad(elem.mean_anomaly_epoch_deg) + n_rad * dt;

    const double lat = std::asin(std::sin(incl) * std::sin(u));
    const double lon_inertial = deg2rad(elem.raan_deg) + std::atan2(std::cos(incl) * std::sin(u), std::cos(u));
    const double lon = lon_inertial - kEarthRotationRadS * dt;

    SatState s;
    s.sat_id = elem.sat_id;
    s.position.lat = rad2deg(lat);
    s.position.lon = normalize_lon(rad2deg(lon));
    s.altitude_km = a - kEarthRadiusKm;
    s.epoch = t;
    return s;
}

SlantGeometry slant_geometry(const GeoCoord& ground, const SatState& sat) {
    const double gamma = haversine_km(ground, sat.position) / kEarthRadiusKm;
    const double rs = kEarthRadiusKm + sat.altitude_km;
    const double rg = kEarthRadiusKm;

    SlantGeometry out;
    out.slant_km = std::sqrt(rg * rg + rs * rs - 2.0 * rg * rs * std::cos(gamma));
    out.elevation_deg = rad2deg(std::atan2(rs * std::cos(gamma) - rg, rs * std::sin(gamma)));
    return out;
}

} // namespace sator::geo
