#ifndef SATOR_GEO_HPP
#define SATOR_GEO_HPP

#include <string>
#include <vector>

namespace sator::geo {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kLightSpeedKmS = 299792.458;
inline constexpr double kEarthMuKm3S2 = 398600.4418;
inline constexpr double kEarthRotationRadS = 7.2921159e-5;

/// Latitude/longitude in degrees. lat in [-90,90], lon kept in [-180,180).
struct GeoCoord {
    double lat = 0.0;
    double lon = 0.0;
};

/// Normalize any longitude to [-180, 180).
double normalize_lon(double lon_deg);

/// Validating constructor; throws std::invalid_argument on lat out of range.
GeoCoord make_coord(double lat_deg, double lon_deg);

struct SatState {
    std::string sat_id;
    GeoCoord position;     // sub-satellite point
    double altitude_km = 0.0;
    double epoch = 0.0;    // seconds since Unix epoch
};

/// LEO plausibility band used for ingest warnings.
bool leo_plausible(const SatState& s);

struct OrbitalElements {
    std::string sat_id;
    double inclination_deg = 0.0;
    double raan_deg = 0.0;
    double mean_anomaly_epoch_deg = 0.0;
    double mean_motion_rev_day = 0.0;
    double epoch = 0.0;          // seconds since Unix epoch
    double eccentricity = 0.0;
};

/// Great-circle distance on a sphere of radius 6371 km.
double haversine_km(const GeoCoord& a, const GeoCoord& b);

struct TleIssue {
    int record_index = 0;   // 0-based index of the affected record
    int line_number = 0;    // 1-based line in the input text
    std::string message;
    bool fatal = false;     // truncated/unparseable record vs. checksum reject
};

struct TleParseResult {
    std::vector<OrbitalElements> elements;
    std::vector<TleIssue> issues;

    bool ok() const {
        for (const auto& i : issues)
            if (i.fatal) return false;
        return true;
    }
};

/// Parse NORAD 3-line element sets (name + line1 + line2). Checksums are
/// enforced; rejected records are reported in issues with line numbers.
TleParseResult parse_tle(const std::string& text);

/// Age of the element set relative to simulation time, in days.
double tle_age_days(const OrbitalElements& elem, double t);

/// Circular two-body propagation. Orbital radius from Kepler's third law,
/// ground track from inclination/RAAN/mean-anomaly advance with Earth
/// rotation subtracted from longitude. Throws on mean_motion <= 0.
SatState propagate(const OrbitalElements& elem, double t);

struct SlantGeometry {
    double slant_km = 0.0;       // chord from ground point to satellite
    double elevation_deg = 0.0;  // above the ground point's local horizon
};

SlantGeometry slant_geometry(const GeoCoord& ground, const SatState& sat);

} // namespace sator::geo

#endif
