#ifndef SATOR_SPEEDS_HPP
#define SATOR_SPEEDS_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "sator/geo.hpp"
#include "sator/rng.hpp"

#include "json.hpp"

namespace sator::speeds {

/// Empirical CDF over traffic speeds (km/s): sorted delimiters with their
/// cumulative frequencies, f.back() == 1.
struct SpeedEcdf {
    std::vector<double> delimiters;
    std::vector<double> cum_freq;
    std::size_t sample_count = 0;

    static SpeedEcdf degenerate(double speed_km_s);
    bool valid() const;
};

/// Terrestrial speed model bucketed by one-way distance. Empty buckets fall
/// back to the nearest populated one, ties toward the larger distance.
struct BucketedSpeedModel {
    double bucket_km = 1000.0;
    std::map<int, SpeedEcdf> buckets;
    std::size_t rejected_superluminal = 0;
    std::size_t rejected_zero_distance = 0;
    std::size_t total_rows = 0;

    static BucketedSpeedModel degenerate(double speed_km_s, double bucket_km = 1000.0);

    int bucket_index(double one_way_km) const;
    /// Nearest populated bucket for this distance; throws if the model is empty.
    const SpeedEcdf& ecdf_for_distance(double one_way_km) const;
    /// ECDF applied beyond the last populated bucket.
    const SpeedEcdf& fallback() const;
};

enum class SampleKind { Terrestrial, Satellite };

struct BaselineSample {
    double route_len_km = 0.0;  // round-trip path length
    double rtt_ms = 0.0;
    SampleKind kind = SampleKind::Terrestrial;
};

/// A terrestrial probe-pair measurement; route length is derived from the
/// endpoint coordinates.
struct ProbePairSample {
    geo::GeoCoord src;
    geo::GeoCoord dst;
    double rtt_ms = 0.0;
};

inline constexpr int kDefaultDelimiters = 1000;

/// Round-trip bent-pipe path length for a dish at great-circle distance
/// d_cg from its ground station, satellites at altitude h.
double satellite_path_length_km(double d_cg_km, double h_km = 550.0);

/// Equally spaced delimiters spanning [min,max]; f_i = fraction of samples
/// <= delta_i. Throws on fewer than 2 samples. All-equal samples collapse
/// to a degenerate single-delimiter ECDF.
SpeedEcdf build_ecdf(const std::vector<double>& speeds_km_s,
                     int n_delimiters = kDefaultDelimiters);

/// Inverse-transform draw: the delimiter whose cumulative frequency is
/// nearest to u (ties to the lower index).
double sample_speed(const SpeedEcdf& ecdf, double u);

double sample_speed(const SpeedEcdf& ecdf, UniformStream& stream);

/// Build the bucketed terrestrial model from probe pairs. Speeds above c
/// indicate distance-estimation error and are dropped (counted).
BucketedSpeedModel ingest_terrestrial(const std::vector<ProbePairSample>& samples,
                                      double bucket_km = 1000.0,
                                      int n_delimiters = kDefaultDelimiters);

struct SatelliteIngest {
    SpeedEcdf ecdf;
    std::size_t rejected_superluminal = 0;
    std::size_t total_rows = 0;
};

/// Pool all satellite baseline rows into one global ECDF. The embedded
/// ~5 ms ground-station-to-PoP component is not subtracted.
SatelliteIngest ingest_satellite(const std::vector<BaselineSample>& samples,
                                 int n_delimiters = kDefaultDelimiters);

nlohmann::json to_json(const SpeedEcdf& e);
SpeedEcdf ecdf_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BucketedSpeedModel& m);
BucketedSpeedModel bucketed_from_json(const nlohmann::json& j);

} // namespace sator::speeds

#endif
