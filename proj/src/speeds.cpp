#include "sator/speeds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sator::speeds {

SpeedEcdf SpeedEcdf::degenerate(double speed_km_s) {
    if (speed_km_s <= 0.0)
        throw std::invalid_argument("degenerate ECDF needs a positive speed");
    SpeedEcdf e;
    e.delimiters = {speed_km_s};
    e.cum_freq = {1.0};
    e.sample_count = 1;
    return e;
}

bool SpeedEcdf::valid() const {
    if (delimiters.empty() || delimiters.size() != cum_freq.size()) return false;
    for (std::size_t i = 0; i < delimiters.size(); ++i) {
        if (!(delimiters[i] > 0.0) || delimiters[i] > geo::kLightSpeedKmS) return false;
        if (i > 0 && !(delimiters[i] > delimiters[i - 1])) return false;
        if (i > 0 && cum_freq[i] < cum_freq[i - 1]) return false;
        if (cum_freq[i] < 0.0 || cum_freq[i] > 1.0) return false;
    }
    return cum_freq.back() == 1.0;
}

BucketedSpeedModel BucketedSpeedModel::degenerate(double speed_km_s, double bucket_km) {
    BucketedSpeedModel m;
    m.bucket_km = bucket_km;
    m.buckets.emplace(0, SpeedEcdf::degenerate(speed_km_s));
    m.total_rows = 1;
    return m;
}

int BucketedSpeedModel::bucket_index(double one_way_km) const {
    if (one_way_km < 0.0)
        throw std::invalid_argument("distance must be non-negative");
    return static_cast<int>(std::floor(one_way_km / bucket_km));
}

const SpeedEcdf& BucketedSpeedModel::ecdf_for_distance(double one_way_km) const {
    if (buckets.empty())
        throw std::runtime_error("speed model has no populated buckets");
    const int want = bucket_index(one_way_km);
    auto it = buckets.find(want);
    if (it != buckets.end()) return it->second;

    // nearest populated bucket by index distance, ties toward the larger
    const SpeedEcdf* best = nullptr;
    int best_dist = 0;
    int best_index = 0;
    for (const auto& [idx, ecdf] : buckets) {
        const int dist = std::abs(idx - want);
        if (best == nullptr || dist < best_dist ||
            (dist == best_dist && idx > best_index)) {
            best = &ecdf;
            best_dist = dist;
            best_index = idx;
        }
    }
    return *best;
}

const SpeedEcdf& BucketedSpeedModel::fallback() const {
    if (buckets.empty())
        throw std::runtime_error("speed model has no populated buckets");
    return buckets.rbegin()->second;
}

double satellite_path_length_km(double d_cg_km, double h_km) {
    if (d_cg_km < 0.0 || h_km <= 0.0)
        throw std::invalid_argument("satellite_path_length_km: d_cg >= 0 and h > 0 required");
    const double half = d_cg_km / 2.0;
    return 4.0 * std::sqrt(half * half + h_km * h_km);
}

SpeedEcdf build_ecdf(const std::vector<double>& speeds_km_s, int n_delimiters) {
    if (speeds_km_s.size() < 2)
        throw std::runtime_error("build_ecdf: need at least 2 samples");
    if (n_delimiters < 2)
        throw std::invalid_argument("build_ecdf: need at least 2 delimiters");
    for (double s : speeds_km_s)
        if (!std::isfinite(s) || s <= 0.0)
            throw std::invalid_argument("build_ecdf: speeds must be finite and positive");

    std::vector<double> sorted = speeds_km_s;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    const std::size_t n = sorted.size();

    SpeedEcdf out;
    out.sample_count = n;
    if (lo == hi) {
        out.delimiters = {lo};
        out.cum_freq = {1.0};
        return out;
    }

    out.delimiters.reserve(static_cast<std::size_t>(n_delimiters));
    out.cum_freq.reserve(static_cast<std::size_t>(n_delimiters));
    for (int i = 0; i < n_delimiters; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n_delimiters - 1);
        double d = lo + frac * (hi - lo);
        if (i == n_delimiters - 1) d = hi; // exact upper end despite rounding
        const auto le = std::upper_bound(sorted.begin(), sorted.end(), d) - sorted.begin();
        out.delimiters.push_back(d);
        out.cum_freq.push_back(static_cast<double>(le) / static_cast<double>(n));
    }
    out.cum_freq.back() = 1.0;
    return out;
}

double sample_speed(const SpeedEcdf& ecdf, double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::invalid_argument("sample_speed: u must be in [0,1]");
    const auto& f = ecdf.cum_freq;
    if (f.empty())
        throw std::runtime_error("sample_speed: empty ECDF");

    auto it = std::lower_bound(f.begin(), f.end(), u);
    std::size_t cand = it == f.end() ? f.size() - 1 : static_cast<std::size_t>(it - f.begin());
    // compare with the previous distinct frequency; nearest wins, ties go low
    if (cand > 0 && (u - f[cand - 1]) <= (f[cand] - u))
        cand = cand - 1;
    // among equal frequencies, the lowest index is the canonical choice
    while (cand > 0 && f[cand - 1] == f[cand]) --cand;
    return ecdf.delimiters[cand];
}

double sample_speed(const SpeedEcdf& ecdf, UniformStream& stream) {
    return sample_speed(ecdf, stream.next_unit());
}

namespace {

// 1 sample is enough to populate a bucket; build_ecdf requires 2+
SpeedEcdf ecdf_from_bucket(const std::vector<double>& speeds, int n_delimiters) {
    if (speeds.size() == 1) return SpeedEcdf::degenerate(speeds.front());
    return build_ecdf(speeds, n_delimiters);
}

} // namespace

BucketedSpeedModel ingest_terrestrial(const std::vector<ProbePairSample>& samples,
                                      double bucket_km, int n_delimiters) {
    if (bucket_km <= 0.0)
        throw std::invalid_argument("ingest_terrestrial: bucket_km must be > 0");

    BucketedSpeedModel model;
    model.bucket_km = bucket_km;

    std::map<int, std::vector<double>> raw;
    for (const auto& s : samples) {
        ++model.total_rows;
        if (s.rtt_ms <= 0.0)
            throw std::invalid_argument("ingest_terrestrial: rtt_ms must be > 0");
        const double one_way = geo::haversine_km(s.src, s.dst);
        const double route_len = 2.0 * one_way;
        if (route_len <= 0.0) {
            ++model.rejected_zero_distance;
            continue;
        }
        const double speed = route_len / s.rtt_ms * 1000.0;
        if (speed > geo::kLightSpeedKmS) {
            ++model.rejected_superluminal;
            continue;
        }
        raw[model.bucket_index(one_way)].push_back(speed);
    }
    for (auto& [idx, speeds] : raw)
        model.buckets.emplace(idx, ecdf_from_bucket(speeds, n_delimiters));
    return model;
}

SatelliteIngest ingest_satellite(const std::vector<BaselineSample>& samples, int n_delimiters) {
    SatelliteIngest out;
    std::vector<double> speeds;
    for (const auto& s : samples) {
        ++out.total_rows;
        if (s.route_len_km <= 0.0 || s.rtt_ms <= 0.0)
            throw std::invalid_argument("ingest_satellite: route_len_km and rtt_ms must be > 0");
        const double speed = s.route_len_km / s.rtt_ms * 1000.0;
        if (speed > geo::kLightSpeedKmS) {
            ++out.rejected_superluminal;
            continue;
        }
        speeds.push_back(speed);
    }
    if (speeds.empty())
        throw std::runtime_error("ingest_satellite: no usable rows");
    out.ecdf = ecdf_from_bucket(speeds, n_delimiters);
    out.ecdf.sample_count = speeds.size();
    return out;
}

nlohmann::json to_json(const SpeedEcdf& e) {
    return nlohmann::json{{"delimiters", e.delimiters},
                          {"cum_freq", e.cum_freq},
                          {"sample_count", e.sample_count}};
}

SpeedEcdf ecdf_from_json(const nlohmann::json& j) {
    SpeedEcdf e;
    e.delimiters = j.at("delimiters").get<std::vector<double>>();
    e.cum_freq = j.at("cum_freq").get<std::vector<double>>();
    e.sample_count = j.at("sample_count").get<std::size_t>();
    if (!e.valid())
        throw std::runtime_error("ecdf_from_json: invalid ECDF payload");
    return e;
}

nlohmann::json to_json(const BucketedSpeedModel& m) {
    nlohmann::json buckets = nlohmann::json::object();
    for (const auto& [idx, ecdf] : m.buckets)
        buckets[std::to_string(idx)] = to_json(ecdf);
    return nlohmann::json{{"bucket_km", m.bucket_km},
                          {"buckets", buckets},
                          {"rejected_superluminal", m.rejected_superluminal},
                          {"rejected_zero_distance", m.rejected_zero_distance},
                          {"total_rows", m.total_rows}};
}

BucketedSpeedModel bucketed_from_json(const nlohmann::json& j) {
    BucketedSpeedModel m;
    m.bucket_km = j.at("bucket_km").get<double>();
    m.rejected_superluminal = j.at("rejected_superluminal").get<std::size_t>();
    m.rejected_zero_distance = j.value("rejected_zero_distance", std::size_t{0});
    m.total_rows = j.at("total_rows").get<std::size_t>();
    for (const auto& [key, val] : j.at("buckets").items())
        m.buckets.emplace(std::stoi(key), ecdf_from_json(val));
    return m;
}

} // namespace sator::speeds
