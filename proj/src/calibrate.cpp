#include "sator/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sator/rng.hpp"
#include "sator/stats.hpp"

namespace sator::calibrate {

const std::vector<double>& ErrorModel::at_percentile(int p) const {
    if (errors.empty())
        throw std::runtime_error("error model is empty");
    auto it = errors.find(p);
    if (it != errors.end()) return it->second;
    // nearest stored percentile; ties resolve to the lower one
    auto hi = errors.lower_bound(p);
    if (hi == errors.begin()) return hi->second;
    if (hi == errors.end()) return std::prev(hi)->second;
    auto lo = std::prev(hi);
    return (p - lo->first) <= (hi->first - p) ? lo->second : hi->second;
}

ErrorModel build_error_model(
    const std::map<std::string, sim::LatencySeries>& simulated,
    const std::map<std::string, sim::LatencySeries>& measured,
    const std::vector<int>& percentiles) {
    ErrorModel model;
    std::size_t shared = 0;
    for (const auto& [id, sim_series] : simulated) {
        auto it = measured.find(id);
        if (it == measured.end()) {
            ++model.skipped_circuits;
            continue;
        }
        const auto& meas_series = it->second;
        std::vector<std::pair<int, double>> circuit_errors;
        std::size_t clamps = 0;
        try {
            for (int p : percentiles) {
                const double pm = sim::percentile(meas_series, p);
                const double ps = sim::percentile(sim_series, p);
                double e = (pm - ps) / pm;
                if (e > kErrorClamp) {
                    e = kErrorClamp;
                    ++clamps;
                }
                circuit_errors.emplace_back(p, e);
            }
        } catch (const std::runtime_error&) {
            // insufficient samples on one side
            ++model.skipped_circuits;
            continue;
        }
        for (const auto& [p, e] : circuit_errors) model.errors[p].push_back(e);
        model.clamped_errors += clamps;
        ++shared;
    }
    for (const auto& [id, m] : measured)
        if (!simulated.count(id)) ++model.skipped_circuits;
    if (shared == 0)
        throw std::runtime_error("build_error_model: no shared circuit ids");
    return model;
}

CalibratedEstimate calibrate_estimate(double raw_ms, const ErrorModel& model,
                                      int percentile, int r, std::uint64_t seed) {
    if (raw_ms <= 0.0)
        throw std::invalid_argument("calibrate_estimate: raw_ms must be > 0");
    if (r < 1)
        throw std::invalid_argument("calibrate_estimate: R must be >= 1");
    const auto& errors = model.at_percentile(percentile);
    if (errors.empty())
        throw std::runtime_error("calibrate_estimate: no errors at percentile " +
                                 std::to_string(percentile));

    UniformStream stream(mix_u64(seed, static_cast<std::uint64_t>(percentile)));
    std::vector<double> candidates;
    candidates.reserve(static_cast<std::size_t>(r));
    double sum = 0.0;
    for (int i = 0; i < r; ++i) {
        const double e = errors[stream.next_index(errors.size())];
        double candidate = raw_ms / (1.0 - e);
        if (candidate < 0.1) candidate = 0.1;
        candidates.push_back(candidate);
        sum += candidate;
    }

    CalibratedEstimate out;
    out.candidate_count = r;
    const auto [lo, hi] = std::minmax_element(candidates.begin(), candidates.end());
    // a degenerate candidate set must calibrate exactly (no summation noise)
    out.mean_ms = (*lo == *hi) ? *lo : sum / static_cast<double>(r);
    out.ci_low_ms = nearest_rank_percentile(candidates, 5);
    out.ci_high_ms = nearest_rank_percentile(std::move(candidates), 95);
    return out;
}

nlohmann::json to_json(const ErrorModel& model) {
    nlohmann::json errors = nlohmann::json::object();
    for (const auto& [p, samples] : model.errors)
        errors[std::to_string(p)] = samples;
    return nlohmann::json{{"errors", errors},
                          {"skipped_circuits", model.skipped_circuits},
                          {"clamped_errors", model.clamped_errors}};
}

ErrorModel error_model_from_json(const nlohmann::json& j) {
    ErrorModel model;
    model.skipped_circuits = j.at("skipped_circuits").get<std::size_t>();
    model.clamped_errors = j.at("clamped_errors").get<std::size_t>();
    for (const auto& [key, val] : j.at("errors").items())
        model.errors.emplace(std::stoi(key), val.get<std::vector<double>>());
    return model;
}

} // namespace sator::calibrate
