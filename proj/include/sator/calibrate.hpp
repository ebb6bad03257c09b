#ifndef SATOR_CALIBRATE_HPP
#define SATOR_CALIBRATE_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "sator/sim.hpp"

#include "json.hpp"

namespace sator::calibrate {

/// Per-percentile empirical distribution of relative simulation errors
/// e = (P_i(measured) - P_i(simulated)) / P_i(measured) across circuits.
/// Errors are clamped to <= 0.99 on ingestion so the inversion 1/(1-e)
/// stays bounded; clamps are counted.
struct ErrorModel {
    std::map<int, std::vector<double>> errors;  // percentile -> samples
    std::size_t skipped_circuits = 0;
    std::size_t clamped_errors = 0;

    bool empty() const { return errors.empty(); }
    /// Errors at the requested percentile, or the nearest stored one.
    const std::vector<double>& at_percentile(int p) const;
};

inline constexpr double kErrorClamp = 0.99;

struct CalibratedEstimate {
    double mean_ms = 0.0;
    double ci_low_ms = 0.0;   // 5th percentile of candidates
    double ci_high_ms = 0.0;  // 95th percentile of candidates
    int candidate_count = 0;
};

/// Build the error model from matching simulated and measured series.
/// Ids present on only one side, or with too few samples for a percentile,
/// are skipped and counted.
ErrorModel build_error_model(
    const std::map<std::string, sim::LatencySeries>& simulated,
    const std::map<std::string, sim::LatencySeries>& measured,
    const std::vector<int>& percentiles);

/// Bootstrap adjustment: draw R errors with replacement, invert each into a
/// candidate raw/(1-e), and report the candidate mean with a 90% CI.
CalibratedEstimate calibrate_estimate(double raw_ms, const ErrorModel& model,
                                      int percentile, int r, std::uint64_t seed);

inline constexpr int kDefaultResamples = 10000;

nlohmann::json to_json(const ErrorModel& model);
ErrorModel error_model_from_json(const nlohmann::json& j);

} // namespace sator::calibrate

#endif
