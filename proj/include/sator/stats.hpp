#ifndef SATOR_STATS_HPP
#define SATOR_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace sator {

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
/// Integer-stable and order-statistic based, so it commutes with strictly
/// monotone transforms.
inline double nearest_rank_percentile(std::vector<double> values, int p) {
    if (values.empty())
        throw std::runtime_error("percentile of empty set");
    if (p < 1 || p > 99)
        throw std::invalid_argument("percentile must be in [1,99]");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(static_cast<double>(p) * static_cast<double>(n) / 100.0));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return values[rank - 1];
}

inline double mean(const std::vector<double>& values) {
    if (values.empty())
        throw std::runtime_error("mean of empty set");
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

} // namespace sator

#endif
