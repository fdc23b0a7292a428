#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace rarf {

/// Classical forecasters over a single physical-unit context series.
/// Each throws when the context is too short for its rule.

/// Flat repeat of the final observation.
std::vector<double> baseline_last_value(const std::vector<double>& ctx, std::size_t horizon);

/// Flat repeat of the mean of the last `window` hours.
std::vector<double> baseline_moving_average(const std::vector<double>& ctx, std::size_t horizon,
                                            std::size_t window = 24);

/// The final `block` hours tiled across the horizon.
std::vector<double> baseline_persistence(const std::vector<double>& ctx, std::size_t horizon,
                                         std::size_t block = 24);

/// Context value at the same hour of the previous day.
std::vector<double> baseline_seasonal_naive(const std::vector<double>& ctx, std::size_t horizon,
                                            std::size_t period = 24);

/// OLS-fitted AR(order) on the demeaned context, iterated forward.
std::vector<double> baseline_autoreg(const std::vector<double>& ctx, std::size_t horizon,
                                     std::size_t order = 24);

/// AR coefficients on the demeaned context (normal equations with a tiny
/// ridge); exposed for oracle comparison in tests.
std::vector<double> autoreg_coefficients(const std::vector<double>& ctx, std::size_t order);

/// All five baselines in a fixed order.
std::vector<std::pair<std::string, std::vector<double>>> all_baselines(
    const std::vector<double>& ctx, std::size_t horizon);

} // namespace rarf
