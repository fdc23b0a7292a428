#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rarf/dataset.hpp"
#include "rarf/model.hpp"
#include "rarf/wavelet.hpp"

namespace rarf {

struct StationMetrics {
    double mse = 0.0;
    double mae = 0.0;
    double mape = 0.0;
    double smape = 0.0;
    double mase = 0.0; // NaN when the station's train segment is too short
    double nll = 0.0;  // per-timestep; NaN for deterministic runs
    double crps = 0.0;
    double coverage95 = 0.0;
    std::size_t n_windows = 0;
    std::size_t mape_excluded = 0;
};

struct MetricReport {
    std::vector<std::pair<std::string, StationMetrics>> per_station;
    StationMetrics average; // arithmetic mean of the per-station values
    std::vector<double> mse_per_hour;
    std::vector<double> mae_per_hour;
    bool probabilistic = false;
    std::size_t horizon = 0;

    std::string to_json() const;
    std::string per_hour_csv() const;
};

struct EvalOptions {
    std::size_t stride = 24;
    /// Truncate the target context to its last N hours (N divisible by 2^J);
    /// defaults to the model's full context length.
    std::optional<std::size_t> context_hours;
    /// Score only the first N horizon hours.
    std::optional<std::size_t> horizon_hours;
};

/// Zero-shot evaluation of `model` over the stations' test segments.
MetricReport evaluate_model(const Forecaster& model, const Dataset& ds, const SplitSpec& split,
                            const std::vector<std::string>& station_ids, const EvalOptions& opts);

/// Classical baselines over the same protocol (full physical context).
std::vector<std::pair<std::string, MetricReport>> evaluate_baselines(
    const Dataset& ds, const SplitSpec& split, const std::vector<std::string>& station_ids,
    std::size_t context_len, std::size_t horizon_len, std::size_t stride);

/// Context-length or horizon sweep; values that violate the model's
/// divisibility constraints are skipped and reported.
struct SweepResult {
    std::vector<std::pair<std::size_t, MetricReport>> results;
    std::vector<std::size_t> skipped;
};
enum class SweepAxis { Horizon, ContextLen };
SweepAxis sweep_axis_from_string(const std::string& s);
SweepResult sweep(const Forecaster& model, const Dataset& ds, const SplitSpec& split,
                  const std::vector<std::string>& station_ids, SweepAxis axis,
                  const std::vector<std::size_t>& values, std::size_t stride);

// ---- correlation vs distance ----

struct CorrRow {
    std::string station_a;
    std::string station_b;
    double distance_km = 0.0;
    std::string band;
    double pearson = 0.0;
};

/// Band-wise Pearson correlations for one station pair over their common
/// contiguous hours; nullopt when the overlap is shorter than min_overlap.
std::optional<std::vector<std::pair<std::string, double>>> band_correlations(
    const Dataset& ds, const std::string& id_a, const std::string& id_b, const BandSpec& spec,
    std::size_t min_overlap = 64);

/// Sampled station pairs -> per-band correlation rows (the Fig-style table).
std::vector<CorrRow> corr_vs_distance(const Dataset& ds, const BandSpec& spec,
                                      std::size_t n_pairs, std::uint64_t seed,
                                      std::size_t min_overlap = 64);

std::string corr_rows_csv(const std::vector<CorrRow>& rows);

/// Distance at which the bin-averaged correlation of `band` first drops
/// below `threshold`; the largest observed distance when it never does.
double correlation_halving_distance(const std::vector<CorrRow>& rows, const std::string& band,
                                    double threshold = 0.5, std::size_t n_bins = 12);

} // namespace rarf
