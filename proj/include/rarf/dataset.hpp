#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rarf/station.hpp"

namespace rarf {

/// The five ERA5-style input variables, in column order.
inline constexpr std::array<const char*, 5> kVariableNames = {"u10", "v10", "t2m", "d2m", "sp"};
inline constexpr std::size_t kNumVariables = 5;
/// Forecast target: 2m temperature, stored in degrees Fahrenheit.
inline constexpr std::size_t kTargetVariable = 2;

std::string epoch_hour_to_iso(std::int64_t hour);
std::int64_t iso_to_epoch_hour(const std::string& iso);

/// Hourly table for one station. Hours are strictly increasing; gaps allowed.
struct StationSeries {
    std::vector<std::int64_t> hours;
    std::vector<std::array<double, kNumVariables>> values;

    std::size_t size() const { return hours.size(); }
    /// Index of `hour`, if present and the following `count` rows are gap-free.
    std::optional<std::size_t> contiguous_index(std::int64_t hour, std::size_t count) const;
};

/// Per-variable z-score statistics, computed on the training split only.
struct NormStats {
    std::array<double, kNumVariables> mean{};
    std::array<double, kNumVariables> stddev{};
    bool valid = false;

    void validate() const;
};

struct Dataset {
    StationRegistry stations;
    std::map<std::string, StationSeries> records;
    NormStats norm_stats;
    std::size_t dropped_rows = 0; // rows discarded at ingestion for missing values

    const StationSeries& series(const std::string& id) const;
};

/// Station-level zero-shot split plus temporal fractions within each series.
struct SplitSpec {
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;  // zero-shot validation stations
    std::vector<std::string> test_ids; // zero-shot test stations
    double train_frac = 0.7;
    double val_frac = 0.1;
    double test_frac = 0.2;

    void validate() const;
};

/// Random disjoint station split: n_val + n_test stations held out, the rest
/// train. Deterministic given seed.
SplitSpec make_station_split(const StationRegistry& registry, std::size_t n_val,
                             std::size_t n_test, std::uint64_t seed);

struct HourRange {
    std::int64_t lo; // inclusive
    std::int64_t hi; // exclusive
};

/// Hour range of one temporal fraction [frac_lo, frac_hi) of a series span.
HourRange temporal_range(const StationSeries& s, double frac_lo, double frac_hi);
HourRange train_range(const StationSeries& s, const SplitSpec& split);
HourRange val_range(const StationSeries& s, const SplitSpec& split);
HourRange test_range(const StationSeries& s, const SplitSpec& split);

/// Aligned context + horizon for one station. Context rows are z-scored with
/// the training-split stats; the horizon stays in physical units (deg F).
/// t0 is the epoch hour of the first context step (of the first horizon step
/// for L_x = 0 cold-start windows).
struct SeriesWindow {
    std::string station_id;
    std::int64_t t0 = 0;
    std::size_t context_len = 0; // L_x
    std::vector<double> context; // row-major [L_x x n_vars]
    std::vector<double> horizon; // [L_y], physical units

    double context_at(std::size_t t, std::size_t v) const {
        return context[t * kNumVariables + v];
    }
};

/// Mean/stddev of every variable over the train stations' train-fraction
/// rows. Errors if any variable is constant.
NormStats compute_norm_stats(const Dataset& ds, const SplitSpec& split);

/// All stride-spaced windows of `station` fully inside `range`. Anchors step
/// through row indices; windows crossing gaps are skipped.
std::vector<SeriesWindow> make_windows(const Dataset& ds, const std::string& station_id,
                                       std::size_t context_len, std::size_t horizon_len,
                                       std::size_t stride, const HourRange& range);

/// Windows over every station in `ids`, station order preserved.
std::vector<SeriesWindow> make_windows(const Dataset& ds, const std::vector<std::string>& ids,
                                       std::size_t context_len, std::size_t horizon_len,
                                       std::size_t stride, const HourRange& range);

/// Z-scored context rows [len x n_vars] for a station ending just before
/// `horizon_start_hour`; nullopt when the series has a gap or missing rows.
std::optional<std::vector<double>> context_before(const Dataset& ds, const std::string& id,
                                                  std::int64_t horizon_start_hour,
                                                  std::size_t len);

/// Ingest the raw exchange CSV:
///   station_id,lat,lon,elevation,timestamp_iso,u10,v10,t2m,d2m,sp
/// t2m and d2m arrive in Kelvin and are stored in Fahrenheit. Rows with
/// empty fields are dropped (counted); malformed rows and duplicate
/// (station, timestamp) pairs raise parse errors.
Dataset ingest_csv(const std::string& path);

/// Write a dataset as manifest.json + one internal-units CSV per station
/// under <dir>/csv/. Round-trips bit-exactly through load_manifest.
void save_manifest(const Dataset& ds, const std::string& dir);
Dataset load_manifest(const std::string& manifest_path);

} // namespace rarf
