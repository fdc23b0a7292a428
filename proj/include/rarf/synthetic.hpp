#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rarf/dataset.hpp"

namespace rarf {

/// Synthetic spatiotemporal dataset with controllable frequency-dependent
/// spatial correlation: the temperature field is a sum of slow/moderate/fast
/// components, each a squared-exponential spatial random field modulating
/// band-limited temporal harmonics, so that slow variations stay correlated
/// over much longer distances than fast ones.
struct SynthConfig {
    int grid_nx = 12;
    int grid_ny = 12;
    double lat_min = 44.0;
    double lat_max = 48.75;
    double lon_min = -124.0;
    double lon_max = -120.24;

    double rho_slow_km = 500.0;
    double rho_mod_km = 100.0;
    double rho_fast_km = 25.0;

    double period_slow_h = 24.0;
    double period_mod_h = 6.0;
    double period_fast_h = 3.0;

    double amp_slow = 8.0; // deg F
    double amp_mod = 2.5;
    double amp_fast = 1.5;
    double noise_std = 1.0;

    std::size_t n_hours = 1024;
    std::int64_t start_hour = 438288; // 2020-01-01T00:00:00Z
    std::uint64_t seed = 1;

    void validate() const;
};

/// Per-band temperature components (no observation noise), exposed so tests
/// can measure inter-station correlations directly on the generating fields.
struct SynthComponents {
    std::vector<std::string> band_names; // {"slow", "moderate", "fast"}
    // band_fields[b][station][t]
    std::vector<std::vector<std::vector<double>>> band_fields;
};

Dataset generate_synthetic(const SynthConfig& cfg);
Dataset generate_synthetic(const SynthConfig& cfg, SynthComponents* components);

} // namespace rarf
