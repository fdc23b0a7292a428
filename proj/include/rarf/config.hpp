#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rarf/dataset.hpp"
#include "rarf/model.hpp"
#include "rarf/synthetic.hpp"
#include "rarf/training.hpp"

namespace rarf {

/// One experiment's configuration, parsed from a sectioned key=value text
/// file. Sections mirror the type names: [Dataset], [SynthConfig],
/// [SplitSpec], [BandSpec], [RetrievalConfig], [ModelConfig], [TrainConfig].
/// Unknown sections or keys are rejected.
struct RunConfig {
    std::uint64_t seed = 1;

    std::optional<std::string> manifest_path;
    std::optional<std::string> csv_path;
    bool use_synth = true;
    SynthConfig synth;

    std::size_t n_val = 0;
    std::size_t n_test = 0;
    std::vector<std::string> val_ids, test_ids; // explicit overrides
    double train_frac = 0.7, val_frac = 0.1, test_frac = 0.2;

    ModelConfig model;
    TrainConfig train;

    std::string raw_text;
    std::uint64_t digest() const;

    void validate() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Materialize the configured data source.
Dataset load_dataset(const RunConfig& cfg);

/// Station split: explicit id lists when given, otherwise a seeded random
/// hold-out of n_val + n_test stations.
SplitSpec resolve_split(const RunConfig& cfg, const StationRegistry& registry);

} // namespace rarf
