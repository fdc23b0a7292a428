#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rarf/dataset.hpp"
#include "rarf/model.hpp"

namespace rarf {

enum class LossKind { Mse, Nll };
LossKind loss_from_string(const std::string& s);
std::string to_string(LossKind k);

struct TrainConfig {
    int epochs = 5;
    double lr = 3e-3;
    int phase2_epochs = 3;
    double phase2_lr = 1e-3;
    std::size_t batch_size = 16;
    std::size_t windows_per_epoch = 512; // anchors sampled per epoch
    std::size_t window_stride = 4;       // anchor stride when pooling windows
    std::size_t eval_stride = 24;        // validation / test anchor stride
    LossKind loss = LossKind::Mse;
    int patience = 5; // early-stopping epochs without val improvement
    std::uint64_t seed = 7;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_mse = 0.0; // NaN when there are no validation stations
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val = 0.0;
    std::string to_json() const;
};

/// Phase 1: every parameter trainable; each train station acts as a
/// pseudo-target retrieving from the remaining train stations. Keeps the
/// checkpoint with the best validation MSE (last epoch when there are no
/// validation stations).
TrainLog train_phase1(const Dataset& ds, const SplitSpec& split, Forecaster& model,
                      const TrainConfig& cfg);

/// Phase 2: adapt one station with everything frozen except the transfer
/// module. Errors when the model has no transfer parameters.
TrainLog train_phase2(const Dataset& ds, const SplitSpec& split, Forecaster& model,
                      const std::string& station_id, const TrainConfig& cfg);

/// Per-band coefficient-space training loss for one window, built on `g`.
/// For the MSE loss the band sum divided by L_y equals the time-domain MSE
/// of the reconstructed forecast (the transform is orthonormal); for NLL the
/// band sum is the joint Gaussian NLL of the horizon.
Var window_loss(ModelGraph& g, const Forecaster& model, const ForecastInput& in,
                const std::vector<double>& horizon_f, LossKind kind);

/// Validation-style MSE (physical units) of the model over the given
/// stations' windows in an hour-range; used for early stopping and tests.
double mean_forecast_mse(const Forecaster& model, const Dataset& ds,
                         const std::vector<std::string>& station_ids, const SplitSpec& split,
                         bool use_val_range, std::size_t stride);

} // namespace rarf
