#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rarf/dataset.hpp"
#include "rarf/geodesy.hpp"
#include "rarf/graph.hpp"
#include "rarf/params.hpp"
#include "rarf/station.hpp"
#include "rarf/wavelet.hpp"

namespace rarf {

enum class TransferKind { Fc, Gnn, LocAttn };
enum class HeadKind { Deterministic, Gaussian };

TransferKind transfer_from_string(const std::string& s);
std::string to_string(TransferKind k);
HeadKind head_from_string(const std::string& s);
std::string to_string(HeadKind k);

struct ModelConfig {
    std::size_t context_len = 96; // L_x
    std::size_t horizon_len = 48; // L_y
    int levels = 3;               // wavelet levels J; 0 disables decomposition
    WaveletFamily family = WaveletFamily::Haar;

    std::size_t d_model = 32;
    std::size_t d_loc = 16;
    std::size_t n_heads = 2;
    std::size_t n_layers = 2;
    std::size_t d_ff = 64;
    std::size_t d_loc_attn = 16; // key/query width of the location attention

    bool retrieval = true; // false: plain encoder-decoder on the target context
    TransferKind transfer = TransferKind::LocAttn;
    HeadKind head = HeadKind::Deterministic;
    double gnn_tau_km = 100.0;
    bool fc_inverse_distance = true;
    RetrievalConfig retrieval_cfg{};

    BandSpec band_spec() const { return {levels, family}; }
    int n_bands() const { return band_spec().band_count(); }
    /// Input columns of band b: one channel per variable, two for the slow band.
    std::size_t band_input_cols(int band) const;
    /// Coefficient steps predicted for band b (slow band = dJ plus aJ).
    std::size_t band_horizon_len(int band) const;
    /// Context length of a full-L_x window in band b.
    std::size_t band_context_len(int band) const;

    void validate() const;
    /// Canonical architecture description; its fnv1a64 digest is stored in
    /// checkpoints and must match at load time.
    std::string canonical() const;
    std::uint64_t digest() const;
};

/// Per-band inputs for one forecast: decomposed target context (possibly
/// empty) and the decomposed contexts of that band's retrieved stations.
struct BandInput {
    Tensor target_ctx;               // [T_t x cols_b]; 0 rows on cold start
    std::vector<Tensor> neighbor_ctx; // [T_r x cols_b] each
    std::vector<Station> neighbors;   // aligned with neighbor_ctx
    std::vector<double> neighbor_km;  // distances to the target
    Station target;
};

struct ForecastInput {
    std::vector<BandInput> bands; // size n_bands; empty neighbor lists if !retrieval
};

struct GaussianForecast {
    std::vector<double> mu;     // deg F
    std::vector<double> sigma2; // deg F^2, strictly positive
};

class Forecaster;

/// One forward pass: a tape plus the parameter bindings made on it.
/// Exposes the individual blocks so tests can probe them in isolation.
class ModelGraph {
public:
    ModelGraph(const Forecaster& model, bool with_grads);

    Var param(const std::string& name);

    Var embed_location(const Station& st);
    /// [T x cols_b] -> [T x d_model]; T may be zero.
    Var encode_band(int band, const Tensor& ctx);
    Var transfer_fc(int band, const std::vector<Var>& states, const std::vector<Var>& locs,
                    Var target_loc, const std::vector<double>& dist_km);
    Var transfer_gnn(int band, const std::vector<Var>& states, const std::vector<Var>& locs,
                     Var target_loc, const std::vector<std::vector<double>>& pairwise_km);
    Var transfer_loc_attn(int band, const std::vector<Var>& states,
                          const std::vector<Var>& locs, Var target_loc);
    /// Gate the encoded target context onto the transferred state (appended
    /// along time); no-op for empty target contexts.
    Var fuse_target(int band, Var transferred, std::optional<Var> target_state);

    struct Head {
        Var mu;
        Var sigma2; // invalid for deterministic heads
    };
    Head decode_band(int band, Var fused);

    /// Full band pipeline (encode -> transfer -> fuse -> decode).
    Head run_band(int band, const BandInput& in);

    /// Backprop and scatter gradients into the model's ParamStore.
    void backward(Var loss);

    Tape& tape() { return tape_; }
    int transfer_calls(int band) const { return transfer_calls_[band]; }

    /// Last attention matrix produced by transfer_loc_attn (rows: timesteps,
    /// cols: retrieved stations); for tests.
    const Tensor& last_attention() const { return last_attention_; }

private:
    Var mha(int band, const std::string& prefix, Var q_in, Var kv_in);
    Var layer_norm(const std::string& prefix, Var x);
    Var linear(const std::string& w, const std::string& b, Var x);

    const Forecaster& model_;
    bool with_grads_;
    Tape tape_;
    std::map<std::string, Var> bound_;
    std::vector<std::pair<Param*, Var>> grads_out_;
    std::vector<int> transfer_calls_;
    Tensor last_attention_;
};

/// Location embedding, per-band encoders, transfer components, gating and
/// decoding heads behind the resolution-aware forecast pipeline.
class Forecaster {
public:
    /// Fresh model. Location standardization constants come from the
    /// registry; parameters are initialized from `seed`.
    Forecaster(ModelConfig cfg, NormStats norm, const StationRegistry& registry,
               std::uint64_t seed);
    /// Restore from a checkpoint (digest must match cfg).
    Forecaster(ModelConfig cfg, LoadedCheckpoint ck);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const NormStats& norm() const { return norm_; }

    /// Plain-value location embedding (used by the embedding DistanceFn).
    std::vector<double> embed_location_values(const Station& st) const;

    /// Physical-unit forecast; sigma2 empty for deterministic heads.
    GaussianForecast forecast(const ForecastInput& in) const;

    /// Map per-band z-scored coefficient predictions back to a physical
    /// forecast (inverse transform + de-normalization; Gaussian variances
    /// propagate through the squared inverse-transform weights).
    GaussianForecast assemble(const std::vector<std::vector<double>>& mu_bands,
                              const std::vector<std::vector<double>>& sigma2_bands) const;

    /// Z-scored horizon decomposed into per-band coefficient targets.
    std::vector<std::vector<double>> coefficient_targets(const std::vector<double>& horizon_f) const;

    std::uint64_t config_digest() const { return cfg_.digest(); }

private:
    friend class ModelGraph;
    void register_params(const StationRegistry& registry, std::uint64_t seed);
    void build_reconstruction_weights();

    ModelConfig cfg_;
    NormStats norm_;
    ParamStore params_;
    // recon_[t][k]: weight of coefficient k (bands concatenated fast->slow)
    // in horizon step t of the inverse transform.
    std::vector<std::vector<double>> recon_;
};

/// Assemble the per-band inputs for one (target, anchor) pair. Target context
/// is a z-scored [context_len x n_vars] row-major block (possibly empty);
/// neighbor contexts are pulled from the dataset at full model context
/// length. Neighbors with gaps are dropped; retrieval mode requires at least
/// one surviving neighbor per band.
ForecastInput assemble_input(const Forecaster& model, const Dataset& ds,
                             const Station& target, std::int64_t horizon_start_hour,
                             const std::vector<double>& target_ctx, std::size_t target_ctx_len,
                             const RetrievalPlan& plan);

/// End-to-end zero-shot forecast for a target station at an anchor.
GaussianForecast forecast_zero_shot(const Forecaster& model, const Dataset& ds,
                                    const Station& target, std::int64_t horizon_start_hour,
                                    const std::vector<double>& target_ctx,
                                    std::size_t target_ctx_len, const RetrievalPlan& plan);

} // namespace rarf
