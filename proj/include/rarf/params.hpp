#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rarf/dataset.hpp"
#include "rarf/tensor.hpp"

namespace rarf {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true; // runtime flag; phase 2 clears it on non-transfer params
    bool transfer = false; // structural tag: parameter belongs to a transfer module
};

/// Named parameters in fixed registration order (iteration order matters for
/// deterministic optimization and the checkpoint layout).
class ParamStore {
public:
    Param& add(const std::string& name, Tensor init, bool transfer = false);
    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    std::vector<Param>& all() { return params_; }
    const std::vector<Param>& all() const { return params_; }
    std::size_t size() const { return params_.size(); }

    void zero_grads();
    /// Phase-2 freeze: only transfer-tagged parameters stay trainable.
    void freeze_non_transfer();
    void unfreeze_all();

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Standard Adam with bias correction. Frozen parameters are skipped
/// entirely: neither their value nor their moment state changes.
class Adam {
public:
    Adam(const ParamStore& store, AdamConfig cfg);
    void step(ParamStore& store);
    std::size_t steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_; // aligned with store registration order
    std::size_t t_ = 0;
};

/// Versioned binary checkpoint: "RARF" magic, version, config digest,
/// per-parameter records (name, transfer flag, shape, little-endian f64
/// payload), then the normalization stats. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ParamStore& store, const NormStats& norm,
                     std::uint64_t config_digest);

struct LoadedCheckpoint {
    std::uint32_t version = 0;
    std::uint64_t config_digest = 0;
    ParamStore params;
    NormStats norm;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace rarf
