#include "rarf/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rarf/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace rarf {

Param& ParamStore::add(const std::string& name, Tensor init, bool transfer) {
    if (index_.count(name)) throw internal_error("duplicate parameter name '" + name + "'");
    index_.emplace(name, params_.size());
    Param p;
    p.name = name;
    p.grad = Tensor(init.shape);
    p.value = std::move(init);
    p.transfer = transfer;
    params_.push_back(std::move(p));
    return params_.back();
}

Param& ParamStore::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw internal_error("unknown parameter '" + name + "'");
    return params_[it->second];
}

const Param& ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw internal_error("unknown parameter '" + name + "'");
    return params_[it->second];
}

void ParamStore::zero_grads() {
    for (Param& p : params_) p.grad.fill(0.0);
}

void ParamStore::freeze_non_transfer() {
    for (Param& p : params_) p.trainable = p.transfer;
}

void ParamStore::unfreeze_all() {
    for (Param& p : params_) p.trainable = true;
}

Adam::Adam(const ParamStore& store, AdamConfig cfg) : cfg_(cfg) {
    for (const Param& p : store.all()) {
        m_.emplace_back(p.value.shape);
        v_.emplace_back(p.value.shape);
    }
}

void Adam::step(ParamStore& store) {
    if (store.size() != m_.size())
        throw internal_error("optimizer state does not match parameter store");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < store.size(); ++i) {
        Param& p = store.all()[i];
        if (!p.trainable) continue;
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad.data[j];
            m_[i].data[j] = cfg_.beta1 * m_[i].data[j] + (1.0 - cfg_.beta1) * g;
            v_[i].data[j] = cfg_.beta2 * v_[i].data[j] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[i].data[j] / bc1;
            const double vhat = v_[i].data[j] / bc2;
            p.value.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

namespace {

constexpr char kMagic[4] = {'R', 'A', 'R', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw io_error("checkpoint truncated");
    return v;
}

void write_string(std::ofstream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw io_error("checkpoint truncated");
    return s;
}

} // namespace

void save_checkpoint(const std::string& path, const ParamStore& store, const NormStats& norm,
                     std::uint64_t config_digest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write checkpoint '" + path + "'");
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint64_t>(out, config_digest);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
    for (const Param& p : store.all()) {
        write_string(out, p.name);
        write_pod<std::uint8_t>(out, p.transfer ? 1 : 0);
        write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.rank()));
        for (std::size_t d : p.value.shape) write_pod<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(p.value.data.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    write_pod<std::uint8_t>(out, norm.valid ? 1 : 0);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(kNumVariables));
    for (std::size_t v = 0; v < kNumVariables; ++v) {
        write_string(out, kVariableNames[v]);
        write_pod<double>(out, norm.mean[v]);
        write_pod<double>(out, norm.stddev[v]);
    }
    if (!out) throw io_error("write failed for checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open checkpoint '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw parse_error("'" + path + "' is not a RARF checkpoint");
    LoadedCheckpoint ck;
    ck.version = read_pod<std::uint32_t>(in);
    if (ck.version != kVersion)
        throw parse_error("unsupported checkpoint version " + std::to_string(ck.version));
    ck.config_digest = read_pod<std::uint64_t>(in);
    const auto n_params = read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::string name = read_string(in);
        const bool transfer = read_pod<std::uint8_t>(in) != 0;
        const auto rank = read_pod<std::uint8_t>(in);
        if (rank > 3) throw parse_error("checkpoint parameter rank > 3");
        std::vector<std::size_t> shape;
        for (std::uint8_t d = 0; d < rank; ++d)
            shape.push_back(static_cast<std::size_t>(read_pod<std::uint64_t>(in)));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw io_error("checkpoint truncated");
        ck.params.add(name, std::move(t), transfer);
    }
    ck.norm.valid = read_pod<std::uint8_t>(in) != 0;
    const auto n_vars = read_pod<std::uint32_t>(in);
    if (n_vars != kNumVariables) throw parse_error("checkpoint variable set mismatch");
    for (std::size_t v = 0; v < kNumVariables; ++v) {
        const std::string name = read_string(in);
        if (name != kVariableNames[v]) throw parse_error("checkpoint variable order mismatch");
        ck.norm.mean[v] = read_pod<double>(in);
        ck.norm.stddev[v] = read_pod<double>(in);
    }
    return ck;
}

} // namespace rarf
