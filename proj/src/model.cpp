#include "rarf/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rarf/error.hpp"
#include "rarf/rng.hpp"

namespace rarf {

TransferKind transfer_from_string(const std::string& s) {
    if (s == "fc") return TransferKind::Fc;
    if (s == "gnn") return TransferKind::Gnn;
    if (s == "loc_attn") return TransferKind::LocAttn;
    throw config_error("unknown transfer kind '" + s + "' (expected fc, gnn or loc_attn)");
}

std::string to_string(TransferKind k) {
    switch (k) {
        case TransferKind::Fc: return "fc";
        case TransferKind::Gnn: return "gnn";
        case TransferKind::LocAttn: return "loc_attn";
    }
    return "?";
}

HeadKind head_from_string(const std::string& s) {
    if (s == "deterministic") return HeadKind::Deterministic;
    if (s == "gaussian") return HeadKind::Gaussian;
    throw config_error("unknown head kind '" + s + "' (expected deterministic or gaussian)");
}

std::string to_string(HeadKind k) {
    return k == HeadKind::Deterministic ? "deterministic" : "gaussian";
}

std::size_t ModelConfig::band_input_cols(int band) const {
    return kNumVariables * static_cast<std::size_t>(band_channels(band_spec(), band));
}

std::size_t ModelConfig::band_horizon_len(int band) const {
    const BandSpec spec = band_spec();
    return band_channel_length(horizon_len, spec, band) *
           static_cast<std::size_t>(band_channels(spec, band));
}

std::size_t ModelConfig::band_context_len(int band) const {
    return band_channel_length(context_len, band_spec(), band);
}

void ModelConfig::validate() const {
    band_spec().validate();
    const std::size_t div = std::size_t{1} << levels;
    if (context_len % div != 0)
        throw config_error("context_len " + std::to_string(context_len) +
                           " not divisible by 2^levels");
    if (horizon_len % div != 0 || horizon_len == 0)
        throw config_error("horizon_len " + std::to_string(horizon_len) +
                           " must be a positive multiple of 2^levels");
    if (context_len < div)
        throw config_error("context_len must be at least 2^levels");
    if (d_model == 0 || d_loc == 0 || d_ff == 0 || d_loc_attn == 0 || n_layers == 0)
        throw config_error("model dimensions must be positive");
    if (n_heads == 0 || d_model % n_heads != 0)
        throw config_error("d_model must be divisible by n_heads");
    if (gnn_tau_km <= 0.0) throw config_error("gnn_tau_km must be positive");
    if (retrieval) retrieval_cfg.validate();
}

std::string ModelConfig::canonical() const {
    std::string s;
    auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + ";"; };
    kv("context_len", std::to_string(context_len));
    kv("horizon_len", std::to_string(horizon_len));
    kv("levels", std::to_string(levels));
    kv("family", to_string(family));
    kv("d_model", std::to_string(d_model));
    kv("d_loc", std::to_string(d_loc));
    kv("n_heads", std::to_string(n_heads));
    kv("n_layers", std::to_string(n_layers));
    kv("d_ff", std::to_string(d_ff));
    kv("d_loc_attn", std::to_string(d_loc_attn));
    kv("retrieval", retrieval ? "1" : "0");
    kv("transfer", to_string(transfer));
    kv("head", to_string(head));
    kv("gnn_tau_km", std::to_string(gnn_tau_km));
    kv("fc_inverse_distance", fc_inverse_distance ? "1" : "0");
    if (retrieval) {
        kv("k_fast", std::to_string(retrieval_cfg.k_fast));
        kv("k_mod", std::to_string(retrieval_cfg.k_mod));
        kv("k_slow", std::to_string(retrieval_cfg.k_slow));
        kv("distance", retrieval_cfg.distance == DistanceFn::Kind::Haversine ? "haversine"
                                                                             : "embedding");
    }
    return s;
}

std::uint64_t ModelConfig::digest() const { return fnv1a64(canonical()); }

// --------------------------------------------------------------- Forecaster

namespace {

// Walks the full parameter inventory of a config in fixed order.
void for_each_param(const ModelConfig& cfg,
                    const std::function<void(const std::string&, std::vector<std::size_t>,
                                             bool transfer)>& def) {
    const std::size_t d = cfg.d_model;
    def("loc_norm.mean", {3}, false);
    def("loc_norm.std", {3}, false);
    def("loc.w1", {cfg.d_loc, 3}, false);
    def("loc.b1", {cfg.d_loc}, false);
    def("loc.w2", {cfg.d_loc, cfg.d_loc}, false);
    def("loc.b2", {cfg.d_loc}, false);

    auto attn = [&](const std::string& p) {
        def(p + ".wq", {d, d}, false);
        def(p + ".bq", {d}, false);
        def(p + ".wk", {d, d}, false);
        def(p + ".bk", {d}, false);
        def(p + ".wv", {d, d}, false);
        def(p + ".bv", {d}, false);
        def(p + ".wo", {d, d}, false);
        def(p + ".bo", {d}, false);
    };
    auto block = [&](const std::string& p) {
        def(p + ".ln1.g", {d}, false);
        def(p + ".ln1.b", {d}, false);
        attn(p + ".attn");
        def(p + ".ln2.g", {d}, false);
        def(p + ".ln2.b", {d}, false);
        def(p + ".ffn.w1", {d, cfg.d_ff}, false);
        def(p + ".ffn.b1", {cfg.d_ff}, false);
        def(p + ".ffn.w2", {cfg.d_ff, d}, false);
        def(p + ".ffn.b2", {d}, false);
    };

    for (int b = 0; b < cfg.n_bands(); ++b) {
        const std::string pfx = "band" + std::to_string(b);
        def(pfx + ".enc.in_w", {cfg.band_input_cols(b), d}, false);
        def(pfx + ".enc.in_b", {d}, false);
        for (std::size_t l = 0; l < cfg.n_layers; ++l)
            block(pfx + ".enc.l" + std::to_string(l));

        if (cfg.retrieval) {
            const std::string t = pfx + ".transfer";
            switch (cfg.transfer) {
                case TransferKind::Fc:
                    def(t + ".w1", {d + 2 * cfg.d_loc, d}, true);
                    def(t + ".b1", {d}, true);
                    def(t + ".w2", {d, d}, true);
                    def(t + ".b2", {d}, true);
                    break;
                case TransferKind::Gnn:
                    def(t + ".locmix_w", {d, cfg.d_loc}, true);
                    def(t + ".locmix_b", {d}, true);
                    def(t + ".theta1", {d, d}, true);
                    def(t + ".tb1", {d}, true);
                    def(t + ".theta2", {d, d}, true);
                    def(t + ".tb2", {d}, true);
                    break;
                case TransferKind::LocAttn:
                    def(t + ".key_w", {cfg.d_loc, cfg.d_loc_attn}, true);
                    def(t + ".key_b", {cfg.d_loc_attn}, true);
                    def(t + ".query_w", {cfg.band_context_len(b) * cfg.d_loc_attn, cfg.d_loc},
                        true);
                    def(t + ".query_b", {cfg.band_context_len(b) * cfg.d_loc_attn}, true);
                    break;
            }
            def(pfx + ".gate.w", {d, 2 * d}, false);
            def(pfx + ".gate.b", {d}, false);
        }

        def(pfx + ".dec.queries", {cfg.band_horizon_len(b), d}, false);
        block(pfx + ".dec");
        def(pfx + ".dec.head.mu_w", {d, 1}, false);
        def(pfx + ".dec.head.mu_b", {1}, false);
        if (cfg.head == HeadKind::Gaussian) {
            def(pfx + ".dec.head.s_w", {d, 1}, false);
            def(pfx + ".dec.head.s_b", {1}, false);
        }
    }
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(),
                                                  suffix) == 0;
}

Tensor init_tensor(const std::string& name, const std::vector<std::size_t>& shape,
                   std::uint64_t seed) {
    Tensor t(shape);
    if (ends_with(name, ".g")) {
        t.fill(1.0);
        return t;
    }
    const bool is_bias = shape.size() == 1;
    if (is_bias && !ends_with(name, "queries")) return t; // zero biases
    Rng rng(derive_seed(seed, "init/" + name));
    if (ends_with(name, "queries")) {
        for (double& v : t.data) v = rng.uniform(-0.5, 0.5);
        return t;
    }
    double fan_in = 1.0, fan_out = 1.0;
    if (shape.size() == 2) {
        fan_in = static_cast<double>(shape[0]);
        fan_out = static_cast<double>(shape[1]);
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

} // namespace

Forecaster::Forecaster(ModelConfig cfg, NormStats norm, const StationRegistry& registry,
                       std::uint64_t seed)
    : cfg_(std::move(cfg)), norm_(norm) {
    cfg_.validate();
    norm_.validate();
    register_params(registry, seed);
    build_reconstruction_weights();
}

Forecaster::Forecaster(ModelConfig cfg, LoadedCheckpoint ck)
    : cfg_(std::move(cfg)), norm_(ck.norm) {
    cfg_.validate();
    norm_.validate();
    if (ck.config_digest != cfg_.digest())
        throw config_error("checkpoint was produced by a different model configuration");
    // verify the loaded inventory matches this config, in order
    std::size_t i = 0;
    const auto& loaded = ck.params.all();
    for_each_param(cfg_, [&](const std::string& name, std::vector<std::size_t> shape,
                             bool transfer) {
        if (i >= loaded.size()) throw parse_error("checkpoint missing parameter '" + name + "'");
        const Param& p = loaded[i++];
        if (p.name != name || p.value.shape != shape || p.transfer != transfer)
            throw parse_error("checkpoint parameter mismatch at '" + name + "'");
    });
    if (i != loaded.size()) throw parse_error("checkpoint has extra parameters");
    params_ = std::move(ck.params);
    build_reconstruction_weights();
}

void Forecaster::register_params(const StationRegistry& registry, std::uint64_t seed) {
    if (registry.size() < 2)
        throw invalid_error("model initialization needs at least two stations");
    for_each_param(cfg_, [&](const std::string& name, std::vector<std::size_t> shape,
                             bool transfer) {
        params_.add(name, init_tensor(name, shape, seed), transfer);
    });
    // location standardization constants from the training registry
    double m[3] = {0, 0, 0}, s[3] = {0, 0, 0};
    const double n = static_cast<double>(registry.size());
    for (const Station& st : registry.all()) {
        const double c[3] = {st.lat, st.lon, st.elevation};
        for (int i = 0; i < 3; ++i) {
            m[i] += c[i];
            s[i] += c[i] * c[i];
        }
    }
    Tensor& mean = params_.get("loc_norm.mean").value;
    Tensor& stddev = params_.get("loc_norm.std").value;
    for (int i = 0; i < 3; ++i) {
        mean.data[i] = m[i] / n;
        stddev.data[i] = std::max(std::sqrt(std::max(s[i] / n - mean.data[i] * mean.data[i], 0.0)),
                                  1e-6);
    }
}

void Forecaster::build_reconstruction_weights() {
    const BandSpec spec = cfg_.band_spec();
    const std::size_t L = cfg_.horizon_len;
    std::vector<std::vector<double>> unit(static_cast<std::size_t>(cfg_.n_bands()));
    for (int b = 0; b < cfg_.n_bands(); ++b)
        unit[static_cast<std::size_t>(b)].assign(cfg_.band_horizon_len(b), 0.0);
    recon_.assign(L, std::vector<double>(L, 0.0));
    std::size_t k = 0;
    for (int b = 0; b < cfg_.n_bands(); ++b) {
        auto& coeffs = unit[static_cast<std::size_t>(b)];
        for (std::size_t j = 0; j < coeffs.size(); ++j, ++k) {
            coeffs[j] = 1.0;
            const std::vector<double> col = reconstruct(bands_from_coefficients(unit, L, spec));
            coeffs[j] = 0.0;
            for (std::size_t t = 0; t < L; ++t) recon_[t][k] = col[t];
        }
    }
}

std::vector<double> Forecaster::embed_location_values(const Station& st) const {
    const Tensor& m = params_.get("loc_norm.mean").value;
    const Tensor& s = params_.get("loc_norm.std").value;
    const double x[3] = {(st.lat - m.data[0]) / s.data[0], (st.lon - m.data[1]) / s.data[1],
                         (st.elevation - m.data[2]) / s.data[2]};
    const Tensor& w1 = params_.get("loc.w1").value;
    const Tensor& b1 = params_.get("loc.b1").value;
    const Tensor& w2 = params_.get("loc.w2").value;
    const Tensor& b2 = params_.get("loc.b2").value;
    std::vector<double> h(cfg_.d_loc);
    for (std::size_t i = 0; i < cfg_.d_loc; ++i) {
        double acc = b1.data[i];
        for (std::size_t j = 0; j < 3; ++j) acc += w1.data[i * 3 + j] * x[j];
        h[i] = std::tanh(acc);
    }
    std::vector<double> e(cfg_.d_loc);
    for (std::size_t i = 0; i < cfg_.d_loc; ++i) {
        double acc = b2.data[i];
        for (std::size_t j = 0; j < cfg_.d_loc; ++j) acc += w2.data[i * cfg_.d_loc + j] * h[j];
        e[i] = acc;
    }
    return e;
}

std::vector<std::vector<double>> Forecaster::coefficient_targets(
    const std::vector<double>& horizon_f) const {
    if (horizon_f.size() != cfg_.horizon_len)
        throw invalid_error("horizon length mismatch in coefficient_targets");
    std::vector<double> z(horizon_f.size());
    const double m = norm_.mean[kTargetVariable];
    const double s = norm_.stddev[kTargetVariable];
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (horizon_f[i] - m) / s;
    const BandSet bands = decompose(z, cfg_.band_spec());
    std::vector<std::vector<double>> out;
    for (int b = 0; b < cfg_.n_bands(); ++b) out.push_back(band_coefficients(bands, b));
    return out;
}

GaussianForecast Forecaster::assemble(const std::vector<std::vector<double>>& mu_bands,
                                      const std::vector<std::vector<double>>& sigma2_bands) const {
    const BandSpec spec = cfg_.band_spec();
    const std::size_t L = cfg_.horizon_len;
    const std::vector<double> mu_z =
        reconstruct(bands_from_coefficients(mu_bands, L, spec));
    const double m = norm_.mean[kTargetVariable];
    const double s = norm_.stddev[kTargetVariable];
    GaussianForecast out;
    out.mu.resize(L);
    for (std::size_t t = 0; t < L; ++t) out.mu[t] = mu_z[t] * s + m;
    if (!sigma2_bands.empty()) {
        // flatten band variances in the same order as the recon weights
        std::vector<double> sig;
        for (const auto& b : sigma2_bands) sig.insert(sig.end(), b.begin(), b.end());
        if (sig.size() != L) throw invalid_error("sigma2 coefficient count mismatch");
        out.sigma2.resize(L);
        // independent Gaussian coefficients through the linear inverse
        // transform: Var[y_t] = sum_k recon[t][k]^2 Var[c_k]
        for (std::size_t t = 0; t < L; ++t) {
            double acc = 0.0;
            for (std::size_t k = 0; k < L; ++k)
                acc += recon_[t][k] * recon_[t][k] * sig[k];
            out.sigma2[t] = acc * s * s;
        }
    }
    return out;
}

GaussianForecast Forecaster::forecast(const ForecastInput& in) const {
    ModelGraph g(*this, false);
    std::vector<std::vector<double>> mu_bands, sigma2_bands;
    for (int b = 0; b < cfg_.n_bands(); ++b) {
        ModelGraph::Head h = g.run_band(b, in.bands[static_cast<std::size_t>(b)]);
        mu_bands.push_back(h.mu.value().data);
        if (cfg_.head == HeadKind::Gaussian) sigma2_bands.push_back(h.sigma2.value().data);
    }
    return assemble(mu_bands, sigma2_bands);
}

// --------------------------------------------------------------- ModelGraph

ModelGraph::ModelGraph(const Forecaster& model, bool with_grads)
    : model_(model), with_grads_(with_grads),
      transfer_calls_(static_cast<std::size_t>(model.config().n_bands()), 0) {}

Var ModelGraph::param(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    const Param& p = model_.params_.get(name);
    // standardization constants never receive gradients
    const bool grad = with_grads_ && name.rfind("loc_norm.", 0) != 0;
    Var v = grad ? tape_.leaf(p.value) : tape_.constant(p.value);
    if (grad) grads_out_.emplace_back(const_cast<Param*>(&p), v);
    bound_.emplace(name, v);
    return v;
}

void ModelGraph::backward(Var loss) {
    if (!with_grads_) throw internal_error("backward on a no-grad graph");
    tape_.backward(loss);
    for (auto& [p, v] : grads_out_) {
        for (std::size_t i = 0; i < p->grad.size(); ++i)
            p->grad.data[i] += v.grad().data[i];
    }
}

Var ModelGraph::linear(const std::string& w, const std::string& b, Var x) {
    Var out = matmul(x, param(w));
    return add(out, broadcast_rows(param(b), x.value().rows()));
}

Var ModelGraph::layer_norm(const std::string& prefix, Var x) {
    const std::size_t r = x.value().rows(), c = x.value().cols();
    Var mu = row_mean(x);
    Var xc = sub(x, broadcast_cols(mu, c));
    Var var = row_mean(mul(xc, xc));
    Var inv = broadcast_cols(sqrt_op(add_scalar(var, 1e-5)), c);
    Var normed = div(xc, inv);
    return add(mul(normed, broadcast_rows(param(prefix + ".g"), r)),
               broadcast_rows(param(prefix + ".b"), r));
}

Var ModelGraph::mha(int /*band*/, const std::string& prefix, Var q_in, Var kv_in) {
    const ModelConfig& cfg = model_.cfg_;
    const std::size_t dk = cfg.d_model / cfg.n_heads;
    Var q = linear(prefix + ".wq", prefix + ".bq", q_in);
    Var k = linear(prefix + ".wk", prefix + ".bk", kv_in);
    Var v = linear(prefix + ".wv", prefix + ".bv", kv_in);
    std::vector<Var> heads;
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        Var qh = slice_cols(q, h * dk, dk);
        Var kh = slice_cols(k, h * dk, dk);
        Var vh = slice_cols(v, h * dk, dk);
        Var scores = scale(matmul(qh, kh, false, true), 1.0 / std::sqrt(static_cast<double>(dk)));
        Var attn = softmax_rows(scores);
        heads.push_back(matmul(attn, vh));
    }
    Var cat = cfg.n_heads == 1 ? heads[0] : concat_cols(heads);
    return linear(prefix + ".wo", prefix + ".bo", cat);
}

Var ModelGraph::embed_location(const Station& st) {
    const Tensor& m = model_.params_.get("loc_norm.mean").value;
    const Tensor& s = model_.params_.get("loc_norm.std").value;
    Tensor x({3});
    x.data[0] = (st.lat - m.data[0]) / s.data[0];
    x.data[1] = (st.lon - m.data[1]) / s.data[1];
    x.data[2] = (st.elevation - m.data[2]) / s.data[2];
    Var xin = tape_.constant(std::move(x));
    Var h = tanh_op(add(matvec(param("loc.w1"), xin), param("loc.b1")));
    return add(matvec(param("loc.w2"), h), param("loc.b2"));
}

namespace {

Tensor positional_encoding(std::size_t t_len, std::size_t d) {
    Tensor pe({t_len, d});
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t i = 0; i < d; ++i) {
            const double angle = static_cast<double>(t) /
                                 std::pow(10000.0, static_cast<double>(2 * (i / 2)) /
                                                       static_cast<double>(d));
            pe.data[t * d + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

} // namespace

Var ModelGraph::encode_band(int band, const Tensor& ctx) {
    const ModelConfig& cfg = model_.cfg_;
    if (ctx.rank() != 2 || ctx.shape[1] != cfg.band_input_cols(band))
        throw invalid_error("encode_band: context has " +
                            (ctx.rank() == 2 ? std::to_string(ctx.shape[1]) : std::string("?")) +
                            " columns, expected " + std::to_string(cfg.band_input_cols(band)));
    const std::size_t T = ctx.shape[0];
    const std::string pfx = "band" + std::to_string(band) + ".enc";
    Var h = linear(pfx + ".in_w", pfx + ".in_b", tape_.constant(ctx));
    h = add(h, tape_.constant(positional_encoding(T, cfg.d_model)));
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string lp = pfx + ".l" + std::to_string(l);
        Var a = layer_norm(lp + ".ln1", h);
        h = add(h, mha(band, lp + ".attn", a, a));
        Var f = layer_norm(lp + ".ln2", h);
        Var ff = linear(lp + ".ffn.w2", lp + ".ffn.b2",
                        relu(linear(lp + ".ffn.w1", lp + ".ffn.b1", f)));
        h = add(h, ff);
    }
    return h;
}

Var ModelGraph::transfer_fc(int band, const std::vector<Var>& states,
                            const std::vector<Var>& locs, Var target_loc,
                            const std::vector<double>& dist_km) {
    if (states.empty()) throw invalid_error("transfer requires at least one retrieved station");
    if (states.size() != locs.size() || states.size() != dist_km.size())
        throw invalid_error("transfer_fc: inputs misaligned");
    ++transfer_calls_[static_cast<std::size_t>(band)];
    const std::string t = "band" + std::to_string(band) + ".transfer";
    const std::size_t n = states.size();

    // inverse-distance softmax weights (plain constants; uniform fallback)
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    if (model_.cfg_.fc_inverse_distance && n > 1) {
        double mean_d = 0.0;
        for (double d : dist_km) mean_d += d;
        mean_d /= static_cast<double>(n);
        if (mean_d > 0.0) {
            double mx = -1e300;
            std::vector<double> logits(n);
            for (std::size_t i = 0; i < n; ++i) {
                logits[i] = -dist_km[i] / mean_d;
                mx = std::max(mx, logits[i]);
            }
            double denom = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                w[i] = std::exp(logits[i] - mx);
                denom += w[i];
            }
            for (double& wi : w) wi /= denom;
        }
    }

    Var out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t T = states[i].value().rows();
        Var in = concat_cols({states[i], broadcast_rows(locs[i], T),
                              broadcast_rows(target_loc, T)});
        Var u = linear(t + ".w2", t + ".b2", tanh_op(linear(t + ".w1", t + ".b1", in)));
        Var scaled = scale(u, w[i]);
        out = i == 0 ? scaled : add(out, scaled);
    }
    return out;
}

Var ModelGraph::transfer_gnn(int band, const std::vector<Var>& states,
                             const std::vector<Var>& locs, Var target_loc,
                             const std::vector<std::vector<double>>& pairwise_km) {
    if (states.empty()) throw invalid_error("transfer requires at least one retrieved station");
    const std::size_t n = states.size() + 1; // retrieved nodes plus the target
    if (pairwise_km.size() != n)
        throw invalid_error("transfer_gnn: pairwise distance matrix must include the target");
    ++transfer_calls_[static_cast<std::size_t>(band)];
    const std::string t = "band" + std::to_string(band) + ".transfer";
    const std::size_t T = states[0].value().rows();
    const double tau = model_.cfg_.gnn_tau_km;

    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            w[i][j] = std::exp(-pairwise_km[i][j] / tau);
            deg[i] += w[i][j];
        }
    }

    std::vector<Var> h0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        Var mix = add(matvec(param(t + ".locmix_w"), locs[i]), param(t + ".locmix_b"));
        h0.push_back(add(states[i], broadcast_rows(mix, T)));
    }
    Var tmix = add(matvec(param(t + ".locmix_w"), target_loc), param(t + ".locmix_b"));
    h0.push_back(broadcast_rows(tmix, T));

    auto aggregate = [&](const std::vector<Var>& h, std::size_t i) {
        Var acc;
        for (std::size_t j = 0; j < n; ++j) {
            const double coef = w[i][j] / std::sqrt(deg[i] * deg[j]);
            Var term = scale(h[j], coef);
            acc = j == 0 ? term : add(acc, term);
        }
        return acc;
    };

    std::vector<Var> h1;
    for (std::size_t i = 0; i < n; ++i)
        h1.push_back(tanh_op(linear(t + ".theta1", t + ".tb1", aggregate(h0, i))));
    // only the target node is read out after the second round
    return linear(t + ".theta2", t + ".tb2", aggregate(h1, n - 1));
}

Var ModelGraph::transfer_loc_attn(int band, const std::vector<Var>& states,
                                  const std::vector<Var>& locs, Var target_loc) {
    if (states.empty()) throw invalid_error("transfer requires at least one retrieved station");
    ++transfer_calls_[static_cast<std::size_t>(band)];
    const ModelConfig& cfg = model_.cfg_;
    const std::string t = "band" + std::to_string(band) + ".transfer";
    const std::size_t T = states[0].value().rows();
    if (T != cfg.band_context_len(band))
        throw invalid_error("transfer_loc_attn: states must cover the band's full context (" +
                            std::to_string(cfg.band_context_len(band)) + " steps)");
    const std::size_t dk = cfg.d_loc_attn;
    const std::size_t n = states.size();

    // per-timestep queries from the projected target embedding
    Var q_flat = add(matvec(param(t + ".query_w"), target_loc), param(t + ".query_b"));
    Var q = reshape(q_flat, {T, dk});
    std::vector<Var> loc_rows;
    for (const Var& l : locs) loc_rows.push_back(reshape(l, {1, cfg.d_loc}));
    Var keys = add(matmul(concat_rows(loc_rows), param(t + ".key_w")),
                   broadcast_rows(param(t + ".key_b"), n));
    Var alpha = softmax_rows(scale(matmul(q, keys, false, true),
                                   1.0 / std::sqrt(static_cast<double>(dk))));
    last_attention_ = alpha.value();

    Var out;
    for (std::size_t i = 0; i < n; ++i) {
        Var wi = broadcast_cols(reshape(slice_cols(alpha, i, 1), {T}), cfg.d_model);
        Var term = mul(wi, states[i]);
        out = i == 0 ? term : add(out, term);
    }
    return out;
}

Var ModelGraph::fuse_target(int band, Var transferred, std::optional<Var> target_state) {
    if (!target_state || target_state->value().rows() == 0) return transferred;
    const std::string g = "band" + std::to_string(band) + ".gate";
    Var pooled = concat_vec({col_mean(transferred), col_mean(*target_state)});
    Var gate = sigmoid(add(matvec(param(g + ".w"), pooled), param(g + ".b")));
    Var scaled = mul(broadcast_rows(gate, target_state->value().rows()), *target_state);
    return concat_rows({transferred, scaled});
}

ModelGraph::Head ModelGraph::decode_band(int band, Var fused) {
    const ModelConfig& cfg = model_.cfg_;
    const std::string pfx = "band" + std::to_string(band) + ".dec";
    Var queries = param(pfx + ".queries");
    Var a = layer_norm(pfx + ".ln1", queries);
    Var h = add(queries, mha(band, pfx + ".attn", a, fused));
    Var f = layer_norm(pfx + ".ln2", h);
    h = add(h, linear(pfx + ".ffn.w2", pfx + ".ffn.b2",
                      relu(linear(pfx + ".ffn.w1", pfx + ".ffn.b1", f))));
    const std::size_t H = cfg.band_horizon_len(band);
    Head out;
    out.mu = reshape(linear(pfx + ".head.mu_w", pfx + ".head.mu_b", h), {H});
    if (cfg.head == HeadKind::Gaussian) {
        Var s = reshape(linear(pfx + ".head.s_w", pfx + ".head.s_b", h), {H});
        out.sigma2 = add_scalar(softplus(s), 1e-6);
    }
    return out;
}

ModelGraph::Head ModelGraph::run_band(int band, const BandInput& in) {
    const ModelConfig& cfg = model_.cfg_;
    Var fused;
    if (!cfg.retrieval) {
        fused = encode_band(band, in.target_ctx);
    } else {
        if (in.neighbor_ctx.empty())
            throw invalid_error("band " + std::to_string(band) +
                                ": no retrieved station with a usable context");
        std::vector<Var> states, locs;
        for (std::size_t i = 0; i < in.neighbor_ctx.size(); ++i) {
            states.push_back(encode_band(band, in.neighbor_ctx[i]));
            locs.push_back(embed_location(in.neighbors[i]));
        }
        Var tar_loc = embed_location(in.target);
        Var transferred;
        switch (cfg.transfer) {
            case TransferKind::Fc:
                transferred = transfer_fc(band, states, locs, tar_loc, in.neighbor_km);
                break;
            case TransferKind::Gnn: {
                const std::size_t n = states.size() + 1;
                std::vector<std::vector<double>> pw(n, std::vector<double>(n, 0.0));
                for (std::size_t i = 0; i < n; ++i) {
                    const Station& si = i + 1 == n ? in.target : in.neighbors[i];
                    for (std::size_t j = i + 1; j < n; ++j) {
                        const Station& sj = j + 1 == n ? in.target : in.neighbors[j];
                        pw[i][j] = pw[j][i] = haversine(si, sj);
                    }
                }
                transferred = transfer_gnn(band, states, locs, tar_loc, pw);
                break;
            }
            case TransferKind::LocAttn:
                transferred = transfer_loc_attn(band, states, locs, tar_loc);
                break;
        }
        std::optional<Var> tar_state;
        if (in.target_ctx.rows() > 0) tar_state = encode_band(band, in.target_ctx);
        fused = fuse_target(band, transferred, tar_state);
    }
    return decode_band(band, fused);
}

} // namespace rarf
