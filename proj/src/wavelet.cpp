#include "rarf/wavelet.hpp"

#include <cmath>
#include <cstdint>

#include "rarf/error.hpp"

namespace rarf {

namespace {

struct FilterPair {
    std::vector<double> low;
    std::vector<double> high;
};

// Orthonormal analysis filters. The high-pass is the quadrature mirror
// g[m] = (-1)^m h[F-1-m], which for Haar gives d_k = (x_{2k} - x_{2k+1})/sqrt(2).
FilterPair filters(WaveletFamily f) {
    const double s2 = std::sqrt(2.0);
    if (f == WaveletFamily::Haar) {
        return {{1.0 / s2, 1.0 / s2}, {1.0 / s2, -1.0 / s2}};
    }
    const double s3 = std::sqrt(3.0);
    const double n = 4.0 * s2;
    std::vector<double> h = {(1.0 + s3) / n, (3.0 + s3) / n, (3.0 - s3) / n, (1.0 - s3) / n};
    std::vector<double> g(4);
    for (int m = 0; m < 4; ++m) g[m] = (m % 2 == 0 ? 1.0 : -1.0) * h[3 - m];
    return {h, g};
}

// One analysis level: a_k = sum_m h[m] x[(2k+m) mod N], likewise d with g.
void analyze(const std::vector<double>& x, const FilterPair& fp,
             std::vector<double>& approx, std::vector<double>& detail) {
    const std::size_t n = x.size();
    const std::size_t half = n / 2;
    const std::size_t flen = fp.low.size();
    approx.assign(half, 0.0);
    detail.assign(half, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t m = 0; m < flen; ++m) {
            const double v = x[(2 * k + m) % n];
            a += fp.low[m] * v;
            d += fp.high[m] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

// One synthesis level; transpose of the analysis operator.
std::vector<double> synthesize(const std::vector<double>& approx,
                               const std::vector<double>& detail, const FilterPair& fp) {
    const std::size_t half = approx.size();
    const std::size_t n = 2 * half;
    const std::size_t flen = fp.low.size();
    std::vector<double> x(n, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        for (std::size_t m = 0; m < flen; ++m) {
            x[(2 * k + m) % n] += fp.low[m] * approx[k] + fp.high[m] * detail[k];
        }
    }
    return x;
}

} // namespace

WaveletFamily wavelet_family_from_string(const std::string& s) {
    if (s == "haar") return WaveletFamily::Haar;
    if (s == "db2") return WaveletFamily::Db2;
    throw config_error("unknown wavelet family '" + s + "' (expected haar or db2)");
}

std::string to_string(WaveletFamily f) {
    return f == WaveletFamily::Haar ? "haar" : "db2";
}

void BandSpec::validate() const {
    if (levels < 0) throw config_error("wavelet levels must be >= 0");
}

int BandSpec::band_count() const {
    return levels <= 1 ? 1 : levels;
}

std::vector<std::string> BandSpec::band_labels() const {
    if (levels == 0) return {"full"};
    if (levels == 3) return {"fast", "moderate", "slow"};
    std::vector<std::string> out;
    for (int b = 0; b < band_count(); ++b) out.push_back("band" + std::to_string(b + 1));
    return out;
}

BandSet decompose(const std::vector<double>& x, const BandSpec& spec) {
    spec.validate();
    const std::size_t div = std::size_t{1} << spec.levels;
    if (x.size() % div != 0) {
        throw invalid_error("decompose: input length " + std::to_string(x.size()) +
                            " not divisible by 2^" + std::to_string(spec.levels) + " = " +
                            std::to_string(div));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw invalid_error("decompose: non-finite input value");
    }

    BandSet out;
    out.spec = spec;
    out.original_length = x.size();
    if (spec.levels == 0) {
        out.approx = x;
        return out;
    }
    const FilterPair fp = filters(spec.family);
    std::vector<double> cur = x;
    for (int j = 0; j < spec.levels; ++j) {
        std::vector<double> a, d;
        analyze(cur, fp, a, d);
        out.details.push_back(std::move(d));
        cur = std::move(a);
    }
    out.approx = std::move(cur);
    return out;
}

std::vector<double> reconstruct(const BandSet& bands) {
    const BandSpec& spec = bands.spec;
    spec.validate();
    if (spec.levels == 0) {
        if (bands.approx.size() != bands.original_length)
            throw invalid_error("reconstruct: length mismatch in identity band");
        return bands.approx;
    }
    if (static_cast<int>(bands.details.size()) != spec.levels)
        throw invalid_error("reconstruct: expected " + std::to_string(spec.levels) +
                            " detail bands, got " + std::to_string(bands.details.size()));
    std::size_t expect = bands.original_length >> spec.levels;
    if (bands.approx.size() != expect)
        throw invalid_error("reconstruct: approx band length mismatch");
    for (int j = 0; j < spec.levels; ++j) {
        if (bands.details[j].size() != (bands.original_length >> (j + 1)))
            throw invalid_error("reconstruct: detail band " + std::to_string(j + 1) +
                                " length mismatch");
    }

    const FilterPair fp = filters(spec.family);
    std::vector<double> cur = bands.approx;
    for (int j = spec.levels - 1; j >= 0; --j) {
        cur = synthesize(cur, bands.details[j], fp);
    }
    return cur;
}

std::vector<std::size_t> band_forecast_lengths(std::size_t horizon, const BandSpec& spec) {
    spec.validate();
    const std::size_t div = std::size_t{1} << spec.levels;
    if (horizon % div != 0) {
        throw invalid_error("horizon length " + std::to_string(horizon) +
                            " not divisible by 2^" + std::to_string(spec.levels));
    }
    if (spec.levels == 0) return {horizon};
    std::vector<std::size_t> out;
    for (int j = 1; j <= spec.levels; ++j) out.push_back(horizon >> j);
    out.push_back(horizon >> spec.levels); // aJ
    return out;
}

std::size_t band_channel_length(std::size_t n, const BandSpec& spec, int band) {
    if (band < 0 || band >= spec.band_count())
        throw invalid_error("band index out of range");
    if (spec.levels == 0) return n;
    if (band < spec.band_count() - 1) return n >> (band + 1);
    return n >> spec.levels; // dJ and aJ share this length
}

int band_channels(const BandSpec& spec, int band) {
    if (band < 0 || band >= spec.band_count())
        throw invalid_error("band index out of range");
    if (spec.levels == 0) return 1;
    return band == spec.band_count() - 1 ? 2 : 1;
}

std::vector<double> band_coefficients(const BandSet& bands, int band) {
    const BandSpec& spec = bands.spec;
    if (band < 0 || band >= spec.band_count())
        throw invalid_error("band index out of range");
    if (spec.levels == 0) return bands.approx;
    if (band < spec.band_count() - 1) return bands.details[band];
    std::vector<double> out = bands.details[spec.levels - 1];
    out.insert(out.end(), bands.approx.begin(), bands.approx.end());
    return out;
}

BandSet bands_from_coefficients(const std::vector<std::vector<double>>& per_band,
                                std::size_t original_length, const BandSpec& spec) {
    spec.validate();
    if (static_cast<int>(per_band.size()) != spec.band_count())
        throw invalid_error("bands_from_coefficients: expected " +
                            std::to_string(spec.band_count()) + " bands");
    BandSet out;
    out.spec = spec;
    out.original_length = original_length;
    if (spec.levels == 0) {
        out.approx = per_band[0];
        if (out.approx.size() != original_length)
            throw invalid_error("bands_from_coefficients: identity band length mismatch");
        return out;
    }
    // Non-slow bands map 1:1 to detail levels; the slow band splits into dJ|aJ.
    for (int b = 0; b + 1 < spec.band_count(); ++b) {
        if (per_band[b].size() != (original_length >> (b + 1)))
            throw invalid_error("bands_from_coefficients: band length mismatch");
        out.details.push_back(per_band[b]);
    }
    // Slowest band carries dJ followed by aJ, both of length N / 2^J.
    const std::size_t tail = original_length >> spec.levels;
    const std::vector<double>& slow = per_band.back();
    if (slow.size() != 2 * tail)
        throw invalid_error("bands_from_coefficients: slow band length mismatch");
    out.details.emplace_back(slow.begin(), slow.begin() + static_cast<std::ptrdiff_t>(tail));
    out.approx.assign(slow.begin() + static_cast<std::ptrdiff_t>(tail), slow.end());
    return out;
}

} // namespace rarf
