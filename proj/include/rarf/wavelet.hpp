#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rarf {

enum class WaveletFamily { Haar, Db2 };

WaveletFamily wavelet_family_from_string(const std::string& s);
std::string to_string(WaveletFamily f);

/// Multilevel decimated orthonormal wavelet transform with periodic boundary
/// handling. `levels` = 0 disables decomposition (the identity band).
struct BandSpec {
    int levels = 3;
    WaveletFamily family = WaveletFamily::Haar;

    /// Number of retrieval bands: detail levels 1..J-1 each form a band and
    /// the slowest band bundles dJ with aJ. J=0 is the single identity band.
    int band_count() const;

    /// Labels ordered fast -> slow. J=3 yields {"fast","moderate","slow"}.
    std::vector<std::string> band_labels() const;

    void validate() const;
};

/// Coefficients of one decomposition: details d1..dJ plus approximation aJ.
/// For J=0 the original signal is stored in `approx`.
struct BandSet {
    BandSpec spec;
    std::size_t original_length = 0;
    std::vector<std::vector<double>> details; // details[j] = d_{j+1}
    std::vector<double> approx;               // aJ
};

/// Decimated DWT of x. Requires x.size() divisible by 2^levels; all values
/// finite. Haar detail convention: d_k = (x_{2k} - x_{2k+1}) / sqrt(2).
BandSet decompose(const std::vector<double>& x, const BandSpec& spec);

/// Exact inverse of decompose (orthonormal filters, periodic wrap).
std::vector<double> reconstruct(const BandSet& bands);

/// Coefficient counts per level for an L_y-length horizon:
/// (L/2, L/4, ..., L/2^J, L/2^J). Errors when L_y is not divisible by 2^J.
std::vector<std::size_t> band_forecast_lengths(std::size_t horizon, const BandSpec& spec);

/// Per-channel coefficient length of retrieval band `band` (fast -> slow
/// order) for an input of length n. The slow band has two channels (dJ, aJ)
/// of this length.
std::size_t band_channel_length(std::size_t n, const BandSpec& spec, int band);

/// Channels contributed by a band: 1 for pure detail bands, 2 for the
/// slowest (dJ + aJ), 1 for the J=0 identity band.
int band_channels(const BandSpec& spec, int band);

/// Concatenated coefficients of one retrieval band, fast -> slow order.
/// Slow band is dJ followed by aJ.
std::vector<double> band_coefficients(const BandSet& bands, int band);

/// Rebuild a BandSet from per-band concatenated coefficient vectors (the
/// inverse of band_coefficients over all bands).
BandSet bands_from_coefficients(const std::vector<std::vector<double>>& per_band,
                                std::size_t original_length, const BandSpec& spec);

} // namespace rarf
