#pragma once

#include <optional>
#include <vector>

#include "octad/common.hpp"

namespace octad::roi {

// Bank of horizontal-band-tuned Gabor kernels. Orientation 0 means the
// carrier oscillates along image rows, so the bank responds to horizontally
// layered structure.
struct GaborBankConfig {
    std::vector<double> wavelengths = {4, 8, 16};  // pixels, strictly increasing
    double orientation = 0.0;                      // radians
    double sigma_ratio = 0.56;                     // envelope sigma per wavelength
    double aspect = 0.5;                           // envelope ellipticity
    double kernel_size_factor = 3.0;               // half-size = ceil(factor * sigma)

    void validate() const {
        require(!wavelengths.empty(), "GaborBankConfig: need at least one wavelength");
        double prev = 1.0;
        for (double wl : wavelengths) {
            require(wl > 1.0, "GaborBankConfig: wavelengths must exceed 1 pixel");
            require(wl > prev, "GaborBankConfig: wavelengths must be strictly increasing");
            prev = wl;
        }
        require(sigma_ratio > 0 && aspect > 0 && kernel_size_factor > 0,
                "GaborBankConfig: envelope parameters must be positive");
    }

    // scale wavelengths with resolution (defaults are stated at 64 px)
    static GaborBankConfig for_resolution(int res) {
        GaborBankConfig cfg;
        if (res != 64)
            for (auto& wl : cfg.wavelengths) wl *= double(res) / 64.0;
        return cfg;
    }
};

struct RoiMask {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> mask;  // 0/1
    double coverage = 0;        // fraction of 1-pixels

    RoiMask() = default;
    RoiMask(int h_, int w_) : h(h_), w(w_), mask(size_t(h_) * w_, 0) {}

    uint8_t& at(int r, int c) { return mask[size_t(r) * w + c]; }
    uint8_t at(int r, int c) const { return mask[size_t(r) * w + c]; }
    size_t count() const;
    void update_coverage();
    bool same_shape(const Image& im) const { return h == im.h && w == im.w; }
};

struct RoiConfig {
    GaborBankConfig gabor;
    double border_artifact_threshold = 0.95;
    double min_coverage = 0.05;
    double max_coverage = 0.80;
    int close_rows = 3, close_cols = 9;  // horizontal closing element
    int open_rows = 3, open_cols = 3;
    double min_component_frac = 0.005;   // drop components below this image fraction

    static RoiConfig for_resolution(int res) {
        RoiConfig cfg;
        cfg.gabor = GaborBankConfig::for_resolution(res);
        return cfg;
    }
};

// Near-saturated regions connected to the image border are cropping
// artifacts; they are flattened to the dark-background median. Interior
// bright blobs are left alone (they may be pathology).
Image remove_background_artifacts(const Image& image, double threshold = 0.95);

// Per-pixel maximum of rectified responses over the bank, normalized to
// [0,1] by its own maximum (all-zero if the input is flat).
Image gabor_response(const Image& image, const GaborBankConfig& cfg);

enum class BinarizeMethod { otsu, fixed };

struct BinarizeResult {
    RoiMask mask;
    double threshold = 0;
    bool degenerate = false;  // constant response, empty mask returned
};

BinarizeResult binarize(const Image& response, BinarizeMethod method,
                        double fixed_threshold = 0.5);

// Otsu threshold over values in [0,1]; returns nullopt for a constant input.
std::optional<double> otsu_threshold(const std::vector<float>& values, int bins = 256);

// Morphology on 0/1 masks with rectangular structuring elements.
RoiMask morph_close(const RoiMask& m, int se_rows, int se_cols);
RoiMask morph_open(const RoiMask& m, int se_rows, int se_cols);
RoiMask drop_small_components(const RoiMask& m, double min_area_frac);
RoiMask cleanup(const RoiMask& m, const RoiConfig& cfg);

struct RoiExtraction {
    RoiMask mask;
    bool ok = false;          // false: coverage out of band or degenerate
    std::string reason;
};

// remove_background -> gabor_response -> binarize -> cleanup, with a
// coverage plausibility gate.
RoiExtraction extract_roi(const Image& image, const RoiConfig& cfg);

}  // namespace octad::roi
