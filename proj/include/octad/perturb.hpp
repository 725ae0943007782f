#pragma once

#include <string>
#include <vector>

#include "octad/common.hpp"
#include "octad/roi.hpp"

namespace octad::perturb {

struct Range {
    double lo = 0, hi = 0;
    double draw(Rng& rng) const { return rng.uniform(lo, hi); }
    int draw_int(Rng& rng) const { return int(lo) + rng.uniform_int(int(hi) - int(lo) + 1); }
    void validate(const char* name) const {
        require(lo <= hi, std::string(name) + ": range must satisfy lo <= hi");
    }
};

enum class Mode { deform, fluid, both };

struct PerturbConfig {
    Range deform_amplitude{2, 6};     // pixels
    Range deform_wavelength{16, 48};  // pixels
    Range thicken_factor{1.1, 1.5};
    Range fluid_count{1, 3};
    Range fluid_radius{3, 10};        // pixels
    Range fluid_darkness{0.4, 0.9};   // attenuation in (0,1]
    double p_deform = 0.4, p_fluid = 0.4, p_both = 0.2;

    void validate() const {
        deform_amplitude.validate("deform_amplitude");
        deform_wavelength.validate("deform_wavelength");
        thicken_factor.validate("thicken_factor");
        fluid_count.validate("fluid_count");
        fluid_radius.validate("fluid_radius");
        fluid_darkness.validate("fluid_darkness");
        require(fluid_darkness.lo > 0 && fluid_darkness.hi <= 1,
                "fluid_darkness: range must lie in (0,1]");
        require(std::abs(p_deform + p_fluid + p_both - 1.0) < 1e-9,
                "mode probabilities must sum to 1");
    }

    // stated at 64 px; spatial magnitudes scale with resolution
    static PerturbConfig for_resolution(int res) {
        PerturbConfig cfg;
        if (res != 64) {
            double s = double(res) / 64.0;
            for (Range* r : {&cfg.deform_amplitude, &cfg.deform_wavelength, &cfg.fluid_radius}) {
                r->lo *= s;
                r->hi *= s;
            }
        }
        return cfg;
    }
};

// Record of the parameters actually drawn, for sidecar audit files.
struct DrawInfo {
    Mode mode = Mode::deform;
    double amplitude = 0, wavelength = 0, thicken = 1, center_col = 0;
    struct Ellipse {
        double row, col, r_row, r_col, darkness;
    };
    std::vector<Ellipse> ellipses;
    int retries = 0;
    std::string to_text() const;
};

// Smooth vertical displacement (sinusoidal bump) plus local vertical stretch,
// confined to roi=1 pixels; roi=0 pixels are bit-identical to the input.
Image deform_layers(const Image& image, const roi::RoiMask& roi, const PerturbConfig& cfg,
                    Rng& rng, DrawInfo* info = nullptr);

// Cosine-tapered dark ellipses with centers uniform over roi=1 pixels.
Image insert_fluid_regions(const Image& image, const roi::RoiMask& roi,
                           const PerturbConfig& cfg, Rng& rng, DrawInfo* info = nullptr);

// Dispatch per mode probabilities; retries a fresh draw (up to 5) if the draw
// was a no-op, and throws after 5 consecutive no-ops.
Image perturb(const Image& image, const roi::RoiMask& roi, const PerturbConfig& cfg,
              Rng& rng, DrawInfo* info = nullptr);

}  // namespace octad::perturb
