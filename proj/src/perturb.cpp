#include "octad/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace octad::perturb {

namespace {

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::deform: return "deform";
        case Mode::fluid: return "fluid";
        case Mode::both: return "both";
    }
    return "?";
}

struct RoiBounds {
    int r0, r1, c0, c1;  // inclusive
    std::vector<size_t> on_pixels;
};

RoiBounds roi_bounds(const roi::RoiMask& roi) {
    RoiBounds b{roi.h, -1, roi.w, -1, {}};
    for (int r = 0; r < roi.h; ++r)
        for (int c = 0; c < roi.w; ++c)
            if (roi.at(r, c)) {
                b.r0 = std::min(b.r0, r);
                b.r1 = std::max(b.r1, r);
                b.c0 = std::min(b.c0, c);
                b.c1 = std::max(b.c1, c);
                b.on_pixels.push_back(size_t(r) * roi.w + c);
            }
    return b;
}

float sample_bilinear(const Image& im, double r, double c) {
    r = std::clamp(r, 0.0, double(im.h - 1));
    c = std::clamp(c, 0.0, double(im.w - 1));
    int r0 = int(r), c0 = int(c);
    int r1 = std::min(r0 + 1, im.h - 1), c1 = std::min(c0 + 1, im.w - 1);
    double fr = r - r0, fc = c - c0;
    return float((1 - fr) * ((1 - fc) * im.at(r0, c0) + fc * im.at(r0, c1)) +
                 fr * ((1 - fc) * im.at(r1, c0) + fc * im.at(r1, c1)));
}

// C1-smooth bump: cos^2 profile, zero value and slope at |t| >= 1
double bump(double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    double c = std::cos(0.5 * M_PI * t);
    return c * c;
}

}  // namespace

std::string DrawInfo::to_text() const {
    std::ostringstream os;
    os << "mode: " << mode_name(mode) << "\n";
    os << "retries: " << retries << "\n";
    if (mode == Mode::deform || mode == Mode::both) {
        os << "deform_amplitude: " << amplitude << "\n";
        os << "deform_wavelength: " << wavelength << "\n";
        os << "thicken_factor: " << thicken << "\n";
        os << "deform_center_col: " << center_col << "\n";
    }
    for (const auto& e : ellipses)
        os << "ellipse: row=" << e.row << " col=" << e.col << " r_row=" << e.r_row
           << " r_col=" << e.r_col << " darkness=" << e.darkness << "\n";
    return os.str();
}

Image deform_layers(const Image& image, const roi::RoiMask& roi, const PerturbConfig& cfg,
                    Rng& rng, DrawInfo* info) {
    require(roi.same_shape(image), "deform_layers: roi shape mismatch");
    auto b = roi_bounds(roi);
    require(!b.on_pixels.empty(), "deform_layers: empty roi");

    const double amplitude = cfg.deform_amplitude.draw(rng);
    const double wavelength = std::max(2.0, cfg.deform_wavelength.draw(rng));
    const double thicken = cfg.thicken_factor.draw(rng);
    const double center_col = rng.uniform(double(b.c0), double(b.c1));
    if (info) {
        info->amplitude = amplitude;
        info->wavelength = wavelength;
        info->thicken = thicken;
        info->center_col = center_col;
    }

    if (amplitude == 0.0 && thicken == 1.0) return image;

    const double band_center = 0.5 * (b.r0 + b.r1);
    Image out = image;
    for (size_t idx : b.on_pixels) {
        int r = int(idx) / image.w, c = int(idx) % image.w;
        double t = (c - center_col) / (0.5 * wavelength);
        double wgt = bump(t);
        if (wgt == 0.0) continue;
        // vertical shift plus stretch about the band center, blended by the bump
        double stretch = 1.0 + (thicken - 1.0) * wgt;
        double src_r = band_center + (r - band_center) / stretch - amplitude * wgt;
        out.at(r, c) = sample_bilinear(image, src_r, c);
    }
    return out;
}

Image insert_fluid_regions(const Image& image, const roi::RoiMask& roi,
                           const PerturbConfig& cfg, Rng& rng, DrawInfo* info) {
    require(roi.same_shape(image), "insert_fluid_regions: roi shape mismatch");
    auto b = roi_bounds(roi);
    require(!b.on_pixels.empty(), "insert_fluid_regions: empty roi");

    const int k = cfg.fluid_count.draw_int(rng);
    Image out = image;
    for (int i = 0; i < k; ++i) {
        size_t center = b.on_pixels[rng.uniform_int(int(b.on_pixels.size()))];
        double cr = double(center / size_t(image.w));
        double cc = double(center % size_t(image.w));
        double r_row = cfg.fluid_radius.draw(rng);
        double r_col = cfg.fluid_radius.draw(rng);
        double darkness = cfg.fluid_darkness.draw(rng);
        if (info) info->ellipses.push_back({cr, cc, r_row, r_col, darkness});

        // cosine taper over the outer ~2px of the ellipse edge
        double rho0 = std::max(0.0, 1.0 - 2.0 / std::max(r_row, r_col));
        int rr0 = std::max(0, int(cr - r_row) - 1), rr1 = std::min(image.h - 1, int(cr + r_row) + 1);
        int cc0 = std::max(0, int(cc - r_col) - 1), cc1 = std::min(image.w - 1, int(cc + r_col) + 1);
        for (int r = rr0; r <= rr1; ++r) {
            for (int c = cc0; c <= cc1; ++c) {
                if (!roi.at(r, c)) continue;
                double dr = (r - cr) / r_row, dc = (c - cc) / r_col;
                double rho = std::sqrt(dr * dr + dc * dc);
                if (rho >= 1.0) continue;
                double taper = rho <= rho0
                                   ? 1.0
                                   : 0.5 * (1.0 + std::cos(M_PI * (rho - rho0) / (1.0 - rho0)));
                out.at(r, c) = float(out.at(r, c) * (1.0 - darkness * taper));
            }
        }
    }
    return out;
}

Image perturb(const Image& image, const roi::RoiMask& roi, const PerturbConfig& cfg,
              Rng& rng, DrawInfo* info) {
    cfg.validate();
    require(roi.count() > 0, "perturb: empty roi");

    for (int attempt = 0; attempt < 5; ++attempt) {
        double u = rng.u01();
        Mode mode = u < cfg.p_deform            ? Mode::deform
                    : u < cfg.p_deform + cfg.p_fluid ? Mode::fluid
                                                     : Mode::both;
        DrawInfo local;
        local.mode = mode;
        local.retries = attempt;

        Image out = image;
        if (mode == Mode::deform || mode == Mode::both)
            out = deform_layers(out, roi, cfg, rng, &local);
        if (mode == Mode::fluid || mode == Mode::both)
            out = insert_fluid_regions(out, roi, cfg, rng, &local);

        if (out.pix != image.pix) {
            if (info) *info = std::move(local);
            return out;
        }
    }
    throw Error("perturb: 5 consecutive no-op draws; widen the perturbation ranges");
}

}  // namespace octad::perturb
