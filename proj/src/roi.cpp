#include "octad/roi.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace octad::roi {

size_t RoiMask::count() const {
    size_t n = 0;
    for (uint8_t v : mask) n += v != 0;
    return n;
}

void RoiMask::update_coverage() {
    coverage = mask.empty() ? 0.0 : double(count()) / double(mask.size());
}

Image remove_background_artifacts(const Image& image, double threshold) {
    const int h = image.h, w = image.w;
    std::vector<uint8_t> artifact(size_t(h) * w, 0);
    std::deque<std::pair<int, int>> queue;

    auto bright = [&](int r, int c) { return image.at(r, c) > threshold; };
    auto push = [&](int r, int c) {
        size_t i = size_t(r) * w + c;
        if (!artifact[i] && bright(r, c)) {
            artifact[i] = 1;
            queue.emplace_back(r, c);
        }
    };
    for (int c = 0; c < w; ++c) {
        push(0, c);
        push(h - 1, c);
    }
    for (int r = 0; r < h; ++r) {
        push(r, 0);
        push(r, w - 1);
    }
    // flood fill (4-connected) of bright pixels reachable from the border
    while (!queue.empty()) {
        auto [r, c] = queue.front();
        queue.pop_front();
        if (r > 0) push(r - 1, c);
        if (r + 1 < h) push(r + 1, c);
        if (c > 0) push(r, c - 1);
        if (c + 1 < w) push(r, c + 1);
    }

    bool any = std::find(artifact.begin(), artifact.end(), uint8_t{1}) != artifact.end();
    if (!any) return image;

    // median of the dark background (everything at or below the threshold)
    std::vector<float> dark;
    dark.reserve(image.pix.size());
    for (float v : image.pix)
        if (v <= threshold) dark.push_back(v);
    float fill = 0.f;
    if (!dark.empty()) {
        size_t mid = dark.size() / 2;
        std::nth_element(dark.begin(), dark.begin() + mid, dark.end());
        fill = dark[mid];
    }

    Image out = image;
    for (size_t i = 0; i < out.pix.size(); ++i)
        if (artifact[i]) out.pix[i] = fill;
    return out;
}

namespace {

// Zero-mean Gabor kernel. u runs along rows (the carrier direction for
// orientation 0), v along columns; the envelope is stretched 1/aspect along v.
std::vector<float> gabor_kernel(double wavelength, double orientation,
                                double sigma_ratio, double aspect, int half, int& size) {
    size = 2 * half + 1;
    std::vector<float> k(size_t(size) * size);
    const double sigma = sigma_ratio * wavelength;
    const double cos_t = std::cos(orientation), sin_t = std::sin(orientation);
    double sum = 0;
    for (int r = -half; r <= half; ++r) {
        for (int c = -half; c <= half; ++c) {
            double u = r * cos_t + c * sin_t;
            double v = -r * sin_t + c * cos_t;
            double env = std::exp(-(u * u + aspect * aspect * v * v) / (2 * sigma * sigma));
            double val = env * std::cos(2.0 * M_PI * u / wavelength);
            k[size_t(r + half) * size + (c + half)] = float(val);
            sum += val;
        }
    }
    // remove the DC component so constant inputs give zero response
    float mean = float(sum / (double(size) * size));
    for (auto& v : k) v -= mean;
    return k;
}

// direct convolution with reflect padding, double accumulators
Image convolve_reflect(const Image& im, const std::vector<float>& kernel, int half) {
    const int h = im.h, w = im.w, size = 2 * half + 1;
    Image out(h, w);
    auto reflect = [](int x, int n) {
        while (x < 0 || x >= n) {
            if (x < 0) x = -x - 1;
            if (x >= n) x = 2 * n - 1 - x;
        }
        return x;
    };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int kr = -half; kr <= half; ++kr) {
                int rr = reflect(r + kr, h);
                const float* krow = &kernel[size_t(kr + half) * size];
                const float* irow = &im.pix[size_t(rr) * w];
                for (int kc = -half; kc <= half; ++kc) {
                    int cc = reflect(c + kc, w);
                    acc += double(krow[kc + half]) * irow[cc];
                }
            }
            out.at(r, c) = float(acc);
        }
    }
    return out;
}

}  // namespace

Image gabor_response(const Image& image, const GaborBankConfig& cfg) {
    cfg.validate();
    Image best(image.h, image.w, 0.f);
    for (double wl : cfg.wavelengths) {
        int half = int(std::ceil(cfg.kernel_size_factor * cfg.sigma_ratio * wl));
        int size = 2 * half + 1;
        if (size > image.h || size > image.w) {
            std::ostringstream os;
            os << "gabor_response: kernel " << size << "px for wavelength " << wl
               << " exceeds image " << image.h << "x" << image.w;
            throw Error(os.str());
        }
        auto kernel = gabor_kernel(wl, cfg.orientation, cfg.sigma_ratio, cfg.aspect,
                                   half, size);
        Image resp = convolve_reflect(image, kernel, half);
        for (size_t i = 0; i < resp.pix.size(); ++i)
            best.pix[i] = std::max(best.pix[i], std::abs(resp.pix[i]));
    }
    float peak = *std::max_element(best.pix.begin(), best.pix.end());
    if (peak > 0)
        for (auto& v : best.pix) v /= peak;
    return best;
}

std::optional<double> otsu_threshold(const std::vector<float>& values, int bins) {
    require(!values.empty(), "otsu_threshold: empty input");
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    if (*lo_it == *hi_it) return std::nullopt;

    std::vector<size_t> hist(bins, 0);
    for (float v : values) {
        int b = int(double(v) * bins);
        hist[std::clamp(b, 0, bins - 1)]++;
    }
    const double total = double(values.size());
    double total_mean = 0;
    for (int b = 0; b < bins; ++b) total_mean += (b + 0.5) * double(hist[b]);
    total_mean /= total;

    // maximize between-class variance w0*w1*(mu0-mu1)^2 over bin boundaries
    double best_var = -1, best_t = 0;
    double w0 = 0, sum0 = 0;
    for (int b = 0; b < bins - 1; ++b) {
        w0 += double(hist[b]) / total;
        sum0 += (b + 0.5) * double(hist[b]) / total;
        if (w0 <= 0 || w0 >= 1) continue;
        double mu0 = sum0 / w0;
        double mu1 = (total_mean - sum0) / (1 - w0);
        double var = w0 * (1 - w0) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = double(b + 1) / bins;  // boundary between bins b and b+1
        }
    }
    if (best_var < 0) return std::nullopt;
    return best_t;
}

BinarizeResult binarize(const Image& response, BinarizeMethod method,
                        double fixed_threshold) {
    BinarizeResult out;
    out.mask = RoiMask(response.h, response.w);

    double t = fixed_threshold;
    if (method == BinarizeMethod::otsu) {
        auto ot = otsu_threshold(response.pix);
        if (!ot) {
            out.degenerate = true;
            out.mask.update_coverage();
            return out;
        }
        t = *ot;
    }
    out.threshold = t;
    for (size_t i = 0; i < response.pix.size(); ++i)
        out.mask.mask[i] = response.pix[i] >= t ? 1 : 0;
    out.mask.update_coverage();
    return out;
}

namespace {

// separable dilation for a rows x cols rectangle
RoiMask dilate(const RoiMask& m, int se_rows, int se_cols) {
    const int h = m.h, w = m.w;
    int hr = se_rows / 2, hc = se_cols / 2;
    RoiMask tmp(h, w), out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            uint8_t v = 0;
            for (int dc = -hc; dc <= hc && !v; ++dc) {
                int cc = c + dc;
                if (cc >= 0 && cc < w) v = m.at(r, cc);
            }
            tmp.at(r, c) = v;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            uint8_t v = 0;
            for (int dr = -hr; dr <= hr && !v; ++dr) {
                int rr = r + dr;
                if (rr >= 0 && rr < h) v = tmp.at(rr, c);
            }
            out.at(r, c) = v;
        }
    return out;
}

RoiMask erode(const RoiMask& m, int se_rows, int se_cols) {
    const int h = m.h, w = m.w;
    int hr = se_rows / 2, hc = se_cols / 2;
    RoiMask tmp(h, w), out(h, w);
    // pixels outside the image count as background
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            uint8_t v = 1;
            for (int dc = -hc; dc <= hc && v; ++dc) {
                int cc = c + dc;
                v = (cc >= 0 && cc < w) ? m.at(r, cc) : 0;
            }
            tmp.at(r, c) = v;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            uint8_t v = 1;
            for (int dr = -hr; dr <= hr && v; ++dr) {
                int rr = r + dr;
                v = (rr >= 0 && rr < h) ? tmp.at(rr, c) : 0;
            }
            out.at(r, c) = v;
        }
    return out;
}

}  // namespace

RoiMask morph_close(const RoiMask& m, int se_rows, int se_cols) {
    auto out = erode(dilate(m, se_rows, se_cols), se_rows, se_cols);
    out.update_coverage();
    return out;
}

RoiMask morph_open(const RoiMask& m, int se_rows, int se_cols) {
    auto out = dilate(erode(m, se_rows, se_cols), se_rows, se_cols);
    out.update_coverage();
    return out;
}

RoiMask drop_small_components(const RoiMask& m, double min_area_frac) {
    const int h = m.h, w = m.w;
    const size_t min_area = size_t(min_area_frac * double(h) * double(w));
    RoiMask out(h, w);
    std::vector<int> label(size_t(h) * w, 0);
    int next = 0;
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!m.at(r, c) || label[size_t(r) * w + c]) continue;
            ++next;
            std::vector<size_t> members;
            stack.emplace_back(r, c);
            label[size_t(r) * w + c] = next;
            while (!stack.empty()) {
                auto [rr, cc] = stack.back();
                stack.pop_back();
                members.push_back(size_t(rr) * w + cc);
                const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    int nr = rr + dr[k], nc = cc + dc[k];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    size_t ni = size_t(nr) * w + nc;
                    if (m.mask[ni] && !label[ni]) {
                        label[ni] = next;
                        stack.emplace_back(nr, nc);
                    }
                }
            }
            if (members.size() >= min_area)
                for (size_t i : members) out.mask[i] = 1;
        }
    }
    out.update_coverage();
    return out;
}

RoiMask cleanup(const RoiMask& m, const RoiConfig& cfg) {
    auto out = morph_close(m, cfg.close_rows, cfg.close_cols);
    out = morph_open(out, cfg.open_rows, cfg.open_cols);
    out = drop_small_components(out, cfg.min_component_frac);
    return out;
}

RoiExtraction extract_roi(const Image& image, const RoiConfig& cfg) {
    RoiExtraction out;
    Image clean = remove_background_artifacts(image, cfg.border_artifact_threshold);
    Image resp = gabor_response(clean, cfg.gabor);
    auto bin = binarize(resp, BinarizeMethod::otsu);
    if (bin.degenerate) {
        out.mask = std::move(bin.mask);
        out.reason = "degenerate (constant) gabor response";
        return out;
    }
    out.mask = cleanup(bin.mask, cfg);
    if (out.mask.coverage < cfg.min_coverage || out.mask.coverage > cfg.max_coverage) {
        std::ostringstream os;
        os << "coverage " << out.mask.coverage << " outside [" << cfg.min_coverage
           << ", " << cfg.max_coverage << "]";
        out.reason = os.str();
        return out;
    }
    out.ok = true;
    return out;
}

}  // namespace octad::roi
