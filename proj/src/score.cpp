#include "octad/score.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace octad::score {

AnomalyScore image_score(const Image& x, const model::VqModel& model,
                         const std::string& image_id) {
    model.check_image(x);
    Image x_hat = model.reconstruct(x);
    AnomalyScore out;
    out.image_id = image_id;
    out.value = l1_distance(x, x_hat);
    return out;
}

namespace {

std::vector<double> gaussian_window(int n, double sigma) {
    std::vector<double> w(n);
    int half = n / 2;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        double d = i - half;
        w[i] = std::exp(-d * d / (2 * sigma * sigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

int reflect_idx(int x, int n) {
    while (x < 0 || x >= n) {
        if (x < 0) x = -x - 1;
        if (x >= n) x = 2 * n - 1 - x;
    }
    return x;
}

// separable Gaussian filtering with reflect padding, double precision
std::vector<double> gauss_filter(const std::vector<double>& im, int h, int w,
                                 const std::vector<double>& window) {
    const int half = int(window.size()) / 2;
    std::vector<double> tmp(im.size()), out(im.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int k = -half; k <= half; ++k)
                acc += window[size_t(k + half)] * im[size_t(r) * w + reflect_idx(c + k, w)];
            tmp[size_t(r) * w + c] = acc;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int k = -half; k <= half; ++k)
                acc += window[size_t(k + half)] * tmp[size_t(reflect_idx(r + k, h)) * w + c];
            out[size_t(r) * w + c] = acc;
        }
    return out;
}

}  // namespace

Image ssim_map(const Image& x, const Image& y, const SsimConfig& cfg) {
    require(x.same_shape(y), "ssim_map: shape mismatch");
    require(cfg.window % 2 == 1, "ssim_map: window must be odd");
    require(cfg.window <= x.h && cfg.window <= x.w,
            "ssim_map: window larger than image");

    const size_t n = x.pix.size();
    std::vector<double> dx(n), dy(n), dxx(n), dyy(n), dxy(n);
    for (size_t i = 0; i < n; ++i) {
        dx[i] = x.pix[i];
        dy[i] = y.pix[i];
        dxx[i] = dx[i] * dx[i];
        dyy[i] = dy[i] * dy[i];
        dxy[i] = dx[i] * dy[i];
    }
    auto win = gaussian_window(cfg.window, cfg.sigma);
    auto mx = gauss_filter(dx, x.h, x.w, win);
    auto my = gauss_filter(dy, x.h, x.w, win);
    auto mxx = gauss_filter(dxx, x.h, x.w, win);
    auto myy = gauss_filter(dyy, x.h, x.w, win);
    auto mxy = gauss_filter(dxy, x.h, x.w, win);

    const double c1 = cfg.k1 * cfg.k1;  // (k1 * L)^2 with L = 1
    const double c2 = cfg.k2 * cfg.k2;
    Image out(x.h, x.w);
    for (size_t i = 0; i < n; ++i) {
        double vx = mxx[i] - mx[i] * mx[i];
        double vy = myy[i] - my[i] * my[i];
        double cxy = mxy[i] - mx[i] * my[i];
        double ssim = ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
                      ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        out.pix[i] = float(std::clamp(ssim, -1.0, 1.0));
    }
    return out;
}

const char* map_metric_name(MapMetric m) {
    switch (m) {
        case MapMetric::weighted: return "weighted";
        case MapMetric::l1: return "l1";
        case MapMetric::ssim: return "ssim";
        default: return "mse";
    }
}

std::optional<MapMetric> parse_map_metric(const std::string& s) {
    if (s == "weighted") return MapMetric::weighted;
    if (s == "l1") return MapMetric::l1;
    if (s == "ssim") return MapMetric::ssim;
    if (s == "mse") return MapMetric::mse;
    return std::nullopt;
}

Image anomaly_map(const Image& x, const Image& x_hat, double alpha, double beta,
                  const SsimConfig& cfg) {
    require(x.same_shape(x_hat), "anomaly_map: shape mismatch");
    require(alpha >= 0 && beta >= 0, "anomaly_map: weights must be non-negative");
    Image out(x.h, x.w);
    Image ssim = beta > 0 ? ssim_map(x, x_hat, cfg) : Image(x.h, x.w, 1.f);
    for (size_t i = 0; i < out.pix.size(); ++i) {
        double l1 = std::abs(double(x.pix[i]) - double(x_hat.pix[i]));
        double dssim = (1.0 - double(ssim.pix[i])) / 2.0;
        out.pix[i] = float(std::clamp(alpha * l1 + beta * dssim, 0.0, 1.0));
    }
    return out;
}

Image anomaly_map_metric(const Image& x, const Image& x_hat, MapMetric metric,
                         double alpha, double beta, const SsimConfig& cfg) {
    switch (metric) {
        case MapMetric::weighted:
            return anomaly_map(x, x_hat, alpha, beta, cfg);
        case MapMetric::l1: {
            Image out(x.h, x.w);
            require(x.same_shape(x_hat), "anomaly_map_metric: shape mismatch");
            for (size_t i = 0; i < out.pix.size(); ++i)
                out.pix[i] = float(std::abs(double(x.pix[i]) - double(x_hat.pix[i])));
            return out;
        }
        case MapMetric::ssim: {
            Image ssim = ssim_map(x, x_hat, cfg);
            Image out(x.h, x.w);
            for (size_t i = 0; i < out.pix.size(); ++i)
                out.pix[i] = float((1.0 - double(ssim.pix[i])) / 2.0);
            return out;
        }
        default: {  // mse
            Image out(x.h, x.w);
            require(x.same_shape(x_hat), "anomaly_map_metric: shape mismatch");
            for (size_t i = 0; i < out.pix.size(); ++i) {
                double d = double(x.pix[i]) - double(x_hat.pix[i]);
                out.pix[i] = float(d * d);
            }
            return out;
        }
    }
}

Threshold select_threshold_youden(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
    require(scores.size() == labels.size(), "select_threshold_youden: length mismatch");
    size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    require(n_pos > 0 && n_neg > 0, "threshold fitting requires both classes");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // unique sorted scores with per-value class counts
    std::vector<double> uniq;
    std::vector<size_t> pos_at, neg_at;
    for (size_t i = 0; i < order.size();) {
        size_t j = i;
        size_t p = 0, ng = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? p : ng)++;
            ++j;
        }
        uniq.push_back(scores[order[i]]);
        pos_at.push_back(p);
        neg_at.push_back(ng);
        i = j;
    }

    struct Candidate {
        double t;
        double gap;  // sentinels get 0 so interior midpoints win ties
    };
    std::vector<Candidate> candidates;
    candidates.push_back({uniq.front() - 1.0, 0.0});
    for (size_t i = 0; i + 1 < uniq.size(); ++i)
        candidates.push_back({0.5 * (uniq[i] + uniq[i + 1]), uniq[i + 1] - uniq[i]});
    candidates.push_back({uniq.back() + 1.0, 0.0});

    Threshold best;
    best.youden_j = -2;
    double best_gap = -1;
    size_t pos_below = 0, neg_below = 0, idx = 0;
    for (const auto& cand : candidates) {
        while (idx < uniq.size() && uniq[idx] < cand.t) {
            pos_below += pos_at[idx];
            neg_below += neg_at[idx];
            ++idx;
        }
        // classify positive when score > t
        size_t tp = n_pos - pos_below;
        size_t tn = neg_below;
        double j = double(tp) / double(n_pos) + double(tn) / double(n_neg) - 1.0;
        bool better = j > best.youden_j ||
                      (j == best.youden_j &&
                       (cand.gap > best_gap ||
                        (cand.gap == best_gap && cand.t < best.t_star)));
        if (better) {
            best.t_star = cand.t;
            best.youden_j = j;
            best_gap = cand.gap;
        }
    }
    return best;
}

std::vector<int> classify(const std::vector<double>& scores, double t_star) {
    std::vector<int> out(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > t_star ? 1 : 0;
    return out;
}

MapBinarization binarize_map(const Image& map, BinarizeMapMethod method, double param,
                             const roi::RoiMask* roi) {
    if (roi) require(roi->same_shape(map), "binarize_map: roi shape mismatch");
    MapBinarization out;
    out.mask.assign(map.pix.size(), 0);

    std::vector<float> values;
    values.reserve(map.pix.size());
    for (size_t i = 0; i < map.pix.size(); ++i)
        if (!roi || roi->mask[i]) values.push_back(map.pix[i]);
    if (values.empty()) {
        out.degenerate = true;
        return out;
    }

    bool strict = false;  // percentile predicts strictly-above
    switch (method) {
        case BinarizeMapMethod::global_otsu: {
            auto t = roi::otsu_threshold(values);
            if (!t) {
                out.degenerate = true;
                return out;
            }
            out.threshold = *t;
            break;
        }
        case BinarizeMapMethod::percentile: {
            require(param >= 0 && param <= 100, "binarize_map: percentile must be in [0,100]");
            std::vector<float> sorted = values;
            std::sort(sorted.begin(), sorted.end());
            size_t k = size_t(std::ceil(param / 100.0 * double(sorted.size())));
            k = std::min(std::max<size_t>(k, 1) - 1, sorted.size() - 1);
            out.threshold = sorted[k];
            strict = true;
            break;
        }
        case BinarizeMapMethod::fixed:
            out.threshold = param;
            break;
    }

    for (size_t i = 0; i < map.pix.size(); ++i) {
        if (roi && !roi->mask[i]) continue;
        double v = map.pix[i];
        out.mask[i] = (strict ? v > out.threshold : v >= out.threshold) ? 1 : 0;
    }
    return out;
}

}  // namespace octad::score
