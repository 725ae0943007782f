#pragma once

#include <optional>
#include <string>
#include <vector>

#include "octad/common.hpp"
#include "octad/model.hpp"
#include "octad/roi.hpp"

namespace octad::score {

struct AnomalyScore {
    double value = 0;  // mean absolute residual
    std::string image_id;
};

// mean |x - x_hat| with x_hat = decode(quantize(encode(x)))
AnomalyScore image_score(const Image& x, const model::VqModel& model,
                         const std::string& image_id = {});

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;  // dynamic range L = 1
};

// Per-pixel local SSIM with Gaussian-weighted window statistics and reflect
// padding; values in [-1, 1].
Image ssim_map(const Image& x, const Image& y, const SsimConfig& cfg = {});

enum class MapMetric { weighted, l1, ssim, mse };
const char* map_metric_name(MapMetric m);
std::optional<MapMetric> parse_map_metric(const std::string& s);

// Eq-of-record weighted map: alpha*|x - x_hat| + beta*(1 - SSIM)/2, clamped
// to [0,1]. (1-SSIM) spans [0,2], so it is halved to share the [0,1] scale
// of the absolute-residual term. The alternate metrics feed the comparison
// harness.
Image anomaly_map(const Image& x, const Image& x_hat, double alpha = 0.6,
                  double beta = 0.4, const SsimConfig& cfg = {});
Image anomaly_map_metric(const Image& x, const Image& x_hat, MapMetric metric,
                         double alpha = 0.6, double beta = 0.4,
                         const SsimConfig& cfg = {});

struct Threshold {
    double t_star = 0;
    double youden_j = 0;
    std::string fitted_on;
};

// t* maximizes J(t) = sensitivity + specificity - 1 over midpoints of
// consecutive sorted unique scores plus below-min/above-max sentinels.
// Ties in J resolve to the midpoint of the widest gap, then the smallest t.
Threshold select_threshold_youden(const std::vector<double>& scores,
                                  const std::vector<int>& labels);

// 1 iff score strictly exceeds t_star
std::vector<int> classify(const std::vector<double>& scores, double t_star);

enum class BinarizeMapMethod { global_otsu, percentile, fixed };

struct MapBinarization {
    std::vector<uint8_t> mask;
    double threshold = 0;
    bool degenerate = false;
};

// Thresholds an anomaly map into a predicted lesion mask. When a roi is
// given, statistics are computed over roi pixels and predictions outside it
// are forced to 0.
MapBinarization binarize_map(const Image& map, BinarizeMapMethod method, double param,
                             const roi::RoiMask* roi = nullptr);

}  // namespace octad::score
