#include "octad/eval.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace octad::eval {

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size(), "auroc: scores/labels length mismatch");
    size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    require(n_pos > 0 && n_neg > 0, "auroc: both classes required");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // midranks over tied groups, accumulated directly into the positive rank sum
    double pos_rank_sum = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * double(i + 1 + j);  // mean of ranks i+1 .. j
        for (size_t k = i; k < j; ++k)
            if (labels[order[k]]) pos_rank_sum += midrank;
        i = j;
    }
    double u = pos_rank_sum - double(n_pos) * double(n_pos + 1) / 2.0;
    return u / (double(n_pos) * double(n_neg));
}

F1Accuracy f1_accuracy(const std::vector<int>& pred, const std::vector<int>& labels) {
    require(pred.size() == labels.size(), "f1_accuracy: length mismatch");
    size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && labels[i]) ++tp;
        else if (pred[i] && !labels[i]) ++fp;
        else if (!pred[i] && labels[i]) ++fn;
        else ++tn;
    }
    F1Accuracy out;
    double denom = double(2 * tp + fp + fn);
    out.f1 = denom > 0 ? 2.0 * double(tp) / denom : 0.0;
    out.accuracy = pred.empty() ? 0.0 : double(tp + tn) / double(pred.size());
    return out;
}

OverlapScores dice_miou(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt) {
    require(pred.size() == gt.size(), "dice_miou: shape mismatch");
    size_t p = 0, g = 0, inter = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        bool bp = pred[i] != 0, bg = gt[i] != 0;
        p += bp;
        g += bg;
        inter += bp && bg;
    }
    if (p == 0 && g == 0) return {1.0, 1.0};
    OverlapScores out;
    out.dice = 2.0 * double(inter) / double(p + g);
    size_t uni = p + g - inter;
    out.iou = uni > 0 ? double(inter) / double(uni) : 0.0;
    return out;
}

std::string EvalReport::to_text() const {
    std::ostringstream os;
    os << "task: " << task << "\n";
    os << "samples: " << n_samples << "\n";
    size_t width = 6;
    for (const auto& [k, v] : metrics) width = std::max(width, k.size());
    for (const auto& [k, v] : metrics)
        os << std::left << std::setw(int(width) + 2) << k << std::setprecision(6)
           << std::fixed << v << "\n";
    if (!config_snapshot.empty()) {
        os << "--\n";
        os << config_snapshot;
        if (config_snapshot.back() != '\n') os << "\n";
    }
    return os.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "metric,value\n";
    os << std::setprecision(9);
    for (const auto& [k, v] : metrics) os << k << "," << v << "\n";
    return os.str();
}

}  // namespace octad::eval
