#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "octad/common.hpp"

namespace octad::eval {

// Tie-aware AUROC via midranks (Mann-Whitney). Ties between a positive and a
// negative score count 1/2, so the result equals exhaustive pair counting.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

struct F1Accuracy {
    double f1 = 0;
    double accuracy = 0;
};

// positive class = anomalous (label 1); F1 = 0 when its denominator is 0
F1Accuracy f1_accuracy(const std::vector<int>& pred, const std::vector<int>& labels);

struct OverlapScores {
    double dice = 0;
    double iou = 0;
};

// Both masks empty -> {1,1}; exactly one empty -> {0,0}.
OverlapScores dice_miou(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt);

struct EvalReport {
    std::string task;  // "detection" | "segmentation"
    std::vector<std::pair<std::string, double>> metrics;  // insertion-ordered
    size_t n_samples = 0;
    std::string config_snapshot;
    std::vector<std::string> per_sample;  // one free-form record per sample

    double metric(const std::string& name) const {
        for (const auto& [k, v] : metrics)
            if (k == name) return v;
        throw Error("EvalReport: no metric named " + name);
    }

    std::string to_text() const;   // aligned human-readable columns
    std::string to_csv() const;    // "metric,value" rows with header
};

}  // namespace octad::eval
