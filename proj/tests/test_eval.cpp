#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "octad/eval.hpp"

using namespace octad;
using namespace octad::eval;

namespace {

// O(n^2) pair-counting oracle: ties get 1/2
double auroc_pair_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0;
    size_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / double(pairs);
}

}  // namespace

TEST_CASE("auroc hand cases") {
    CHECK(auroc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    // pairs: (1,2)+,(1,3)+,(2,2)=1/2,(2,3)+ -> 3.5/4
    CHECK(auroc({1, 2, 2, 3}, {0, 0, 1, 1}) == doctest::Approx(0.875));
}

TEST_CASE("auroc equals pair-counting oracle exactly") {
    Rng rng(101);
    for (int trial = 0; trial < 500; ++trial) {
        int n = 2 + rng.uniform_int(199);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            // coarse grid forces plenty of ties
            scores[i] = rng.uniform_int(8) / 4.0;
            labels[i] = rng.uniform_int(2);
            (labels[i] ? has1 : has0) = true;
        }
        if (!has0 || !has1) {
            labels[0] = 0;
            labels[n - 1 == 0 ? 0 : n - 1] = 1;
            if (n == 1) continue;
        }
        CHECK(auroc(scores, labels) == auroc_pair_oracle(scores, labels));
    }
}

TEST_CASE("auroc invariant under strictly increasing transforms") {
    Rng rng(55);
    std::vector<double> scores(60);
    std::vector<int> labels(60);
    for (size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform(0, 1);
        labels[i] = rng.uniform_int(2);
    }
    labels[0] = 0;
    labels[1] = 1;
    double base = auroc(scores, labels);

    auto transformed = scores;
    for (auto& s : transformed) s = std::exp(3 * s) + 7;
    CHECK(auroc(transformed, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("auroc chance level on independent labels") {
    Rng rng(77);
    std::vector<double> scores(2000);
    std::vector<int> labels(2000);
    for (size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform(0, 1);
        labels[i] = rng.uniform_int(2);
    }
    CHECK(auroc(scores, labels) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("auroc rejects single-class labels") {
    CHECK_THROWS_AS(auroc({0.1, 0.2}, {1, 1}), Error);
}

TEST_CASE("f1_accuracy") {
    SUBCASE("perfect predictor") {
        std::vector<int> y = {0, 1, 1, 0, 1};
        auto r = f1_accuracy(y, y);
        CHECK(r.f1 == doctest::Approx(1.0));
        CHECK(r.accuracy == doctest::Approx(1.0));
    }
    SUBCASE("degenerate all-zero predictor") {
        std::vector<int> pred(10, 0);
        std::vector<int> labels(10, 0);
        for (int i = 0; i < 5; ++i) labels[i] = 1;
        auto r = f1_accuracy(pred, labels);
        CHECK(r.f1 == doctest::Approx(0.0));
        CHECK(r.accuracy == doctest::Approx(0.5));
    }
    SUBCASE("hand confusion matrix TP=3 FP=1 FN=2 TN=4") {
        std::vector<int> pred = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
        std::vector<int> labels = {1, 1, 1, 0, 1, 1, 0, 0, 0, 0};
        auto r = f1_accuracy(pred, labels);
        CHECK(r.f1 == doctest::Approx(6.0 / 9.0));
        CHECK(r.accuracy == doctest::Approx(0.7));
    }
    SUBCASE("matches confusion-matrix oracle on random instances") {
        Rng rng(31);
        for (int trial = 0; trial < 100; ++trial) {
            int n = 1 + rng.uniform_int(50);
            std::vector<int> pred(n), labels(n);
            for (int i = 0; i < n; ++i) {
                pred[i] = rng.uniform_int(2);
                labels[i] = rng.uniform_int(2);
            }
            int tp = 0, fp = 0, fn = 0, tn = 0;
            for (int i = 0; i < n; ++i) {
                tp += pred[i] == 1 && labels[i] == 1;
                fp += pred[i] == 1 && labels[i] == 0;
                fn += pred[i] == 0 && labels[i] == 1;
                tn += pred[i] == 0 && labels[i] == 0;
            }
            auto r = f1_accuracy(pred, labels);
            double denom = 2.0 * tp + fp + fn;
            CHECK(r.f1 == doctest::Approx(denom > 0 ? 2.0 * tp / denom : 0.0));
            CHECK(r.accuracy == doctest::Approx(double(tp + tn) / n));
        }
    }
}

TEST_CASE("dice_miou") {
    SUBCASE("identical nonempty") {
        std::vector<uint8_t> m = {1, 1, 0, 0};
        auto r = dice_miou(m, m);
        CHECK(r.dice == doctest::Approx(1.0));
        CHECK(r.iou == doctest::Approx(1.0));
    }
    SUBCASE("disjoint nonempty") {
        std::vector<uint8_t> a = {1, 1, 0, 0}, b = {0, 0, 1, 1};
        auto r = dice_miou(a, b);
        CHECK(r.dice == doctest::Approx(0.0));
        CHECK(r.iou == doctest::Approx(0.0));
    }
    SUBCASE("set-arithmetic hand case |P|=|G|=100 overlap 50") {
        std::vector<uint8_t> p(300, 0), g(300, 0);
        for (int i = 0; i < 100; ++i) p[i] = 1;        // P = [0,100)
        for (int i = 50; i < 150; ++i) g[i] = 1;       // G = [50,150)
        auto r = dice_miou(p, g);
        CHECK(r.dice == doctest::Approx(0.5));
        CHECK(r.iou == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("empty conventions") {
        std::vector<uint8_t> e(8, 0), m(8, 0);
        m[2] = 1;
        auto both = dice_miou(e, e);
        CHECK(both.dice == doctest::Approx(1.0));
        CHECK(both.iou == doctest::Approx(1.0));
        auto one = dice_miou(e, m);
        CHECK(one.dice == doctest::Approx(0.0));
        CHECK(one.iou == doctest::Approx(0.0));
    }
    SUBCASE("dice >= iou with equality only at 0 or 1") {
        Rng rng(13);
        for (int trial = 0; trial < 200; ++trial) {
            int n = 1 + rng.uniform_int(64);
            std::vector<uint8_t> p(n), g(n);
            for (int i = 0; i < n; ++i) {
                p[i] = uint8_t(rng.uniform_int(2));
                g[i] = uint8_t(rng.uniform_int(2));
            }
            auto r = dice_miou(p, g);
            // set-arithmetic oracle
            size_t np = 0, ng = 0, ni = 0;
            for (int i = 0; i < n; ++i) {
                np += p[i];
                ng += g[i];
                ni += p[i] && g[i];
            }
            if (np == 0 && ng == 0) {
                CHECK(r.dice == 1.0);
                CHECK(r.iou == 1.0);
            } else {
                CHECK(r.dice == doctest::Approx(2.0 * ni / double(np + ng)));
                CHECK(r.iou == doctest::Approx(double(ni) / double(np + ng - ni)));
            }
            CHECK(r.dice >= r.iou);
            if (r.dice == r.iou) CHECK((r.dice == 0.0 || r.dice == 1.0));
        }
    }
    SUBCASE("shape mismatch") {
        std::vector<uint8_t> a(4, 0), b(5, 0);
        CHECK_THROWS_AS(dice_miou(a, b), Error);
    }
}

TEST_CASE("EvalReport emits text and csv") {
    EvalReport rep;
    rep.task = "detection";
    rep.n_samples = 12;
    rep.metrics = {{"F1", 0.75}, {"Acc", 0.7}, {"AUROC", 0.9}, {"t_star", 0.032}};
    rep.config_snapshot = "threshold_policy: fit";

    CHECK(rep.metric("AUROC") == doctest::Approx(0.9));
    CHECK_THROWS_AS(rep.metric("nope"), Error);

    auto text = rep.to_text();
    CHECK(text.find("detection") != std::string::npos);
    CHECK(text.find("AUROC") != std::string::npos);

    auto csv = rep.to_csv();
    CHECK(csv.rfind("metric,value\n", 0) == 0);
    CHECK(csv.find("F1,0.75") != std::string::npos);
}
