#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "octad/loss.hpp"

using namespace octad;
using namespace octad::loss;

namespace {

// Central finite differences of a scalar function of a flat double vector.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double eps = 1e-6) {
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double orig = x[i];
        x[i] = orig + eps;
        double fp = f(x);
        x[i] = orig - eps;
        double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2 * eps);
    }
    return g;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-8});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

std::vector<double> random_vec(Rng& rng, size_t n, double lo = -1, double hi = 1) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("rec_loss analytic cases") {
    std::vector<double> x = {0, 1, 1, 0};
    LossWeights w;
    w.lambda_perc = 0;
    auto no_perc = std::function<double(std::span<const double>, std::span<const double>)>{};

    CHECK(rec_loss<double>(x, x, w, no_perc) == doctest::Approx(0.0));

    std::vector<double> shifted = {0.5, 1.5, 1.5, 0.5};
    CHECK(rec_loss<double>(x, shifted, w, no_perc) == doctest::Approx(0.5));

    std::vector<double> xh = {0.5, 1, 1, 0};
    CHECK(rec_loss<double>(x, xh, w, no_perc) == doctest::Approx(0.125));
}

TEST_CASE("vq_loss values") {
    std::vector<double> ze = {1, 0};
    std::vector<double> zq = {0, 0};
    CHECK(vq_loss<double>(ze, ze, 0.25) == doctest::Approx(0.0));
    // (1+0.25) * (1^2+0^2)/2 = 0.625
    CHECK(vq_loss<double>(ze, zq, 0.25) == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("vq_loss value identity (1+beta)*mean squared distance") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto ze = random_vec(rng, 16);
        auto zq = random_vec(rng, 16);
        double beta = rng.uniform(0, 1);
        double msd = 0;
        for (size_t i = 0; i < ze.size(); ++i) msd += (ze[i] - zq[i]) * (ze[i] - zq[i]);
        msd /= double(ze.size());
        CHECK(vq_loss<double>(ze, zq, beta) == doctest::Approx((1 + beta) * msd).epsilon(1e-12));
    }
}

TEST_CASE("roi_loss hand values") {
    SUBCASE("alpha=0 equals MSE") {
        Rng rng(3);
        auto x = random_vec(rng, 16, 0, 1);
        auto xh = random_vec(rng, 16, 0, 1);
        std::vector<uint8_t> roi(16, 1);
        double mse = 0;
        for (size_t i = 0; i < x.size(); ++i) mse += (x[i] - xh[i]) * (x[i] - xh[i]);
        mse /= 16;
        CHECK(roi_loss<double>(x, xh, roi, 0.0) == doctest::Approx(mse).epsilon(1e-12));
    }
    SUBCASE("identity") {
        std::vector<double> x = {0.2, 0.8};
        std::vector<uint8_t> roi = {1, 0};
        CHECK(roi_loss<double>(x, x, roi, 6.0) == doctest::Approx(0.0));
    }
    SUBCASE("two-pixel hand sum") {
        // roi=[1,0], alpha=6, diffs [0.1,0.2] -> (7*0.01 + 1*0.04)/2 = 0.055
        std::vector<double> x = {0.5, 0.5};
        std::vector<double> xh = {0.6, 0.7};
        std::vector<uint8_t> roi = {1, 0};
        CHECK(roi_loss<double>(x, xh, roi, 6.0) == doctest::Approx(0.055).epsilon(1e-12));
    }
}

TEST_CASE("triplet_loss hand values") {
    std::vector<double> z2 = {0, 0};
    CHECK(triplet_loss<double>(z2, z2, z2, 1.0) == doctest::Approx(1.0));

    std::vector<double> fa = {0, 0}, fp = {0, 0}, fn = {2, 0};
    CHECK(triplet_loss<double>(fa, fp, fn, 1.0) == doctest::Approx(0.0));

    fp = {1, 0};
    fn = {1, 1};
    CHECK(triplet_loss<double>(fa, fp, fn, 1.0) == doctest::Approx(0.0));
    fn = {0.5, 0.5};
    CHECK(triplet_loss<double>(fa, fp, fn, 1.0) == doctest::Approx(1.5));
}

TEST_CASE("gan_losses analytic cases") {
    SUBCASE("perfect discriminator limit") {
        std::vector<double> real(4, 50.0), fake(4, -50.0);
        auto g = gan_losses<double>(real, fake);
        CHECK(g.discriminator == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("zero logits") {
        std::vector<double> zeros(6, 0.0);
        auto g = gan_losses<double>(zeros, zeros);
        CHECK(g.discriminator == doctest::Approx(2 * std::log(2)).epsilon(1e-9));
        CHECK(g.generator == doctest::Approx(std::log(2)).epsilon(1e-9));
    }
    SUBCASE("finite at logit magnitude 100") {
        std::vector<double> real(4, 100.0), fake(4, -100.0);
        auto g = gan_losses<double>(real, fake);
        CHECK(std::isfinite(g.discriminator));
        CHECK(std::isfinite(g.generator));
        auto flipped = gan_losses<double>(fake, real);
        CHECK(std::isfinite(flipped.discriminator));
        CHECK(std::isfinite(flipped.generator));
    }
}

TEST_CASE("total_loss weighting") {
    LossParts p{0.1, 0.2, 0.3, 0.4, 0.5};
    LossWeights w;
    w.lambda_perc = w.lambda_vq = w.lambda_triplet = w.lambda_gan = 1.0;
    CHECK(total_loss(p, w, true) == doctest::Approx(1.5).epsilon(1e-12));

    LossParts zero{};
    CHECK(total_loss(zero, w, true) == doctest::Approx(0.0));

    // gan gate closed drops the gan term
    CHECK(total_loss(p, w, false) == doctest::Approx(1.0).epsilon(1e-12));

    // linear in each lambda: doubling one weight adds exactly that term's value
    for (int which = 0; which < 4; ++which) {
        LossWeights w2 = w;
        double term = 0;
        switch (which) {
            case 0: w2.lambda_perc = 2; term = p.perc; break;
            case 1: w2.lambda_vq = 2; term = p.vq; break;
            case 2: w2.lambda_triplet = 2; term = p.triplet; break;
            case 3: w2.lambda_gan = 2; term = p.gan; break;
        }
        CHECK(total_loss(p, w2, true) - total_loss(p, w, true) ==
              doctest::Approx(term).epsilon(1e-12));
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(42);
    const size_t n = 16;  // 4x4 instances

    SUBCASE("roi_loss gradient") {
        for (int trial = 0; trial < 10; ++trial) {
            auto x = random_vec(rng, n, 0, 1);
            auto xh = random_vec(rng, n, 0, 1);
            std::vector<uint8_t> roi(n);
            for (auto& r : roi) r = rng.uniform_int(2);
            double alpha = 6.0;

            std::vector<double> analytic(n, 0.0);
            roi_loss_grad<double>(x, xh, roi, alpha, analytic);
            auto fd = fd_gradient(
                [&](const std::vector<double>& v) { return roi_loss<double>(x, v, roi, alpha); },
                xh);
            CHECK(max_rel_err(analytic, fd) < 1e-4);
        }
    }

    SUBCASE("triplet_loss gradient") {
        int done = 0;
        while (done < 10) {
            auto fa = random_vec(rng, 8), fp = random_vec(rng, 8), fn = random_vec(rng, 8);
            // stay away from the hinge kink where FD is meaningless
            double raw = triplet_loss<double>(fa, fp, fn, 1.0);
            if (std::abs(raw) < 0.05) continue;
            ++done;

            std::vector<double> ga(8, 0.0), gp(8, 0.0), gn(8, 0.0);
            triplet_loss_grad<double>(fa, fp, fn, 1.0, ga, gp, gn);

            auto fda = fd_gradient(
                [&](const std::vector<double>& v) { return triplet_loss<double>(v, fp, fn, 1.0); }, fa);
            auto fdp = fd_gradient(
                [&](const std::vector<double>& v) { return triplet_loss<double>(fa, v, fn, 1.0); }, fp);
            auto fdn = fd_gradient(
                [&](const std::vector<double>& v) { return triplet_loss<double>(fa, fp, v, 1.0); }, fn);
            CHECK(max_rel_err(ga, fda) < 1e-4);
            CHECK(max_rel_err(gp, fdp) < 1e-4);
            CHECK(max_rel_err(gn, fdn) < 1e-4);
        }
    }

    SUBCASE("vq commitment gradient") {
        // Differentiate only the commitment term: the embedding term is
        // stop-gradient w.r.t. the encoder, so the oracle freezes it.
        for (int trial = 0; trial < 10; ++trial) {
            auto ze = random_vec(rng, n);
            auto zq = random_vec(rng, n);
            double beta = 0.25;

            std::vector<double> analytic(n, 0.0);
            vq_commit_grad<double>(ze, zq, beta, analytic);

            auto commit_term = [&](const std::vector<double>& v) {
                double s = 0;
                for (size_t i = 0; i < v.size(); ++i) s += (v[i] - zq[i]) * (v[i] - zq[i]);
                return beta * s / double(v.size());
            };
            auto fd = fd_gradient(commit_term, ze);
            CHECK(max_rel_err(analytic, fd) < 1e-4);

            // element-wise closed form 2*beta*(ze - zq)/n
            for (size_t i = 0; i < n; ++i)
                CHECK(analytic[i] ==
                      doctest::Approx(2 * beta * (ze[i] - zq[i]) / double(n)).epsilon(1e-12));
        }
    }

    SUBCASE("gan generator gradient") {
        auto logits = random_vec(rng, 12, -3, 3);
        std::vector<double> analytic(12, 0.0);
        gan_generator_grad<double>(logits, analytic);
        auto fd = fd_gradient(
            [&](const std::vector<double>& v) {
                std::vector<double> dummy(v.size(), 0.0);
                return gan_losses<double>(dummy, v).generator;
            },
            logits);
        CHECK(max_rel_err(analytic, fd) < 1e-4);
    }
}

TEST_CASE("losses are non-negative and finite on random inputs") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto x = random_vec(rng, 16, 0, 1);
        auto y = random_vec(rng, 16, 0, 1);
        std::vector<uint8_t> roi(16);
        for (auto& r : roi) r = rng.uniform_int(2);
        auto fa = random_vec(rng, 8), fp = random_vec(rng, 8), fn = random_vec(rng, 8);

        double v1 = roi_loss<double>(x, y, roi, 6.0);
        double v2 = vq_loss<double>(x, y, 0.25);
        double v3 = triplet_loss<double>(fa, fp, fn, 1.0);
        auto g = gan_losses<double>(x, y);
        for (double v : {v1, v2, v3, g.discriminator, g.generator}) {
            CHECK(v >= 0.0);
            CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("loss shape mismatches are rejected") {
    std::vector<double> a(4, 0.0), b(5, 0.0);
    std::vector<uint8_t> roi(4, 1);
    CHECK_THROWS_AS(roi_loss<double>(a, b, roi, 1.0), Error);
    CHECK_THROWS_AS(vq_loss<double>(a, b, 0.25), Error);
    CHECK_THROWS_AS(triplet_loss<double>(a, b, a, 1.0), Error);
    CHECK_THROWS_AS(gan_losses<double>(a, b), Error);
}
