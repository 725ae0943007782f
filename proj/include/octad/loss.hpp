#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "octad/common.hpp"

namespace octad::loss {

// Term weights of the composite objective. alpha_roi and margin carry the
// published defaults; the lambdas follow common VQGAN practice.
struct LossWeights {
    double lambda_l1 = 1.0;
    double lambda_perc = 1.0;
    double lambda_vq = 1.0;
    double lambda_triplet = 1.0;
    double lambda_gan = 0.8;
    double beta_commit = 0.25;
    double alpha_roi = 6.0;
    double margin = 1.0;

    void validate() const {
        require(lambda_l1 >= 0 && lambda_perc >= 0 && lambda_vq >= 0 &&
                    lambda_triplet >= 0 && lambda_gan >= 0 && beta_commit >= 0 &&
                    alpha_roi >= 0,
                "LossWeights: weights must be non-negative");
        require(margin > 0, "LossWeights: margin must be positive");
    }
};

// ---------------------------------------------------------------------------
// Pixel losses

template <typename T>
double l1_mean(std::span<const T> x, std::span<const T> y) {
    require(x.size() == y.size(), "l1_mean: shape mismatch");
    double s = 0;
    for (size_t i = 0; i < x.size(); ++i) s += std::abs(double(x[i]) - double(y[i]));
    return x.empty() ? 0.0 : s / x.size();
}

// lambda_l1 * mean|x_t - x_hat| + lambda_perc * perc(x_t, x_hat)
template <typename T>
double rec_loss(std::span<const T> x_t, std::span<const T> x_hat,
                const LossWeights& w,
                const std::function<double(std::span<const T>, std::span<const T>)>& perc) {
    require(x_t.size() == x_hat.size(), "rec_loss: shape mismatch");
    double v = w.lambda_l1 * l1_mean(x_t, x_hat);
    if (w.lambda_perc > 0 && perc) v += w.lambda_perc * perc(x_t, x_hat);
    return v;
}

// (1/N) sum_i (1 + alpha*roi_i) (x_i - x_hat_i)^2
template <typename T>
double roi_loss(std::span<const T> x, std::span<const T> x_hat,
                std::span<const uint8_t> roi, double alpha) {
    require(x.size() == x_hat.size() && x.size() == roi.size(),
            "roi_loss: shape mismatch");
    double s = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double d = double(x[i]) - double(x_hat[i]);
        s += (1.0 + alpha * roi[i]) * d * d;
    }
    return x.empty() ? 0.0 : s / x.size();
}

// d roi_loss / d x_hat
template <typename T>
void roi_loss_grad(std::span<const T> x, std::span<const T> x_hat,
                   std::span<const uint8_t> roi, double alpha,
                   std::span<T> grad, double scale = 1.0) {
    require(x.size() == x_hat.size() && x.size() == grad.size() && x.size() == roi.size(),
            "roi_loss_grad: shape mismatch");
    const double n = double(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double d = double(x_hat[i]) - double(x[i]);
        grad[i] += T(scale * 2.0 * (1.0 + alpha * roi[i]) * d / n);
    }
}

// d mean|x_t - x_hat| / d x_hat  (subgradient 0 at exact equality)
template <typename T>
void l1_mean_grad(std::span<const T> x_t, std::span<const T> x_hat,
                  std::span<T> grad, double scale = 1.0) {
    const double n = double(x_t.size());
    for (size_t i = 0; i < x_t.size(); ++i) {
        double d = double(x_hat[i]) - double(x_t[i]);
        double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
        grad[i] += T(scale * sg / n);
    }
}

// ---------------------------------------------------------------------------
// Vector-quantization objective. Value is (1+beta)*mean||z_e - z_q||^2; the
// stop-gradients only route gradients: the embedding term trains the
// codebook, the commitment term trains the encoder.

template <typename T>
double vq_loss(std::span<const T> z_e, std::span<const T> z_q, double beta) {
    require(z_e.size() == z_q.size(), "vq_loss: shape mismatch");
    double s = 0;
    for (size_t i = 0; i < z_e.size(); ++i) {
        double d = double(z_e[i]) - double(z_q[i]);
        s += d * d;
    }
    return z_e.empty() ? 0.0 : (1.0 + beta) * s / z_e.size();
}

// Encoder-side (commitment) gradient: 2*beta*(z_e - z_q)/n
template <typename T>
void vq_commit_grad(std::span<const T> z_e, std::span<const T> z_q, double beta,
                    std::span<T> grad, double scale = 1.0) {
    require(z_e.size() == z_q.size() && z_e.size() == grad.size(),
            "vq_commit_grad: shape mismatch");
    const double n = double(z_e.size());
    for (size_t i = 0; i < z_e.size(); ++i)
        grad[i] += T(scale * 2.0 * beta * (double(z_e[i]) - double(z_q[i])) / n);
}

// Codebook-side (embedding) gradient: 2*(z_q - z_e)/n, scattered onto the
// assigned entries by the caller.
template <typename T>
void vq_embed_grad(std::span<const T> z_e, std::span<const T> z_q,
                   std::span<T> grad, double scale = 1.0) {
    require(z_e.size() == z_q.size() && z_e.size() == grad.size(),
            "vq_embed_grad: shape mismatch");
    const double n = double(z_e.size());
    for (size_t i = 0; i < z_e.size(); ++i)
        grad[i] += T(scale * 2.0 * (double(z_q[i]) - double(z_e[i])) / n);
}

// ---------------------------------------------------------------------------
// Triplet loss: max(||fa-fp||^2 - ||fa-fn||^2 + margin, 0)

template <typename T>
double triplet_loss(std::span<const T> fa, std::span<const T> fp,
                    std::span<const T> fn, double margin) {
    require(fa.size() == fp.size() && fa.size() == fn.size(),
            "triplet_loss: dimension mismatch");
    double dp = 0, dn = 0;
    for (size_t i = 0; i < fa.size(); ++i) {
        double ep = double(fa[i]) - double(fp[i]);
        double en = double(fa[i]) - double(fn[i]);
        dp += ep * ep;
        dn += en * en;
    }
    return std::max(dp - dn + margin, 0.0);
}

// Gradients w.r.t. all three embeddings; zero when the hinge is inactive.
template <typename T>
void triplet_loss_grad(std::span<const T> fa, std::span<const T> fp,
                       std::span<const T> fn, double margin,
                       std::span<T> ga, std::span<T> gp, std::span<T> gn,
                       double scale = 1.0) {
    require(fa.size() == fp.size() && fa.size() == fn.size(),
            "triplet_loss_grad: dimension mismatch");
    if (triplet_loss(fa, fp, fn, margin) <= 0.0) return;
    for (size_t i = 0; i < fa.size(); ++i) {
        double a = fa[i], p = fp[i], n = fn[i];
        ga[i] += T(scale * 2.0 * (n - p));
        gp[i] += T(scale * -2.0 * (a - p));
        gn[i] += T(scale * 2.0 * (a - n));
    }
}

// ---------------------------------------------------------------------------
// Adversarial losses on patch logits, numerically stable log-sigmoid form.
// log(sigmoid(x)) = -softplus(-x), log(1 - sigmoid(x)) = -softplus(x).

inline double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct GanLosses {
    double discriminator = 0;
    double generator = 0;
};

template <typename T>
GanLosses gan_losses(std::span<const T> real_logits, std::span<const T> fake_logits) {
    require(real_logits.size() == fake_logits.size(), "gan_losses: shape mismatch");
    require(!real_logits.empty(), "gan_losses: empty logit maps");
    double d = 0, g = 0;
    for (size_t i = 0; i < real_logits.size(); ++i) {
        d += softplus(-double(real_logits[i]));  // -log sigmoid(real)
        d += softplus(double(fake_logits[i]));   // -log(1 - sigmoid(fake))
        g += softplus(-double(fake_logits[i]));  // -log sigmoid(fake), non-saturating
    }
    const double n = double(real_logits.size());
    return {d / n, g / n};
}

// d generator_loss / d fake_logits = (sigmoid(fake) - 1)/n
template <typename T>
void gan_generator_grad(std::span<const T> fake_logits, std::span<T> grad,
                        double scale = 1.0) {
    const double n = double(fake_logits.size());
    for (size_t i = 0; i < fake_logits.size(); ++i) {
        double s = 1.0 / (1.0 + std::exp(-double(fake_logits[i])));
        grad[i] += T(scale * (s - 1.0) / n);
    }
}

// d discriminator_loss / d {real, fake} logits
template <typename T>
void gan_discriminator_grad(std::span<const T> real_logits,
                            std::span<const T> fake_logits,
                            std::span<T> grad_real, std::span<T> grad_fake,
                            double scale = 1.0) {
    const double n = double(real_logits.size());
    for (size_t i = 0; i < real_logits.size(); ++i) {
        double sr = 1.0 / (1.0 + std::exp(-double(real_logits[i])));
        double sf = 1.0 / (1.0 + std::exp(-double(fake_logits[i])));
        grad_real[i] += T(scale * (sr - 1.0) / n);
        grad_fake[i] += T(scale * sf / n);
    }
}

// ---------------------------------------------------------------------------
// Total objective

struct LossParts {
    double roi = 0;      // pixel reconstruction term (entered with weight 1)
    double perc = 0;
    double vq = 0;
    double triplet = 0;
    double gan = 0;      // generator-side adversarial term
};

inline double total_loss(const LossParts& p, const LossWeights& w, bool gan_gate_open) {
    double t = p.roi + w.lambda_perc * p.perc + w.lambda_vq * p.vq +
               w.lambda_triplet * p.triplet;
    if (gan_gate_open) t += w.lambda_gan * p.gan;
    return t;
}

// ---------------------------------------------------------------------------
// Image-typed convenience wrappers used by the pipeline (float storage,
// double accumulation).

inline std::span<const float> as_span(const Image& im) {
    return {im.pix.data(), im.pix.size()};
}

inline double roi_loss(const Image& x, const Image& x_hat,
                       std::span<const uint8_t> roi, double alpha) {
    require(x.same_shape(x_hat), "roi_loss: shape mismatch");
    return roi_loss<float>(as_span(x), as_span(x_hat), roi, alpha);
}

inline double l1_mean(const Image& x, const Image& y) {
    require(x.same_shape(y), "l1_mean: shape mismatch");
    return l1_mean<float>(as_span(x), as_span(y));
}

}  // namespace octad::loss
