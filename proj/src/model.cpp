#include "octad/model.hpp"

#include <cmath>

namespace octad::model {

int ModelConfig::stages() const {
    int s = 0, f = downsample_factor;
    while (f > 1) {
        require(f % 2 == 0, "ModelConfig: downsample_factor must be a power of two");
        f /= 2;
        ++s;
    }
    return s;
}

void ModelConfig::validate() const {
    require(input_resolution >= 16, "ModelConfig: input_resolution too small");
    require(downsample_factor >= 2, "ModelConfig: downsample_factor must be >= 2");
    require(input_resolution % downsample_factor == 0,
            "ModelConfig: input_resolution must be divisible by downsample_factor");
    require(codebook_size >= 2, "ModelConfig: codebook_size must be >= 2");
    require(codebook_dim >= 1, "ModelConfig: codebook_dim must be >= 1");
    require(int(channels.size()) == stages(),
            "ModelConfig: need one channel width per stride-2 stage");
    int dr = disc_reduction;
    require(dr >= 2 && (dr & (dr - 1)) == 0,
            "ModelConfig: disc_reduction must be a power of two >= 2");
    require(input_resolution % dr == 0,
            "ModelConfig: input_resolution must be divisible by disc_reduction");
}

QuantizedLatent quantize(const LatentGrid& grid, const Codebook& codebook) {
    require(grid.c == codebook.d, "quantize: latent depth != codebook dim");
    const int d = grid.c, h = grid.h, w = grid.w;
    QuantizedLatent out;
    out.indices.resize(size_t(h) * w);
    out.vectors = Tensor(d, h, w);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int best = 0;
            float best_dist = std::numeric_limits<float>::infinity();
            for (int e = 0; e < codebook.m; ++e) {
                const float* entry = codebook.entry(e);
                float dist = 0;
                for (int k = 0; k < d; ++k) {
                    float diff = grid.at(k, y, x) - entry[k];
                    dist += diff * diff;
                }
                if (dist < best_dist) {  // strict: ties keep the lowest index
                    best_dist = dist;
                    best = e;
                }
            }
            out.indices[size_t(y) * w + x] = best;
            const float* entry = codebook.entry(best);
            for (int k = 0; k < d; ++k) out.vectors.at(k, y, x) = entry[k];
        }
    }
    return out;
}

std::vector<float> mean_pool(const LatentGrid& grid) {
    std::vector<float> out(grid.c, 0.f);
    const double n = double(grid.h) * grid.w;
    for (int k = 0; k < grid.c; ++k) {
        double s = 0;
        const float* p = grid.plane(k);
        for (int i = 0; i < grid.h * grid.w; ++i) s += p[i];
        out[k] = float(s / n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// PerceptualNet

namespace {
constexpr uint64_t kPerceptualSeed = 0x70657263ull;  // frozen stack, fixed weights
constexpr double kNormEps = 1e-8;
}  // namespace

PerceptualNet::PerceptualNet() {
    Rng rng(derive_seed(kPerceptualSeed, "perceptual-init"));
    layers_.push_back(std::make_unique<Conv2d>("perc.c0", 1, 8, 3, 1, 1, rng));
    layers_.push_back(std::make_unique<ReLU>());
    tap_after_.push_back(1);
    layers_.push_back(std::make_unique<AvgPool2>());
    layers_.push_back(std::make_unique<Conv2d>("perc.c1", 8, 16, 3, 1, 1, rng));
    layers_.push_back(std::make_unique<ReLU>());
    tap_after_.push_back(4);
    layers_.push_back(std::make_unique<AvgPool2>());
    layers_.push_back(std::make_unique<Conv2d>("perc.c2", 16, 16, 3, 1, 1, rng));
    layers_.push_back(std::make_unique<ReLU>());
    tap_after_.push_back(7);
}

namespace {

// y[:,p] = f[:,p] / sqrt(sum_c f^2 + eps) per spatial position
Tensor channel_normalize(const Tensor& f) {
    Tensor out(f.c, f.h, f.w);
    const int hw = f.h * f.w;
    for (int i = 0; i < hw; ++i) {
        double ss = kNormEps;
        for (int c = 0; c < f.c; ++c) {
            double v = f.v[size_t(c) * hw + i];
            ss += v * v;
        }
        float inv = float(1.0 / std::sqrt(ss));
        for (int c = 0; c < f.c; ++c)
            out.v[size_t(c) * hw + i] = f.v[size_t(c) * hw + i] * inv;
    }
    return out;
}

}  // namespace

PerceptualNet::Feats PerceptualNet::run(const Image& x) const {
    Feats feats;
    Tensor cur = Tensor::from_image(x);
    feats.activations.reserve(layers_.size());
    Trace scratch;
    size_t next_tap = 0;
    for (size_t i = 0; i < layers_.size(); ++i) {
        cur = layers_[i]->forward(cur, scratch);
        feats.activations.push_back(cur);
        if (next_tap < tap_after_.size() && int(i) == tap_after_[next_tap]) {
            feats.raw.push_back(cur);
            feats.taps.push_back(channel_normalize(cur));
            ++next_tap;
        }
    }
    return feats;
}

double PerceptualNet::distance(const Image& a, const Image& b) const {
    require(a.h == b.h && a.w == b.w, "perceptual_distance: shape mismatch");
    Feats fa = run(a);
    Feats fb = run(b);
    double total = 0;
    for (size_t t = 0; t < fa.taps.size(); ++t) {
        const Tensor& ta = fa.taps[t];
        const Tensor& tb = fb.taps[t];
        double s = 0;
        for (size_t i = 0; i < ta.v.size(); ++i) {
            double d = double(ta.v[i]) - tb.v[i];
            s += d * d;
        }
        total += s / double(ta.h * ta.w);  // mean over positions, sum over channels
    }
    return total / double(fa.taps.size());
}

double PerceptualNet::distance_with_grad(const Image& a, const Image& b, double scale,
                                         Image& grad_b) const {
    require(a.h == b.h && a.w == b.w, "perceptual_distance: shape mismatch");
    require(grad_b.h == b.h && grad_b.w == b.w, "perceptual grad shape mismatch");

    // forward with traces on b (a is a constant)
    Feats fa = run(a);

    Tensor cur = Tensor::from_image(b);
    std::vector<Trace> traces(layers_.size());
    std::vector<Tensor> outs(layers_.size());
    for (size_t i = 0; i < layers_.size(); ++i) {
        cur = layers_[i]->forward(cur, traces[i]);
        outs[i] = cur;
    }

    double total = 0;
    std::vector<Tensor> tap_grads(tap_after_.size());
    for (size_t t = 0; t < tap_after_.size(); ++t) {
        const Tensor& raw_b = outs[size_t(tap_after_[t])];
        Tensor nb = channel_normalize(raw_b);
        const Tensor& na = fa.taps[t];

        const int hw = nb.h * nb.w;
        const double denom = double(hw) * double(tap_after_.size());
        double s = 0;
        // dL/d nb = 2 (nb - na) / (hw * ntaps); then through the normalize
        Tensor graw(raw_b.c, raw_b.h, raw_b.w);
        for (int i = 0; i < hw; ++i) {
            double ss = kNormEps;
            for (int c = 0; c < raw_b.c; ++c) {
                double v = raw_b.v[size_t(c) * hw + i];
                ss += v * v;
            }
            double inv = 1.0 / std::sqrt(ss);
            double dot = 0;  // sum_c (dL/dnb_c) * raw_c
            for (int c = 0; c < raw_b.c; ++c) {
                double diff = double(nb.v[size_t(c) * hw + i]) - na.v[size_t(c) * hw + i];
                s += diff * diff;
                double gn = 2.0 * diff / denom;
                dot += gn * raw_b.v[size_t(c) * hw + i];
            }
            for (int c = 0; c < raw_b.c; ++c) {
                double diff = double(nb.v[size_t(c) * hw + i]) - na.v[size_t(c) * hw + i];
                double gn = 2.0 * diff / denom;
                double raw = raw_b.v[size_t(c) * hw + i];
                graw.v[size_t(c) * hw + i] =
                    float(gn * inv - raw * dot * inv * inv * inv);
            }
        }
        total += s / double(hw);
        tap_grads[t] = std::move(graw);
    }
    total /= double(tap_after_.size());

    // backward through the stack, injecting tap gradients where they attach
    Tensor g;
    int tap_idx = int(tap_after_.size()) - 1;
    for (int i = int(layers_.size()) - 1; i >= 0; --i) {
        if (tap_idx >= 0 && tap_after_[size_t(tap_idx)] == i) {
            if (g.v.empty())
                g = tap_grads[size_t(tap_idx)];
            else
                for (size_t j = 0; j < g.v.size(); ++j)
                    g.v[j] += tap_grads[size_t(tap_idx)].v[j];
            --tap_idx;
        }
        if (g.v.empty()) continue;  // above the topmost tap nothing flows
        g = layers_[i]->backward(g, traces[size_t(i)]);
    }

    for (size_t i = 0; i < grad_b.pix.size(); ++i)
        grad_b.pix[i] += float(scale * g.v[i]);
    return total;
}

// ---------------------------------------------------------------------------
// VqModel

VqModel::VqModel(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = derive_rng(init_seed, "model-init");

    const auto& ch = cfg_.channels;
    const int S = cfg_.stages();

    // encoder: stem, stride-2 stages with residual blocks, projection to d
    encoder_.add(std::make_unique<Conv2d>("enc.stem", 1, ch[0], 3, 1, 1, rng));
    encoder_.add(std::make_unique<ReLU>());
    int prev = ch[0];
    for (int s = 0; s < S; ++s) {
        std::string base = "enc.s" + std::to_string(s);
        encoder_.add(std::make_unique<Conv2d>(base + ".down", prev, ch[s], 3, 2, 1, rng));
        encoder_.add(std::make_unique<ReLU>());
        encoder_.add(std::make_unique<ResBlock>(base + ".res", ch[s], rng));
        prev = ch[s];
    }
    encoder_.add(std::make_unique<Conv2d>("enc.out", prev, cfg_.codebook_dim, 3, 1, 1, rng));

    // decoder mirrors the encoder
    decoder_.add(std::make_unique<Conv2d>("dec.in", cfg_.codebook_dim, ch[S - 1], 3, 1, 1, rng));
    decoder_.add(std::make_unique<ResBlock>("dec.res_in", ch[S - 1], rng));
    for (int s = S - 1; s >= 1; --s) {
        std::string base = "dec.s" + std::to_string(s);
        decoder_.add(std::make_unique<UpsampleNearest2x>());
        decoder_.add(std::make_unique<Conv2d>(base + ".up", ch[s], ch[s - 1], 3, 1, 1, rng));
        decoder_.add(std::make_unique<ReLU>());
        decoder_.add(std::make_unique<ResBlock>(base + ".res", ch[s - 1], rng));
    }
    decoder_.add(std::make_unique<UpsampleNearest2x>());
    decoder_.add(std::make_unique<Conv2d>("dec.s0.up", ch[0], ch[0], 3, 1, 1, rng));
    decoder_.add(std::make_unique<ReLU>());
    decoder_.add(std::make_unique<Conv2d>("dec.out", ch[0], 1, 3, 1, 1, rng));
    decoder_.add(std::make_unique<Sigmoid>());

    // patch discriminator: strided conv stack down to the logit grid
    int disc_stages = 0;
    for (int f = cfg_.disc_reduction; f > 1; f /= 2) ++disc_stages;
    int dprev = 1;
    for (int s = 0; s < disc_stages; ++s) {
        int dch = 8 << s;
        discriminator_.add(std::make_unique<Conv2d>("disc.s" + std::to_string(s), dprev,
                                                    dch, 4, 2, 1, rng));
        discriminator_.add(std::make_unique<LeakyReLU>(0.2f));
        dprev = dch;
    }
    discriminator_.add(std::make_unique<Conv2d>("disc.out", dprev, 1, 3, 1, 1, rng));

    codebook_ = Codebook(cfg_.codebook_size, cfg_.codebook_dim);
    float lim = 1.0f / float(cfg_.codebook_size);
    for (auto& e : codebook_.entries) e = float(rng.uniform(-lim, lim));
    codebook_grad_ = Tensor(cfg_.codebook_size, 1, cfg_.codebook_dim);
}

void VqModel::check_image(const Image& image) const {
    if (image.h != cfg_.input_resolution || image.w != cfg_.input_resolution) {
        throw Error("model expects " + std::to_string(cfg_.input_resolution) + "x" +
                    std::to_string(cfg_.input_resolution) + " input, got " +
                    std::to_string(image.h) + "x" + std::to_string(image.w));
    }
}

LatentGrid VqModel::encode(const Image& image) const {
    check_image(image);
    Trace trace;
    return encoder_.forward(Tensor::from_image(image), trace);
}

Image VqModel::decode(const QuantizedLatent& q) const {
    require(q.vectors.c == cfg_.codebook_dim && q.vectors.h == cfg_.latent_hw() &&
                q.vectors.w == cfg_.latent_hw(),
            "decode: quantized latent shape mismatch");
    Trace trace;
    Tensor out = decoder_.forward(q.vectors, trace);
    return out.to_image();
}

Tensor VqModel::discriminate(const Image& image) const {
    check_image(image);
    Trace trace;
    return discriminator_.forward(Tensor::from_image(image), trace);
}

std::vector<float> VqModel::embed(const Image& image) const {
    return mean_pool(encode(image));
}

Image VqModel::reconstruct(const Image& image) const {
    return decode(quantize_grid(encode(image)));
}

std::vector<Param*> VqModel::generator_params() {
    auto p = encoder_.params();
    auto pd = decoder_.params();
    p.insert(p.end(), pd.begin(), pd.end());
    return p;
}

void VqModel::zero_generator_grads() {
    encoder_.zero_grads();
    decoder_.zero_grads();
    codebook_grad_.zero();
}

}  // namespace octad::model
