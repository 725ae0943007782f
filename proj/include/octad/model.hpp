#pragma once

#include <span>
#include <string>
#include <vector>

#include "octad/layers.hpp"

namespace octad::model {

struct ModelConfig {
    int input_resolution = 64;
    int codebook_size = 32;   // M
    int codebook_dim = 16;    // d
    int downsample_factor = 4;
    std::vector<int> channels = {16, 32};  // one per stride-2 stage
    int disc_reduction = 8;                // patch logit grid = resolution / this

    int stages() const;
    int latent_hw() const { return input_resolution / downsample_factor; }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;

    static ModelConfig desk() { return {}; }
    static ModelConfig paper() {
        ModelConfig cfg;
        cfg.input_resolution = 256;
        cfg.codebook_size = 256;
        cfg.codebook_dim = 256;
        cfg.downsample_factor = 16;
        cfg.channels = {64, 128, 256, 256};
        cfg.disc_reduction = 8;
        return cfg;
    }
};

using LatentGrid = Tensor;  // (d, H', W')

struct Codebook {
    int m = 0, d = 0;
    std::vector<float> entries;        // m x d row-major
    std::vector<uint64_t> usage;       // cumulative assignment counts

    Codebook() = default;
    Codebook(int m_, int d_) : m(m_), d(d_), entries(size_t(m_) * d_, 0.f), usage(m_, 0) {}

    float* entry(int i) { return entries.data() + size_t(i) * d; }
    const float* entry(int i) const { return entries.data() + size_t(i) * d; }

    void check_finite() const {
        for (float v : entries)
            require(std::isfinite(v), "Codebook: non-finite entry");
    }
};

struct QuantizedLatent {
    std::vector<int> indices;  // h*w, values in [0, M)
    Tensor vectors;            // (d, h, w), vectors[:,i,j] = entries[indices[i*w+j]]
};

// Nearest codebook entry per spatial position under Euclidean distance,
// ties broken by the lowest index.
QuantizedLatent quantize(const LatentGrid& grid, const Codebook& codebook);

// Frozen random-init conv stack; distance = mean squared difference of
// channel-normalized feature maps, averaged over tap layers. Weights come
// from a fixed internal seed so distances are comparable across runs.
class PerceptualNet {
public:
    PerceptualNet();

    double distance(const Image& a, const Image& b) const;
    // accumulates scale * d distance / d b into grad_b
    double distance_with_grad(const Image& a, const Image& b, double scale,
                              Image& grad_b) const;

private:
    struct Feats {
        std::vector<Tensor> taps;        // normalized features
        std::vector<Tensor> raw;         // pre-normalization features
        std::vector<Tensor> activations; // every layer output (for backward)
    };
    Feats run(const Image& x) const;

    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<int> tap_after_;  // layer indices whose output is a tap
};

class VqModel {
public:
    VqModel(const ModelConfig& cfg, uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }

    // inference (trace-free)
    LatentGrid encode(const Image& image) const;
    Image decode(const QuantizedLatent& q) const;
    Tensor discriminate(const Image& image) const;  // (1, ph, pw) logits
    std::vector<float> embed(const Image& image) const;
    QuantizedLatent quantize_grid(const LatentGrid& grid) const {
        return model::quantize(grid, codebook_);
    }
    Image reconstruct(const Image& image) const;

    // training access
    Sequential& encoder() { return encoder_; }
    const Sequential& encoder() const { return encoder_; }
    Sequential& decoder() { return decoder_; }
    const Sequential& decoder() const { return decoder_; }
    Sequential& discriminator() { return discriminator_; }
    const Sequential& discriminator() const { return discriminator_; }
    Codebook& codebook() { return codebook_; }
    const Codebook& codebook() const { return codebook_; }
    Tensor& codebook_grad() { return codebook_grad_; }

    std::vector<Param*> generator_params();      // encoder + decoder (codebook separate)
    std::vector<Param*> discriminator_params() { return discriminator_.params(); }

    void zero_generator_grads();
    void zero_discriminator_grads() { discriminator_.zero_grads(); }

    const PerceptualNet& perceptual() const { return perceptual_; }

    void check_image(const Image& image) const;

private:
    ModelConfig cfg_;
    Sequential encoder_, decoder_, discriminator_;
    Codebook codebook_;
    Tensor codebook_grad_;  // (M, 1, d)
    PerceptualNet perceptual_;
};

std::vector<float> mean_pool(const LatentGrid& grid);

}  // namespace octad::model
