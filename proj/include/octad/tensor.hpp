#pragma once

#include <vector>

#include "octad/common.hpp"

namespace octad::model {

// CHW float tensor
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, float fill = 0.f)
        : c(c_), h(h_), w(w_), v(size_t(c_) * h_ * w_, fill) {}

    size_t size() const { return v.size(); }
    float& at(int ci, int y, int x) { return v[(size_t(ci) * h + y) * w + x]; }
    float at(int ci, int y, int x) const { return v[(size_t(ci) * h + y) * w + x]; }
    float* plane(int ci) { return v.data() + size_t(ci) * h * w; }
    const float* plane(int ci) const { return v.data() + size_t(ci) * h * w; }

    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
    void zero() { std::fill(v.begin(), v.end(), 0.f); }

    static Tensor from_image(const Image& im) {
        Tensor t(1, im.h, im.w);
        t.v.assign(im.pix.begin(), im.pix.end());
        return t;
    }
    Image to_image() const {
        require(c == 1, "Tensor::to_image: single-channel tensors only");
        Image im(h, w);
        im.pix.assign(v.begin(), v.end());
        return im;
    }
};

}  // namespace octad::model
