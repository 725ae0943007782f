#include "octad/layers.hpp"

#include <Eigen/Core>
#include <cmath>

namespace octad::model {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

Tensor he_init(int out_c, int in_c, int k, Rng& rng) {
    Tensor w(out_c, in_c, k * k);
    float std = std::sqrt(2.0f / float(in_c * k * k));
    for (auto& x : w.v) x = float(rng.normal(0, std));
    return w;
}

Conv2d::Conv2d(std::string name, int in_c, int out_c, int k, int stride, int pad, Rng& rng)
    : in_c_(in_c),
      out_c_(out_c),
      k_(k),
      stride_(stride),
      pad_(pad),
      weight_(name + ".w", he_init(out_c, in_c, k, rng)),
      bias_(name + ".b", Tensor(out_c, 1, 1)) {}

namespace {

// col is (in_c*k*k) x (oh*ow), zero padding
void im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow,
            std::vector<float>& col) {
    const int h = x.h, w = x.w;
    col.assign(size_t(x.c) * k * k * oh * ow, 0.f);
    const size_t ncols = size_t(oh) * ow;
    for (int ci = 0; ci < x.c; ++ci) {
        const float* plane = x.plane(ci);
        for (int kr = 0; kr < k; ++kr) {
            for (int kc = 0; kc < k; ++kc) {
                float* row = col.data() + ((size_t(ci) * k + kr) * k + kc) * ncols;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride + kr - pad;
                    if (iy < 0 || iy >= h) continue;
                    const float* src = plane + size_t(iy) * w;
                    float* dst = row + size_t(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride + kc - pad;
                        if (ix >= 0 && ix < w) dst[ox] = src[ix];
                    }
                }
            }
        }
    }
}

// scatter-add of column gradients back to input layout
void col2im(const std::vector<float>& col, int c, int h, int w, int k, int stride,
            int pad, int oh, int ow, Tensor& gin) {
    const size_t ncols = size_t(oh) * ow;
    for (int ci = 0; ci < c; ++ci) {
        float* plane = gin.plane(ci);
        for (int kr = 0; kr < k; ++kr) {
            for (int kc = 0; kc < k; ++kc) {
                const float* row = col.data() + ((size_t(ci) * k + kr) * k + kc) * ncols;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride + kr - pad;
                    if (iy < 0 || iy >= h) continue;
                    float* dst = plane + size_t(iy) * w;
                    const float* src = row + size_t(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride + kc - pad;
                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, Trace& trace) const {
    require(x.c == in_c_, "Conv2d: channel mismatch");
    const int oh = out_h(x.h), ow = out_w(x.w);
    require(oh > 0 && ow > 0, "Conv2d: output would be empty");

    std::vector<float> col;
    im2col(x, k_, stride_, pad_, oh, ow, col);
    const int ick2 = in_c_ * k_ * k_;
    const size_t ncols = size_t(oh) * ow;

    Tensor out(out_c_, oh, ow);
    ConstMapRM W(weight_.w.v.data(), out_c_, ick2);
    ConstMapRM C(col.data(), ick2, Eigen::Index(ncols));
    MapRM O(out.v.data(), out_c_, Eigen::Index(ncols));
    O.noalias() = W * C;
    for (int oc = 0; oc < out_c_; ++oc)
        O.row(oc).array() += bias_.w.v[oc];

    trace.push(x);  // backward recomputes im2col from the input
    return out;
}

Tensor Conv2d::backward(const Tensor& gout, Trace& trace) {
    Tensor x = trace.pop();
    const int oh = gout.h, ow = gout.w;
    const int ick2 = in_c_ * k_ * k_;
    const size_t ncols = size_t(oh) * ow;

    std::vector<float> col;
    im2col(x, k_, stride_, pad_, oh, ow, col);

    ConstMapRM G(gout.v.data(), out_c_, Eigen::Index(ncols));
    ConstMapRM C(col.data(), ick2, Eigen::Index(ncols));
    MapRM GW(weight_.g.v.data(), out_c_, ick2);
    GW.noalias() += G * C.transpose();
    for (int oc = 0; oc < out_c_; ++oc)
        bias_.g.v[oc] += G.row(oc).sum();

    std::vector<float> colg(size_t(ick2) * ncols);
    MapRM CG(colg.data(), ick2, Eigen::Index(ncols));
    ConstMapRM W(weight_.w.v.data(), out_c_, ick2);
    CG.noalias() = W.transpose() * G;

    Tensor gin(x.c, x.h, x.w);
    col2im(colg, x.c, x.h, x.w, k_, stride_, pad_, oh, ow, gin);
    return gin;
}

Tensor ReLU::forward(const Tensor& x, Trace& trace) const {
    Tensor out = x;
    for (auto& v : out.v) v = v > 0.f ? v : 0.f;
    trace.push(x);
    return out;
}

Tensor ReLU::backward(const Tensor& gout, Trace& trace) {
    Tensor x = trace.pop();
    Tensor gin = gout;
    for (size_t i = 0; i < gin.v.size(); ++i)
        if (x.v[i] <= 0.f) gin.v[i] = 0.f;
    return gin;
}

Tensor LeakyReLU::forward(const Tensor& x, Trace& trace) const {
    Tensor out = x;
    for (auto& v : out.v) v = v > 0.f ? v : slope_ * v;
    trace.push(x);
    return out;
}

Tensor LeakyReLU::backward(const Tensor& gout, Trace& trace) {
    Tensor x = trace.pop();
    Tensor gin = gout;
    for (size_t i = 0; i < gin.v.size(); ++i)
        if (x.v[i] <= 0.f) gin.v[i] *= slope_;
    return gin;
}

Tensor Sigmoid::forward(const Tensor& x, Trace& trace) const {
    Tensor out = x;
    for (auto& v : out.v) v = 1.f / (1.f + std::exp(-v));
    trace.push(out);
    return out;
}

Tensor Sigmoid::backward(const Tensor& gout, Trace& trace) {
    Tensor y = trace.pop();
    Tensor gin = gout;
    for (size_t i = 0; i < gin.v.size(); ++i)
        gin.v[i] *= y.v[i] * (1.f - y.v[i]);
    return gin;
}

Tensor UpsampleNearest2x::forward(const Tensor& x, Trace& trace) const {
    Tensor out(x.c, x.h * 2, x.w * 2);
    for (int ci = 0; ci < x.c; ++ci)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx) {
                float v = x.at(ci, y, xx);
                out.at(ci, 2 * y, 2 * xx) = v;
                out.at(ci, 2 * y, 2 * xx + 1) = v;
                out.at(ci, 2 * y + 1, 2 * xx) = v;
                out.at(ci, 2 * y + 1, 2 * xx + 1) = v;
            }
    Tensor shape;  // dims only
    shape.c = x.c;
    shape.h = x.h;
    shape.w = x.w;
    trace.push(shape);
    return out;
}

Tensor UpsampleNearest2x::backward(const Tensor& gout, Trace& trace) {
    Tensor shape = trace.pop();
    Tensor gin(shape.c, shape.h, shape.w);
    for (int ci = 0; ci < gin.c; ++ci)
        for (int y = 0; y < gin.h; ++y)
            for (int xx = 0; xx < gin.w; ++xx)
                gin.at(ci, y, xx) = gout.at(ci, 2 * y, 2 * xx) +
                                    gout.at(ci, 2 * y, 2 * xx + 1) +
                                    gout.at(ci, 2 * y + 1, 2 * xx) +
                                    gout.at(ci, 2 * y + 1, 2 * xx + 1);
    return gin;
}

Tensor AvgPool2::forward(const Tensor& x, Trace& trace) const {
    require(x.h % 2 == 0 && x.w % 2 == 0, "AvgPool2: spatial dims must be even");
    Tensor out(x.c, x.h / 2, x.w / 2);
    for (int ci = 0; ci < x.c; ++ci)
        for (int y = 0; y < out.h; ++y)
            for (int xx = 0; xx < out.w; ++xx)
                out.at(ci, y, xx) = 0.25f * (x.at(ci, 2 * y, 2 * xx) +
                                             x.at(ci, 2 * y, 2 * xx + 1) +
                                             x.at(ci, 2 * y + 1, 2 * xx) +
                                             x.at(ci, 2 * y + 1, 2 * xx + 1));
    Tensor shape;  // dims only
    shape.c = x.c;
    shape.h = x.h;
    shape.w = x.w;
    trace.push(shape);
    return out;
}

Tensor AvgPool2::backward(const Tensor& gout, Trace& trace) {
    Tensor shape = trace.pop();
    Tensor gin(shape.c, shape.h, shape.w);
    for (int ci = 0; ci < gin.c; ++ci)
        for (int y = 0; y < gout.h; ++y)
            for (int xx = 0; xx < gout.w; ++xx) {
                float v = 0.25f * gout.at(ci, y, xx);
                gin.at(ci, 2 * y, 2 * xx) = v;
                gin.at(ci, 2 * y, 2 * xx + 1) = v;
                gin.at(ci, 2 * y + 1, 2 * xx) = v;
                gin.at(ci, 2 * y + 1, 2 * xx + 1) = v;
            }
    return gin;
}

ResBlock::ResBlock(const std::string& name, int channels, Rng& rng)
    : conv1_(name + ".c1", channels, channels, 3, 1, 1, rng),
      conv2_(name + ".c2", channels, channels, 3, 1, 1, rng) {}

Tensor ResBlock::forward(const Tensor& x, Trace& trace) const {
    Tensor h = conv1_.forward(x, trace);
    h = relu_.forward(h, trace);
    h = conv2_.forward(h, trace);
    for (size_t i = 0; i < h.v.size(); ++i) h.v[i] += x.v[i];
    return h;
}

Tensor ResBlock::backward(const Tensor& gout, Trace& trace) {
    Tensor g = conv2_.backward(gout, trace);
    g = relu_.backward(g, trace);
    g = conv1_.backward(g, trace);
    for (size_t i = 0; i < g.v.size(); ++i) g.v[i] += gout.v[i];  // skip path
    return g;
}

std::vector<Param*> ResBlock::params() {
    auto p1 = conv1_.params();
    auto p2 = conv2_.params();
    p1.insert(p1.end(), p2.begin(), p2.end());
    return p1;
}

void Adam::step(const std::vector<Param*>& params) {
    if (m.empty()) {
        m.resize(params.size());
        v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            m[i].assign(params[i]->w.size(), 0.f);
            v[i].assign(params[i]->w.size(), 0.f);
        }
    }
    require(m.size() == params.size(), "Adam: parameter group changed size");
    ++t;
    const double bc1 = 1.0 - std::pow(beta1_, double(t));
    const double bc2 = 1.0 - std::pow(beta2_, double(t));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& w = params[i]->w.v;
        auto& g = params[i]->g.v;
        for (size_t j = 0; j < w.size(); ++j) {
            double gj = g[j];
            double mj = beta1_ * m[i][j] + (1 - beta1_) * gj;
            double vj = beta2_ * v[i][j] + (1 - beta2_) * gj * gj;
            m[i][j] = float(mj);
            v[i][j] = float(vj);
            w[j] -= float(lr_ * (mj / bc1) / (std::sqrt(vj / bc2) + eps_));
        }
    }
}

}  // namespace octad::model
