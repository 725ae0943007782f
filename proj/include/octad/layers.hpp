#pragma once

#include <memory>
#include <string>
#include <vector>

#include "octad/tensor.hpp"

namespace octad::model {

struct Param {
    std::string name;
    Tensor w;
    Tensor g;  // same shape, accumulated by backward

    Param(std::string n, Tensor init) : name(std::move(n)), w(std::move(init)) {
        g = Tensor(w.c, w.h, w.w);
    }
};

// Activation cache for one forward pass. Layers push what backward needs and
// pop in reverse order, so several passes can be in flight over shared
// parameters.
struct Trace {
    std::vector<Tensor> stack;
    void push(Tensor t) { stack.push_back(std::move(t)); }
    Tensor pop() {
        require(!stack.empty(), "Trace: backward/forward mismatch");
        Tensor t = std::move(stack.back());
        stack.pop_back();
        return t;
    }
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, Trace& trace) const = 0;
    virtual Tensor backward(const Tensor& gout, Trace& trace) = 0;
    virtual std::vector<Param*> params() { return {}; }
};

class Conv2d : public Layer {
public:
    Conv2d(std::string name, int in_c, int out_c, int k, int stride, int pad, Rng& rng);

    Tensor forward(const Tensor& x, Trace& trace) const override;
    Tensor backward(const Tensor& gout, Trace& trace) override;
    std::vector<Param*> params() override { return {&weight_, &bias_}; }

    int out_h(int h) const { return (h + 2 * pad_ - k_) / stride_ + 1; }
    int out_w(int w) const { return (w + 2 * pad_ - k_) / stride_ + 1; }

private:
    int in_c_, out_c_, k_, stride_, pad_;
    Param weight_;  // (out_c, in_c*k*k) stored as Tensor(out_c, in_c, k*k)
    Param bias_;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, Trace& trace) const override;
    Tensor backward(const Tensor& gout, Trace& trace) override;
};

class LeakyReLU : public Layer {
public:
    explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}
    Tensor forward(const Tensor& x, Trace& trace) const override;
    Tensor backward(const Tensor& gout, Trace& trace) override;

private:
    float slope_;
};

class Sigmoid : public Layer {
public:
    Tensor forward(const Tensor& x, Trace& trace) const override;
    Tensor backward(const Tensor& gout, Trace& trace) override;
};

class UpsampleNearest2x : public Layer {
public:
    Tensor forward(const Tensor& x, Trace& trace) const override;
    Tensor backward(const Tensor& gout, Trace& trace) override;
};

class AvgPool2 : public Layer {
public:
    Tensor forward(const Tensor& x, Trace& trace) const override;
    Tensor backward(const Tensor& gout, Trace& trace) override;
};

// x + conv2(relu(conv1(x))), pre-activation style
class ResBlock : public Layer {
public:
    ResBlock(const std::string& name, int channels, Rng& rng);
    Tensor forward(const Tensor& x, Trace& trace) const override;
    Tensor backward(const Tensor& gout, Trace& trace) override;
    std::vector<Param*> params() override;

private:
    Conv2d conv1_, conv2_;
    ReLU relu_;
};

class Sequential {
public:
    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, Trace& trace) const {
        Tensor cur = x;
        for (const auto& l : layers_) cur = l->forward(cur, trace);
        return cur;
    }
    Tensor backward(const Tensor& gout, Trace& trace) {
        Tensor cur = gout;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            cur = (*it)->backward(cur, trace);
        return cur;
    }
    std::vector<Param*> params() {
        std::vector<Param*> out;
        for (auto& l : layers_)
            for (Param* p : l->params()) out.push_back(p);
        return out;
    }
    void zero_grads() {
        for (Param* p : params()) p->g.zero();
    }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Adam with bias correction; one instance per parameter group.
class Adam {
public:
    Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Param*>& params);

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

    // serialized state
    uint64_t t = 0;
    std::vector<std::vector<float>> m, v;

private:
    double lr_, beta1_, beta2_, eps_;
};

// He-normal conv weight init
Tensor he_init(int out_c, int in_c, int k, Rng& rng);

}  // namespace octad::model
