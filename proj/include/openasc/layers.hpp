#pragma once

#include <memory>
#include <random>
#include <vector>

#include "openasc/tensor.hpp"

namespace openasc {

// Declarative layer description; a Network is built from a list of these.
// Shapes below exclude the batch dimension.
struct LayerSpec {
    enum class Kind {
        Conv2d,
        ConvTranspose2d,
        Dense,
        BatchNorm,
        Relu,
        Softmax,
        GlobalAvgPool,
        Film,
        Flatten,
        Reshape,
    };

    Kind kind = Kind::Relu;
    int units = 0;   // output channels (conv kinds) or units (dense)
    int kernel = 0;
    int stride = 1;
    int out_h = 0;   // ConvTranspose2d: explicit output height
    int out_w = 0;   // ConvTranspose2d: explicit output width
    int cond_width = 0;  // Film: conditioning vector width
    std::vector<int> reshape_to;  // Reshape: target [C,H,W]

    static LayerSpec conv2d(int channels, int kernel, int stride);
    static LayerSpec conv_transpose2d(int channels, int kernel, int stride, int out_h, int out_w);
    static LayerSpec dense(int units);
    static LayerSpec batch_norm();
    static LayerSpec relu();
    static LayerSpec softmax();
    static LayerSpec global_avg_pool();
    static LayerSpec film(int cond_width);
    static LayerSpec flatten();
    static LayerSpec reshape(std::vector<int> to);
};

// Layers cache whatever the matching backward pass needs during forward.
// Parameter gradients accumulate across backward calls until zero_grads.
class Layer {
public:
    virtual ~Layer() = default;
    virtual const char* name() const = 0;
    virtual std::vector<int> output_shape() const = 0;
    virtual void init(std::mt19937_64&) {}
    virtual Tensor forward(const Tensor& in, const Tensor* cond, bool training) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    // Everything persisted in a checkpoint: params plus running statistics.
    virtual std::vector<Tensor*> state() { return params(); }
    virtual bool needs_conditioning() const { return false; }
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::vector<int>& input_shape);

// Uniform init bounded by sqrt(3 / fan_in): unit-variance preserving.
double init_limit(long fan_in);

}  // namespace openasc
