#pragma once

#include <memory>
#include <string>
#include <vector>

#include "openasc/layers.hpp"
#include "openasc/tensor.hpp"

namespace openasc {

// Sequential network. Built once from specs; forward caches per-layer
// outputs so callers can read intermediate activations (e.g. pre-softmax
// logits) and backward can run without re-specifying anything.
class Network {
public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    static Network build(std::vector<LayerSpec> specs, std::vector<int> input_shape,
                         uint64_t init_seed);

    Tensor forward(const Tensor& batch, const Tensor* conditioning, bool training);
    // Gradient w.r.t. the last forward's input. Parameter gradients accumulate.
    Tensor backward(const Tensor& grad_output);
    void zero_grads();

    std::vector<Tensor*> parameters();
    std::vector<Tensor*> gradients();
    std::vector<Tensor*> state();
    long parameter_count() const;

    bool needs_conditioning() const;
    int layer_count() const { return static_cast<int>(layers_.size()); }
    const Layer& layer(int i) const { return *layers_[i]; }
    // Output of layer i from the most recent forward call.
    const Tensor& layer_output(int i) const;

    const std::vector<LayerSpec>& specs() const { return specs_; }
    const std::vector<int>& input_shape() const { return input_shape_; }
    std::vector<int> output_shape() const;

    Network clone() const;

    void save(const std::string& path, uint64_t fingerprint) const;
    static Network load(const std::string& path, uint64_t expected_fingerprint);

private:
    std::vector<LayerSpec> specs_;
    std::vector<int> input_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Tensor> outputs_;
    bool has_forward_ = false;
};

}  // namespace openasc
