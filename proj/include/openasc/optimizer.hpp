#pragma once

#include <vector>

#include "openasc/tensor.hpp"

namespace openasc {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by position in the
// parameter list, which must stay stable across steps.
class Adam {
public:
    Adam(const std::vector<Tensor*>& params, AdamConfig cfg);
    void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);
    long step_count() const { return steps_; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    long steps_ = 0;
};

}  // namespace openasc
