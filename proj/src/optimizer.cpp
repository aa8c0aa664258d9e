#include "openasc/optimizer.hpp"

#include <cmath>

#include "openasc/error.hpp"

namespace openasc {

Adam::Adam(const std::vector<Tensor*>& params, AdamConfig cfg) : cfg_(cfg) {
    for (const Tensor* p : params) {
        m_.emplace_back(p->v.size(), 0.0);
        v_.emplace_back(p->v.size(), 0.0);
    }
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        fail(ErrorCode::InvalidParameter, "optimizer parameter list changed size");
    }
    ++steps_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        std::vector<double>& m = m_[i];
        std::vector<double>& v = v_[i];
        if (p.v.size() != m.size() || g.v.size() != m.size()) {
            fail(ErrorCode::InvalidParameter, "optimizer tensor size changed since construction");
        }
        for (size_t j = 0; j < p.v.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g.v[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g.v[j] * g.v[j];
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            p.v[j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

}  // namespace openasc
