#include "openasc/thresholding.hpp"

#include "openasc/error.hpp"

namespace openasc {

OpenSetDecision threshold_decide(const LogitRecord& record, const ThresholdPolicy& policy) {
    if (!(policy.epsilon >= 0.0 && policy.epsilon <= 1.0)) {
        fail(ErrorCode::InvalidThreshold,
             "epsilon must be in [0, 1], got " + std::to_string(policy.epsilon));
    }
    if (record.probabilities.empty()) fail(ErrorCode::InvalidInput, "record has no probabilities");

    int best = record.predicted;
    double top = record.probabilities[best];
    OpenSetDecision d;
    d.unknownness = 1.0 - top;
    int width = static_cast<int>(record.probabilities.size());
    bool reject_unit = policy.regime == Regime::Augmented && best == width - 1;
    if (top < policy.epsilon || reject_unit) {
        d.unknown = true;
    } else {
        d.class_index = best;
    }
    return d;
}

}  // namespace openasc
