#pragma once

#include "openasc/classifier.hpp"

namespace openasc {

// Outcome of any open-set back-end for one clip. unknownness is the
// back-end's own score, oriented so higher means more likely unknown.
struct OpenSetDecision {
    bool unknown = false;
    int class_index = -1;  // known class index when !unknown
    double unknownness = 0.0;
};

// Reject when the winning softmax probability falls strictly below epsilon.
// Under the augmented regime the reject unit also triggers rejection.
struct ThresholdPolicy {
    double epsilon = 0.5;
    Regime regime = Regime::Closed;
};

OpenSetDecision threshold_decide(const LogitRecord& record, const ThresholdPolicy& policy);

}  // namespace openasc
