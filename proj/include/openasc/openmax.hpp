#pragma once

#include <optional>
#include <string>
#include <vector>

#include "openasc/thresholding.hpp"

namespace openasc {

// Blended distance between a logit vector and a class mean: weighted
// Euclidean distance plus weighted cosine dissimilarity.
struct DivergenceConfig {
    double euclid_weight = 0.005;
    double cosine_weight = 1.0;
};

double divergence(const std::vector<double>& v, const std::vector<double>& mu,
                  const DivergenceConfig& cfg);

// Weibull model of a divergence tail. The tail is shifted by its minimum
// before fitting; cdf() applies the same shift.
struct WeibullTail {
    double shape = 1.0;
    double scale = 1.0;
    double shift = 0.0;
};

// Maximum-likelihood fit of the largest tail_size divergences. The profile
// equation in the shape parameter is solved by safeguarded bisection.
WeibullTail fit_weibull_tail(std::vector<double> divergences, int tail_size);

double weibull_cdf(const WeibullTail& tail, double x);

// Log-likelihood of already-shifted, strictly positive samples.
double weibull_log_likelihood(const std::vector<double>& shifted, double shape, double scale);

struct ClassCalibration {
    int class_index = -1;
    std::vector<double> mean_logits;
    WeibullTail tail;
    int tail_count = 0;
};

struct EvtConfig {
    int tail_size = 20;
    int alpha = 10;  // top-ranked classes to recalibrate; clamped to width
    DivergenceConfig divergence;
};

// Per-class EVT calibration fitted on correctly classified training clips.
struct EvtModel {
    std::vector<ClassCalibration> classes;  // one per calibrated class index
    EvtConfig config;
    int width = 0;  // logit width of the classifier this was fitted on
};

EvtModel fit_evt_model(const std::vector<LogitRecord>& train_records, const EvtConfig& cfg,
                       int width);

// Logit recalibration: top-alpha classes by logit are damped by their tail
// CDF at the clip's divergence, shaved mass feeds a synthetic unknown slot,
// and softmax runs over [unknown, class 0, class 1, ...].
struct RecalibratedOutput {
    std::vector<double> probabilities;  // width + 1 entries, unknown first
    OpenSetDecision decision;
};

// uncertainty_epsilon additionally rejects when the winning revised
// probability falls below it (disabled when unset). Under the augmented
// regime the classifier's own reject unit also maps to unknown.
RecalibratedOutput evt_decide(const LogitRecord& record, const EvtModel& model,
                              Regime regime,
                              std::optional<double> uncertainty_epsilon = std::nullopt);

void save_evt_model(const std::string& path, const EvtModel& model, uint64_t fingerprint);
EvtModel load_evt_model(const std::string& path, uint64_t expected_fingerprint);

}  // namespace openasc
