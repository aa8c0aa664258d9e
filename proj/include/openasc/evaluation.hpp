#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "openasc/dataio.hpp"
#include "openasc/thresholding.hpp"

namespace openasc {

// Pseudo-class name for everything outside the known vocabulary.
extern const char* const kUnknownLabel;

// Per-class accuracy over decisions paired with ground-truth labels. Truth
// outside the known set collapses into the unknown pseudo-class; a decision
// counts as correct for it iff the back-end said unknown.
std::map<std::string, double> class_accuracies(
    const std::vector<std::pair<OpenSetDecision, std::string>>& decisions,
    const LabelSet& labels);

// Balanced open-set score, in percent points.
struct WeightedAccuracy {
    double acc_known = 0.0;    // mean per-class accuracy over known classes
    double acc_unknown = 0.0;  // unknown pseudo-class accuracy
    double acc = 0.0;          // 0.5 * acc_known + 0.5 * acc_unknown
    std::vector<std::string> warnings;  // known classes absent from ground truth
};

WeightedAccuracy weighted_accuracy(const std::map<std::string, double>& per_class,
                                   const LabelSet& labels);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // scores >= threshold are called unknown
};

struct AurocResult {
    double auroc = 0.0;
    std::vector<RocPoint> points;
};

// Threshold sweep over all distinct scores (ties as one step) plus trapezoid
// integration; equals the tie-corrected Mann-Whitney statistic.
AurocResult auroc(const std::vector<double>& scores, const std::vector<bool>& is_unknown);

struct ScoreHistograms {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<long> known;
    std::vector<long> unknown;
};

// Equal-width bins over the joint finite score range; non-finite scores land
// in the outermost bin on their side.
ScoreHistograms score_histograms(const std::vector<double>& scores,
                                 const std::vector<bool>& is_unknown, int bins);

void write_roc_tsv(const std::string& path, const std::vector<RocPoint>& points);
void write_histogram_tsv(const std::string& path, const ScoreHistograms& hist);

}  // namespace openasc
