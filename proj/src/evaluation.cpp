#include "openasc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "openasc/binfile.hpp"
#include "openasc/error.hpp"

namespace openasc {

const char* const kUnknownLabel = "unknown";

std::map<std::string, double> class_accuracies(
    const std::vector<std::pair<OpenSetDecision, std::string>>& decisions,
    const LabelSet& labels) {
    if (decisions.empty()) fail(ErrorCode::EmptyDataset, "no decisions to score");
    std::map<std::string, long> total, correct;
    for (const auto& [decision, truth] : decisions) {
        int truth_index = labels.index_of(truth);
        std::string key = truth_index >= 0 ? truth : kUnknownLabel;
        ++total[key];
        bool ok;
        if (truth_index >= 0) {
            ok = !decision.unknown && decision.class_index == truth_index;
        } else {
            ok = decision.unknown;
        }
        if (ok) ++correct[key];
    }
    std::map<std::string, double> acc;
    for (const auto& [key, n] : total) {
        acc[key] = static_cast<double>(correct[key]) / static_cast<double>(n);
    }
    return acc;
}

WeightedAccuracy weighted_accuracy(const std::map<std::string, double>& per_class,
                                   const LabelSet& labels) {
    if (labels.known.empty()) fail(ErrorCode::InvalidInput, "no known classes");
    auto unknown_it = per_class.find(kUnknownLabel);
    if (unknown_it == per_class.end()) {
        fail(ErrorCode::InvalidInput, "no unknown examples in the ground truth");
    }
    WeightedAccuracy out;
    double sum = 0.0;
    int seen = 0;
    for (const std::string& name : labels.known) {
        auto it = per_class.find(name);
        if (it == per_class.end()) {
            out.warnings.push_back("class " + name +
                                   " absent from ground truth; excluded from the average");
            continue;
        }
        sum += it->second;
        ++seen;
    }
    if (seen == 0) fail(ErrorCode::InvalidInput, "no known classes in the ground truth");
    out.acc_known = 100.0 * sum / seen;
    out.acc_unknown = 100.0 * unknown_it->second;
    out.acc = 0.5 * out.acc_known + 0.5 * out.acc_unknown;
    return out;
}

AurocResult auroc(const std::vector<double>& scores, const std::vector<bool>& is_unknown) {
    if (scores.size() != is_unknown.size() || scores.empty()) {
        fail(ErrorCode::InvalidInput, "scores and labels must align and be nonempty");
    }
    long n_unknown = std::count(is_unknown.begin(), is_unknown.end(), true);
    long n_known = static_cast<long>(scores.size()) - n_unknown;
    if (n_unknown == 0 || n_known == 0) {
        fail(ErrorCode::UndefinedMetric, "AUROC needs both known and unknown examples");
    }

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    AurocResult result;
    result.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    long tp = 0, fp = 0;
    double area = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        // Equal scores form one threshold step.
        double s = scores[order[i]];
        size_t j = i;
        while (j < order.size() && scores[order[j]] == s) {
            if (is_unknown[order[j]]) {
                ++tp;
            } else {
                ++fp;
            }
            ++j;
        }
        double fpr = static_cast<double>(fp) / n_known;
        double tpr = static_cast<double>(tp) / n_unknown;
        area += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
        result.points.push_back({fpr, tpr, s});
        prev_fpr = fpr;
        prev_tpr = tpr;
        i = j;
    }
    result.auroc = area;
    return result;
}

ScoreHistograms score_histograms(const std::vector<double>& scores,
                                 const std::vector<bool>& is_unknown, int bins) {
    if (bins < 2) fail(ErrorCode::InvalidParameter, "need at least 2 histogram bins");
    if (scores.size() != is_unknown.size() || scores.empty()) {
        fail(ErrorCode::InvalidInput, "scores and labels must align and be nonempty");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double s : scores) {
        if (!std::isfinite(s)) continue;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (!(lo <= hi)) {
        lo = 0.0;
        hi = 1.0;
    } else if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }

    ScoreHistograms out;
    out.lo = lo;
    out.hi = hi;
    out.known.assign(bins, 0);
    out.unknown.assign(bins, 0);
    double width = (hi - lo) / bins;
    for (size_t i = 0; i < scores.size(); ++i) {
        int b;
        if (!std::isfinite(scores[i])) {
            b = scores[i] > 0 ? bins - 1 : 0;
        } else {
            b = static_cast<int>((scores[i] - lo) / width);
            b = std::min(std::max(b, 0), bins - 1);
        }
        if (is_unknown[i]) {
            ++out.unknown[b];
        } else {
            ++out.known[b];
        }
    }
    return out;
}

void write_roc_tsv(const std::string& path, const std::vector<RocPoint>& points) {
    std::ostringstream os;
    os << "fpr\ttpr\tthreshold\n";
    char buf[32];
    for (const RocPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.fpr);
        os << buf << '\t';
        std::snprintf(buf, sizeof(buf), "%.17g", p.tpr);
        os << buf << '\t';
        std::snprintf(buf, sizeof(buf), "%.17g", p.threshold);
        os << buf << '\n';
    }
    write_text_file(path, os.str());
}

void write_histogram_tsv(const std::string& path, const ScoreHistograms& hist) {
    std::ostringstream os;
    os << "bin_lo\tbin_hi\tknown\tunknown\n";
    int bins = static_cast<int>(hist.known.size());
    double width = (hist.hi - hist.lo) / bins;
    char buf[32];
    for (int b = 0; b < bins; ++b) {
        std::snprintf(buf, sizeof(buf), "%.17g", hist.lo + b * width);
        os << buf << '\t';
        std::snprintf(buf, sizeof(buf), "%.17g", hist.lo + (b + 1) * width);
        os << buf << '\t' << hist.known[b] << '\t' << hist.unknown[b] << '\n';
    }
    write_text_file(path, os.str());
}

}  // namespace openasc
