#include "openasc/openmax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "openasc/binfile.hpp"
#include "openasc/error.hpp"

namespace openasc {

double divergence(const std::vector<double>& v, const std::vector<double>& mu,
                  const DivergenceConfig& cfg) {
    if (v.size() != mu.size() || v.empty()) {
        fail(ErrorCode::ShapeError, "divergence needs equal-length vectors");
    }
    double dist2 = 0.0, dot = 0.0, nv = 0.0, nmu = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        double d = v[i] - mu[i];
        dist2 += d * d;
        dot += v[i] * mu[i];
        nv += v[i] * v[i];
        nmu += mu[i] * mu[i];
    }
    if (nv == 0.0 || nmu == 0.0) {
        fail(ErrorCode::DegenerateVector, "zero vector in cosine dissimilarity");
    }
    double cos_dissim = 1.0 - dot / (std::sqrt(nv) * std::sqrt(nmu));
    return cfg.euclid_weight * std::sqrt(dist2) + cfg.cosine_weight * cos_dissim;
}

namespace {

// Profile score whose root is the ML shape estimate. Monotonically
// increasing in k for positive samples.
double profile_equation(const std::vector<double>& x, double k, double mean_log) {
    double num = 0.0, den = 0.0;
    for (double xi : x) {
        double p = std::pow(xi, k);
        num += p * std::log(xi);
        den += p;
    }
    return num / den - 1.0 / k - mean_log;
}

}  // namespace

WeibullTail fit_weibull_tail(std::vector<double> divergences, int tail_size) {
    if (divergences.empty()) fail(ErrorCode::UnfittableClass, "no divergences to fit");
    if (tail_size <= 0) fail(ErrorCode::InvalidParameter, "tail size must be positive");
    for (double d : divergences) {
        if (!std::isfinite(d)) fail(ErrorCode::InvalidInput, "non-finite divergence");
    }

    std::sort(divergences.begin(), divergences.end(), std::greater<double>());
    size_t k = std::min(static_cast<size_t>(tail_size), divergences.size());
    std::vector<double> tail(divergences.begin(), divergences.begin() + k);

    WeibullTail result;
    result.shift = tail.back();  // tail is sorted descending; min is last

    // Shift by the tail minimum; the minimum itself maps to zero and carries
    // no likelihood, so only strictly positive samples are fitted.
    std::vector<double> x;
    for (double d : tail) {
        double s = d - result.shift;
        if (s > 0.0) x.push_back(s);
    }
    if (x.size() < 3) {
        // Nearly constant tail: a steep step model at the shift point.
        result.shape = 100.0;
        double m = 0.0;
        for (double xi : x) m += xi;
        result.scale = std::max(x.empty() ? 0.0 : m / x.size(), 1e-12);
        return result;
    }

    // Normalize by the max for overflow safety; rescale afterwards.
    double mx = *std::max_element(x.begin(), x.end());
    for (double& xi : x) xi /= mx;
    double mean_log = 0.0;
    for (double xi : x) mean_log += std::log(xi);
    mean_log /= static_cast<double>(x.size());

    double lo = 1e-3, hi = 2.0;
    int guard = 0;
    while (profile_equation(x, hi, mean_log) < 0.0 && guard++ < 60) hi *= 2.0;
    guard = 0;
    while (profile_equation(x, lo, mean_log) > 0.0 && guard++ < 60) lo /= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (profile_equation(x, mid, mean_log) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double shape = 0.5 * (lo + hi);

    double mean_pow = 0.0;
    for (double xi : x) mean_pow += std::pow(xi, shape);
    mean_pow /= static_cast<double>(x.size());
    double scale = mx * std::pow(mean_pow, 1.0 / shape);

    if (!std::isfinite(shape) || !std::isfinite(scale) || shape <= 0.0 || scale <= 0.0) {
        fail(ErrorCode::UnfittableClass, "weibull fit did not converge");
    }
    result.shape = shape;
    result.scale = scale;
    return result;
}

double weibull_cdf(const WeibullTail& tail, double x) {
    double y = x - tail.shift;
    if (y <= 0.0) return 0.0;
    return 1.0 - std::exp(-std::pow(y / tail.scale, tail.shape));
}

double weibull_log_likelihood(const std::vector<double>& shifted, double shape, double scale) {
    if (shifted.empty()) fail(ErrorCode::InvalidParameter, "no samples for log-likelihood");
    if (shape <= 0.0 || scale <= 0.0) {
        fail(ErrorCode::InvalidParameter, "shape and scale must be positive");
    }
    double ll = 0.0;
    for (double x : shifted) {
        if (x <= 0.0) fail(ErrorCode::InvalidParameter, "log-likelihood needs positive samples");
        double z = x / scale;
        ll += std::log(shape / scale) + (shape - 1.0) * std::log(z) - std::pow(z, shape);
    }
    return ll;
}

EvtModel fit_evt_model(const std::vector<LogitRecord>& train_records, const EvtConfig& cfg,
                       int width) {
    if (train_records.empty()) fail(ErrorCode::EmptyDataset, "no records to calibrate on");
    if (width < 2) fail(ErrorCode::InvalidParameter, "width must be at least 2");
    if (cfg.tail_size <= 0 || cfg.alpha <= 0) {
        fail(ErrorCode::InvalidParameter, "tail size and alpha must be positive");
    }

    EvtModel model;
    model.config = cfg;
    model.width = width;

    for (int c = 0; c < width; ++c) {
        std::vector<const LogitRecord*> correct;
        for (const LogitRecord& r : train_records) {
            if (static_cast<int>(r.logits.size()) != width) {
                fail(ErrorCode::ShapeError, "record width mismatch during calibration");
            }
            if (r.true_index == c && r.predicted == c) correct.push_back(&r);
        }
        if (correct.empty()) {
            fail(ErrorCode::UnfittableClass,
                 "class " + std::to_string(c) + " has no correctly classified training clips");
        }
        ClassCalibration cal;
        cal.class_index = c;
        cal.mean_logits.assign(width, 0.0);
        for (const LogitRecord* r : correct) {
            for (int i = 0; i < width; ++i) cal.mean_logits[i] += r->logits[i];
        }
        for (int i = 0; i < width; ++i) {
            cal.mean_logits[i] /= static_cast<double>(correct.size());
        }
        std::vector<double> dists;
        dists.reserve(correct.size());
        for (const LogitRecord* r : correct) {
            dists.push_back(divergence(r->logits, cal.mean_logits, cfg.divergence));
        }
        cal.tail_count = static_cast<int>(
            std::min(static_cast<size_t>(cfg.tail_size), dists.size()));
        cal.tail = fit_weibull_tail(std::move(dists), cfg.tail_size);
        model.classes.push_back(std::move(cal));
    }
    return model;
}

RecalibratedOutput evt_decide(const LogitRecord& record, const EvtModel& model, Regime regime,
                              std::optional<double> uncertainty_epsilon) {
    if (model.classes.empty()) fail(ErrorCode::NotFitted, "EVT model has no calibrated classes");
    int width = model.width;
    if (static_cast<int>(record.logits.size()) != width) {
        fail(ErrorCode::PipelineMismatch, "record width does not match the EVT model");
    }
    if (uncertainty_epsilon && !(*uncertainty_epsilon >= 0.0 && *uncertainty_epsilon <= 1.0)) {
        fail(ErrorCode::InvalidThreshold, "uncertainty epsilon must be in [0, 1]");
    }

    // Rank classes by logit, ties broken by index for determinism.
    std::vector<int> ranked(width);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
        return record.logits[a] > record.logits[b];
    });

    int alpha = std::min(model.config.alpha, width);
    std::vector<double> weight(width, 1.0);
    for (int i = 1; i <= alpha; ++i) {
        int c = ranked[i - 1];
        const ClassCalibration& cal = model.classes[c];
        double d = divergence(record.logits, cal.mean_logits, model.config.divergence);
        double rank_scale = static_cast<double>(alpha - i + 1) / static_cast<double>(alpha);
        weight[c] = 1.0 - rank_scale * weibull_cdf(cal.tail, d);
    }

    std::vector<double> revised(width + 1, 0.0);
    for (int c = 0; c < width; ++c) {
        revised[c + 1] = record.logits[c] * weight[c];
        revised[0] += record.logits[c] * (1.0 - weight[c]);
    }

    RecalibratedOutput out;
    out.probabilities.assign(width + 1, 0.0);
    double mx = revised[0];
    for (double x : revised) mx = std::max(mx, x);
    double sum = 0.0;
    for (int i = 0; i <= width; ++i) {
        out.probabilities[i] = std::exp(revised[i] - mx);
        sum += out.probabilities[i];
    }
    for (double& p : out.probabilities) p /= sum;

    int best = 0;
    for (int i = 1; i <= width; ++i) {
        if (out.probabilities[i] > out.probabilities[best]) best = i;
    }

    out.decision.unknownness = out.probabilities[0];
    bool reject_unit = regime == Regime::Augmented && best == width;
    bool uncertain = uncertainty_epsilon && out.probabilities[best] < *uncertainty_epsilon;
    if (best == 0 || reject_unit || uncertain) {
        out.decision.unknown = true;
    } else {
        out.decision.class_index = best - 1;
    }
    return out;
}

void save_evt_model(const std::string& path, const EvtModel& model, uint64_t fingerprint) {
    std::ostringstream os;
    char buf[32];
    auto g = [&buf](double x) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        return std::string(buf);
    };
    os << "evt_model v1\n";
    os << "fingerprint " << fingerprint << "\n";
    os << "width " << model.width << "\n";
    os << "alpha " << model.config.alpha << "\n";
    os << "tail_size " << model.config.tail_size << "\n";
    os << "euclid_weight " << g(model.config.divergence.euclid_weight) << "\n";
    os << "cosine_weight " << g(model.config.divergence.cosine_weight) << "\n";
    os << "classes " << model.classes.size() << "\n";
    for (const ClassCalibration& cal : model.classes) {
        os << "class " << cal.class_index << " tail_count " << cal.tail_count << " shape "
           << g(cal.tail.shape) << " scale " << g(cal.tail.scale) << " shift "
           << g(cal.tail.shift) << "\n";
        os << "mean";
        for (double m : cal.mean_logits) os << " " << g(m);
        os << "\n";
    }
    write_text_file(path, os.str());
}

namespace {

void expect_token(std::istream& is, const std::string& want, const std::string& path) {
    std::string got;
    if (!(is >> got) || got != want) {
        fail(ErrorCode::CorruptFile, "expected '" + want + "' in " + path);
    }
}

template <typename T>
T read_value(std::istream& is, const std::string& key, const std::string& path) {
    expect_token(is, key, path);
    T value;
    if (!(is >> value)) fail(ErrorCode::CorruptFile, "bad value for " + key + " in " + path);
    return value;
}

}  // namespace

EvtModel load_evt_model(const std::string& path, uint64_t expected_fingerprint) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);
    expect_token(is, "evt_model", path);
    expect_token(is, "v1", path);
    uint64_t fp = read_value<uint64_t>(is, "fingerprint", path);
    if (expected_fingerprint != 0 && fp != expected_fingerprint) {
        fail(ErrorCode::PipelineMismatch,
             "EVT model " + path + " was produced under a different pipeline configuration");
    }
    EvtModel model;
    model.width = read_value<int>(is, "width", path);
    model.config.alpha = read_value<int>(is, "alpha", path);
    model.config.tail_size = read_value<int>(is, "tail_size", path);
    model.config.divergence.euclid_weight = read_value<double>(is, "euclid_weight", path);
    model.config.divergence.cosine_weight = read_value<double>(is, "cosine_weight", path);
    int n = read_value<int>(is, "classes", path);
    for (int i = 0; i < n; ++i) {
        ClassCalibration cal;
        cal.class_index = read_value<int>(is, "class", path);
        cal.tail_count = read_value<int>(is, "tail_count", path);
        cal.tail.shape = read_value<double>(is, "shape", path);
        cal.tail.scale = read_value<double>(is, "scale", path);
        cal.tail.shift = read_value<double>(is, "shift", path);
        expect_token(is, "mean", path);
        cal.mean_logits.resize(model.width);
        for (int j = 0; j < model.width; ++j) {
            if (!(is >> cal.mean_logits[j])) {
                fail(ErrorCode::CorruptFile, "bad mean vector in " + path);
            }
        }
        model.classes.push_back(std::move(cal));
    }
    if (static_cast<int>(model.classes.size()) != model.width) {
        fail(ErrorCode::CorruptFile, "calibration count does not match width in " + path);
    }
    return model;
}

}  // namespace openasc
