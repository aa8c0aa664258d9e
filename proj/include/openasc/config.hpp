#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "openasc/classifier.hpp"
#include "openasc/cond_autoencoder.hpp"
#include "openasc/features.hpp"
#include "openasc/openmax.hpp"

namespace openasc {

// Line-oriented "[section]" / "key = value" configuration. Keys are
// addressed as "section.key". A pipeline seed is mandatory.
class PipelineConfig {
public:
    static PipelineConfig load(const std::string& path);
    static PipelineConfig parse(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    long get_int(const std::string& key) const;
    long get_int_or(const std::string& key, long fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list_or(const std::string& key,
                                           const std::vector<double>& fallback) const;

    // Identity hash over the content-determining keys (features, synthetic,
    // training, seed, regime, known classes). Paths and decision-time
    // back-end parameters are excluded so artifacts stay valid when moved or
    // re-thresholded.
    uint64_t fingerprint() const;

    uint64_t seed() const;
    Regime regime() const;
    LabelSet known_classes() const;
    FeatureConfig feature_config() const;
    EvtConfig evt_config() const;
    C2aeConfig c2ae_config() const;
    double tuning_fraction() const;
    TrainOptions train_options(const std::string& target) const;
    std::vector<double> epsilon_list() const;
    int histogram_bins() const;

    std::string path(const std::string& name) const;          // required paths.<name>
    std::string path_or(const std::string& name, const std::string& fallback) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    void validate() const;
    std::map<std::string, std::string> kv_;
};

}  // namespace openasc
