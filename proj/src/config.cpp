#include "openasc/config.hpp"

#include <algorithm>
#include <sstream>

#include "openasc/binfile.hpp"
#include "openasc/error.hpp"

namespace openasc {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    return parse(read_text_file(path), path);
}

PipelineConfig PipelineConfig::parse(const std::string& text, const std::string& origin) {
    PipelineConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3) {
                fail(ErrorCode::InvalidConfig,
                     origin + ":" + std::to_string(lineno) + ": malformed section header");
            }
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::InvalidConfig,
                 origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            fail(ErrorCode::InvalidConfig, origin + ":" + std::to_string(lineno) + ": empty key");
        }
        if (section.empty()) {
            fail(ErrorCode::InvalidConfig,
                 origin + ":" + std::to_string(lineno) + ": key outside any section");
        }
        cfg.kv_[section + "." + key] = value;
    }
    cfg.validate();
    return cfg;
}

void PipelineConfig::validate() const {
    if (!has("pipeline.seed")) {
        fail(ErrorCode::InvalidConfig, "pipeline.seed is mandatory");
    }
    seed();  // parse check
    if (has("pipeline.regime")) regime();
}

bool PipelineConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (key.find('.') == std::string::npos) {
        fail(ErrorCode::InvalidConfig, "config keys are section.key, got '" + key + "'");
    }
    kv_[key] = value;
}

std::string PipelineConfig::get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) fail(ErrorCode::InvalidConfig, "missing config key " + key);
    return it->second;
}

std::string PipelineConfig::get_string_or(const std::string& key,
                                          const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

long PipelineConfig::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidConfig, "config key " + key + " is not an integer: '" + v + "'");
    }
}

long PipelineConfig::get_int_or(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double PipelineConfig::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidConfig, "config key " + key + " is not a number: '" + v + "'");
    }
}

double PipelineConfig::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::vector<std::string> PipelineConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream ss(get_string(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    if (out.empty()) fail(ErrorCode::InvalidConfig, "config key " + key + " lists no values");
    return out;
}

std::vector<double> PipelineConfig::get_double_list_or(const std::string& key,
                                                       const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const std::string& item : get_list(key)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidConfig, "config key " + key + " has a bad number: '" + item + "'");
        }
    }
    return out;
}

uint64_t PipelineConfig::fingerprint() const {
    // Canonical text of the identity-bearing keys, in sorted order.
    std::ostringstream os;
    for (const auto& [key, value] : kv_) {
        bool identity = key.rfind("features.", 0) == 0 || key.rfind("synthetic.", 0) == 0 ||
                        key.rfind("training.", 0) == 0 || key == "pipeline.seed" ||
                        key == "pipeline.regime" || key == "pipeline.known_classes";
        if (identity) os << key << "=" << value << "\n";
    }
    return fnv1a64_str(os.str());
}

uint64_t PipelineConfig::seed() const {
    const std::string v = get_string("pipeline.seed");
    try {
        size_t pos = 0;
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<uint64_t>(x);
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidConfig, "pipeline.seed is not a non-negative integer: '" + v + "'");
    }
}

Regime PipelineConfig::regime() const {
    return parse_regime(get_string_or("pipeline.regime", "closed"));
}

LabelSet PipelineConfig::known_classes() const {
    LabelSet labels;
    labels.known = get_list("pipeline.known_classes");
    for (const std::string& name : labels.known) {
        if (name == "unknown") {
            fail(ErrorCode::InvalidConfig, "'unknown' cannot be a known class name");
        }
        if (std::count(labels.known.begin(), labels.known.end(), name) != 1) {
            fail(ErrorCode::InvalidConfig, "duplicate known class " + name);
        }
    }
    if (labels.known.size() < 2) {
        fail(ErrorCode::InvalidConfig, "need at least 2 known classes");
    }
    return labels;
}

FeatureConfig PipelineConfig::feature_config() const {
    FeatureConfig f;
    f.window_size = static_cast<int>(get_int_or("features.window_size", 2048));
    f.hop = static_cast<int>(get_int_or("features.hop", 512));
    f.n_mels = static_cast<int>(get_int_or("features.n_mels", 256));
    f.log_floor = get_double_or("features.log_floor", 1e-10);
    std::string w = get_string_or("features.window", "hann");
    if (w == "hann") {
        f.window = WindowKind::Hann;
    } else if (w == "rect") {
        f.window = WindowKind::Rect;
    } else {
        fail(ErrorCode::InvalidConfig, "features.window must be hann or rect, got '" + w + "'");
    }
    return f;
}

EvtConfig PipelineConfig::evt_config() const {
    EvtConfig e;
    e.tail_size = static_cast<int>(get_int_or("backend.openmax_tail", 20));
    e.alpha = static_cast<int>(get_int_or("backend.openmax_alpha", 10));
    e.divergence.euclid_weight = get_double_or("backend.openmax_euclid_weight", 0.005);
    e.divergence.cosine_weight = get_double_or("backend.openmax_cosine_weight", 1.0);
    return e;
}

C2aeConfig PipelineConfig::c2ae_config() const {
    C2aeConfig c;
    c.threshold = get_double_or("backend.theta", 0.3);
    c.weight_correct = get_double_or("backend.recon_weight_correct", 0.8);
    c.weight_incorrect = get_double_or("backend.recon_weight_incorrect", 0.2);
    validate_c2ae_config(c);
    return c;
}

double PipelineConfig::tuning_fraction() const {
    return get_double_or("training.tuning_fraction", 0.1);
}

TrainOptions PipelineConfig::train_options(const std::string& target) const {
    TrainOptions t;
    t.epochs = static_cast<int>(get_int_or("training." + target + "_epochs", 100));
    t.batch_size = static_cast<int>(get_int_or("training.batch_size", 32));
    t.learning_rate = get_double_or("training.learning_rate", 0.001);
    t.seed = derive_seed(seed(), target + "_train");
    return t;
}

std::vector<double> PipelineConfig::epsilon_list() const {
    return get_double_list_or("backend.epsilon_list", {0.5});
}

int PipelineConfig::histogram_bins() const {
    return static_cast<int>(get_int_or("backend.histogram_bins", 30));
}

std::string PipelineConfig::path(const std::string& name) const {
    return get_string("paths." + name);
}

std::string PipelineConfig::path_or(const std::string& name, const std::string& fallback) const {
    return get_string_or("paths." + name, fallback);
}

}  // namespace openasc
