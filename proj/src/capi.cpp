#include "openasc.h"

#include <cstring>
#include <exception>
#include <iostream>
#include <string>

#include "openasc/config.hpp"
#include "openasc/error.hpp"
#include "openasc/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

oasc_status record_error(const std::exception& e, bool input) {
    g_last_error = e.what();
    return input ? OASC_ERR_INPUT : OASC_ERR_INTERNAL;
}

template <typename Fn>
oasc_status guarded(Fn&& fn) {
    try {
        fn();
        return OASC_OK;
    } catch (const openasc::Error& e) {
        return record_error(e, e.input_error());
    } catch (const std::exception& e) {
        return record_error(e, false);
    }
}

const openasc::PipelineConfig& unwrap(const oasc_config* cfg) {
    return *reinterpret_cast<const openasc::PipelineConfig*>(cfg);
}

openasc::PipelineConfig& unwrap(oasc_config* cfg) {
    return *reinterpret_cast<openasc::PipelineConfig*>(cfg);
}

oasc_status null_arg(const char* what) {
    g_last_error = std::string("null ") + what;
    return OASC_ERR_INPUT;
}

}  // namespace

extern "C" {

oasc_status oasc_config_load(const char* path, oasc_config** out) {
    if (!path || !out) return null_arg("argument");
    *out = nullptr;
    return guarded([&] {
        auto* cfg = new openasc::PipelineConfig(openasc::PipelineConfig::load(path));
        *out = reinterpret_cast<oasc_config*>(cfg);
    });
}

oasc_status oasc_config_parse(const char* text, const char* origin, oasc_config** out) {
    if (!text || !out) return null_arg("argument");
    *out = nullptr;
    return guarded([&] {
        auto* cfg = new openasc::PipelineConfig(
            openasc::PipelineConfig::parse(text, origin ? origin : "<string>"));
        *out = reinterpret_cast<oasc_config*>(cfg);
    });
}

void oasc_config_free(oasc_config* cfg) {
    delete reinterpret_cast<openasc::PipelineConfig*>(cfg);
}

oasc_status oasc_config_set(oasc_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return null_arg("argument");
    return guarded([&] { unwrap(cfg).set(key, value); });
}

oasc_status oasc_config_get(const oasc_config* cfg, const char* key, char* buf, size_t buf_len) {
    if (!cfg || !key || !buf || buf_len == 0) return null_arg("argument");
    return guarded([&] {
        std::string value = unwrap(cfg).get_string(key);
        std::strncpy(buf, value.c_str(), buf_len - 1);
        buf[buf_len - 1] = '\0';
    });
}

oasc_status oasc_config_fingerprint(const oasc_config* cfg, uint64_t* out) {
    if (!cfg || !out) return null_arg("argument");
    return guarded([&] { *out = unwrap(cfg).fingerprint(); });
}

oasc_status oasc_synthesize(const oasc_config* cfg) {
    if (!cfg) return null_arg("config");
    return guarded([&] { openasc::cmd_synthesize(unwrap(cfg), &std::cerr); });
}

oasc_status oasc_featurize(const oasc_config* cfg) {
    if (!cfg) return null_arg("config");
    return guarded([&] { openasc::cmd_featurize(unwrap(cfg), &std::cerr); });
}

oasc_status oasc_train_classifier(const oasc_config* cfg) {
    if (!cfg) return null_arg("config");
    return guarded([&] { openasc::cmd_train_classifier(unwrap(cfg), &std::cerr); });
}

oasc_status oasc_train_autoencoder(const oasc_config* cfg) {
    if (!cfg) return null_arg("config");
    return guarded([&] { openasc::cmd_train_autoencoder(unwrap(cfg), &std::cerr); });
}

oasc_status oasc_fit_openmax(const oasc_config* cfg) {
    if (!cfg) return null_arg("config");
    return guarded([&] { openasc::cmd_fit_openmax(unwrap(cfg), &std::cerr); });
}

oasc_status oasc_evaluate(const oasc_config* cfg, const char* backend) {
    if (!cfg || !backend) return null_arg("argument");
    return guarded([&] { openasc::cmd_evaluate(unwrap(cfg), backend, &std::cerr); });
}

oasc_status oasc_infer(const oasc_config* cfg, const char* backend, const char* wav_path,
                       oasc_decision* out) {
    if (!cfg || !backend || !wav_path || !out) return null_arg("argument");
    return guarded([&] {
        openasc::InferenceResult r = openasc::cmd_infer(unwrap(cfg), backend, wav_path);
        out->unknown = r.unknown ? 1 : 0;
        out->score = r.score;
        std::strncpy(out->label, r.label.c_str(), sizeof(out->label) - 1);
        out->label[sizeof(out->label) - 1] = '\0';
    });
}

const char* oasc_last_error(void) { return g_last_error.c_str(); }

const char* oasc_version(void) { return "0.1.0"; }

}  // extern "C"
