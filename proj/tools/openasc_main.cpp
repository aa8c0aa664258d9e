// Command-line front end. Links only the public C API.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "openasc.h"

namespace {

struct ConfigGuard {
    oasc_config* cfg = nullptr;
    ~ConfigGuard() { oasc_config_free(cfg); }
};

int fail_status(oasc_status st, const char* stage) {
    std::fprintf(stderr, "error (%s): %s\n", stage, oasc_last_error());
    return static_cast<int>(st);
}

int load_config(const std::string& path, const std::vector<std::string>& overrides,
                ConfigGuard& guard) {
    oasc_status st = oasc_config_load(path.c_str(), &guard.cfg);
    if (st != OASC_OK) return fail_status(st, "config");
    const char* cache_env = std::getenv("OPENASC_CACHE_DIR");
    if (cache_env && *cache_env) {
        st = oasc_config_set(guard.cfg, "paths.cache_dir", cache_env);
        if (st != OASC_OK) return fail_status(st, "config");
    }
    for (const std::string& kv : overrides) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error (config): --set expects key=value, got %s\n", kv.c_str());
            return static_cast<int>(OASC_ERR_INPUT);
        }
        st = oasc_config_set(guard.cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (st != OASC_OK) return fail_status(st, "config");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-set acoustic scene classification toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Pipeline config file")->required();
    app.add_option("--set", overrides, "Override a config entry (section.key=value)");

    std::string backend = "threshold";
    std::string wav_path;

    CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
    CLI::App* featurize = app.add_subcommand("featurize", "Extract and cache features");
    CLI::App* train_cls = app.add_subcommand("train-classifier", "Train the scene classifier");
    CLI::App* train_ae =
        app.add_subcommand("train-autoencoder", "Train the conditioned autoencoder");
    CLI::App* fit_om = app.add_subcommand("fit-openmax", "Calibrate the EVT rejection model");
    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a back-end on the test set");
    evaluate->add_option("--backend", backend, "threshold, openmax, or c2ae");
    CLI::App* infer = app.add_subcommand("infer", "Classify one WAV file");
    infer->add_option("--backend", backend, "threshold, openmax, or c2ae");
    infer->add_option("--wav", wav_path, "Input WAV path")->required();

    CLI11_PARSE(app, argc, argv);

    ConfigGuard guard;
    int rc = load_config(config_path, overrides, guard);
    if (rc != 0) return rc;

    oasc_status st = OASC_OK;
    const char* stage = "";
    if (synth->parsed()) {
        stage = "synth";
        st = oasc_synthesize(guard.cfg);
    } else if (featurize->parsed()) {
        stage = "featurize";
        st = oasc_featurize(guard.cfg);
    } else if (train_cls->parsed()) {
        stage = "train-classifier";
        st = oasc_train_classifier(guard.cfg);
    } else if (train_ae->parsed()) {
        stage = "train-autoencoder";
        st = oasc_train_autoencoder(guard.cfg);
    } else if (fit_om->parsed()) {
        stage = "fit-openmax";
        st = oasc_fit_openmax(guard.cfg);
    } else if (evaluate->parsed()) {
        stage = "evaluate";
        st = oasc_evaluate(guard.cfg, backend.c_str());
    } else if (infer->parsed()) {
        stage = "infer";
        oasc_decision decision{};
        st = oasc_infer(guard.cfg, backend.c_str(), wav_path.c_str(), &decision);
        if (st == OASC_OK) {
            std::printf("%s\t%.17g\n", decision.label, decision.score);
        }
    }
    if (st != OASC_OK) return fail_status(st, stage);
    return 0;
}
