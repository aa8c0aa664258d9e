#pragma once

#include <iosfwd>
#include <string>

#include "openasc/config.hpp"

namespace openasc {

// One command per pipeline stage. Each reads its inputs and writes its
// artifacts per the paths section of the config; progress lines go to `log`
// when non-null. Commands throw Error on failure and are idempotent for a
// fixed config.
void cmd_synthesize(const PipelineConfig& cfg, std::ostream* log);
void cmd_featurize(const PipelineConfig& cfg, std::ostream* log);
void cmd_train_classifier(const PipelineConfig& cfg, std::ostream* log);
void cmd_train_autoencoder(const PipelineConfig& cfg, std::ostream* log);
void cmd_fit_openmax(const PipelineConfig& cfg, std::ostream* log);
void cmd_evaluate(const PipelineConfig& cfg, const std::string& backend, std::ostream* log);

struct InferenceResult {
    bool unknown = false;
    std::string label;  // class name, or "unknown"
    double score = 0.0;
};

InferenceResult cmd_infer(const PipelineConfig& cfg, const std::string& backend,
                          const std::string& wav_path);

}  // namespace openasc
