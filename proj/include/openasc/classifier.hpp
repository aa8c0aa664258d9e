#pragma once

#include <string>
#include <vector>

#include "openasc/features.hpp"
#include "openasc/network.hpp"
#include "openasc/trainer.hpp"

namespace openasc {

// Training regimes: Closed trains on known classes only (width K); Augmented
// adds a trained reject class fed by out-of-vocabulary examples (width K+1,
// reject unit last).
enum class Regime { Closed, Augmented };

Regime parse_regime(const std::string& text);
const char* regime_name(Regime regime);

inline int classifier_width(Regime regime, int known_count) {
    return regime == Regime::Closed ? known_count : known_count + 1;
}

// Five stacked conv blocks (ReLU then batch norm), global average pooling,
// dense softmax head.
std::vector<LayerSpec> classifier_architecture(int output_width);

// Feature matrices become [1, n_mels, n_frames] image tensors: mel bins are
// the vertical axis, frames the horizontal.
Tensor feature_to_tensor(const FeatureMatrix& fm);

// Per-clip classifier outputs kept for calibration and evaluation.
struct LogitRecord {
    std::string id;
    std::string true_label;
    int true_index = -1;  // class index, or width-1 reject unit, or -1 unknown
    int predicted = 0;    // argmax over probabilities
    std::vector<double> logits;
    std::vector<double> probabilities;
};

// Simple in-memory training set shared by the classifier and autoencoder.
struct TensorDataset {
    std::vector<Tensor> inputs;  // each [1, H, W]
    std::vector<int> labels;
    std::vector<std::string> ids;
    std::vector<int> train_indices;
    std::vector<int> tuning_indices;
};

class ClassifierObjective : public BatchObjective {
public:
    ClassifierObjective(const TensorDataset& data, int width) : data_(data), width_(width) {}
    double train_batch(Network& net, const std::vector<int>& indices,
                       std::mt19937_64& rng) override;
    double eval_loss(Network& net, const std::vector<int>& indices) override;

private:
    const TensorDataset& data_;
    int width_;
};

// Mean negative log probability of the true class; fills grad w.r.t. the
// probability tensor when requested.
double cross_entropy(const Tensor& probs, const std::vector<int>& labels, Tensor* grad);

Network build_classifier(Regime regime, int known_count, const std::vector<int>& input_shape,
                         uint64_t init_seed);

// Inference over a batch of inputs; logits read from the pre-softmax layer.
std::vector<LogitRecord> classify(Network& net, const std::vector<Tensor>& inputs,
                                  const std::vector<std::string>& ids,
                                  const std::vector<std::string>& true_labels,
                                  const std::vector<int>& true_indices, int batch_size = 32);

void save_logit_records(const std::string& path, const std::vector<LogitRecord>& records);
std::vector<LogitRecord> load_logit_records(const std::string& path);

Tensor assemble_batch(const std::vector<Tensor>& inputs, const std::vector<int>& indices);

}  // namespace openasc
