#pragma once

#include "openasc/classifier.hpp"
#include "openasc/thresholding.hpp"

namespace openasc {

struct C2aeConfig {
    double threshold = 0.3;        // MAE accept bound; err < threshold accepts
    double weight_correct = 0.8;   // true-label reconstruction loss weight
    double weight_incorrect = 0.2; // wrong-label silence loss weight
};

void validate_c2ae_config(const C2aeConfig& cfg);

// Encoder conv 16/8/4 (kernel 3, stride 3, ReLU), dense 512/128 bottleneck,
// label-conditioned modulation at the bottleneck, mirrored decoder with a
// final 1-channel linear projection. Dense layers are linear.
std::vector<LayerSpec> autoencoder_architecture(const std::vector<int>& input_shape,
                                                int known_count);

Network build_autoencoder(const std::vector<int>& input_shape, int known_count,
                          uint64_t init_seed);

// +1 at the conditioning class, -1 elsewhere.
Tensor conditioning_vector(int label, int known_count);
Tensor conditioning_batch(const std::vector<int>& labels, int known_count);

double reconstruction_mae(const Tensor& reconstruction, const Tensor& input);

// Dual-target objective: reconstruct the input under the true label and
// silence under a sampled wrong label, weighted per config. Both passes run
// in one doubled batch; the network has no batch-coupled layers so this is
// exactly the two-pass sum.
class ReconstructionObjective : public BatchObjective {
public:
    ReconstructionObjective(const TensorDataset& data, int known_count, const C2aeConfig& cfg);
    double train_batch(Network& net, const std::vector<int>& indices,
                       std::mt19937_64& rng) override;
    double eval_loss(Network& net, const std::vector<int>& indices) override;

private:
    double run(Network& net, const std::vector<int>& indices,
               const std::vector<int>& wrong_labels, bool training);

    const TensorDataset& data_;
    int known_count_;
    C2aeConfig cfg_;
};

// Condition on the classifier's predicted label and threshold the MAE.
// Under the augmented regime a predicted reject unit is unknown immediately
// (unknownness = +infinity, no reconstruction exists).
OpenSetDecision c2ae_decide(const LogitRecord& record, const Tensor& input, Network& autoencoder,
                            const C2aeConfig& cfg, Regime regime, int known_count);

}  // namespace openasc
