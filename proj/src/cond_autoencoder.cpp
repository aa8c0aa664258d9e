#include "openasc/cond_autoencoder.hpp"

#include <cmath>
#include <limits>

#include "openasc/error.hpp"

namespace openasc {

void validate_c2ae_config(const C2aeConfig& cfg) {
    if (!(cfg.threshold > 0.0)) {
        fail(ErrorCode::InvalidConfig, "reconstruction threshold must be positive");
    }
    if (std::abs(cfg.weight_correct + cfg.weight_incorrect - 1.0) > 1e-12) {
        fail(ErrorCode::InvalidConfig, "reconstruction loss weights must sum to 1");
    }
    if (cfg.weight_correct < 0.0 || cfg.weight_incorrect < 0.0) {
        fail(ErrorCode::InvalidConfig, "reconstruction loss weights must be non-negative");
    }
}

std::vector<LayerSpec> autoencoder_architecture(const std::vector<int>& input_shape,
                                                int known_count) {
    if (input_shape.size() != 3 || input_shape[0] != 1) {
        fail(ErrorCode::ShapeError,
             "autoencoder expects [1,H,W] input, got " + shape_str(input_shape));
    }
    if (known_count < 2) fail(ErrorCode::InvalidParameter, "conditioning needs at least 2 classes");
    int h = input_shape[1], w = input_shape[2];
    if (h < 27 || w < 27) {
        fail(ErrorCode::ShapeError, "input " + shape_str(input_shape) +
                                        " too small for three stride-3 reductions");
    }
    auto up = [](int n) { return (n + 2) / 3; };
    int h1 = up(h), w1 = up(w);
    int h2 = up(h1), w2 = up(w1);
    int h3 = up(h2), w3 = up(w2);
    int flat = 4 * h3 * w3;

    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::conv2d(16, 3, 3));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::conv2d(8, 3, 3));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::conv2d(4, 3, 3));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::flatten());
    specs.push_back(LayerSpec::dense(512));
    specs.push_back(LayerSpec::dense(128));
    specs.push_back(LayerSpec::film(known_count));
    specs.push_back(LayerSpec::dense(128));
    specs.push_back(LayerSpec::dense(512));
    specs.push_back(LayerSpec::dense(flat));
    specs.push_back(LayerSpec::reshape({4, h3, w3}));
    specs.push_back(LayerSpec::conv_transpose2d(4, 3, 3, h2, w2));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::conv_transpose2d(8, 3, 3, h1, w1));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::conv_transpose2d(16, 3, 3, h, w));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::conv2d(1, 1, 1));
    return specs;
}

Network build_autoencoder(const std::vector<int>& input_shape, int known_count,
                          uint64_t init_seed) {
    return Network::build(autoencoder_architecture(input_shape, known_count), input_shape,
                          init_seed);
}

Tensor conditioning_vector(int label, int known_count) {
    if (label < 0 || label >= known_count) {
        fail(ErrorCode::InvalidParameter, "conditioning label out of range");
    }
    Tensor y({known_count}, -1.0);
    y.v[label] = 1.0;
    return y;
}

Tensor conditioning_batch(const std::vector<int>& labels, int known_count) {
    Tensor y({static_cast<int>(labels.size()), known_count}, -1.0);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= known_count) {
            fail(ErrorCode::InvalidParameter, "conditioning label out of range");
        }
        y.at2(static_cast<int>(i), labels[i]) = 1.0;
    }
    return y;
}

double reconstruction_mae(const Tensor& reconstruction, const Tensor& input) {
    if (!reconstruction.same_shape(input) || reconstruction.empty()) {
        fail(ErrorCode::ShapeError, "reconstruction and input shapes differ");
    }
    double acc = 0.0;
    for (size_t i = 0; i < input.v.size(); ++i) {
        acc += std::abs(reconstruction.v[i] - input.v[i]);
    }
    return acc / static_cast<double>(input.v.size());
}

ReconstructionObjective::ReconstructionObjective(const TensorDataset& data, int known_count,
                                                 const C2aeConfig& cfg)
    : data_(data), known_count_(known_count), cfg_(cfg) {
    if (known_count < 2) {
        fail(ErrorCode::InvalidConfig, "need at least 2 classes to sample a wrong label");
    }
    validate_c2ae_config(cfg);
    for (int label : data.labels) {
        if (label < 0 || label >= known_count) {
            fail(ErrorCode::InvalidParameter, "reconstruction training labels must be known");
        }
    }
}

double ReconstructionObjective::run(Network& net, const std::vector<int>& indices,
                                    const std::vector<int>& wrong_labels, bool training) {
    int b = static_cast<int>(indices.size());
    // Doubled batch: first half reconstructs the input under the true label,
    // second half reconstructs silence under the wrong label.
    std::vector<int> doubled = indices;
    doubled.insert(doubled.end(), indices.begin(), indices.end());
    Tensor batch = assemble_batch(data_.inputs, doubled);
    std::vector<int> cond_labels(2 * b);
    for (int i = 0; i < b; ++i) {
        cond_labels[i] = data_.labels[indices[i]];
        cond_labels[b + i] = wrong_labels[i];
    }
    Tensor cond = conditioning_batch(cond_labels, known_count_);
    Tensor recon = net.forward(batch, &cond, training);

    size_t stride = recon.v.size() / (2 * static_cast<size_t>(b));
    double loss = 0.0;
    Tensor grad(recon.shape);
    for (int i = 0; i < 2 * b; ++i) {
        bool correct_half = i < b;
        double w = correct_half ? cfg_.weight_correct : cfg_.weight_incorrect;
        double gscale = 2.0 * w / (static_cast<double>(stride) * b);
        double se = 0.0;
        for (size_t j = 0; j < stride; ++j) {
            size_t at = i * stride + j;
            double target = correct_half ? batch.v[at] : 0.0;
            double diff = recon.v[at] - target;
            se += diff * diff;
            grad.v[at] = gscale * diff;
        }
        loss += w * se / static_cast<double>(stride);
    }
    loss /= static_cast<double>(b);
    if (training) net.backward(grad);
    return loss;
}

double ReconstructionObjective::train_batch(Network& net, const std::vector<int>& indices,
                                            std::mt19937_64& rng) {
    std::vector<int> wrong(indices.size());
    std::uniform_int_distribution<int> offset(1, known_count_ - 1);
    for (size_t i = 0; i < indices.size(); ++i) {
        int truth = data_.labels[indices[i]];
        wrong[i] = (truth + offset(rng)) % known_count_;
    }
    return run(net, indices, wrong, true);
}

double ReconstructionObjective::eval_loss(Network& net, const std::vector<int>& indices) {
    // Deterministic wrong label so tuning loss is comparable across epochs.
    std::vector<int> wrong(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        wrong[i] = (data_.labels[indices[i]] + 1) % known_count_;
    }
    return run(net, indices, wrong, false);
}

OpenSetDecision c2ae_decide(const LogitRecord& record, const Tensor& input, Network& autoencoder,
                            const C2aeConfig& cfg, Regime regime, int known_count) {
    validate_c2ae_config(cfg);
    OpenSetDecision d;
    if (regime == Regime::Augmented &&
        record.predicted == static_cast<int>(record.probabilities.size()) - 1) {
        d.unknown = true;
        d.unknownness = std::numeric_limits<double>::infinity();
        return d;
    }
    if (record.predicted < 0 || record.predicted >= known_count) {
        fail(ErrorCode::InvalidParameter, "predicted class cannot condition the autoencoder");
    }
    std::vector<int> one{0};
    std::vector<Tensor> single{input};
    Tensor batch = assemble_batch(single, one);
    Tensor cond = conditioning_batch({record.predicted}, known_count);
    Tensor recon = autoencoder.forward(batch, &cond, false);
    double err = reconstruction_mae(recon, batch);
    d.unknownness = err;
    if (err < cfg.threshold) {
        d.class_index = record.predicted;
    } else {
        d.unknown = true;
    }
    return d;
}

}  // namespace openasc
