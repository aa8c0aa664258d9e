#pragma once

#include <iosfwd>
#include <random>
#include <vector>

#include "openasc/network.hpp"
#include "openasc/optimizer.hpp"

namespace openasc {

struct TrainOptions {
    int epochs = 10;
    int batch_size = 32;
    double learning_rate = 0.001;
    uint64_t seed = 0;
    std::ostream* log = nullptr;  // per-epoch lines when set
};

// A task-specific loss over a network: classifier cross-entropy, conditioned
// reconstruction, etc. train_batch runs forward and backward (accumulating
// gradients) and returns the batch loss; eval_loss runs inference only and
// must be deterministic for a given network and index set.
class BatchObjective {
public:
    virtual ~BatchObjective() = default;
    virtual double train_batch(Network& net, const std::vector<int>& indices,
                               std::mt19937_64& rng) = 0;
    virtual double eval_loss(Network& net, const std::vector<int>& indices) = 0;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double tuning_loss = 0.0;
};

struct TrainResult {
    Network best;
    int best_epoch = 0;
    double best_tuning_loss = 0.0;
    std::vector<EpochLog> history;
};

// Minibatch training loop: shuffles per epoch, applies Adam after each batch,
// evaluates on the tuning set each epoch and keeps the strictly best
// checkpoint. Non-finite gradients abort the run.
TrainResult train_network(Network& net, BatchObjective& objective, std::vector<int> train_indices,
                          const std::vector<int>& tuning_indices, const TrainOptions& opts);

}  // namespace openasc
