#include "openasc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "openasc/error.hpp"

namespace openasc {

namespace {

double batched_eval(Network& net, BatchObjective& objective, const std::vector<int>& indices,
                    int batch_size) {
    double total = 0.0;
    long count = 0;
    for (size_t start = 0; start < indices.size(); start += batch_size) {
        size_t stop = std::min(indices.size(), start + batch_size);
        std::vector<int> batch(indices.begin() + start, indices.begin() + stop);
        total += objective.eval_loss(net, batch) * static_cast<double>(batch.size());
        count += static_cast<long>(batch.size());
    }
    return total / static_cast<double>(count);
}

}  // namespace

TrainResult train_network(Network& net, BatchObjective& objective, std::vector<int> train_indices,
                          const std::vector<int>& tuning_indices, const TrainOptions& opts) {
    if (train_indices.empty()) fail(ErrorCode::EmptyDataset, "no training examples");
    if (tuning_indices.empty()) fail(ErrorCode::EmptyDataset, "no tuning examples");
    if (opts.epochs <= 0 || opts.batch_size <= 0 || opts.learning_rate <= 0.0) {
        fail(ErrorCode::InvalidParameter, "epochs, batch size, learning rate must be positive");
    }

    std::mt19937_64 rng(opts.seed);
    AdamConfig acfg;
    acfg.learning_rate = opts.learning_rate;
    auto params = net.parameters();
    auto grads = net.gradients();
    Adam adam(params, acfg);

    TrainResult result;
    result.best_tuning_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        std::shuffle(train_indices.begin(), train_indices.end(), rng);
        double epoch_loss = 0.0;
        long seen = 0;
        for (size_t start = 0; start < train_indices.size(); start += opts.batch_size) {
            size_t stop = std::min(train_indices.size(), start + opts.batch_size);
            std::vector<int> batch(train_indices.begin() + start, train_indices.begin() + stop);
            net.zero_grads();
            double loss = objective.train_batch(net, batch, rng);
            if (!std::isfinite(loss)) {
                fail(ErrorCode::NonFiniteGradient,
                     "non-finite loss at epoch " + std::to_string(epoch));
            }
            for (Tensor* g : grads) {
                if (!g->all_finite()) {
                    fail(ErrorCode::NonFiniteGradient,
                         "non-finite gradient at epoch " + std::to_string(epoch));
                }
            }
            adam.step(params, grads);
            epoch_loss += loss * static_cast<double>(batch.size());
            seen += static_cast<long>(batch.size());
        }
        epoch_loss /= static_cast<double>(seen);

        double tuning_loss = batched_eval(net, objective, tuning_indices, opts.batch_size);
        bool improved = tuning_loss < result.best_tuning_loss;
        if (improved) {
            result.best_tuning_loss = tuning_loss;
            result.best_epoch = epoch;
            result.best = net.clone();
        }
        result.history.push_back({epoch, epoch_loss, tuning_loss});
        if (opts.log) {
            char line[160];
            std::snprintf(line, sizeof(line), "epoch %3d  train_loss %.6f  tuning_loss %.6f%s",
                          epoch, epoch_loss, tuning_loss, improved ? "  *" : "");
            (*opts.log) << line << "\n";
            opts.log->flush();
        }
    }
    if (result.best_epoch == 0) {
        // Tuning loss never became finite; surface it rather than return junk.
        fail(ErrorCode::NonFiniteGradient, "tuning loss never reached a finite value");
    }
    return result;
}

}  // namespace openasc
