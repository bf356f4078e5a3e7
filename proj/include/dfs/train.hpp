#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "dfs/error.hpp"
#include "dfs/metrics.hpp"
#include "dfs/model.hpp"
#include "dfs/rng.hpp"
#include "dfs/sample.hpp"

namespace dfs {

struct TrainLogEntry {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double train_top1 = 0.0;
};

inline std::size_t argmax_class(const std::vector<double>& logits) {
    return static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
}

// Forward every sample against a read-only ParamStore, reduce into one
// confusion matrix.
inline ConfusionMatrix evaluate_confusion(const std::vector<MultiModalSample>& samples,
                                          const NetworkConfig& cfg, const ParamStore& params) {
    ConfusionMatrix cm(cfg.num_classes);
    for (const auto& s : samples) {
        if (s.label >= cfg.num_classes) throw InvalidLabel("evaluate: label out of range");
        auto [logits, tape] = forward_full(s, cfg, params);
        cm.update(s.label, argmax_class(logits));
    }
    return cm;
}

// Deterministic single-threaded training: seeded Glorot init, fixed-seed
// shuffle each epoch, gradients averaged per batch, one SGD step per batch.
// The per-epoch train_top1 comes from an end-of-epoch evaluation pass, so an
// eval of the final model on the training set reproduces the last log line.
inline std::pair<ParamStore, std::vector<TrainLogEntry>> train_model(
    const NetworkConfig& cfg, const TrainConfig& tc,
    const std::vector<MultiModalSample>& samples) {
    cfg.validate();
    tc.validate();
    ParamStore params = ParamStore::init(cfg, tc.seed);
    std::vector<TrainLogEntry> log;
    if (tc.epochs == 0) return {std::move(params), std::move(log)};
    if (samples.empty()) throw InvalidInput("train_model: empty dataset");

    std::mt19937_64 shuffle_rng(mix_seed(tc.seed, 0x7261696e));  // shuffle stream
    SgdOptimizer opt(tc);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t base = 0; base < order.size(); base += tc.batch_size) {
            const std::size_t bsz = std::min(tc.batch_size, order.size() - base);
            GradStore batch = ParamStore::zeros(cfg);
            for (std::size_t o = 0; o < bsz; ++o) {
                const MultiModalSample& s = samples[order[base + o]];
                auto [logits, tape] = forward_full(s, cfg, params);
                loss_sum += cross_entropy_loss(logits, s.label);
                GradStore g = backward_full(tape, s.label, cfg, params);
                for (std::size_t st = 0; st < batch.stages.size(); ++st)
                    for (std::size_t p = 0; p < batch.stages[st].size(); ++p) {
                        auto& bw = batch.stages[st][p];
                        const auto& gw = g.stages[st][p];
                        for (std::size_t n = 0; n < bw.w.size(); ++n) bw.w[n] += gw.w[n];
                        for (std::size_t n = 0; n < bw.b.size(); ++n) bw.b[n] += gw.b[n];
                    }
                for (std::size_t n = 0; n < batch.fc_w.size(); ++n) batch.fc_w[n] += g.fc_w[n];
                for (std::size_t n = 0; n < batch.fc_b.size(); ++n) batch.fc_b[n] += g.fc_b[n];
            }
            const double inv = 1.0 / static_cast<double>(bsz);
            batch.for_each_array([inv](std::vector<double>& a) {
                for (double& v : a) v *= inv;
            });
            opt.step(params, batch);
        }
        ConfusionMatrix cm = evaluate_confusion(samples, cfg, params);
        log.push_back({epoch, loss_sum / static_cast<double>(samples.size()),
                       top1_accuracy(cm)});
    }
    return {std::move(params), std::move(log)};
}

}  // namespace dfs
