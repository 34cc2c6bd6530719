#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "trace/data.hpp"
#include "trace/model.hpp"

namespace trace {

struct TrainConfig {
    int epochs = 200;
    double step_size = 1e-3; // Adam eta
    int batch_size = 1;      // per-wafer updates; >1 accumulates then steps
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double grad_clip = 0.0; // max global norm; 0 disables
    std::uint64_t seed = 1;

    void validate() const;
};

struct LossRecord {
    std::vector<double> epoch_mean_loss;                  // mean L_n per epoch
    std::vector<double> final_sequence_loss;              // L_n per training sequence, eval mode
    std::vector<std::vector<double>> final_per_timestamp; // L(n,t)
};

/// -log softmax(logits)[target], stable via log-sum-exp.
double cross_entropy(std::span<const double> logits_row, int target);

/// Per-timestamp losses plus their sum L_n. Targets are the quantized
/// classes of positions 2..T (one per logits row).
std::pair<std::vector<double>, double> sequence_loss(const ForwardOutput& output,
                                                     const QuantizedSequence& targets);

/// Adam first/second moment buffers, aligned with ModelParams::tensors().
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;
};

AdamState make_adam_state(const ModelParams& params);

/// One bias-corrected Adam update. Throws NumericError on non-finite
/// gradients.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& config);

/// Forward + backward for one sequence: returns L_n and fills `grads`
/// (zeroed first) with dL_n/dw for every tensor. `values` is the full
/// normalized sequence of length T.
double loss_and_gradients(const std::vector<double>& values, const ModelParams& params,
                          const ModelConfig& config, ForwardCache& cache, ModelParams& grads);

struct TrainResult {
    ModelParams params;
    LossRecord record;
};

/// Generative pre-training: per-sequence next-value cross-entropy minimized
/// with Adam, Algorithm-style inner loop over sequences in order. Takes
/// normalized value rows only — labels cannot reach this path.
TrainResult train(const std::vector<std::vector<double>>& sequences, const ModelConfig& model_config,
                  const TrainConfig& train_config);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::int64_t checked = 0; // scalar parameters covered
};

/// Central finite differences vs the analytic gradient, every parameter of
/// every tensor. `values` is one full normalized sequence.
GradCheckResult grad_check(const ModelConfig& config, const std::vector<double>& values,
                           double epsilon = 1e-5);

} // namespace trace
