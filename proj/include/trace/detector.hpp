#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trace/data.hpp"
#include "trace/model.hpp"

namespace trace {

/// Per-timestamp cross-entropy losses and their sum for one sequence.
struct AnomalyScore {
    std::string id;
    std::vector<double> per_timestamp; // length T-1
    double total = 0.0;
};

enum class ThresholdMethod { three_sigma, eer, quantile };

const char* to_string(ThresholdMethod method);

struct Threshold {
    double value = 0.0;
    ThresholdMethod method = ThresholdMethod::three_sigma;
    // provenance
    double mean = 0.0;  // three_sigma
    double sigma = 0.0; // three_sigma (sample stddev, n-1)
    double fpr = 0.0;   // eer
    double fnr = 0.0;   // eer
    bool degenerate_spread = false;
};

/// Scores one sequence whose values are already normalized to [0,1]:
/// forward on positions 1..T-1, cross-entropy against quantized positions
/// 2..T. Read-only over params.
AnomalyScore score_sequence(const ModelParams& params, const ModelConfig& config,
                            const LabeledSequence& normalized_seq);

struct ScoredSequence {
    AnomalyScore score;
    std::optional<Label> label; // carried through for evaluation, never read here
};

/// Scores every sequence, fanning out across worker threads.
std::vector<ScoredSequence> score_dataset(const ModelParams& params, const ModelConfig& config,
                                          const Dataset& normalized);

/// tau = mean + 3 * sample standard deviation of the training totals.
/// Flags (and warns on) zero spread.
Threshold fit_threshold_three_sigma(const std::vector<double>& train_totals);

/// Nearest-rank quantile of the given totals, q in [0,1].
Threshold fit_threshold_quantile(const std::vector<double>& totals, double q);

/// normal iff tau > total; the boundary counts as abnormal.
Label classify(const AnomalyScore& score, const Threshold& threshold);

/// Scores CSV: `id,label,total,l_t_0,...,l_t_{T-2}`.
void save_scores_csv(const std::vector<ScoredSequence>& scores, const std::string& path);
std::vector<ScoredSequence> load_scores_csv(const std::string& path);

} // namespace trace
