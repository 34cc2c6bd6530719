#pragma once

#include <string>
#include <vector>

#include "trace/detector.hpp"
#include "trace/evaluator.hpp"
#include "trace/faults.hpp"
#include "trace/mat.hpp"

namespace trace {

// All exports are pure functions of their inputs: no timestamps, fixed
// number formatting, byte-deterministic.

/// Next-value probability grid (classes x timesteps) as CSV plus an SVG
/// heatmap with the raw sequence overlaid one step to the right of the
/// model input. `probs` is (T-1) x r; `raw_normalized` the full T values.
void export_probability_heatmap(const Mat& probs, const std::vector<double>& raw_normalized,
                                const std::string& path_prefix);

/// One grid per (layer, head): attn_l{L}_h{H}.csv / .svg under dir.
void export_attention_maps(const std::vector<std::vector<Mat>>& attentions,
                           const std::string& dir);

/// Histogram of sequence losses with the decision threshold marked; fault
/// kinds split out when a manifest is given.
void export_loss_histogram(const std::vector<double>& train_totals,
                           const std::vector<ScoredSequence>& test_scores,
                           const Threshold& threshold, const std::string& path_prefix,
                           const FaultManifest* manifest = nullptr, int bins = 40);

void export_roc_svg(const RocCurve& curve, double auc_value, const std::string& path);

/// Parses a grid CSV written by the exporters (header row and column).
Mat load_grid_csv(const std::string& path);

} // namespace trace
