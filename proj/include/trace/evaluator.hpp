#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trace/data.hpp"
#include "trace/detector.hpp"
#include "trace/faults.hpp"

namespace trace {

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Threshold sweep over the distinct score values plus +/-inf sentinels;
/// a sequence is predicted abnormal when its score >= threshold. Positive
/// class is abnormal throughout.
struct RocCurve {
    std::vector<RocPoint> points;
};

RocCurve roc_curve(const std::vector<double>& totals, const std::vector<Label>& labels);

/// Trapezoidal area; equals the pairwise-comparison estimate with ties
/// counted 1/2.
double auc(const RocCurve& curve);

struct EerPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
};

/// Threshold minimizing |fpr - fnr|; ties broken by smaller fpr, then
/// smaller threshold.
EerPoint eer_point(const RocCurve& curve);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    bool no_predicted_positives = false; // precision reported 0 by convention
};

Metrics metrics_at(const std::vector<double>& totals, const std::vector<Label>& labels,
                   double threshold);

struct FaultGroupStats {
    FaultKind kind = FaultKind::bias;
    int count = 0;
    double min_total = 0.0;
    double mean_total = 0.0;
    double max_total = 0.0;
};

struct FaultBreakdown {
    std::vector<FaultGroupStats> groups;
    FaultKind hardest = FaultKind::bias; // smallest minimum total
};

/// Per-fault-kind score statistics, joined through the generator manifest.
FaultBreakdown per_fault_breakdown(const std::vector<ScoredSequence>& scores,
                                   const FaultManifest& manifest);

void save_roc_csv(const RocCurve& curve, const std::string& path);

/// One Table-style metrics row rendered with ANSI colors when stderr is a
/// terminal.
void print_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows,
                         std::FILE* out);

} // namespace trace
