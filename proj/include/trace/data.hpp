#pragma once

#include <optional>
#include <string>
#include <vector>

namespace trace {

enum class Label { normal, abnormal };

const char* to_string(Label label);

/// One wafer sensor trace. Labels ride along for evaluation; the training
/// path never reads them.
struct LabeledSequence {
    std::string id;
    std::vector<double> values; // length = owning dataset's seq_len, all finite
    std::optional<Label> label;
};

enum class Split { train, test };

struct Dataset {
    std::vector<LabeledSequence> sequences;
    int seq_len = 0;
    Split split = Split::train;

    std::size_t size() const { return sequences.size(); }
    std::size_t count(Label label) const;
};

/// Training-split min/max; max > min strictly.
struct NormalizationParams {
    double min = 0.0;
    double max = 0.0;
};

/// Values mapped to integer classes in [0, resolution).
struct QuantizedSequence {
    std::vector<int> classes;
    int resolution = 0;
};

/// Class-label convention of UCR archive files; overridable.
struct UcrLabelMap {
    int normal = 1;
    int abnormal = -1;
};

/// UCR TSV: one record per line, first field class label, remaining fields
/// the sequence values. Sequence length inferred from the first row.
Dataset load_ucr_tsv(const std::string& path, Split split = Split::train,
                     const UcrLabelMap& label_map = {});

/// Canonical CSV: header `id,label,x0,...,x{T-1}`; empty label = unlabeled.
Dataset load_csv(const std::string& path, Split split = Split::train);

/// Writes canonical CSV. Values at 9 significant digits, LF endings.
void save_csv(const Dataset& dataset, const std::string& path);

/// %.9g formatting shared by every CSV writer so grids round-trip.
std::string format_value(double v);

NormalizationParams fit_normalizer(const Dataset& train);

/// (v - min)/(max - min), clamped into [0,1]; clamping absorbs test-time
/// values outside the training range.
std::vector<double> normalize(const std::vector<double>& values, const NormalizationParams& params);
std::vector<double> normalize(const LabeledSequence& seq, const NormalizationParams& params);

/// class = floor(v * r) clamped to r-1.
QuantizedSequence quantize(const std::vector<double>& normalized, int resolution);

/// Dataset with every sequence's values normalized in place.
Dataset normalize_dataset(const Dataset& dataset, const NormalizationParams& params);

} // namespace trace
