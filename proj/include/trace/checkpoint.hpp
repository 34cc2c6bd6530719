#pragma once

#include <string>

#include "trace/data.hpp"
#include "trace/model.hpp"

namespace trace {

/// Everything needed to score new data: architecture, the training-split
/// normalization range, and the weights.
struct Checkpoint {
    ModelConfig config;
    NormalizationParams norm;
    ModelParams params;
};

/// Binary format: magic "TRACECKP", format version, full config, min/max,
/// then each tensor (name, shape, little-endian float64 data) in
/// declaration order.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Throws IoError on unreadable files, ShapeMismatch or DataError when the
/// stored tensors disagree with the stored config.
Checkpoint load_checkpoint(const std::string& path);

} // namespace trace
