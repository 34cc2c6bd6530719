#pragma once

#include <optional>
#include <string>

#include "trace/detector.hpp"
#include "trace/faults.hpp"
#include "trace/model.hpp"
#include "trace/trainer.hpp"

namespace trace {

struct GeneratorConfig {
    TraceProfile profile;
    int n_train = 9;
    int n_test_normal = 567;
};

/// Unified run configuration: JSON file first, CLI flags override.
/// Unknown keys are rejected with their field path.
struct RunConfig {
    struct Paths {
        std::string data;
        std::string test;
        std::string checkpoint;
        std::string manifest;
        std::string scores;
        std::string train_scores;
        std::string out = "out";
    } paths;

    ModelConfig model;
    TrainConfig train;
    GeneratorConfig generator;
    ThresholdMethod threshold_method = ThresholdMethod::eer;
    std::optional<std::uint64_t> master_seed; // overrides the per-section seeds

    void validate() const;
    void apply_master_seed();
};

RunConfig parse_config_text(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

} // namespace trace
