#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trace/data.hpp"

namespace trace {

/// Shape of a clean gas-flow trace: linear ramp-up, noisy hold at the
/// setpoint, linear ramp-down.
struct TraceProfile {
    int seq_len = 53;
    int ramp_len = 10;         // 0 < ramp_len < seq_len/2
    double setpoint = 1.0;     // raw units
    double noise_sigma = 0.01; // fraction of setpoint, hold region only
    std::uint64_t seed = 1;

    int hold_begin() const { return ramp_len; }
    int hold_end() const { return seq_len - ramp_len; }
};

enum class FaultKind {
    bias,
    temporary_change,
    noise_disturbance,
    sinusoidal_disturbance,
    peripheral_point,
    micro_arcing,
    inlet_valve_leak,
    outlet_valve_leak,
};

inline constexpr int kFaultKindCount = 8;

const char* to_string(FaultKind kind);
std::optional<FaultKind> fault_kind_from_string(std::string_view name);

/// Fault magnitudes are fractions of the setpoint, capped at 5%.
inline constexpr double kMaxFaultMagnitude = 0.05;

struct FaultSpec {
    FaultKind kind = FaultKind::bias;
    double magnitude = 0.05; // 0 < magnitude <= kMaxFaultMagnitude
    int start = 0;
    int duration = 0; // start + duration <= seq_len
    std::uint64_t seed = 0;
    double cycles = 3.0;     // sinusoidal / damped-oscillation cycles in the window
    double decay_rate = 0.0; // leak decay constant; 0 picks the kind default
};

/// n clean traces, labeled normal; deterministic in (profile, seed).
std::vector<LabeledSequence> generate_normal(const TraceProfile& profile, int n, std::uint64_t seed);

/// Applies the fault on top of seq, relabels abnormal. Indices outside the
/// affected range are bit-identical to the input.
LabeledSequence inject_fault(const LabeledSequence& seq, const FaultSpec& spec,
                             const TraceProfile& profile);

/// Fault suite with paper-style defaults: one spec per kind, magnitudes
/// within the 5% envelope, micro-arcing at 1.5% from the sequence midpoint.
std::vector<FaultSpec> default_fault_suite(const TraceProfile& profile, std::uint64_t seed);

struct FaultManifest {
    TraceProfile profile;
    std::vector<std::pair<std::string, FaultSpec>> faults; // sequence id -> spec
};

/// Synthetic stand-in for the private CVD process log: 9 training normals,
/// 567 test normals, 8 abnormal test sequences (one per fault kind).
struct CvdReplica {
    Dataset train;
    Dataset test;
    FaultManifest manifest;
};

CvdReplica make_cvd_replica(const TraceProfile& profile, std::uint64_t seed, int n_train = 9,
                            int n_test_normal = 567);

void save_manifest(const FaultManifest& manifest, const std::string& path);
FaultManifest load_manifest(const std::string& path);

} // namespace trace
