#include "trace/faults.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "trace/error.hpp"
#include "trace/rng.hpp"

namespace trace {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * M_PI;

void validate_profile(const TraceProfile& profile) {
    if (profile.seq_len < 4)
        throw InvalidProfile("seq_len must be at least 4, got " + std::to_string(profile.seq_len));
    if (!(profile.ramp_len > 0 && profile.ramp_len < profile.seq_len / 2))
        throw InvalidProfile("ramp_len must satisfy 0 < ramp_len < seq_len/2");
    if (profile.noise_sigma < 0) throw InvalidProfile("noise_sigma must be >= 0");
    if (!(profile.setpoint > 0)) throw InvalidProfile("setpoint must be positive");
}

void validate_spec(const FaultSpec& spec, const TraceProfile& profile) {
    const int len = profile.seq_len;
    if (spec.start < 0 || spec.start >= len)
        throw SpecOutOfBounds("fault start " + std::to_string(spec.start) + " outside sequence");
    if (spec.duration < 0 || spec.start + spec.duration > len)
        throw SpecOutOfBounds("fault window [" + std::to_string(spec.start) + ", " +
                              std::to_string(spec.start + spec.duration) + ") exceeds length " +
                              std::to_string(len));
    if (!(spec.magnitude > 0.0) || spec.magnitude > kMaxFaultMagnitude)
        throw SpecOutOfBounds("magnitude must be in (0, " + std::to_string(kMaxFaultMagnitude) +
                              "], got " + std::to_string(spec.magnitude));
}

} // namespace

const char* to_string(FaultKind kind) {
    switch (kind) {
    case FaultKind::bias: return "bias";
    case FaultKind::temporary_change: return "temporary_change";
    case FaultKind::noise_disturbance: return "noise_disturbance";
    case FaultKind::sinusoidal_disturbance: return "sinusoidal_disturbance";
    case FaultKind::peripheral_point: return "peripheral_point";
    case FaultKind::micro_arcing: return "micro_arcing";
    case FaultKind::inlet_valve_leak: return "inlet_valve_leak";
    case FaultKind::outlet_valve_leak: return "outlet_valve_leak";
    }
    return "?";
}

std::optional<FaultKind> fault_kind_from_string(std::string_view name) {
    for (int i = 0; i < kFaultKindCount; ++i) {
        FaultKind kind = static_cast<FaultKind>(i);
        if (name == to_string(kind)) return kind;
    }
    return std::nullopt;
}

std::vector<LabeledSequence> generate_normal(const TraceProfile& profile, int n,
                                             std::uint64_t seed) {
    validate_profile(profile);
    if (n < 1) throw InvalidProfile("sequence count must be >= 1, got " + std::to_string(n));

    const int len = profile.seq_len;
    const int ramp = profile.ramp_len;
    const double s = profile.setpoint;

    std::vector<LabeledSequence> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        LabeledSequence seq;
        seq.id = "trace_" + std::to_string(i);
        seq.label = Label::normal;
        seq.values.resize(static_cast<std::size_t>(len));
        for (int t = 0; t < len; ++t) {
            double v;
            if (t < ramp) {
                v = s * t / ramp;
            } else if (t < len - ramp) {
                v = s + rng.gaussian(0.0, profile.noise_sigma * s);
            } else {
                v = s * (len - 1 - t) / ramp;
            }
            seq.values[static_cast<std::size_t>(t)] = v;
        }
        out.push_back(std::move(seq));
    }
    return out;
}

LabeledSequence inject_fault(const LabeledSequence& seq, const FaultSpec& spec,
                             const TraceProfile& profile) {
    validate_profile(profile);
    if (static_cast<int>(seq.values.size()) != profile.seq_len)
        throw SpecOutOfBounds("sequence length " + std::to_string(seq.values.size()) +
                              " does not match profile seq_len " +
                              std::to_string(profile.seq_len));
    validate_spec(spec, profile);

    const int len = profile.seq_len;
    const double s = profile.setpoint;
    const double amp = spec.magnitude * s;
    const int begin = spec.start;
    const int end = spec.start + spec.duration;

    LabeledSequence out = seq;
    out.label = Label::abnormal;
    std::vector<double>& v = out.values;

    switch (spec.kind) {
    case FaultKind::bias:
        // Offset persists for the rest of the hold.
        for (int t = begin; t < profile.hold_end(); ++t) v[t] += amp;
        break;
    case FaultKind::temporary_change:
        for (int t = begin; t < end; ++t) v[t] += amp;
        break;
    case FaultKind::noise_disturbance: {
        Rng rng(spec.seed);
        for (int t = begin; t < end; ++t) v[t] += rng.gaussian(0.0, amp);
        break;
    }
    case FaultKind::sinusoidal_disturbance: {
        if (spec.duration < 1) throw SpecOutOfBounds("sinusoidal disturbance needs duration >= 1");
        for (int t = begin; t < end; ++t)
            v[t] += amp * std::sin(kTwoPi * spec.cycles * (t - begin) / spec.duration);
        break;
    }
    case FaultKind::peripheral_point:
        v[begin] += amp;
        break;
    case FaultKind::micro_arcing:
        for (int t = begin; t < len; ++t) v[t] *= 1.0 - spec.magnitude;
        break;
    case FaultKind::inlet_valve_leak: {
        if (spec.duration < 1) throw SpecOutOfBounds("inlet valve leak needs duration >= 1");
        double lambda = spec.decay_rate > 0 ? spec.decay_rate : 3.0 / spec.duration;
        for (int t = begin; t < len; ++t)
            v[t] *= 1.0 - spec.magnitude * (1.0 - std::exp(-lambda * (t - begin)));
        break;
    }
    case FaultKind::outlet_valve_leak: {
        if (spec.duration < 1) throw SpecOutOfBounds("outlet valve leak needs duration >= 1");
        double lambda = spec.decay_rate > 0 ? spec.decay_rate : 4.0 / spec.duration;
        for (int t = begin; t < end; ++t)
            v[t] += amp * std::exp(-lambda * (t - begin)) *
                    std::sin(kTwoPi * spec.cycles * (t - begin) / spec.duration);
        break;
    }
    }
    return out;
}

std::vector<FaultSpec> default_fault_suite(const TraceProfile& profile, std::uint64_t seed) {
    validate_profile(profile);
    const int len = profile.seq_len;
    const int hold_begin = profile.hold_begin();
    const int hold_end = profile.hold_end();
    const int hold = hold_end - hold_begin;
    const int mid = len / 2;

    auto spec = [&](FaultKind kind, double magnitude, int start, int duration) {
        FaultSpec f;
        f.kind = kind;
        f.magnitude = magnitude;
        f.start = start;
        f.duration = duration;
        f.seed = mix_seed(seed, 100 + static_cast<std::uint64_t>(kind));
        return f;
    };

    std::vector<FaultSpec> suite;
    suite.push_back(spec(FaultKind::bias, 0.05, hold_begin + hold / 5, hold_end - (hold_begin + hold / 5)));
    suite.push_back(spec(FaultKind::temporary_change, 0.05, hold_begin + hold / 4, hold / 3));
    suite.push_back(spec(FaultKind::noise_disturbance, 0.05, hold_begin + hold / 8, hold * 3 / 5));
    FaultSpec sinusoid = spec(FaultKind::sinusoidal_disturbance, 0.05, hold_begin + hold / 12,
                              hold * 3 / 4);
    sinusoid.cycles = 3.0;
    suite.push_back(sinusoid);
    suite.push_back(spec(FaultKind::peripheral_point, 0.05, hold_begin + hold / 2, 1));
    suite.push_back(spec(FaultKind::micro_arcing, 0.015, mid, len - mid));
    suite.push_back(spec(FaultKind::inlet_valve_leak, 0.05, hold_begin + hold / 12,
                         len - (hold_begin + hold / 12)));
    FaultSpec outlet = spec(FaultKind::outlet_valve_leak, 0.05, hold_begin + hold / 12, hold / 2);
    outlet.cycles = 5.0;
    suite.push_back(outlet);
    return suite;
}

CvdReplica make_cvd_replica(const TraceProfile& profile, std::uint64_t seed, int n_train,
                            int n_test_normal) {
    CvdReplica replica;
    replica.manifest.profile = profile;
    replica.manifest.profile.seed = seed;

    replica.train.seq_len = profile.seq_len;
    replica.train.split = Split::train;
    replica.train.sequences = generate_normal(profile, n_train, mix_seed(seed, 1));
    for (int i = 0; i < n_train; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "train_%04d", i);
        replica.train.sequences[i].id = buf;
    }

    replica.test.seq_len = profile.seq_len;
    replica.test.split = Split::test;
    replica.test.sequences = generate_normal(profile, n_test_normal, mix_seed(seed, 2));
    for (int i = 0; i < n_test_normal; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "normal_%04d", i);
        replica.test.sequences[i].id = buf;
    }

    std::vector<FaultSpec> suite = default_fault_suite(profile, seed);
    std::vector<LabeledSequence> bases =
        generate_normal(profile, static_cast<int>(suite.size()), mix_seed(seed, 3));
    for (std::size_t i = 0; i < suite.size(); ++i) {
        LabeledSequence faulty = inject_fault(bases[i], suite[i], profile);
        faulty.id = std::string("fault_") + to_string(suite[i].kind);
        replica.manifest.faults.emplace_back(faulty.id, suite[i]);
        replica.test.sequences.push_back(std::move(faulty));
    }
    return replica;
}

void save_manifest(const FaultManifest& manifest, const std::string& path) {
    json doc;
    doc["profile"] = {
        {"seq_len", manifest.profile.seq_len},   {"ramp_len", manifest.profile.ramp_len},
        {"setpoint", manifest.profile.setpoint}, {"noise_sigma", manifest.profile.noise_sigma},
        {"seed", manifest.profile.seed},
    };
    doc["faults"] = json::array();
    for (const auto& [id, spec] : manifest.faults) {
        doc["faults"].push_back({
            {"id", id},
            {"kind", to_string(spec.kind)},
            {"magnitude", spec.magnitude},
            {"start", spec.start},
            {"duration", spec.duration},
            {"seed", spec.seed},
            {"cycles", spec.cycles},
            {"decay_rate", spec.decay_rate},
        });
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << '\n';
}

FaultManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingManifest("cannot open manifest " + path);

    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw MissingManifest("malformed manifest " + path + ": " + e.what());
    }

    try {
        FaultManifest manifest;
        const json& profile = doc.at("profile");
        manifest.profile.seq_len = profile.at("seq_len").get<int>();
        manifest.profile.ramp_len = profile.at("ramp_len").get<int>();
        manifest.profile.setpoint = profile.at("setpoint").get<double>();
        manifest.profile.noise_sigma = profile.at("noise_sigma").get<double>();
        manifest.profile.seed = profile.at("seed").get<std::uint64_t>();

        for (const json& item : doc.at("faults")) {
            FaultSpec spec;
            auto kind = fault_kind_from_string(item.at("kind").get<std::string>());
            if (!kind)
                throw MissingManifest("unknown fault kind '" +
                                      item.at("kind").get<std::string>() + "' in " + path);
            spec.kind = *kind;
            spec.magnitude = item.at("magnitude").get<double>();
            spec.start = item.at("start").get<int>();
            spec.duration = item.at("duration").get<int>();
            spec.seed = item.at("seed").get<std::uint64_t>();
            spec.cycles = item.value("cycles", 3.0);
            spec.decay_rate = item.value("decay_rate", 0.0);
            manifest.faults.emplace_back(item.at("id").get<std::string>(), spec);
        }
        return manifest;
    } catch (const json::exception& e) {
        throw MissingManifest("manifest " + path + " missing fields: " + e.what());
    }
}

} // namespace trace
