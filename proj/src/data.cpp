#include "trace/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "trace/error.hpp"

namespace trace {

namespace {

// Strict numeric token: whole token consumed, finite result.
std::optional<double> parse_double(const std::string& token) {
    if (token.empty()) return std::nullopt;
    const char* begin = token.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end != begin + token.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

} // namespace

const char* to_string(Label label) {
    return label == Label::normal ? "normal" : "abnormal";
}

std::size_t Dataset::count(Label label) const {
    return static_cast<std::size_t>(std::count_if(
        sequences.begin(), sequences.end(),
        [label](const LabeledSequence& s) { return s.label.has_value() && *s.label == label; }));
}

Dataset load_ucr_tsv(const std::string& path, Split split, const UcrLabelMap& label_map) {
    std::ifstream in = open_or_throw(path);
    Dataset dataset;
    dataset.split = split;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> fields = split(line, '\t');
        if (fields.size() < 2) throw MalformedInput(line_no, "expected label plus values");

        auto label_value = parse_double(fields[0]);
        if (!label_value) throw MalformedInput(line_no, "non-numeric class label '" + fields[0] + "'");
        int label_int = static_cast<int>(std::llround(*label_value));

        LabeledSequence seq;
        seq.id = "seq_" + std::to_string(dataset.sequences.size());
        if (label_int == label_map.normal) {
            seq.label = Label::normal;
        } else if (label_int == label_map.abnormal) {
            seq.label = Label::abnormal;
        } else {
            throw MalformedInput(line_no, "unmapped class label " + std::to_string(label_int));
        }

        seq.values.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            auto value = parse_double(fields[i]);
            if (!value) throw MalformedInput(line_no, "non-numeric token '" + fields[i] + "'");
            seq.values.push_back(*value);
        }

        if (dataset.sequences.empty()) {
            dataset.seq_len = static_cast<int>(seq.values.size());
        } else if (static_cast<int>(seq.values.size()) != dataset.seq_len) {
            throw MalformedInput(line_no, "row length " + std::to_string(seq.values.size()) +
                                              " != " + std::to_string(dataset.seq_len));
        }
        dataset.sequences.push_back(std::move(seq));
    }

    if (dataset.sequences.empty()) throw EmptyFile(path);
    return dataset;
}

Dataset load_csv(const std::string& path, Split split) {
    std::ifstream in = open_or_throw(path);
    Dataset dataset;
    dataset.split = split;

    std::string line;
    if (!std::getline(in, line)) throw EmptyFile(path);
    line = strip_cr(line);

    std::vector<std::string> header = split(line, ',');
    if (header.size() < 3 || header[0] != "id" || header[1] != "label")
        throw MalformedInput(1, "header must be id,label,x0,...");
    for (std::size_t i = 2; i < header.size(); ++i) {
        if (header[i] != "x" + std::to_string(i - 2))
            throw MalformedInput(1, "unexpected header column '" + header[i] + "'");
    }
    dataset.seq_len = static_cast<int>(header.size()) - 2;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> fields = split(line, ',');
        if (fields.size() != header.size())
            throw MalformedInput(line_no, "expected " + std::to_string(header.size()) +
                                              " fields, got " + std::to_string(fields.size()));

        LabeledSequence seq;
        seq.id = fields[0];
        if (fields[1].empty()) {
            seq.label = std::nullopt;
        } else if (fields[1] == "normal") {
            seq.label = Label::normal;
        } else if (fields[1] == "abnormal") {
            seq.label = Label::abnormal;
        } else {
            throw MalformedInput(line_no, "unknown label '" + fields[1] + "'");
        }

        seq.values.reserve(header.size() - 2);
        for (std::size_t i = 2; i < fields.size(); ++i) {
            auto value = parse_double(fields[i]);
            if (!value) throw MalformedInput(line_no, "non-numeric token '" + fields[i] + "'");
            seq.values.push_back(*value);
        }
        dataset.sequences.push_back(std::move(seq));
    }

    if (dataset.sequences.empty()) throw EmptyFile(path);
    return dataset;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps LF endings everywhere
    if (!out) throw IoError("cannot write " + path);

    out << "id,label";
    for (int i = 0; i < dataset.seq_len; ++i) out << ",x" << i;
    out << '\n';

    for (const LabeledSequence& seq : dataset.sequences) {
        out << seq.id << ',';
        if (seq.label) out << to_string(*seq.label);
        for (double v : seq.values) out << ',' << format_value(v);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

NormalizationParams fit_normalizer(const Dataset& train) {
    if (train.sequences.empty()) throw DataError("fit_normalizer: empty training dataset");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const LabeledSequence& seq : train.sequences) {
        for (double v : seq.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi > lo))
        throw DegenerateRange("training data are constant (min == max == " + format_value(lo) + ")");
    return {lo, hi};
}

std::vector<double> normalize(const std::vector<double>& values, const NormalizationParams& params) {
    std::vector<double> out(values.size());
    double scale = 1.0 / (params.max - params.min);
    for (std::size_t i = 0; i < values.size(); ++i) {
        double v = (values[i] - params.min) * scale;
        out[i] = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

std::vector<double> normalize(const LabeledSequence& seq, const NormalizationParams& params) {
    return normalize(seq.values, params);
}

QuantizedSequence quantize(const std::vector<double>& normalized, int resolution) {
    if (resolution < 2) throw InvalidResolution(resolution);
    QuantizedSequence out;
    out.resolution = resolution;
    out.classes.reserve(normalized.size());
    for (double v : normalized) {
        int cls = static_cast<int>(std::floor(v * resolution));
        out.classes.push_back(std::clamp(cls, 0, resolution - 1));
    }
    return out;
}

Dataset normalize_dataset(const Dataset& dataset, const NormalizationParams& params) {
    Dataset out = dataset;
    for (LabeledSequence& seq : out.sequences) seq.values = normalize(seq.values, params);
    return out;
}

} // namespace trace
