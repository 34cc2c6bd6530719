#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

namespace trace {

// Dense row-major matrix of doubles. Plain aggregate, value semantics.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) { resize(r, c); }

    void resize(int r, int c) {
        rows = r;
        cols = c;
        v.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0);
    }

    // Reshape only when the shape changes; keeps contents otherwise.
    void ensure(int r, int c) {
        if (rows != r || cols != c) resize(r, c);
    }

    void zero() { std::fill(v.begin(), v.end(), 0.0); }

    bool empty() const { return v.empty(); }

    double* operator[](int r) {
        assert(r >= 0 && r < rows);
        return v.data() + static_cast<std::size_t>(r) * cols;
    }
    const double* operator[](int r) const {
        assert(r >= 0 && r < rows);
        return v.data() + static_cast<std::size_t>(r) * cols;
    }

    double& at(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return v[static_cast<std::size_t>(r) * cols + c];
    }
    double at(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return v[static_cast<std::size_t>(r) * cols + c];
    }
};

// Non-owning views used by the math kernels, so parameter tensors (flat
// storage) and activation buffers go through the same code.
struct CMat {
    const double* p = nullptr;
    int rows = 0;
    int cols = 0;

    CMat() = default;
    CMat(const Mat& m) : p(m.v.data()), rows(m.rows), cols(m.cols) {}
    CMat(const double* data, int r, int c) : p(data), rows(r), cols(c) {}

    const double* operator[](int r) const {
        assert(r >= 0 && r < rows);
        return p + static_cast<std::size_t>(r) * cols;
    }
};

struct MMat {
    double* p = nullptr;
    int rows = 0;
    int cols = 0;

    MMat() = default;
    MMat(Mat& m) : p(m.v.data()), rows(m.rows), cols(m.cols) {}
    MMat(double* data, int r, int c) : p(data), rows(r), cols(c) {}

    double* operator[](int r) const {
        assert(r >= 0 && r < rows);
        return p + static_cast<std::size_t>(r) * cols;
    }

    operator CMat() const { return CMat(p, rows, cols); }
};

} // namespace trace
