#include "kernels.hpp"

#include <cassert>
#include <cmath>

#include "trace/parallel.hpp"

namespace trace {

namespace {

// Row-parallel dispatch once the work is large enough to beat the fork cost.
constexpr double kParallelMacThreshold = 6.5e4;

template <typename Fn>
void rows_for(int n_rows, double macs, Fn&& fn) {
    if (macs >= kParallelMacThreshold) {
        parallel_for(n_rows, [&](int begin, int end) {
            for (int i = begin; i < end; ++i) fn(i);
        });
    } else {
        for (int i = 0; i < n_rows; ++i) fn(i);
    }
}

} // namespace

void matmul(CMat a, CMat b, MMat c, bool accumulate) {
    assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
    const int m = a.rows, kk = a.cols, n = b.cols;
    rows_for(m, static_cast<double>(m) * kk * n, [&](int i) {
        double* crow = c[i];
        if (!accumulate)
            for (int j = 0; j < n; ++j) crow[j] = 0.0;
        const double* arow = a[i];
        for (int k = 0; k < kk; ++k) {
            const double av = arow[k];
            const double* brow = b[k];
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    });
}

void matmul_at_b(CMat a, CMat b, MMat c, bool accumulate) {
    assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
    const int m = a.cols, kk = a.rows, n = b.cols;
    rows_for(m, static_cast<double>(m) * kk * n, [&](int i) {
        double* crow = c[i];
        if (!accumulate)
            for (int j = 0; j < n; ++j) crow[j] = 0.0;
        for (int t = 0; t < kk; ++t) {
            const double av = a[t][i];
            const double* brow = b[t];
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    });
}

void matmul_a_bt(CMat a, CMat b, MMat c, bool accumulate) {
    assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
    const int m = a.rows, kk = a.cols, n = b.rows;
    rows_for(m, static_cast<double>(m) * kk * n, [&](int i) {
        const double* arow = a[i];
        double* crow = c[i];
        for (int j = 0; j < n; ++j) {
            const double* brow = b[j];
            double acc = 0.0;
            for (int k = 0; k < kk; ++k) acc += arow[k] * brow[k];
            crow[j] = accumulate ? crow[j] + acc : acc;
        }
    });
}

void add_row_bias(MMat a, const double* bias) {
    for (int i = 0; i < a.rows; ++i) {
        double* row = a[i];
        for (int j = 0; j < a.cols; ++j) row[j] += bias[j];
    }
}

void col_sums(CMat a, double* out, bool accumulate) {
    if (!accumulate)
        for (int j = 0; j < a.cols; ++j) out[j] = 0.0;
    for (int i = 0; i < a.rows; ++i) {
        const double* row = a[i];
        for (int j = 0; j < a.cols; ++j) out[j] += row[j];
    }
}

void relu(CMat in, MMat out) {
    assert(in.rows == out.rows && in.cols == out.cols);
    const std::size_t n = static_cast<std::size_t>(in.rows) * in.cols;
    for (std::size_t i = 0; i < n; ++i) out.p[i] = in.p[i] > 0.0 ? in.p[i] : 0.0;
}

void relu_backward(CMat z, CMat dy, MMat dz) {
    assert(z.rows == dy.rows && z.cols == dy.cols && z.rows == dz.rows && z.cols == dz.cols);
    const std::size_t n = static_cast<std::size_t>(z.rows) * z.cols;
    for (std::size_t i = 0; i < n; ++i) dz.p[i] = z.p[i] > 0.0 ? dy.p[i] : 0.0;
}

void add(CMat a, CMat b, MMat out) {
    assert(a.rows == b.rows && a.cols == b.cols && a.rows == out.rows && a.cols == out.cols);
    const std::size_t n = static_cast<std::size_t>(a.rows) * a.cols;
    for (std::size_t i = 0; i < n; ++i) out.p[i] = a.p[i] + b.p[i];
}

void layer_norm_forward(CMat x, const double* gain, const double* bias, MMat y, MMat xhat,
                        std::vector<double>& istd) {
    const int rows = x.rows, d = x.cols;
    for (int i = 0; i < rows; ++i) {
        const double* xr = x[i];
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += xr[j];
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            double c = xr[j] - mean;
            var += c * c;
        }
        var /= d;
        double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        istd[i] = inv;
        double* hr = xhat[i];
        double* yr = y[i];
        for (int j = 0; j < d; ++j) {
            hr[j] = (xr[j] - mean) * inv;
            yr[j] = gain[j] * hr[j] + bias[j];
        }
    }
}

void layer_norm_backward(CMat dy, CMat xhat, const std::vector<double>& istd, const double* gain,
                         double* dgain, double* dbias, MMat dx) {
    const int rows = dy.rows, d = dy.cols;
    for (int i = 0; i < rows; ++i) {
        const double* dyr = dy[i];
        const double* hr = xhat[i];
        double* dxr = dx[i];
        double sum_dh = 0.0, sum_dh_h = 0.0;
        for (int j = 0; j < d; ++j) {
            double dh = dyr[j] * gain[j];
            dxr[j] = dh; // stash dxhat
            sum_dh += dh;
            sum_dh_h += dh * hr[j];
            dgain[j] += dyr[j] * hr[j];
            dbias[j] += dyr[j];
        }
        const double mean_dh = sum_dh / d;
        const double mean_dh_h = sum_dh_h / d;
        const double inv = istd[i];
        for (int j = 0; j < d; ++j) dxr[j] = inv * (dxr[j] - mean_dh - hr[j] * mean_dh_h);
    }
}

} // namespace trace
