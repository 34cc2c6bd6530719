#pragma once

// Internal dense kernels. Every output element is produced by exactly one
// thread with a fixed reduction order, so results are identical for any
// worker count.

#include <vector>

#include "trace/mat.hpp"

namespace trace {

// c = a * b (+ c when accumulate)
void matmul(CMat a, CMat b, MMat c, bool accumulate = false);

// c = a^T * b
void matmul_at_b(CMat a, CMat b, MMat c, bool accumulate = false);

// c = a * b^T
void matmul_a_bt(CMat a, CMat b, MMat c, bool accumulate = false);

// row-wise: a[i][j] += bias[j]
void add_row_bias(MMat a, const double* bias);

// out[j] (+)= sum_i a[i][j]
void col_sums(CMat a, double* out, bool accumulate = false);

void relu(CMat in, MMat out);
void relu_backward(CMat z, CMat dy, MMat dz);

void add(CMat a, CMat b, MMat out); // out = a + b

constexpr double kLayerNormEps = 1e-5;

// y = g * xhat + b per row; caches xhat and 1/std for the backward pass.
void layer_norm_forward(CMat x, const double* gain, const double* bias, MMat y, MMat xhat,
                        std::vector<double>& istd);

// dgain/dbias accumulated; dx overwritten.
void layer_norm_backward(CMat dy, CMat xhat, const std::vector<double>& istd, const double* gain,
                         double* dgain, double* dbias, MMat dx);

} // namespace trace
