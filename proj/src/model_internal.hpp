#pragma once

// Forward/backward building blocks shared between the public model ops and
// the trainer's backpropagation. Not part of the installed API.

#include <vector>

#include "trace/model.hpp"

namespace trace {

// channels: (use_pe ? 2 : 1) x L; channel 0 values, channel 1 position.
void fill_input_channels(const std::vector<double>& values, bool use_pe, Mat& channels);

// out[o][t] = b[o] + sum_{c,k} w[o][c][k] * in[c][t - (K-1-k)*dil] (left pad).
void conv_causal_forward(const Mat& in, const ConvLayer& layer, Mat& out);

// Accumulates dW/db; din (same shape as in) overwritten when non-null.
void conv_causal_backward(const Mat& in, const ConvLayer& layer, const Mat& dout, Tensor& gw,
                          Tensor& gb, Mat* din);

// Multi-head causal attention. q,k,v are L x d with heads packed along
// columns; probs is (h*L) x L with head i in rows [i*L, (i+1)*L); out L x d.
// Rows of probs above the diagonal are never written (stay zero).
void attention_forward(const Mat& q, const Mat& k, const Mat& v, int n_heads, Mat& probs, Mat& out);

// dq/dk/dv fully overwritten; ds is (h*L) x L scratch.
void attention_backward(const Mat& q, const Mat& k, const Mat& v, const Mat& probs, int n_heads,
                        const Mat& dout, Mat& dq, Mat& dk, Mat& dv, Mat& ds);

// One post-norm decoder layer; x is L x d. All intermediates land in cache.
void run_decoder_layer(const Mat& x, const DecoderLayerParams& lp, int n_heads,
                       DecoderLayerCache& cache);

// 2-D tensor view helpers.
CMat mat2d(const Tensor& t);
MMat mat2d_mut(Tensor& t);

} // namespace trace
