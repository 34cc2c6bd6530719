#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trace/mat.hpp"

namespace trace {

/// Network hyperparameters. Defaults: d=16, h=8, 6 decoder layers,
/// resolution 100, FFN width 4d, TCN kernel 3 with dilations 1,2.
struct ModelConfig {
    int seq_len = 0; // T; 0 until inferred from data
    int d_model = 16;
    int n_heads = 8;
    int n_layers = 6;
    int resolution = 100;
    int ffn_dim = 64;
    int tcn_kernel = 3;
    std::vector<int> tcn_dilations = {1, 2};
    bool use_pe = true;
    bool use_transformer = true;
    bool use_tcn = true;
    std::uint64_t seed = 1;

    int input_channels() const { return use_pe ? 2 : 1; }
    int model_len() const { return seq_len - 1; } // L: positions fed to the model

    /// Throws ConfigError on an inconsistent configuration.
    void validate() const;
};

/// Named parameter tensor (flat doubles + shape).
struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> v;

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }
};

/// Causal 1-D convolution: weight shape {out, in, kernel}, left padding only.
struct ConvLayer {
    Tensor w;
    Tensor b;
    int dilation = 1;
};

struct DecoderLayerParams {
    Tensor wq, wk, wv, wo; // {d, d}, heads packed along columns
    Tensor ln1_g, ln1_b;   // {d}
    Tensor w1, b1, w2, b2; // FFN {d, ffn}, {ffn}, {ffn, d}, {d}
    Tensor ln2_g, ln2_b;
};

/// Every learnable weight. tensors() yields them in declaration order — the
/// order Adam state, checkpoints, and the gradient check all rely on.
struct ModelParams {
    std::vector<ConvLayer> embed;           // TCN stack, or one kernel-1 lift when use_tcn=false
    std::vector<DecoderLayerParams> layers; // empty when use_transformer=false
    Tensor head_w; // {d, r}
    Tensor head_b; // {r}

    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
    std::int64_t count() const;
};

/// Glorot-uniform weights, zero biases, unit layer-norm gains; seeded by
/// config.seed.
ModelParams init_params(const ModelConfig& config);

/// Same shapes and names as params, all values zero.
ModelParams zeros_like(const ModelParams& params);

/// Throws ShapeMismatch when params do not match the config's layout.
void check_shapes(const ModelParams& params, const ModelConfig& config);

/// entry(i,j) = -inf iff i < j, else 0.
struct CausalMask {
    int size = 0;
    Mat entries;
};

struct ForwardOutput {
    Mat logits;                                // (T-1) x r
    std::vector<std::vector<Mat>> attentions;  // [layer][head], each (T-1) x (T-1)
};

/// values (length T-1, in [0,1]) -> 2 x (T-1): channel 0 the values,
/// channel 1 the position index mapped affinely onto [0,1].
Mat embed_position(const std::vector<double>& values);

/// Causal dilated convolution stack, ReLU between layers; out d x (T-1).
/// Output at t depends only on inputs at positions <= t.
Mat tcn_embed(const Mat& input, const std::vector<ConvLayer>& stack);

CausalMask build_causal_mask(int size);

/// Softmax(q k^T / sqrt(d_k) + mask) v for one head; rows of the returned
/// weights are probability vectors with zero mass above the diagonal.
Mat masked_attention_head(const Mat& q, const Mat& k, const Mat& v, const CausalMask& mask,
                          Mat* weights = nullptr);

/// Post-norm decoder layer: x + MMHA -> norm -> + FFN -> norm.
Mat decoder_layer(const Mat& x, const DecoderLayerParams& lp, const CausalMask& mask, int n_heads,
                  std::vector<Mat>* attn = nullptr);

/// Full forward pass on the first T-1 normalized values; logits row t scores
/// the value at position t+1 over r classes.
ForwardOutput forward(const std::vector<double>& values, const ModelParams& params,
                      const ModelConfig& config);

/// Numerically stable row-wise softmax.
Mat softmax_probs(const Mat& logits);

// ---------------------------------------------------------------------------
// Cached forward pass. Holds every intermediate the backward pass needs;
// buffers are reused across calls.

struct DecoderLayerCache {
    Mat x_in;                   // L x d
    Mat q, k, v;                // L x d
    Mat probs;                  // (h*L) x L, head i in rows [i*L, (i+1)*L)
    Mat headcat;                // L x d
    Mat attn_out;               // L x d
    Mat res1;                   // L x d
    Mat ln1_hat;                // L x d
    std::vector<double> ln1_istd;
    Mat y1;                     // L x d
    Mat ffn_z;                  // L x ffn
    Mat ffn_a;                  // L x ffn
    Mat ffn_out;                // L x d
    Mat res2;                   // L x d
    Mat ln2_hat;                // L x d
    std::vector<double> ln2_istd;
    Mat y2;                     // L x d
};

struct ForwardCache {
    Mat channels;            // C x L
    std::vector<Mat> conv_z; // per conv layer, pre-activation, out x L
    std::vector<Mat> conv_a; // post-ReLU (all but the last layer)
    Mat embedded;            // L x d
    std::vector<DecoderLayerCache> layers;
    Mat logits;              // L x r
};

/// forward() with all intermediates retained in `cache`.
void forward_cached(const std::vector<double>& values, const ModelParams& params,
                    const ModelConfig& config, ForwardCache& cache);

/// Copies the cached per-head attention weights into ForwardOutput layout.
std::vector<std::vector<Mat>> extract_attentions(const ForwardCache& cache,
                                                 const ModelConfig& config);

} // namespace trace
