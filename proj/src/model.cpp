#include "trace/model.hpp"

#include <cassert>
#include <cmath>
#include <limits>

#include "trace/error.hpp"
#include "trace/parallel.hpp"
#include "trace/rng.hpp"

#include "kernels.hpp"
#include "model_internal.hpp"

namespace trace {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Tensor make_tensor(std::string name, std::vector<int> shape) {
    Tensor t;
    t.name = std::move(name);
    t.shape = std::move(shape);
    t.v.assign(static_cast<std::size_t>(t.numel()), 0.0);
    return t;
}

// Parameter layout for a config: names, shapes, zero values.
ModelParams make_layout(const ModelConfig& config) {
    ModelParams params;
    const int d = config.d_model;
    const int in_ch = config.input_channels();

    if (config.use_tcn) {
        int ch = in_ch;
        for (std::size_t i = 0; i < config.tcn_dilations.size(); ++i) {
            ConvLayer layer;
            std::string base = "embed." + std::to_string(i);
            layer.w = make_tensor(base + ".w", {d, ch, config.tcn_kernel});
            layer.b = make_tensor(base + ".b", {d});
            layer.dilation = config.tcn_dilations[i];
            params.embed.push_back(std::move(layer));
            ch = d;
        }
    } else {
        ConvLayer lift;
        lift.w = make_tensor("embed.0.w", {d, in_ch, 1});
        lift.b = make_tensor("embed.0.b", {d});
        lift.dilation = 1;
        params.embed.push_back(std::move(lift));
    }

    if (config.use_transformer) {
        for (int l = 0; l < config.n_layers; ++l) {
            DecoderLayerParams lp;
            std::string base = "layers." + std::to_string(l);
            lp.wq = make_tensor(base + ".wq", {d, d});
            lp.wk = make_tensor(base + ".wk", {d, d});
            lp.wv = make_tensor(base + ".wv", {d, d});
            lp.wo = make_tensor(base + ".wo", {d, d});
            lp.ln1_g = make_tensor(base + ".ln1.g", {d});
            lp.ln1_b = make_tensor(base + ".ln1.b", {d});
            lp.w1 = make_tensor(base + ".ffn.w1", {d, config.ffn_dim});
            lp.b1 = make_tensor(base + ".ffn.b1", {config.ffn_dim});
            lp.w2 = make_tensor(base + ".ffn.w2", {config.ffn_dim, d});
            lp.b2 = make_tensor(base + ".ffn.b2", {d});
            lp.ln2_g = make_tensor(base + ".ln2.g", {d});
            lp.ln2_b = make_tensor(base + ".ln2.b", {d});
            params.layers.push_back(std::move(lp));
        }
    }

    params.head_w = make_tensor("head.w", {d, config.resolution});
    params.head_b = make_tensor("head.b", {config.resolution});
    return params;
}

void glorot_fill(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : t.v) x = rng.uniform(-limit, limit);
}

void fill_ones(Tensor& t) {
    for (double& x : t.v) x = 1.0;
}

} // namespace

void ModelConfig::validate() const {
    if (seq_len < 2) throw ConfigError("model.seq_len", "must be >= 2");
    if (d_model < 1) throw ConfigError("model.d_model", "must be >= 1");
    if (n_heads < 1) throw ConfigError("model.n_heads", "must be >= 1");
    if (d_model % n_heads != 0) throw ConfigError("model.n_heads", "d_model must be divisible by n_heads");
    if (n_layers < 1) throw ConfigError("model.n_layers", "must be >= 1");
    if (resolution < 2) throw ConfigError("model.resolution", "must be >= 2");
    if (ffn_dim < 1) throw ConfigError("model.ffn_dim", "must be >= 1");
    if (!use_tcn && !use_transformer)
        throw ConfigError("model", "at least one of use_tcn/use_transformer must be enabled");
    if (use_tcn) {
        if (tcn_kernel < 1) throw ConfigError("model.tcn_kernel", "must be >= 1");
        if (tcn_dilations.empty()) throw ConfigError("model.tcn_dilations", "must be non-empty");
        for (int dil : tcn_dilations)
            if (dil < 1) throw ConfigError("model.tcn_dilations", "dilations must be >= 1");
    }
}

std::vector<Tensor*> ModelParams::tensors() {
    std::vector<Tensor*> out;
    for (ConvLayer& c : embed) {
        out.push_back(&c.w);
        out.push_back(&c.b);
    }
    for (DecoderLayerParams& l : layers) {
        out.push_back(&l.wq);
        out.push_back(&l.wk);
        out.push_back(&l.wv);
        out.push_back(&l.wo);
        out.push_back(&l.ln1_g);
        out.push_back(&l.ln1_b);
        out.push_back(&l.w1);
        out.push_back(&l.b1);
        out.push_back(&l.w2);
        out.push_back(&l.b2);
        out.push_back(&l.ln2_g);
        out.push_back(&l.ln2_b);
    }
    out.push_back(&head_w);
    out.push_back(&head_b);
    return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
    auto mutable_view = const_cast<ModelParams*>(this)->tensors();
    return {mutable_view.begin(), mutable_view.end()};
}

std::int64_t ModelParams::count() const {
    std::int64_t n = 0;
    for (const Tensor* t : tensors()) n += t->numel();
    return n;
}

ModelParams init_params(const ModelConfig& config) {
    config.validate();
    ModelParams params = make_layout(config);
    Rng rng(config.seed);

    for (ConvLayer& c : params.embed) {
        int in_ch = c.w.shape[1], kernel = c.w.shape[2], out_ch = c.w.shape[0];
        glorot_fill(c.w, in_ch * kernel, out_ch * kernel, rng);
    }
    const int d = config.d_model;
    for (DecoderLayerParams& l : params.layers) {
        glorot_fill(l.wq, d, d, rng);
        glorot_fill(l.wk, d, d, rng);
        glorot_fill(l.wv, d, d, rng);
        glorot_fill(l.wo, d, d, rng);
        fill_ones(l.ln1_g);
        glorot_fill(l.w1, d, config.ffn_dim, rng);
        glorot_fill(l.w2, config.ffn_dim, d, rng);
        fill_ones(l.ln2_g);
    }
    glorot_fill(params.head_w, d, config.resolution, rng);
    return params;
}

ModelParams zeros_like(const ModelParams& params) {
    ModelParams out = params;
    for (Tensor* t : out.tensors()) std::fill(t->v.begin(), t->v.end(), 0.0);
    return out;
}

void check_shapes(const ModelParams& params, const ModelConfig& config) {
    ModelParams expected = make_layout(config);
    auto have = params.tensors();
    auto want = expected.tensors();
    if (have.size() != want.size())
        throw ShapeMismatch("parameter tensor count " + std::to_string(have.size()) +
                            " != " + std::to_string(want.size()));
    for (std::size_t i = 0; i < have.size(); ++i) {
        if (have[i]->name != want[i]->name)
            throw ShapeMismatch("tensor " + std::to_string(i) + " named '" + have[i]->name +
                                "', expected '" + want[i]->name + "'");
        if (have[i]->shape != want[i]->shape)
            throw ShapeMismatch("tensor '" + have[i]->name + "' has unexpected shape");
        if (have[i]->v.size() != static_cast<std::size_t>(have[i]->numel()))
            throw ShapeMismatch("tensor '" + have[i]->name + "' storage does not match its shape");
    }
}

CMat mat2d(const Tensor& t) {
    assert(t.shape.size() == 2);
    return {t.v.data(), t.shape[0], t.shape[1]};
}

MMat mat2d_mut(Tensor& t) {
    assert(t.shape.size() == 2);
    return {t.v.data(), t.shape[0], t.shape[1]};
}

void fill_input_channels(const std::vector<double>& values, bool use_pe, Mat& channels) {
    const int len = static_cast<int>(values.size());
    channels.ensure(use_pe ? 2 : 1, len);
    for (int t = 0; t < len; ++t) channels[0][t] = values[t];
    if (use_pe) {
        // First position -> 0, last -> 1.
        const double denom = len > 1 ? len - 1.0 : 1.0;
        for (int t = 0; t < len; ++t) channels[1][t] = t / denom;
    }
}

Mat embed_position(const std::vector<double>& values) {
    Mat channels;
    fill_input_channels(values, true, channels);
    return channels;
}

void conv_causal_forward(const Mat& in, const ConvLayer& layer, Mat& out) {
    const int out_ch = layer.w.shape[0];
    const int in_ch = layer.w.shape[1];
    const int kernel = layer.w.shape[2];
    const int len = in.cols;
    assert(in.rows == in_ch);
    out.ensure(out_ch, len);

    const int reach = (kernel - 1) * layer.dilation;
    for (int o = 0; o < out_ch; ++o) {
        const double bias = layer.b.v[o];
        double* orow = out[o];
        for (int t = 0; t < len; ++t) orow[t] = bias;
        for (int c = 0; c < in_ch; ++c) {
            const double* irow = in[c];
            const double* wrow = layer.w.v.data() + (static_cast<std::size_t>(o) * in_ch + c) * kernel;
            for (int k = 0; k < kernel; ++k) {
                const double w = wrow[k];
                const int shift = reach - k * layer.dilation; // input index = t - shift
                for (int t = shift; t < len; ++t) orow[t] += w * irow[t - shift];
            }
        }
    }
}

void conv_causal_backward(const Mat& in, const ConvLayer& layer, const Mat& dout, Tensor& gw,
                          Tensor& gb, Mat* din) {
    const int out_ch = layer.w.shape[0];
    const int in_ch = layer.w.shape[1];
    const int kernel = layer.w.shape[2];
    const int len = in.cols;
    const int reach = (kernel - 1) * layer.dilation;

    for (int o = 0; o < out_ch; ++o) {
        const double* drow = dout[o];
        double acc_b = 0.0;
        for (int t = 0; t < len; ++t) acc_b += drow[t];
        gb.v[o] += acc_b;
        for (int c = 0; c < in_ch; ++c) {
            const double* irow = in[c];
            double* gwrow = gw.v.data() + (static_cast<std::size_t>(o) * in_ch + c) * kernel;
            for (int k = 0; k < kernel; ++k) {
                const int shift = reach - k * layer.dilation;
                double acc = 0.0;
                for (int t = shift; t < len; ++t) acc += drow[t] * irow[t - shift];
                gwrow[k] += acc;
            }
        }
    }

    if (din != nullptr) {
        din->ensure(in_ch, len);
        din->zero();
        for (int c = 0; c < in_ch; ++c) {
            double* dirow = (*din)[c];
            for (int o = 0; o < out_ch; ++o) {
                const double* drow = dout[o];
                const double* wrow =
                    layer.w.v.data() + (static_cast<std::size_t>(o) * in_ch + c) * kernel;
                for (int k = 0; k < kernel; ++k) {
                    const double w = wrow[k];
                    const int shift = reach - k * layer.dilation;
                    for (int t = shift; t < len; ++t) dirow[t - shift] += w * drow[t];
                }
            }
        }
    }
}

Mat tcn_embed(const Mat& input, const std::vector<ConvLayer>& stack) {
    if (stack.empty()) throw ShapeMismatch("tcn_embed: empty convolution stack");
    Mat cur = input;
    Mat next;
    for (std::size_t i = 0; i < stack.size(); ++i) {
        if (stack[i].w.shape[1] != cur.rows)
            throw ShapeMismatch("tcn_embed: layer " + std::to_string(i) + " expects " +
                                std::to_string(stack[i].w.shape[1]) + " input channels");
        conv_causal_forward(cur, stack[i], next);
        if (i + 1 < stack.size()) relu(next, next); // ReLU between layers only
        std::swap(cur, next);
    }
    return cur;
}

CausalMask build_causal_mask(int size) {
    if (size < 1) throw ShapeMismatch("causal mask size must be >= 1");
    CausalMask mask;
    mask.size = size;
    mask.entries.resize(size, size);
    for (int i = 0; i < size; ++i)
        for (int j = i + 1; j < size; ++j) mask.entries[i][j] = kNegInf;
    return mask;
}

Mat masked_attention_head(const Mat& q, const Mat& k, const Mat& v, const CausalMask& mask,
                          Mat* weights) {
    const int len = q.rows;
    const int dk = q.cols;
    if (k.rows != len || v.rows != len || k.cols != dk)
        throw ShapeMismatch("attention head: q/k/v row or width mismatch");
    if (mask.size != len) throw ShapeMismatch("attention head: mask size mismatch");

    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    Mat probs(len, len);
    Mat out(len, v.cols);

    for (int t = 0; t < len; ++t) {
        double* prow = probs[t];
        const double* qrow = q[t];
        double max_score = kNegInf;
        for (int j = 0; j < len; ++j) {
            double s = 0.0;
            const double* krow = k[j];
            for (int c = 0; c < dk; ++c) s += qrow[c] * krow[c];
            s = s * inv_sqrt_dk + mask.entries[t][j];
            prow[j] = s;
            if (s > max_score) max_score = s;
        }
        double sum = 0.0;
        for (int j = 0; j < len; ++j) {
            double e = std::exp(prow[j] - max_score); // exp(-inf) = 0 above the diagonal
            prow[j] = e;
            sum += e;
        }
        const double inv_sum = 1.0 / sum;
        double* orow = out[t];
        for (int c = 0; c < v.cols; ++c) orow[c] = 0.0;
        for (int j = 0; j < len; ++j) {
            prow[j] *= inv_sum;
            const double p = prow[j];
            const double* vrow = v[j];
            for (int c = 0; c < v.cols; ++c) orow[c] += p * vrow[c];
        }
    }
    if (weights != nullptr) *weights = probs;
    return out;
}

void attention_forward(const Mat& q, const Mat& k, const Mat& v, int n_heads, Mat& probs,
                       Mat& out) {
    const int len = q.rows;
    const int d = q.cols;
    const int dk = d / n_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    probs.ensure(n_heads * len, len); // upper triangle never written, stays zero
    out.ensure(len, d);

    parallel_for_strided(len, [&](int t) {
        for (int h = 0; h < n_heads; ++h) {
            const int off = h * dk;
            const double* qrow = q[t] + off;
            double* prow = probs[h * len + t];
            double max_score = kNegInf;
            for (int j = 0; j <= t; ++j) {
                const double* krow = k[j] + off;
                double s = 0.0;
                for (int c = 0; c < dk; ++c) s += qrow[c] * krow[c];
                s *= inv_sqrt_dk;
                prow[j] = s;
                if (s > max_score) max_score = s;
            }
            double sum = 0.0;
            for (int j = 0; j <= t; ++j) {
                double e = std::exp(prow[j] - max_score);
                prow[j] = e;
                sum += e;
            }
            const double inv_sum = 1.0 / sum;
            double* orow = out[t] + off;
            for (int c = 0; c < dk; ++c) orow[c] = 0.0;
            for (int j = 0; j <= t; ++j) {
                prow[j] *= inv_sum;
                const double p = prow[j];
                const double* vrow = v[j] + off;
                for (int c = 0; c < dk; ++c) orow[c] += p * vrow[c];
            }
        }
    });
}

void attention_backward(const Mat& q, const Mat& k, const Mat& v, const Mat& probs, int n_heads,
                        const Mat& dout, Mat& dq, Mat& dk_out, Mat& dv, Mat& ds) {
    const int len = q.rows;
    const int d = q.cols;
    const int dk = d / n_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    dq.ensure(len, d);
    dk_out.ensure(len, d);
    dv.ensure(len, d);
    ds.ensure(n_heads * len, len);

    // Phase 1, row-parallel: dP -> dS and dq.
    parallel_for_strided(len, [&](int t) {
        for (int h = 0; h < n_heads; ++h) {
            const int off = h * dk;
            const double* dorow = dout[t] + off;
            const double* prow = probs[h * len + t];
            double* dsrow = ds[h * len + t];

            double row_dot = 0.0;
            for (int j = 0; j <= t; ++j) {
                const double* vrow = v[j] + off;
                double dp = 0.0;
                for (int c = 0; c < dk; ++c) dp += dorow[c] * vrow[c];
                dsrow[j] = dp;
                row_dot += dp * prow[j];
            }
            for (int j = 0; j <= t; ++j) dsrow[j] = prow[j] * (dsrow[j] - row_dot);

            double* dqrow = dq[t] + off;
            for (int c = 0; c < dk; ++c) dqrow[c] = 0.0;
            for (int j = 0; j <= t; ++j) {
                const double g = dsrow[j];
                const double* krow = k[j] + off;
                for (int c = 0; c < dk; ++c) dqrow[c] += g * krow[c];
            }
            for (int c = 0; c < dk; ++c) dqrow[c] *= inv_sqrt_dk;
        }
    });

    // Phase 2, column-parallel: dv and dk.
    parallel_for_strided(len, [&](int j) {
        for (int h = 0; h < n_heads; ++h) {
            const int off = h * dk;
            double* dvrow = dv[j] + off;
            double* dkrow = dk_out[j] + off;
            for (int c = 0; c < dk; ++c) {
                dvrow[c] = 0.0;
                dkrow[c] = 0.0;
            }
            for (int t = j; t < len; ++t) {
                const double p = probs[h * len + t][j];
                const double g = ds[h * len + t][j];
                const double* dorow = dout[t] + off;
                const double* qrow = q[t] + off;
                for (int c = 0; c < dk; ++c) {
                    dvrow[c] += p * dorow[c];
                    dkrow[c] += g * qrow[c];
                }
            }
            for (int c = 0; c < dk; ++c) dkrow[c] *= inv_sqrt_dk;
        }
    });
}

void run_decoder_layer(const Mat& x, const DecoderLayerParams& lp, int n_heads,
                       DecoderLayerCache& cache) {
    const int len = x.rows;
    const int d = x.cols;
    const int ffn = lp.w1.shape[1];

    cache.x_in = x;
    cache.q.ensure(len, d);
    cache.k.ensure(len, d);
    cache.v.ensure(len, d);
    matmul(x, mat2d(lp.wq), cache.q);
    matmul(x, mat2d(lp.wk), cache.k);
    matmul(x, mat2d(lp.wv), cache.v);

    attention_forward(cache.q, cache.k, cache.v, n_heads, cache.probs, cache.headcat);

    cache.attn_out.ensure(len, d);
    matmul(cache.headcat, mat2d(lp.wo), cache.attn_out);

    cache.res1.ensure(len, d);
    add(x, cache.attn_out, cache.res1);

    cache.ln1_hat.ensure(len, d);
    cache.y1.ensure(len, d);
    cache.ln1_istd.resize(len);
    layer_norm_forward(cache.res1, lp.ln1_g.v.data(), lp.ln1_b.v.data(), cache.y1, cache.ln1_hat,
                       cache.ln1_istd);

    cache.ffn_z.ensure(len, ffn);
    matmul(cache.y1, mat2d(lp.w1), cache.ffn_z);
    add_row_bias(cache.ffn_z, lp.b1.v.data());
    cache.ffn_a.ensure(len, ffn);
    relu(cache.ffn_z, cache.ffn_a);
    cache.ffn_out.ensure(len, d);
    matmul(cache.ffn_a, mat2d(lp.w2), cache.ffn_out);
    add_row_bias(cache.ffn_out, lp.b2.v.data());

    cache.res2.ensure(len, d);
    add(cache.y1, cache.ffn_out, cache.res2);

    cache.ln2_hat.ensure(len, d);
    cache.y2.ensure(len, d);
    cache.ln2_istd.resize(len);
    layer_norm_forward(cache.res2, lp.ln2_g.v.data(), lp.ln2_b.v.data(), cache.y2, cache.ln2_hat,
                       cache.ln2_istd);
}

Mat decoder_layer(const Mat& x, const DecoderLayerParams& lp, const CausalMask& mask, int n_heads,
                  std::vector<Mat>* attn) {
    if (mask.size != x.rows) throw ShapeMismatch("decoder_layer: mask size mismatch");
    if (lp.wq.shape[0] != x.cols) throw ShapeMismatch("decoder_layer: input width mismatch");
    if (x.cols % n_heads != 0) throw ShapeMismatch("decoder_layer: width not divisible by heads");

    DecoderLayerCache cache;
    run_decoder_layer(x, lp, n_heads, cache);
    if (attn != nullptr) {
        attn->clear();
        const int len = x.rows;
        for (int h = 0; h < n_heads; ++h) {
            Mat w(len, len);
            for (int t = 0; t < len; ++t)
                for (int j = 0; j < len; ++j) w[t][j] = cache.probs[h * len + t][j];
            attn->push_back(std::move(w));
        }
    }
    return cache.y2;
}

void forward_cached(const std::vector<double>& values, const ModelParams& params,
                    const ModelConfig& config, ForwardCache& cache) {
    const int len = config.model_len();
    if (static_cast<int>(values.size()) != len)
        throw ShapeMismatch("forward expects " + std::to_string(len) + " values, got " +
                            std::to_string(values.size()));

    fill_input_channels(values, config.use_pe, cache.channels);

    // Embedding stack: causal convolutions (or the kernel-1 lift), channel-major.
    const std::size_t n_convs = params.embed.size();
    cache.conv_z.resize(n_convs);
    cache.conv_a.resize(n_convs > 0 ? n_convs - 1 : 0);
    const Mat* cur = &cache.channels;
    for (std::size_t i = 0; i < n_convs; ++i) {
        conv_causal_forward(*cur, params.embed[i], cache.conv_z[i]);
        if (i + 1 < n_convs) {
            cache.conv_a[i].ensure(cache.conv_z[i].rows, cache.conv_z[i].cols);
            relu(cache.conv_z[i], cache.conv_a[i]);
            cur = &cache.conv_a[i];
        } else {
            cur = &cache.conv_z[i];
        }
    }

    // Transpose channel-major embedding to time-major rows.
    const Mat& emb = *cur;
    cache.embedded.ensure(len, emb.rows);
    for (int c = 0; c < emb.rows; ++c) {
        const double* row = emb[c];
        for (int t = 0; t < len; ++t) cache.embedded[t][c] = row[t];
    }

    const Mat* x = &cache.embedded;
    cache.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        run_decoder_layer(*x, params.layers[l], config.n_heads, cache.layers[l]);
        x = &cache.layers[l].y2;
    }

    cache.logits.ensure(len, config.resolution);
    matmul(*x, mat2d(params.head_w), cache.logits);
    add_row_bias(cache.logits, params.head_b.v.data());
}

std::vector<std::vector<Mat>> extract_attentions(const ForwardCache& cache,
                                                 const ModelConfig& config) {
    std::vector<std::vector<Mat>> out;
    const int len = config.model_len();
    out.reserve(cache.layers.size());
    for (const DecoderLayerCache& layer : cache.layers) {
        std::vector<Mat> heads;
        heads.reserve(static_cast<std::size_t>(config.n_heads));
        for (int h = 0; h < config.n_heads; ++h) {
            Mat w(len, len);
            for (int t = 0; t < len; ++t) {
                const double* prow = layer.probs[h * len + t];
                for (int j = 0; j < len; ++j) w[t][j] = prow[j];
            }
            heads.push_back(std::move(w));
        }
        out.push_back(std::move(heads));
    }
    return out;
}

ForwardOutput forward(const std::vector<double>& values, const ModelParams& params,
                      const ModelConfig& config) {
    config.validate();
    check_shapes(params, config);
    ForwardCache cache;
    forward_cached(values, params, config, cache);
    ForwardOutput out;
    out.logits = cache.logits;
    out.attentions = extract_attentions(cache, config);
    return out;
}

Mat softmax_probs(const Mat& logits) {
    Mat probs(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        const double* row = logits[i];
        double max_logit = kNegInf;
        for (int j = 0; j < logits.cols; ++j) max_logit = std::max(max_logit, row[j]);
        double sum = 0.0;
        double* prow = probs[i];
        for (int j = 0; j < logits.cols; ++j) {
            prow[j] = std::exp(row[j] - max_logit);
            sum += prow[j];
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < logits.cols; ++j) prow[j] *= inv;
    }
    return probs;
}

} // namespace trace
