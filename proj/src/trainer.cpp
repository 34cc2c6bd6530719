#include "trace/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trace/error.hpp"
#include "trace/log.hpp"

#include "kernels.hpp"
#include "model_internal.hpp"

namespace trace {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct BackpropScratch {
    Mat dlogits;          // L x r
    Mat d_a;              // L x d, flows backward through the stack
    Mat d_b;              // L x d
    Mat d_res;            // L x d
    Mat d_ffn_a, d_ffn_z; // L x ffn
    Mat d_headcat, d_q, d_k, d_v;
    Mat ds;               // (h*L) x L
    Mat d_emb_ch;         // channel-major
    Mat d_conv_in;
};

// Loss of one row plus its softmax-CE gradient, stable via log-sum-exp.
double row_loss_and_grad(const double* logits, int r, int target, double* dlogits) {
    double max_logit = kNegInf;
    for (int j = 0; j < r; ++j) max_logit = std::max(max_logit, logits[j]);
    double sum = 0.0;
    for (int j = 0; j < r; ++j) {
        dlogits[j] = std::exp(logits[j] - max_logit);
        sum += dlogits[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < r; ++j) dlogits[j] *= inv;
    const double loss = std::log(sum) + max_logit - logits[target];
    dlogits[target] -= 1.0;
    return loss;
}

QuantizedSequence targets_of(const std::vector<double>& values, int resolution) {
    // Positions 2..T: everything after the first value.
    std::vector<double> shifted(values.begin() + 1, values.end());
    return quantize(shifted, resolution);
}

// Backward through the whole network. cache holds the forward pass for the
// same values; grads are accumulated (caller zeroes).
double backward_from_cache(const QuantizedSequence& targets, const ModelParams& params,
                           const ModelConfig& config, const ForwardCache& cache,
                           BackpropScratch& scratch, ModelParams& grads) {
    const int len = config.model_len();
    const int r = config.resolution;
    const int d = config.d_model;

    scratch.dlogits.ensure(len, r);
    double total = 0.0;
    for (int t = 0; t < len; ++t) {
        const int target = targets.classes[static_cast<std::size_t>(t)];
        if (target < 0 || target >= r) throw TargetOutOfRange(target, r);
        total += row_loss_and_grad(cache.logits[t], r, target, scratch.dlogits[t]);
    }

    // Head.
    const Mat& y_final = params.layers.empty() ? cache.embedded : cache.layers.back().y2;
    matmul_at_b(y_final, scratch.dlogits, mat2d_mut(grads.head_w), true);
    col_sums(scratch.dlogits, grads.head_b.v.data(), true);
    scratch.d_a.ensure(len, d);
    matmul_a_bt(scratch.dlogits, mat2d(params.head_w), scratch.d_a);

    // Decoder stack, last layer first. d_a enters as dL/dy2 and leaves as
    // dL/dx, which is the previous layer's dL/dy2.
    for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
        const DecoderLayerParams& lp = params.layers[static_cast<std::size_t>(l)];
        DecoderLayerParams& gp = grads.layers[static_cast<std::size_t>(l)];
        const DecoderLayerCache& lc = cache.layers[static_cast<std::size_t>(l)];
        const int ffn = lp.w1.shape[1];

        scratch.d_res.ensure(len, d);
        layer_norm_backward(scratch.d_a, lc.ln2_hat, lc.ln2_istd, lp.ln2_g.v.data(),
                            gp.ln2_g.v.data(), gp.ln2_b.v.data(), scratch.d_res);

        // FFN branch; d_res is dL/d res2 = dL/d ffn_out = part of dL/d y1.
        matmul_at_b(lc.ffn_a, scratch.d_res, mat2d_mut(gp.w2), true);
        col_sums(scratch.d_res, gp.b2.v.data(), true);
        scratch.d_ffn_a.ensure(len, ffn);
        matmul_a_bt(scratch.d_res, mat2d(lp.w2), scratch.d_ffn_a);
        scratch.d_ffn_z.ensure(len, ffn);
        relu_backward(lc.ffn_z, scratch.d_ffn_a, scratch.d_ffn_z);
        matmul_at_b(lc.y1, scratch.d_ffn_z, mat2d_mut(gp.w1), true);
        col_sums(scratch.d_ffn_z, gp.b1.v.data(), true);

        scratch.d_b.ensure(len, d);
        matmul_a_bt(scratch.d_ffn_z, mat2d(lp.w1), scratch.d_b);
        add(scratch.d_b, scratch.d_res, scratch.d_b); // dL/d y1

        layer_norm_backward(scratch.d_b, lc.ln1_hat, lc.ln1_istd, lp.ln1_g.v.data(),
                            gp.ln1_g.v.data(), gp.ln1_b.v.data(), scratch.d_res); // dL/d res1

        // Attention branch; d_res is dL/d attn_out = part of dL/d x.
        matmul_at_b(lc.headcat, scratch.d_res, mat2d_mut(gp.wo), true);
        scratch.d_headcat.ensure(len, d);
        matmul_a_bt(scratch.d_res, mat2d(lp.wo), scratch.d_headcat);

        attention_backward(lc.q, lc.k, lc.v, lc.probs, config.n_heads, scratch.d_headcat,
                           scratch.d_q, scratch.d_k, scratch.d_v, scratch.ds);

        matmul_at_b(lc.x_in, scratch.d_q, mat2d_mut(gp.wq), true);
        matmul_at_b(lc.x_in, scratch.d_k, mat2d_mut(gp.wk), true);
        matmul_at_b(lc.x_in, scratch.d_v, mat2d_mut(gp.wv), true);

        matmul_a_bt(scratch.d_q, mat2d(lp.wq), scratch.d_a);
        matmul_a_bt(scratch.d_k, mat2d(lp.wk), scratch.d_a, true);
        matmul_a_bt(scratch.d_v, mat2d(lp.wv), scratch.d_a, true);
        add(scratch.d_a, scratch.d_res, scratch.d_a); // dL/d x
    }

    // Transpose into channel-major and walk the convolution stack backward.
    const std::size_t n_convs = params.embed.size();
    scratch.d_emb_ch.ensure(d, len);
    for (int t = 0; t < len; ++t)
        for (int c = 0; c < d; ++c) scratch.d_emb_ch[c][t] = scratch.d_a[t][c];

    Mat* d_out = &scratch.d_emb_ch;
    for (int i = static_cast<int>(n_convs) - 1; i >= 0; --i) {
        const Mat& input = i == 0 ? cache.channels : cache.conv_a[static_cast<std::size_t>(i - 1)];
        conv_causal_backward(input, params.embed[static_cast<std::size_t>(i)], *d_out,
                             grads.embed[static_cast<std::size_t>(i)].w,
                             grads.embed[static_cast<std::size_t>(i)].b,
                             i > 0 ? &scratch.d_conv_in : nullptr);
        if (i > 0) {
            // Through the inter-layer ReLU.
            relu_backward(cache.conv_z[static_cast<std::size_t>(i - 1)], scratch.d_conv_in,
                          scratch.d_conv_in);
            std::swap(scratch.d_emb_ch, scratch.d_conv_in);
            d_out = &scratch.d_emb_ch;
        }
    }

    return total;
}

void zero_grads(ModelParams& grads) {
    for (Tensor* t : grads.tensors()) std::fill(t->v.begin(), t->v.end(), 0.0);
}

} // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs", "must be >= 1");
    if (!(step_size > 0)) throw ConfigError("train.step_size", "must be > 0");
    if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
    if (!(beta1 >= 0 && beta1 < 1)) throw ConfigError("train.beta1", "must be in [0, 1)");
    if (!(beta2 >= 0 && beta2 < 1)) throw ConfigError("train.beta2", "must be in [0, 1)");
    if (!(epsilon > 0)) throw ConfigError("train.epsilon", "must be > 0");
    if (grad_clip < 0) throw ConfigError("train.grad_clip", "must be >= 0");
}

double cross_entropy(std::span<const double> logits_row, int target) {
    const int r = static_cast<int>(logits_row.size());
    if (target < 0 || target >= r) throw TargetOutOfRange(target, r);
    double max_logit = kNegInf;
    for (double x : logits_row) max_logit = std::max(max_logit, x);
    double sum = 0.0;
    for (double x : logits_row) sum += std::exp(x - max_logit);
    return std::log(sum) + max_logit - logits_row[static_cast<std::size_t>(target)];
}

std::pair<std::vector<double>, double> sequence_loss(const ForwardOutput& output,
                                                     const QuantizedSequence& targets) {
    const int len = output.logits.rows;
    const int r = output.logits.cols;
    if (static_cast<int>(targets.classes.size()) != len)
        throw ShapeMismatch("sequence_loss: " + std::to_string(targets.classes.size()) +
                            " targets for " + std::to_string(len) + " logit rows");
    if (targets.resolution != r)
        throw ShapeMismatch("sequence_loss: target resolution " +
                            std::to_string(targets.resolution) + " != logit width " +
                            std::to_string(r));

    std::vector<double> per_t(static_cast<std::size_t>(len));
    double total = 0.0;
    for (int t = 0; t < len; ++t) {
        per_t[static_cast<std::size_t>(t)] =
            cross_entropy(std::span<const double>(output.logits[t], static_cast<std::size_t>(r)),
                          targets.classes[static_cast<std::size_t>(t)]);
        total += per_t[static_cast<std::size_t>(t)];
    }
    return {std::move(per_t), total};
}

AdamState make_adam_state(const ModelParams& params) {
    AdamState state;
    for (const Tensor* t : params.tensors()) {
        state.m.emplace_back(t->v.size(), 0.0);
        state.v.emplace_back(t->v.size(), 0.0);
    }
    return state;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& config) {
    auto param_tensors = params.tensors();
    auto grad_tensors = grads.tensors();
    if (param_tensors.size() != grad_tensors.size() || param_tensors.size() != state.m.size())
        throw ShapeMismatch("adam_step: params/grads/state tensor counts differ");

    double clip_scale = 1.0;
    if (config.grad_clip > 0) {
        double sq = 0.0;
        for (const Tensor* g : grad_tensors)
            for (double x : g->v) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm > config.grad_clip) clip_scale = config.grad_clip / norm;
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < param_tensors.size(); ++i) {
        Tensor& p = *param_tensors[i];
        const Tensor& g = *grad_tensors[i];
        if (p.v.size() != g.v.size())
            throw ShapeMismatch("adam_step: tensor '" + p.name + "' size mismatch");
        std::vector<double>& m = state.m[i];
        std::vector<double>& v = state.v[i];
        for (std::size_t e = 0; e < p.v.size(); ++e) {
            const double grad = g.v[e] * clip_scale;
            if (!std::isfinite(grad))
                throw NumericError("non-finite gradient in tensor '" + p.name + "'");
            m[e] = config.beta1 * m[e] + (1.0 - config.beta1) * grad;
            v[e] = config.beta2 * v[e] + (1.0 - config.beta2) * grad * grad;
            const double m_hat = m[e] / bc1;
            const double v_hat = v[e] / bc2;
            p.v[e] -= config.step_size * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

double loss_and_gradients(const std::vector<double>& values, const ModelParams& params,
                          const ModelConfig& config, ForwardCache& cache, ModelParams& grads) {
    if (static_cast<int>(values.size()) != config.seq_len)
        throw ShapeMismatch("loss_and_gradients expects full sequences of length " +
                            std::to_string(config.seq_len));
    zero_grads(grads);
    std::vector<double> inputs(values.begin(), values.end() - 1);
    QuantizedSequence targets = targets_of(values, config.resolution);
    forward_cached(inputs, params, config, cache);
    static thread_local BackpropScratch scratch;
    return backward_from_cache(targets, params, config, cache, scratch, grads);
}

TrainResult train(const std::vector<std::vector<double>>& sequences,
                  const ModelConfig& model_config, const TrainConfig& train_config) {
    model_config.validate();
    train_config.validate();
    if (sequences.empty()) throw DataError("train: no sequences");
    for (std::size_t n = 0; n < sequences.size(); ++n) {
        if (static_cast<int>(sequences[n].size()) != model_config.seq_len)
            throw ShapeMismatch("train: sequence " + std::to_string(n) + " has length " +
                                std::to_string(sequences[n].size()) + ", expected " +
                                std::to_string(model_config.seq_len));
    }

    TrainResult result;
    result.params = init_params(model_config);
    AdamState state = make_adam_state(result.params);
    ModelParams grads = zeros_like(result.params);
    ModelParams batch_grads = zeros_like(result.params);
    ForwardCache cache;

    const int batch = train_config.batch_size;
    const std::size_t n_seq = sequences.size();

    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        double epoch_sum = 0.0;
        int in_batch = 0;
        for (std::size_t n = 0; n < n_seq; ++n) {
            double loss = loss_and_gradients(sequences[n], result.params, model_config, cache, grads);
            if (!std::isfinite(loss))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", sequence " + std::to_string(n));
            epoch_sum += loss;

            if (batch == 1) {
                adam_step(result.params, grads, state, train_config);
            } else {
                auto acc = batch_grads.tensors();
                auto cur = grads.tensors();
                for (std::size_t i = 0; i < acc.size(); ++i)
                    for (std::size_t e = 0; e < acc[i]->v.size(); ++e)
                        acc[i]->v[e] += cur[i]->v[e];
                ++in_batch;
                if (in_batch == batch || n + 1 == n_seq) {
                    const double inv = 1.0 / in_batch;
                    for (Tensor* t : batch_grads.tensors())
                        for (double& x : t->v) x *= inv;
                    adam_step(result.params, batch_grads, state, train_config);
                    zero_grads(batch_grads);
                    in_batch = 0;
                }
            }
        }
        const double mean = epoch_sum / static_cast<double>(n_seq);
        result.record.epoch_mean_loss.push_back(mean);
        log::debugf("epoch %d/%d mean loss %.6f", epoch + 1, train_config.epochs, mean);
    }

    // Final per-sequence losses, recomputed in evaluation mode.
    for (const std::vector<double>& seq : sequences) {
        std::vector<double> inputs(seq.begin(), seq.end() - 1);
        QuantizedSequence targets = targets_of(seq, model_config.resolution);
        forward_cached(inputs, result.params, model_config, cache);
        ForwardOutput out;
        out.logits = cache.logits;
        auto [per_t, total] = sequence_loss(out, targets);
        result.record.final_per_timestamp.push_back(std::move(per_t));
        result.record.final_sequence_loss.push_back(total);
    }

    log::infof("training done: %zu sequences, %d epochs, final mean loss %.6f", n_seq,
               train_config.epochs, result.record.epoch_mean_loss.back());
    return result;
}

GradCheckResult grad_check(const ModelConfig& config, const std::vector<double>& values,
                           double epsilon) {
    config.validate();
    ModelParams params = init_params(config);
    ModelParams grads = zeros_like(params);
    ForwardCache cache;

    loss_and_gradients(values, params, config, cache, grads);

    std::vector<double> inputs(values.begin(), values.end() - 1);
    QuantizedSequence targets = targets_of(values, config.resolution);
    auto eval_loss = [&]() {
        forward_cached(inputs, params, config, cache);
        ForwardOutput out;
        out.logits = cache.logits;
        return sequence_loss(out, targets).second;
    };

    GradCheckResult result;
    auto param_tensors = params.tensors();
    auto grad_tensors = grads.tensors();
    for (std::size_t i = 0; i < param_tensors.size(); ++i) {
        Tensor& p = *param_tensors[i];
        const Tensor& g = *grad_tensors[i];
        for (std::size_t e = 0; e < p.v.size(); ++e) {
            const double saved = p.v[e];
            p.v[e] = saved + epsilon;
            const double loss_hi = eval_loss();
            p.v[e] = saved - epsilon;
            const double loss_lo = eval_loss();
            p.v[e] = saved;

            const double numeric = (loss_hi - loss_lo) / (2.0 * epsilon);
            const double analytic = g.v[e];
            const double rel = std::abs(analytic - numeric) /
                               std::max(1e-5, std::abs(analytic) + std::abs(numeric));
            result.max_rel_error = std::max(result.max_rel_error, rel);
            ++result.checked;
        }
    }
    return result;
}

} // namespace trace
