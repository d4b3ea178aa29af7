#include "interleave/model.h"

#include "interleave/error.h"
#include "interleave/rng.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace interleave {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

constexpr double kLayerNormEps = 1e-5;

// ---------------------------------------------------------------------------
// layer norm
// ---------------------------------------------------------------------------

struct NormCache {
    MatrixXd xhat;
    VectorXd rstd;
};

MatrixXd layer_norm(const MatrixXd & x, const Eigen::Map<const MatrixXd> & gain,
                    const Eigen::Map<const MatrixXd> & bias, NormCache * cache) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    MatrixXd xhat(n, d);
    VectorXd rstd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        rstd(i) = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
    }
    MatrixXd y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
    if (cache != nullptr) {
        cache->xhat = std::move(xhat);
        cache->rstd = std::move(rstd);
    }
    return y;
}

MatrixXd layer_norm_backward(const MatrixXd & dy, const NormCache & cache, const Eigen::Map<const MatrixXd> & gain,
                             Eigen::Map<MatrixXd> dgain, Eigen::Map<MatrixXd> dbias) {
    dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    dbias.row(0) += dy.colwise().sum();
    const MatrixXd dxhat = dy.array().rowwise() * gain.row(0).array();
    const double d = static_cast<double>(dy.cols());
    MatrixXd dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const double mean_dxhat = dxhat.row(i).sum() / d;
        const double mean_dxhat_xhat = dxhat.row(i).dot(cache.xhat.row(i)) / d;
        dx.row(i) = cache.rstd(i) *
                    (dxhat.row(i).array() - mean_dxhat - cache.xhat.row(i).array() * mean_dxhat_xhat).matrix();
    }
    return dx;
}

// ---------------------------------------------------------------------------
// attention
// ---------------------------------------------------------------------------

struct AttentionCache {
    MatrixXd xq;
    MatrixXd xkv;
    MatrixXd q, k, v;
    std::vector<MatrixXd> probs; // per head
    MatrixXd concat;
};

struct AttentionWeights {
    int wq, wk, wv, wo;
};

MatrixXd attention(const Parameters & p, const AttentionWeights & w, const MatrixXd & xq, const MatrixXd & xkv,
                   int heads, bool causal, AttentionCache * cache) {
    const int D = p.config().D;
    const int dh = D / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    MatrixXd q = xq * p.block(w.wq);
    MatrixXd k = xkv * p.block(w.wk);
    MatrixXd v = xkv * p.block(w.wv);
    MatrixXd concat(xq.rows(), D);
    std::vector<MatrixXd> probs;
    probs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        MatrixXd scores = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() * scale;
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            const Eigen::Index visible = causal ? i + 1 : scores.cols();
            const double max = scores.row(i).head(visible).maxCoeff();
            double sum = 0.0;
            for (Eigen::Index j = 0; j < scores.cols(); ++j) {
                const double e = j < visible ? std::exp(scores(i, j) - max) : 0.0;
                scores(i, j) = e;
                sum += e;
            }
            scores.row(i) /= sum;
        }
        concat.middleCols(h * dh, dh) = scores * v.middleCols(h * dh, dh);
        probs.push_back(std::move(scores));
    }
    MatrixXd out = concat * p.block(w.wo);
    if (cache != nullptr) {
        cache->xq = xq;
        cache->xkv = xkv;
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->probs = std::move(probs);
        cache->concat = std::move(concat);
    }
    return out;
}

// Returns (d xq, d xkv).
std::pair<MatrixXd, MatrixXd> attention_backward(const Parameters & p, Parameters & g, const AttentionWeights & w,
                                                 const MatrixXd & dout, const AttentionCache & c, int heads) {
    const int D = p.config().D;
    const int dh = D / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    g.block(w.wo) += c.concat.transpose() * dout;
    const MatrixXd dconcat = dout * p.block(w.wo).transpose();
    MatrixXd dq(c.q.rows(), D);
    MatrixXd dk(c.k.rows(), D);
    MatrixXd dv(c.v.rows(), D);
    for (int h = 0; h < heads; ++h) {
        const MatrixXd & probs = c.probs[h];
        const auto dh_out = dconcat.middleCols(h * dh, dh);
        const MatrixXd dprobs = dh_out * c.v.middleCols(h * dh, dh).transpose();
        dv.middleCols(h * dh, dh) = probs.transpose() * dh_out;
        const VectorXd row_dot = (dprobs.array() * probs.array()).rowwise().sum();
        const MatrixXd dscores = (probs.array() * (dprobs.colwise() - row_dot).array()).matrix() * scale;
        dq.middleCols(h * dh, dh) = dscores * c.k.middleCols(h * dh, dh);
        dk.middleCols(h * dh, dh) = dscores.transpose() * c.q.middleCols(h * dh, dh);
    }
    g.block(w.wq) += c.xq.transpose() * dq;
    g.block(w.wk) += c.xkv.transpose() * dk;
    g.block(w.wv) += c.xkv.transpose() * dv;
    MatrixXd dxq = dq * p.block(w.wq).transpose();
    MatrixXd dxkv = dk * p.block(w.wk).transpose() + dv * p.block(w.wv).transpose();
    return {std::move(dxq), std::move(dxkv)};
}

// ---------------------------------------------------------------------------
// full network
// ---------------------------------------------------------------------------

struct LayerCache {
    NormCache ln1;
    AttentionCache self;
    NormCache lnc;
    AttentionCache cross;
    NormCache ln2;
    MatrixXd ffn_in;
    MatrixXd pre_relu;
    MatrixXd post_relu;
};

struct ForwardCache {
    std::vector<StepInput> steps;
    MatrixXd prefix_raw;
    MatrixXd cross_raw;
    MatrixXd cross_proj;
    bool cross_active = false;
    int prefix_len = 0;
    std::vector<LayerCache> layers;
    NormCache lnf;
    MatrixXd final_out; // S x D
};

void check_inputs(const Parameters & params, std::span<const StepInput> steps, const Condition & condition,
                  ConditioningMode mode) {
    const ModelConfig & cfg = params.config();
    if (uses_cross(mode) && params.cross_w < 0) {
        throw ValidationError("parameters have no cross-attention blocks for mode " + std::string(to_string(mode)));
    }
    if (uses_prefix(mode) && params.prefix_w < 0) {
        throw ValidationError("parameters have no prefix projection for mode " + std::string(to_string(mode)));
    }
    if (steps.empty()) {
        throw ValidationError("forward needs at least one step");
    }
    for (const auto & step : steps) {
        if (static_cast<int>(step.tokens.size()) != cfg.K) {
            throw ValidationError("step input has " + std::to_string(step.tokens.size()) + " codebooks, model has " +
                                  std::to_string(cfg.K));
        }
        if (step.s < 0 || step.s >= cfg.max_steps) {
            throw ValidationError("step index " + std::to_string(step.s) + " outside 0.." +
                                  std::to_string(cfg.max_steps - 1));
        }
    }
    auto check_tensor = [&cfg](const ConditioningTensor & t, const char * what) {
        if (!t.empty() && t.dim() != cfg.D) {
            throw ValidationError(std::string(what) + " condition has dimension " + std::to_string(t.dim()) +
                                  ", model expects " + std::to_string(cfg.D));
        }
    };
    check_tensor(condition.cross, "cross");
    check_tensor(condition.prefix, "prefix");
    if (uses_prefix(mode) && condition.prefix.length() > cfg.max_steps) {
        throw ValidationError("prefix condition longer than max_steps");
    }
}

Logits run(const Parameters & params, std::span<const StepInput> steps, const Condition & condition,
           ConditioningMode mode, ForwardCache * cache) {
    check_inputs(params, steps, condition, mode);
    const ModelConfig & cfg = params.config();
    const int S = static_cast<int>(steps.size());
    const bool prefix_active = uses_prefix(mode) && !condition.prefix.empty();
    const bool cross_active = uses_cross(mode) && !condition.cross.empty();
    const int P = prefix_active ? condition.prefix.length() : 0;

    MatrixXd h(P + S, cfg.D);
    if (prefix_active) {
        h.topRows(P) = (condition.prefix.rows * params.block(params.prefix_w)).rowwise() +
                       params.block(params.prefix_b).row(0);
        for (int i = 0; i < P; ++i) {
            h.row(i) += sinusoidal_position(i, cfg.D);
        }
    }
    for (int s = 0; s < S; ++s) {
        h.row(P + s) = embed_step(params, steps[s]);
    }
    MatrixXd cross_proj;
    if (cross_active) {
        cross_proj = (condition.cross.rows * params.block(params.cross_w)).rowwise() +
                     params.block(params.cross_b).row(0);
    }

    if (cache != nullptr) {
        cache->steps.assign(steps.begin(), steps.end());
        cache->prefix_len = P;
        cache->cross_active = cross_active;
        if (prefix_active) {
            cache->prefix_raw = condition.prefix.rows;
        }
        if (cross_active) {
            cache->cross_raw = condition.cross.rows;
            cache->cross_proj = cross_proj;
        }
        cache->layers.assign(cfg.L, {});
    }

    for (int l = 0; l < cfg.L; ++l) {
        const auto & ly = params.layers[l];
        LayerCache * lc = cache != nullptr ? &cache->layers[l] : nullptr;

        MatrixXd a = layer_norm(h, params.block(ly.ln1_g), params.block(ly.ln1_b), lc ? &lc->ln1 : nullptr);
        h += attention(params, {ly.wq, ly.wk, ly.wv, ly.wo}, a, a, cfg.H, true, lc ? &lc->self : nullptr);

        if (cross_active) {
            MatrixXd b = layer_norm(h, params.block(ly.lnc_g), params.block(ly.lnc_b), lc ? &lc->lnc : nullptr);
            h += attention(params, {ly.cq, ly.ck, ly.cv, ly.co}, b, cross_proj, cfg.H, false,
                           lc ? &lc->cross : nullptr);
        }

        MatrixXd f = layer_norm(h, params.block(ly.ln2_g), params.block(ly.ln2_b), lc ? &lc->ln2 : nullptr);
        MatrixXd u = (f * params.block(ly.w1)).rowwise() + params.block(ly.b1).row(0);
        MatrixXd r = u.cwiseMax(0.0);
        h += (r * params.block(ly.w2)).rowwise() + params.block(ly.b2).row(0);
        if (lc != nullptr) {
            lc->ffn_in = std::move(f);
            lc->pre_relu = std::move(u);
            lc->post_relu = std::move(r);
        }
    }

    MatrixXd z = layer_norm(h.bottomRows(S), params.block(params.lnf_g), params.block(params.lnf_b),
                            cache ? &cache->lnf : nullptr);
    Logits logits;
    logits.per_codebook.reserve(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        logits.per_codebook.push_back((z * params.block(params.head_w[k])).rowwise() +
                                      params.block(params.head_b[k]).row(0));
    }
    if (cache != nullptr) {
        cache->final_out = std::move(z);
    }
    return logits;
}

void backward(const Parameters & params, const ForwardCache & cache, const std::vector<MatrixXd> & dlogits,
              Parameters & g) {
    const ModelConfig & cfg = params.config();
    const int S = static_cast<int>(cache.steps.size());
    const int P = cache.prefix_len;

    MatrixXd dz = MatrixXd::Zero(S, cfg.D);
    for (int k = 0; k < cfg.K; ++k) {
        g.block(params.head_w[k]) += cache.final_out.transpose() * dlogits[k];
        g.block(params.head_b[k]).row(0) += dlogits[k].colwise().sum();
        dz += dlogits[k] * params.block(params.head_w[k]).transpose();
    }
    MatrixXd dh = MatrixXd::Zero(P + S, cfg.D);
    dh.bottomRows(S) = layer_norm_backward(dz, cache.lnf, params.block(params.lnf_g), g.block(params.lnf_g),
                                           g.block(params.lnf_b));

    MatrixXd dcross;
    if (cache.cross_active) {
        dcross = MatrixXd::Zero(cache.cross_proj.rows(), cfg.D);
    }

    for (int l = cfg.L - 1; l >= 0; --l) {
        const auto & ly = params.layers[l];
        const LayerCache & lc = cache.layers[l];

        // feed-forward block
        g.block(ly.w2) += lc.post_relu.transpose() * dh;
        g.block(ly.b2).row(0) += dh.colwise().sum();
        MatrixXd du = (dh * params.block(ly.w2).transpose()).cwiseProduct(
            (lc.pre_relu.array() > 0.0).cast<double>().matrix());
        g.block(ly.w1) += lc.ffn_in.transpose() * du;
        g.block(ly.b1).row(0) += du.colwise().sum();
        const MatrixXd df = du * params.block(ly.w1).transpose();
        dh += layer_norm_backward(df, lc.ln2, params.block(ly.ln2_g), g.block(ly.ln2_g), g.block(ly.ln2_b));

        if (cache.cross_active) {
            auto [db, dkv] = attention_backward(params, g, {ly.cq, ly.ck, ly.cv, ly.co}, dh, lc.cross, cfg.H);
            dcross += dkv;
            dh += layer_norm_backward(db, lc.lnc, params.block(ly.lnc_g), g.block(ly.lnc_g), g.block(ly.lnc_b));
        }

        auto [dq_in, dkv_in] = attention_backward(params, g, {ly.wq, ly.wk, ly.wv, ly.wo}, dh, lc.self, cfg.H);
        const MatrixXd da = dq_in + dkv_in;
        dh += layer_norm_backward(da, lc.ln1, params.block(ly.ln1_g), g.block(ly.ln1_g), g.block(ly.ln1_b));
    }

    for (int s = 0; s < S; ++s) {
        const auto & step = cache.steps[s];
        for (int k = 0; k < cfg.K; ++k) {
            g.block(params.embed[k]).row(step.tokens[k]) += dh.row(P + s);
        }
    }
    if (P > 0) {
        g.block(params.prefix_w) += cache.prefix_raw.transpose() * dh.topRows(P);
        g.block(params.prefix_b).row(0) += dh.topRows(P).colwise().sum();
    }
    if (cache.cross_active) {
        g.block(params.cross_w) += cache.cross_raw.transpose() * dcross;
        g.block(params.cross_b).row(0) += dcross.colwise().sum();
    }
}

// Cross-entropy of one sequence; optionally fills d(loss)/d(logits) scaled by `scale`.
LossValue score(const Logits & logits, const InterleavedSequence & targets, const PatternLayout & layout,
                double scale, std::vector<MatrixXd> * dlogits) {
    LossValue out;
    const int S = logits.steps();
    const int K = static_cast<int>(logits.per_codebook.size());
    if (dlogits != nullptr) {
        dlogits->clear();
        for (int k = 0; k < K; ++k) {
            dlogits->push_back(MatrixXd::Zero(S, logits.per_codebook[k].cols()));
        }
    }
    int correct = 0;
    for (int s = 0; s < S; ++s) {
        for (int k = 1; k <= K; ++k) {
            if (!layout.present(s + 1, k)) {
                continue;
            }
            const int target = targets.at(s + 1, k);
            const auto row = logits.per_codebook[k - 1].row(s);
            if (target < 1 || target > row.size()) {
                throw ValidationError("target token " + std::to_string(target) + " outside 1.." +
                                      std::to_string(row.size()));
            }
            const double max = row.maxCoeff();
            const Eigen::ArrayXd e = (row.array() - max).exp().transpose();
            const double sum = e.sum();
            out.loss += std::log(sum) + max - row(target - 1);
            Eigen::Index arg = 0;
            row.maxCoeff(&arg);
            correct += (arg + 1 == target) ? 1 : 0;
            ++out.positions;
            if (dlogits != nullptr) {
                auto drow = (*dlogits)[k - 1].row(s);
                drow = (e / sum).matrix().transpose() * scale;
                drow(target - 1) -= scale;
            }
        }
    }
    if (out.positions > 0) {
        out.accuracy = static_cast<double>(correct);
    }
    return out;
}

void fill_gaussian(Eigen::Map<MatrixXd> block, double stddev, Rng & rng) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
            block(i, j) = stddev * rng.normal();
        }
    }
}

const Condition & null_condition() {
    static const Condition empty;
    return empty;
}

} // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(ConditioningMode mode) {
    switch (mode) {
    case ConditioningMode::None:
        return "none";
    case ConditioningMode::CrossAttention:
        return "cross_attention";
    case ConditioningMode::Prefix:
        return "prefix";
    case ConditioningMode::PrefixAndCross:
        return "prefix_and_cross";
    }
    return "?";
}

ConditioningMode parse_conditioning_mode(std::string_view name) {
    for (auto mode : {ConditioningMode::None, ConditioningMode::CrossAttention, ConditioningMode::Prefix,
                      ConditioningMode::PrefixAndCross}) {
        if (to_string(mode) == name) {
            return mode;
        }
    }
    throw UsageError("unknown conditioning mode '" + std::string(name) + "'");
}

bool uses_cross(ConditioningMode mode) {
    return mode == ConditioningMode::CrossAttention || mode == ConditioningMode::PrefixAndCross;
}

bool uses_prefix(ConditioningMode mode) {
    return mode == ConditioningMode::Prefix || mode == ConditioningMode::PrefixAndCross;
}

void ModelConfig::validate() const {
    if (K < 1 || M < 1 || D < 1 || L < 1 || H < 1 || ffn_mult < 1 || max_steps < 1) {
        throw ValidationError("model config counts must all be >= 1");
    }
    if (D % H != 0) {
        throw ValidationError("model dimension D=" + std::to_string(D) + " is not divisible by H=" + std::to_string(H));
    }
}

std::size_t param_count(const ModelConfig & c) {
    const std::size_t D = c.D;
    const std::size_t F = D * c.ffn_mult;
    std::size_t per_layer = 2 * D + 4 * D * D + 2 * D + D * F + F + F * D + D;
    if (uses_cross(c.mode)) {
        per_layer += 2 * D + 4 * D * D;
    }
    std::size_t total = static_cast<std::size_t>(c.K) * (c.M + 1) * D; // embeddings
    total += c.L * per_layer;
    total += 2 * D;                                                    // final norm
    total += static_cast<std::size_t>(c.K) * (D * c.M + c.M);          // heads
    if (uses_prefix(c.mode)) {
        total += D * D + D;
    }
    if (uses_cross(c.mode)) {
        total += D * D + D;
    }
    return total;
}

int Parameters::add(std::string name, int rows, int cols, bool decay) {
    std::size_t offset = blocks_.empty() ? 0 : blocks_.back().offset + static_cast<std::size_t>(blocks_.back().rows) * blocks_.back().cols;
    blocks_.push_back({std::move(name), offset, rows, cols, decay});
    return static_cast<int>(blocks_.size()) - 1;
}

Parameters::Parameters(const ModelConfig & config) : config_(config) {
    config.validate();
    const int D = config.D;
    const int F = D * config.ffn_mult;
    for (int k = 0; k < config.K; ++k) {
        embed.push_back(add("embed." + std::to_string(k + 1), config.M + 1, D, true));
    }
    if (uses_prefix(config.mode)) {
        prefix_w = add("prefix.w", D, D, true);
        prefix_b = add("prefix.b", 1, D, false);
    }
    if (uses_cross(config.mode)) {
        cross_w = add("cross.w", D, D, true);
        cross_b = add("cross.b", 1, D, false);
    }
    for (int l = 0; l < config.L; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        Layer ly{};
        ly.ln1_g = add(pre + "ln1.g", 1, D, false);
        ly.ln1_b = add(pre + "ln1.b", 1, D, false);
        ly.wq = add(pre + "self.wq", D, D, true);
        ly.wk = add(pre + "self.wk", D, D, true);
        ly.wv = add(pre + "self.wv", D, D, true);
        ly.wo = add(pre + "self.wo", D, D, true);
        if (uses_cross(config.mode)) {
            ly.lnc_g = add(pre + "lnc.g", 1, D, false);
            ly.lnc_b = add(pre + "lnc.b", 1, D, false);
            ly.cq = add(pre + "cross.wq", D, D, true);
            ly.ck = add(pre + "cross.wk", D, D, true);
            ly.cv = add(pre + "cross.wv", D, D, true);
            ly.co = add(pre + "cross.wo", D, D, true);
        }
        ly.ln2_g = add(pre + "ln2.g", 1, D, false);
        ly.ln2_b = add(pre + "ln2.b", 1, D, false);
        ly.w1 = add(pre + "ffn.w1", D, F, true);
        ly.b1 = add(pre + "ffn.b1", 1, F, false);
        ly.w2 = add(pre + "ffn.w2", F, D, true);
        ly.b2 = add(pre + "ffn.b2", 1, D, false);
        layers.push_back(ly);
    }
    lnf_g = add("final.g", 1, D, false);
    lnf_b = add("final.b", 1, D, false);
    for (int k = 0; k < config.K; ++k) {
        head_w.push_back(add("head." + std::to_string(k + 1) + ".w", D, config.M, true));
        head_b.push_back(add("head." + std::to_string(k + 1) + ".b", 1, config.M, false));
    }
    const auto & last = blocks_.back();
    values_ = VectorXd::Zero(static_cast<Eigen::Index>(last.offset + static_cast<std::size_t>(last.rows) * last.cols));
}

Eigen::Map<MatrixXd> Parameters::block(int index) {
    const auto & b = blocks_[index];
    return {values_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const MatrixXd> Parameters::block(int index) const {
    const auto & b = blocks_[index];
    return {values_.data() + b.offset, b.rows, b.cols};
}

int Parameters::find(const std::string & name) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        if (blocks_[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

Parameters Parameters::zeros_like() const {
    Parameters out = *this;
    out.values_.setZero();
    return out;
}

Parameters init_params(const ModelConfig & config, uint64_t seed) {
    Parameters params(config);
    Rng rng(seed);
    for (int i = 0; i < static_cast<int>(params.blocks().size()); ++i) {
        const auto & b = params.blocks()[i];
        auto block = params.block(i);
        const bool gain = b.name.size() >= 2 && b.name.compare(b.name.size() - 2, 2, ".g") == 0;
        if (gain) {
            block.setOnes();
        } else if (b.name.rfind("embed.", 0) == 0) {
            fill_gaussian(block, 1.0, rng);
        } else if (b.rows == 1) {
            fill_gaussian(block, 0.01, rng);
        } else {
            fill_gaussian(block, 1.0 / std::sqrt(static_cast<double>(b.rows)), rng);
        }
    }
    return params;
}

std::vector<StepInput> step_inputs(const InterleavedSequence & seq, int count) {
    if (count < 0 || count > seq.S + 1) {
        throw ValidationError("cannot take " + std::to_string(count) + " step inputs from a sequence of " +
                              std::to_string(seq.S + 1) + " rows");
    }
    std::vector<StepInput> out(count);
    for (int s = 0; s < count; ++s) {
        out[s].s = s;
        out[s].tokens.resize(seq.K);
        for (int k = 1; k <= seq.K; ++k) {
            out[s].tokens[k - 1] = seq.at(s, k);
        }
    }
    return out;
}

RowVectorXd sinusoidal_position(int s, int D) {
    RowVectorXd pe(D);
    for (int i = 0; i < D; i += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / D);
        pe(i) = std::sin(s * freq);
        if (i + 1 < D) {
            pe(i + 1) = std::cos(s * freq);
        }
    }
    return pe;
}

RowVectorXd embed_step(const Parameters & params, const StepInput & input) {
    const ModelConfig & cfg = params.config();
    if (static_cast<int>(input.tokens.size()) != cfg.K) {
        throw ValidationError("step input has " + std::to_string(input.tokens.size()) + " codebooks, model has " +
                              std::to_string(cfg.K));
    }
    if (input.s < 0 || input.s >= cfg.max_steps) {
        throw ValidationError("step index " + std::to_string(input.s) + " outside 0.." +
                              std::to_string(cfg.max_steps - 1));
    }
    RowVectorXd x = sinusoidal_position(input.s, cfg.D);
    for (int k = 0; k < cfg.K; ++k) {
        const int token = input.tokens[k];
        if (token < 0 || token > cfg.M) {
            throw ValidationError("token id " + std::to_string(token) + " outside 0.." + std::to_string(cfg.M));
        }
        x += params.block(params.embed[k]).row(token);
    }
    return x;
}

Logits forward(const Parameters & params, std::span<const StepInput> steps, const Condition & condition) {
    return run(params, steps, condition, params.config().mode, nullptr);
}

Logits forward(const Parameters & params, std::span<const StepInput> steps, const Condition & condition,
               ConditioningMode mode) {
    return run(params, steps, condition, mode, nullptr);
}

LossValue loss_masked(const Logits & logits, const InterleavedSequence & targets, const Pattern & pattern) {
    const PatternLayout layout(pattern);
    if (targets.S != layout.num_steps() || targets.K != pattern.K) {
        throw ValidationError("targets do not match the pattern shape");
    }
    if (logits.steps() > layout.num_steps() || static_cast<int>(logits.per_codebook.size()) != pattern.K) {
        throw ValidationError("logits do not match the pattern shape");
    }
    LossValue v = score(logits, targets, layout, 0.0, nullptr);
    if (v.positions == 0) {
        throw ValidationError("no scored positions: every target slot is masked");
    }
    v.loss /= v.positions;
    v.accuracy /= v.positions;
    return v;
}

Batch make_batch(const Pattern & pattern, std::span<const TokenGrid> grids, std::span<const Condition> conditions) {
    if (!conditions.empty() && conditions.size() != grids.size()) {
        throw ValidationError("one condition per grid is required");
    }
    Batch batch{pattern, {}};
    for (std::size_t i = 0; i < grids.size(); ++i) {
        batch.examples.push_back({apply_pattern(pattern, grids[i]), conditions.empty() ? Condition{} : conditions[i]});
    }
    return batch;
}

GradientResult grad(const Parameters & params, const Batch & batch, bool drop_condition) {
    if (batch.examples.empty()) {
        throw ValidationError("empty batch");
    }
    const PatternLayout layout(batch.pattern);
    const int S = layout.num_steps();
    const int per_example = batch.pattern.T * batch.pattern.K;
    const double scale = 1.0 / (static_cast<double>(per_example) * batch.examples.size());

    GradientResult result{params.zeros_like(), {}};
    double correct = 0.0;
    for (const auto & ex : batch.examples) {
        if (ex.sequence.S != S || ex.sequence.K != batch.pattern.K) {
            throw ValidationError("batch sequence does not match the batch pattern");
        }
        const auto inputs = step_inputs(ex.sequence, S);
        ForwardCache cache;
        const Logits logits = run(params, inputs, drop_condition ? null_condition() : ex.condition,
                                  params.config().mode, &cache);
        std::vector<MatrixXd> dlogits;
        const LossValue v = score(logits, ex.sequence, layout, scale, &dlogits);
        result.loss.loss += v.loss;
        result.loss.positions += v.positions;
        correct += v.accuracy;
        backward(params, cache, dlogits, result.gradient);
    }
    result.loss.loss /= result.loss.positions;
    result.loss.accuracy = correct / result.loss.positions;
    if (!std::isfinite(result.loss.loss)) {
        throw InvariantError("non-finite loss");
    }
    return result;
}

LossValue batch_loss(const Parameters & params, const Batch & batch, bool drop_condition) {
    if (batch.examples.empty()) {
        throw ValidationError("empty batch");
    }
    const PatternLayout layout(batch.pattern);
    LossValue total;
    double correct = 0.0;
    for (const auto & ex : batch.examples) {
        const auto inputs = step_inputs(ex.sequence, layout.num_steps());
        const Logits logits = run(params, inputs, drop_condition ? null_condition() : ex.condition,
                                  params.config().mode, nullptr);
        const LossValue v = score(logits, ex.sequence, layout, 0.0, nullptr);
        total.loss += v.loss;
        total.positions += v.positions;
        correct += v.accuracy;
    }
    total.loss /= total.positions;
    total.accuracy = correct / total.positions;
    return total;
}

double relu_margin(const Parameters & params, const Batch & batch) {
    const PatternLayout layout(batch.pattern);
    double margin = INFINITY;
    for (const auto & ex : batch.examples) {
        ForwardCache cache;
        run(params, step_inputs(ex.sequence, layout.num_steps()), ex.condition, params.config().mode, &cache);
        for (const auto & lc : cache.layers) {
            margin = std::min(margin, lc.pre_relu.cwiseAbs().minCoeff());
        }
    }
    return margin;
}

} // namespace interleave
