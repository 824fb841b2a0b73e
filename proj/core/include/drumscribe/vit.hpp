#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "drumscribe/ops.hpp"
#include "drumscribe/rng.hpp"
#include "drumscribe/tensor.hpp"

namespace drumscribe {

struct VitConfig {
    int image_size = 128;
    int patch_size = 16;
    int embed_dim = 64;
    int depth = 4;
    int num_heads = 4;
    int mlp_ratio = 4;
    int num_classes = 7;
    double dropout = 0.0;

    int patches_per_side() const { return image_size / patch_size; }
    int num_patches() const { return patches_per_side() * patches_per_side(); }
    int num_tokens() const { return num_patches() + 1; }
    int patch_dim() const { return patch_size * patch_size; }
    int head_dim() const { return embed_dim / num_heads; }
    int mlp_dim() const { return mlp_ratio * embed_dim; }

    void validate() const {
        if (image_size < 1 || patch_size < 1 || image_size % patch_size != 0)
            throw ConfigError("vit: image_size must be a positive multiple of patch_size");
        if (embed_dim < 1 || num_heads < 1 || embed_dim % num_heads != 0)
            throw ConfigError("vit: embed_dim must be a positive multiple of num_heads");
        if (depth < 1 || mlp_ratio < 1 || num_classes < 1)
            throw ConfigError("vit: depth, mlp_ratio, num_classes must be positive");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ConfigError("vit: dropout must be in [0,1)");
    }
};

/// Attention projections of one encoder block. Q/K/V carry no bias; the
/// output projection does.
template <typename S>
struct AttentionParams {
    Tensor<S> wq, wk, wv;
    Tensor<S> wo, wo_b;
};

template <typename S>
struct VitBlock {
    Tensor<S> ln1_g, ln1_b;
    AttentionParams<S> attn;
    Tensor<S> ln2_g, ln2_b;
    Tensor<S> mlp_w1, mlp_b1;
    Tensor<S> mlp_w2, mlp_b2;
};

template <typename S>
struct VitModel {
    VitConfig cfg;
    Tensor<S> patch_w, patch_b;
    Tensor<S> class_token;  // [1, embed_dim]
    Tensor<S> pos_emb;      // [tokens, embed_dim]
    std::vector<VitBlock<S>> blocks;
    Tensor<S> final_g, final_b;
    Tensor<S> head_w, head_b;

    ParamList<S> parameters() {
        ParamList<S> out;
        out.push_back({"patch.w", patch_w});
        out.push_back({"patch.b", patch_b});
        out.push_back({"class_token", class_token});
        out.push_back({"pos_emb", pos_emb});
        for (size_t i = 0; i < blocks.size(); ++i) {
            const std::string p = "block" + std::to_string(i) + ".";
            auto& b = blocks[i];
            out.push_back({p + "ln1.g", b.ln1_g});
            out.push_back({p + "ln1.b", b.ln1_b});
            out.push_back({p + "attn.wq", b.attn.wq});
            out.push_back({p + "attn.wk", b.attn.wk});
            out.push_back({p + "attn.wv", b.attn.wv});
            out.push_back({p + "attn.wo", b.attn.wo});
            out.push_back({p + "attn.wo_b", b.attn.wo_b});
            out.push_back({p + "ln2.g", b.ln2_g});
            out.push_back({p + "ln2.b", b.ln2_b});
            out.push_back({p + "mlp.w1", b.mlp_w1});
            out.push_back({p + "mlp.b1", b.mlp_b1});
            out.push_back({p + "mlp.w2", b.mlp_w2});
            out.push_back({p + "mlp.b2", b.mlp_b2});
        }
        out.push_back({"final.g", final_g});
        out.push_back({"final.b", final_b});
        out.push_back({"head.w", head_w});
        out.push_back({"head.b", head_b});
        return out;
    }
};

/// Closed-form parameter count for a config; cross-checked against the
/// actual model's tensors in the test suite.
inline int64_t vit_param_count(const VitConfig& cfg) {
    const int64_t d = cfg.embed_dim;
    const int64_t p2 = cfg.patch_dim();
    const int64_t t = cfg.num_tokens();
    const int64_t h = cfg.mlp_dim();
    const int64_t c = cfg.num_classes;
    const int64_t per_block = 2 * d            // ln1
                              + 3 * d * d      // q/k/v (no bias)
                              + d * d + d      // output projection
                              + 2 * d          // ln2
                              + d * h + h      // mlp in
                              + h * d + d;     // mlp out
    return p2 * d + d       // patch projection
           + d               // class token
           + t * d           // positional embedding
           + cfg.depth * per_block
           + 2 * d           // final norm
           + d * c + c;      // head
}

/// Splits a square input into non-overlapping patches, row-major in patch
/// order, each patch flattened row-major: [128,128] -> [64,256] by default.
template <typename S>
Tensor<S> patchify(const Tensor<S>& input, const VitConfig& cfg) {
    cfg.validate();
    if (input.rank() != 2 || input.dim(0) != cfg.image_size || input.dim(1) != cfg.image_size)
        throw ShapeError("patchify: want [" + std::to_string(cfg.image_size) + "," +
                         std::to_string(cfg.image_size) + "], got " + shape_str(input.shape()));
    const int64_t ps = cfg.patch_size;
    const int64_t side = cfg.patches_per_side();
    Tensor<S> out = Tensor<S>::zeros({side * side, ps * ps});
    for (int64_t py = 0; py < side; ++py)
        for (int64_t px = 0; px < side; ++px)
            for (int64_t y = 0; y < ps; ++y)
                for (int64_t x = 0; x < ps; ++x)
                    out(py * side + px, y * ps + x) = input(py * ps + y, px * ps + x);
    detail::record("patchify", out, input.requires_grad(), [=]() {
        const auto& g = out.grad();
        auto& gi = input.grad();
        const int64_t img = cfg.image_size;
        for (int64_t py = 0; py < side; ++py)
            for (int64_t px = 0; px < side; ++px)
                for (int64_t y = 0; y < ps; ++y)
                    for (int64_t x = 0; x < ps; ++x)
                        gi[static_cast<size_t>((py * ps + y) * img + px * ps + x)] +=
                            g[static_cast<size_t>((py * side + px) * ps * ps + y * ps + x)];
    });
    return out;
}

/// Inverse of patchify (for round-trip checks and visualization).
template <typename S>
Tensor<S> unpatchify(const Tensor<S>& patches, const VitConfig& cfg) {
    const int64_t ps = cfg.patch_size;
    const int64_t side = cfg.patches_per_side();
    if (patches.rank() != 2 || patches.dim(0) != side * side || patches.dim(1) != ps * ps)
        throw ShapeError("unpatchify: got " + shape_str(patches.shape()));
    Tensor<S> out = Tensor<S>::zeros({cfg.image_size, cfg.image_size});
    for (int64_t py = 0; py < side; ++py)
        for (int64_t px = 0; px < side; ++px)
            for (int64_t y = 0; y < ps; ++y)
                for (int64_t x = 0; x < ps; ++x)
                    out(py * ps + y, px * ps + x) = patches(py * side + px, y * ps + x);
    return out;
}

/// Per-head attention probability matrices captured during a forward pass,
/// in (block-major, head-minor) order. Each entry is [tokens, tokens] with
/// rows summing to one.
template <typename S>
using AttentionTrace = std::vector<Tensor<S>>;

/// Scaled-dot-product multi-head self-attention:
/// per head h, softmax(Q_h K_h^T / sqrt(head_dim)) V_h; heads concatenated
/// and projected by wo. When `trace` is given, the softmax outputs are
/// appended to it.
template <typename S>
Tensor<S> multi_head_attention(const Tensor<S>& x, const AttentionParams<S>& p, int num_heads,
                               AttentionTrace<S>* trace = nullptr) {
    const int64_t d = x.dim(1);
    if (num_heads < 1 || d % num_heads != 0)
        throw ShapeError("attention: width " + std::to_string(d) + " not divisible into " +
                         std::to_string(num_heads) + " heads");
    const int64_t hd = d / num_heads;
    const Tensor<S> q = matmul(x, p.wq);
    const Tensor<S> k = matmul(x, p.wk);
    const Tensor<S> v = matmul(x, p.wv);
    const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(hd));
    std::vector<Tensor<S>> heads;
    heads.reserve(static_cast<size_t>(num_heads));
    for (int h = 0; h < num_heads; ++h) {
        const Tensor<S> qh = slice_cols(q, h * hd, hd);
        const Tensor<S> kh = slice_cols(k, h * hd, hd);
        const Tensor<S> vh = slice_cols(v, h * hd, hd);
        const Tensor<S> scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
        const Tensor<S> probs = softmax(scores, -1);
        if (trace) trace->push_back(probs);
        heads.push_back(matmul(probs, vh));
    }
    return add(matmul(concat_cols(heads), p.wo), p.wo_b);
}

namespace detail {

/// Draws a fresh 0/1 dropout mask and applies it (inverted scaling).
template <typename S>
Tensor<S> maybe_dropout(const Tensor<S>& x, double rate, Rng* rng) {
    if (rate <= 0.0 || rng == nullptr) return x;
    const S keep = S(1.0 - rate);
    Tensor<S> mask = Tensor<S>::zeros(x.shape());
    for (int64_t i = 0; i < mask.size(); ++i)
        mask(i) = rng->uniform() < 1.0 - rate ? S(1) : S(0);
    return dropout(x, mask, keep);
}

}  // namespace detail

/// Full forward pass: patch tokens plus class token, learned positional
/// embeddings, `depth` pre-norm encoder blocks, readout of the class token
/// through the final norm and linear head. Returns logits of shape
/// [num_classes]. `dropout_rng` enables dropout (training only).
template <typename S>
Tensor<S> vit_forward(const Tensor<S>& input, VitModel<S>& model,
                      AttentionTrace<S>* trace = nullptr, Rng* dropout_rng = nullptr) {
    const VitConfig& cfg = model.cfg;
    const Tensor<S> patches = patchify(input, cfg);
    const Tensor<S> proj = add(matmul(patches, model.patch_w), model.patch_b);
    Tensor<S> x = concat_rows<S>({model.class_token, proj});
    x = add(x, model.pos_emb);
    x = detail::maybe_dropout(x, cfg.dropout, dropout_rng);
    for (auto& block : model.blocks) {
        Tensor<S> h = layer_norm(x, block.ln1_g, block.ln1_b);
        h = multi_head_attention(h, block.attn, cfg.num_heads, trace);
        h = detail::maybe_dropout(h, cfg.dropout, dropout_rng);
        x = add(x, h);
        Tensor<S> m = layer_norm(x, block.ln2_g, block.ln2_b);
        m = add(matmul(m, block.mlp_w1), block.mlp_b1);
        m = gelu(m);
        m = add(matmul(m, block.mlp_w2), block.mlp_b2);
        m = detail::maybe_dropout(m, cfg.dropout, dropout_rng);
        x = add(x, m);
    }
    x = layer_norm(x, model.final_g, model.final_b);
    const Tensor<S> cls = slice_rows(x, 0, 1);
    const Tensor<S> logits = add(matmul(cls, model.head_w), model.head_b);
    return reshape(logits, {static_cast<int64_t>(cfg.num_classes)});
}

/// Deterministic initialization: weight matrices from a truncated normal
/// (sigma 0.02, cut at two sigma), positional embeddings plain normal
/// (sigma 0.02), biases and the class token zero, layer norms at identity.
template <typename S>
VitModel<S> init_vit(const VitConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    constexpr double kStd = 0.02;
    auto trunc = [&](Shape shape) {
        Tensor<S> t = Tensor<S>::zeros(std::move(shape));
        for (int64_t i = 0; i < t.size(); ++i)
            t(i) = static_cast<S>(rng.truncated_normal(kStd));
        t.set_requires_grad(true);
        return t;
    };
    auto gauss = [&](Shape shape) {
        Tensor<S> t = Tensor<S>::zeros(std::move(shape));
        for (int64_t i = 0; i < t.size(); ++i) t(i) = static_cast<S>(rng.normal(0.0, kStd));
        t.set_requires_grad(true);
        return t;
    };
    auto fill = [&](Shape shape, S value) {
        Tensor<S> t = Tensor<S>::full(std::move(shape), value);
        t.set_requires_grad(true);
        return t;
    };

    const int64_t d = cfg.embed_dim;
    VitModel<S> m;
    m.cfg = cfg;
    m.patch_w = trunc({cfg.patch_dim(), d});
    m.patch_b = fill({d}, S(0));
    m.class_token = fill({1, d}, S(0));
    m.pos_emb = gauss({cfg.num_tokens(), d});
    m.blocks.resize(static_cast<size_t>(cfg.depth));
    for (auto& b : m.blocks) {
        b.ln1_g = fill({d}, S(1));
        b.ln1_b = fill({d}, S(0));
        b.attn.wq = trunc({d, d});
        b.attn.wk = trunc({d, d});
        b.attn.wv = trunc({d, d});
        b.attn.wo = trunc({d, d});
        b.attn.wo_b = fill({d}, S(0));
        b.ln2_g = fill({d}, S(1));
        b.ln2_b = fill({d}, S(0));
        b.mlp_w1 = trunc({d, cfg.mlp_dim()});
        b.mlp_b1 = fill({cfg.mlp_dim()}, S(0));
        b.mlp_w2 = trunc({cfg.mlp_dim(), d});
        b.mlp_b2 = fill({d}, S(0));
    }
    m.final_g = fill({d}, S(1));
    m.final_b = fill({d}, S(0));
    m.head_w = trunc({d, cfg.num_classes});
    m.head_b = fill({cfg.num_classes}, S(0));
    return m;
}

}  // namespace drumscribe
