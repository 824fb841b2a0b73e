#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "drumscribe/ops.hpp"
#include "drumscribe/rng.hpp"
#include "drumscribe/tensor.hpp"

namespace drumscribe {

/// Small convolutional baseline: per block a 3x3 stride-1 same-padded
/// convolution, ReLU, and 2x2 max pooling; then global average pooling and a
/// linear head.
struct CnnConfig {
    int input_size = 128;
    std::vector<int> channels = {1, 8, 16, 32};
    int num_classes = 7;

    int num_blocks() const { return static_cast<int>(channels.size()) - 1; }

    void validate() const {
        if (channels.size() < 2) throw ConfigError("cnn: need at least one conv block");
        for (int c : channels)
            if (c < 1) throw ConfigError("cnn: channel counts must be positive");
        int size = input_size;
        for (int b = 0; b < num_blocks(); ++b) {
            if (size < 2 || size % 2 != 0)
                throw ConfigError("cnn: input_size must halve evenly through every pool");
            size /= 2;
        }
        if (num_classes < 1) throw ConfigError("cnn: num_classes must be positive");
    }
};

template <typename S>
struct CnnModel {
    CnnConfig cfg;
    struct Conv {
        Tensor<S> w;  // [out_ch, in_ch, 3, 3]
        Tensor<S> b;  // [out_ch]
    };
    std::vector<Conv> convs;
    Tensor<S> head_w, head_b;

    ParamList<S> parameters() {
        ParamList<S> out;
        for (size_t i = 0; i < convs.size(); ++i) {
            const std::string p = "conv" + std::to_string(i) + ".";
            out.push_back({p + "w", convs[i].w});
            out.push_back({p + "b", convs[i].b});
        }
        out.push_back({"head.w", head_w});
        out.push_back({"head.b", head_b});
        return out;
    }
};

template <typename S>
Tensor<S> cnn_forward(const Tensor<S>& input, CnnModel<S>& model) {
    const CnnConfig& cfg = model.cfg;
    if (input.rank() != 2 || input.dim(0) != cfg.input_size || input.dim(1) != cfg.input_size)
        throw ShapeError("cnn_forward: want [" + std::to_string(cfg.input_size) + "," +
                         std::to_string(cfg.input_size) + "], got " + shape_str(input.shape()));
    Tensor<S> x = reshape(input, {1, input.dim(0), input.dim(1)});
    for (auto& conv : model.convs) {
        x = conv2d(x, conv.w, conv.b);
        x = relu(x);
        x = maxpool2d(x);
    }
    x = mean(x, 2);  // [c,h,w] -> [c,h]
    x = mean(x, 1);  // -> [c]
    x = reshape(x, {1, x.dim(0)});
    const Tensor<S> logits = add(matmul(x, model.head_w), model.head_b);
    return reshape(logits, {static_cast<int64_t>(cfg.num_classes)});
}

/// He-style initialization for the ReLU convolutions (normal with
/// sigma = sqrt(2/fan_in)); zero biases.
template <typename S>
CnnModel<S> init_cnn(const CnnConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    auto he = [&](Shape shape, int64_t fan_in) {
        Tensor<S> t = Tensor<S>::zeros(std::move(shape));
        const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (int64_t i = 0; i < t.size(); ++i) t(i) = static_cast<S>(rng.normal(0.0, std));
        t.set_requires_grad(true);
        return t;
    };
    auto zeros = [&](Shape shape) {
        Tensor<S> t = Tensor<S>::zeros(std::move(shape));
        t.set_requires_grad(true);
        return t;
    };

    CnnModel<S> m;
    m.cfg = cfg;
    for (int b = 0; b < cfg.num_blocks(); ++b) {
        const int64_t in_ch = cfg.channels[static_cast<size_t>(b)];
        const int64_t out_ch = cfg.channels[static_cast<size_t>(b) + 1];
        typename CnnModel<S>::Conv conv;
        conv.w = he({out_ch, in_ch, 3, 3}, in_ch * 9);
        conv.b = zeros({out_ch});
        m.convs.push_back(conv);
    }
    const int64_t feat = cfg.channels.back();
    m.head_w = he({feat, cfg.num_classes}, feat);
    m.head_b = zeros({cfg.num_classes});
    return m;
}

}  // namespace drumscribe
