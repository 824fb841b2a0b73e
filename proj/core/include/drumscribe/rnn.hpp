#pragma once

#include <cmath>
#include <string>

#include "drumscribe/ops.hpp"
#include "drumscribe/rng.hpp"
#include "drumscribe/tensor.hpp"

namespace drumscribe {

/// Single-layer GRU baseline. Spectrogram columns are the time steps (one
/// 128-band frame per step, left to right); the final hidden state feeds a
/// linear head.
struct RnnConfig {
    int input_dim = 128;
    int hidden_dim = 64;
    int num_classes = 7;

    void validate() const {
        if (input_dim < 1 || hidden_dim < 1 || num_classes < 1)
            throw ConfigError("rnn: dimensions must be positive");
    }
};

template <typename S>
struct RnnModel {
    RnnConfig cfg;
    // Gate weights act on row vectors: x [1,in] * w [in,h], h [1,h] * u [h,h].
    Tensor<S> wz, wr, wn;
    Tensor<S> uz, ur, un;
    Tensor<S> bz, br, bn;
    Tensor<S> head_w, head_b;

    ParamList<S> parameters() {
        return {
            {"gru.wz", wz}, {"gru.wr", wr}, {"gru.wn", wn},
            {"gru.uz", uz}, {"gru.ur", ur}, {"gru.un", un},
            {"gru.bz", bz}, {"gru.br", br}, {"gru.bn", bn},
            {"head.w", head_w}, {"head.b", head_b},
        };
    }
};

/// One GRU step:
///   z = sigmoid(x wz + h uz + bz)        update gate
///   r = sigmoid(x wr + h ur + br)        reset gate
///   n = tanh(x wn + bn + r * (h un))     candidate
///   h' = (1 - z) * n + z * h
template <typename S>
Tensor<S> gru_step(const Tensor<S>& x, const Tensor<S>& h, RnnModel<S>& m) {
    const Tensor<S> z = sigmoid(add(add(matmul(x, m.wz), matmul(h, m.uz)), m.bz));
    const Tensor<S> r = sigmoid(add(add(matmul(x, m.wr), matmul(h, m.ur)), m.br));
    const Tensor<S> n = tanh(add(add(matmul(x, m.wn), m.bn), mul(r, matmul(h, m.un))));
    const Tensor<S> one_minus_z = add_scalar(scale(z, S(-1)), S(1));
    return add(mul(one_minus_z, n), mul(z, h));
}

/// Consumes every column of the input as a time step and reads the last
/// hidden state out through the linear head.
template <typename S>
Tensor<S> rnn_forward(const Tensor<S>& input, RnnModel<S>& model) {
    const RnnConfig& cfg = model.cfg;
    if (input.rank() != 2 || input.dim(0) != cfg.input_dim)
        throw ShapeError("rnn_forward: want [" + std::to_string(cfg.input_dim) +
                         ", steps], got " + shape_str(input.shape()));
    const int64_t steps = input.dim(1);
    const Tensor<S> frames = transpose(input);  // row t = frame at time t
    Tensor<S> h = Tensor<S>::zeros({1, cfg.hidden_dim});
    for (int64_t t = 0; t < steps; ++t) {
        const Tensor<S> x = slice_rows(frames, t, 1);
        h = gru_step(x, h, model);
    }
    const Tensor<S> logits = add(matmul(h, model.head_w), model.head_b);
    return reshape(logits, {static_cast<int64_t>(cfg.num_classes)});
}

/// Uniform initialization in [-1/sqrt(hidden), 1/sqrt(hidden)] for all gate
/// weights (the usual recurrent-net default); zero biases.
template <typename S>
RnnModel<S> init_rnn(const RnnConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
    auto uniform = [&](Shape shape) {
        Tensor<S> t = Tensor<S>::zeros(std::move(shape));
        for (int64_t i = 0; i < t.size(); ++i)
            t(i) = static_cast<S>(rng.uniform(-bound, bound));
        t.set_requires_grad(true);
        return t;
    };
    auto zeros = [&](Shape shape) {
        Tensor<S> t = Tensor<S>::zeros(std::move(shape));
        t.set_requires_grad(true);
        return t;
    };

    const int64_t in = cfg.input_dim, hid = cfg.hidden_dim;
    RnnModel<S> m;
    m.cfg = cfg;
    m.wz = uniform({in, hid});
    m.wr = uniform({in, hid});
    m.wn = uniform({in, hid});
    m.uz = uniform({hid, hid});
    m.ur = uniform({hid, hid});
    m.un = uniform({hid, hid});
    m.bz = zeros({hid});
    m.br = zeros({hid});
    m.bn = zeros({hid});
    m.head_w = uniform({hid, cfg.num_classes});
    m.head_b = zeros({cfg.num_classes});
    return m;
}

}  // namespace drumscribe
