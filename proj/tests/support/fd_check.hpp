#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "drumscribe/autograd.hpp"
#include "drumscribe/tensor.hpp"

/// Central finite differences against the tape's gradients, all in double
/// precision. `loss_fn` must rebuild the scalar loss from the current values
/// of the `wrt` tensors on every call. Returns the worst relative error over
/// every entry of every tensor; differences below `atol` count as zero so
/// vanishing gradients do not divide by dust.
inline double fd_max_rel_error(const std::function<drumscribe::Tensor<double>()>& loss_fn,
                               const std::vector<drumscribe::Tensor<double>>& wrt,
                               double h = 1e-5, double atol = 1e-8) {
    using drumscribe::Tape;
    using drumscribe::Tensor;

    for (const auto& t : wrt) t.grad().assign(t.grad().size(), 0.0);

    Tape<double> tape;
    Tensor<double> loss;
    {
        Tape<double>::Scope scope(tape);
        loss = loss_fn();
    }
    tape.backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(wrt.size());
    for (const auto& t : wrt) analytic.push_back(t.grad());

    const auto eval = [&loss_fn]() -> double { return loss_fn()(0); };

    double worst = 0.0;
    for (size_t ti = 0; ti < wrt.size(); ++ti) {
        Tensor<double> t = wrt[ti];
        for (int64_t i = 0; i < t.size(); ++i) {
            const double orig = t(i);
            t(i) = orig + h;
            const double up = eval();
            t(i) = orig - h;
            const double down = eval();
            t(i) = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[ti][static_cast<size_t>(i)];
            const double abs_err = std::abs(a - numeric);
            if (abs_err <= atol) continue;
            worst = std::max(worst, abs_err / std::max(std::abs(a), std::abs(numeric)));
        }
    }
    return worst;
}
