#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "drumscribe/autograd.hpp"
#include "drumscribe/errors.hpp"
#include "drumscribe/tensor.hpp"

namespace drumscribe {

namespace detail {

// Raw matmul kernels on flat row-major buffers. The ikj loop order keeps the
// innermost loop a contiguous fused multiply-add over the output row, which
// the compiler vectorizes. All three accumulate into c, so callers pass a
// zeroed buffer for a fresh product or a gradient buffer to accumulate.
template <typename S>
void matmul_nn_acc(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        S* crow = c + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const S av = a[i * k + p];
            const S* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c[m,k] += a[m,n] · b[k,n]ᵀ
template <typename S>
void matmul_nt_acc(const S* a, const S* b, S* c, int64_t m, int64_t n, int64_t k) {
    for (int64_t i = 0; i < m; ++i) {
        const S* arow = a + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const S* brow = b + p * n;
            S s = 0;
            for (int64_t j = 0; j < n; ++j) s += arow[j] * brow[j];
            c[i * k + p] += s;
        }
    }
}

// c[k,n] += a[m,k]ᵀ · b[m,n]
template <typename S>
void matmul_tn_acc(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const S* brow = b + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const S av = a[i * k + p];
            S* crow = c + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename S>
bool any_requires_grad(std::initializer_list<Tensor<S>> inputs) {
    for (const auto& t : inputs)
        if (t.defined() && t.requires_grad()) return true;
    return false;
}

// Marks the output differentiable and, when a tape is active, records the
// backward closure. No-op when no input carries requires_grad.
template <typename S, typename F>
void record(const char* name, Tensor<S>& out, bool needs_grad, F&& backward) {
    if (!needs_grad) return;
    out.set_requires_grad(true);
    if (auto* tape = Tape<S>::active()) tape->record(name, std::forward<F>(backward));
}

// Resolves a possibly negative axis and splits the shape into
// (outer, extent-at-axis, inner) for strided reductions.
inline void axis_split(const Shape& shape, int axis, int64_t& outer, int64_t& n, int64_t& inner,
                       int& resolved) {
    const int rank = static_cast<int>(shape.size());
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank)
        throw ShapeError("axis out of range for shape " + shape_str(shape));
    outer = 1;
    inner = 1;
    for (int i = 0; i < axis; ++i) outer *= shape[static_cast<size_t>(i)];
    n = shape[static_cast<size_t>(axis)];
    for (int i = axis + 1; i < rank; ++i) inner *= shape[static_cast<size_t>(i)];
    resolved = axis;
}

// For broadcasting: b must have the same shape as a, or a shape equal to the
// trailing extents of a. Returns the broadcast repeat count (1 = same shape).
template <typename S>
int64_t broadcast_outer(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    if (bs.size() > as.size())
        throw ShapeError(std::string(op) + ": shape " + shape_str(bs) +
                         " does not broadcast against " + shape_str(as));
    const size_t off = as.size() - bs.size();
    for (size_t i = 0; i < bs.size(); ++i)
        if (as[off + i] != bs[i])
            throw ShapeError(std::string(op) + ": shape " + shape_str(bs) +
                             " does not broadcast against " + shape_str(as));
    return a.size() / b.size();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

/// a + b. b may have the same shape as a or a trailing-suffix shape, in which
/// case it broadcasts over the leading extents (used for row-wise biases).
template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    const int64_t outer = detail::broadcast_outer(a, b, "add");
    const int64_t inner = b.size();
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    const S* pa = a.data();
    const S* pb = b.data();
    S* po = out.data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i) po[o * inner + i] = pa[o * inner + i] + pb[i];
    detail::record("add", out, detail::any_requires_grad<S>({a, b}), [=]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (int64_t i = 0; i < a.size(); ++i) ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < inner; ++i)
                    gb[static_cast<size_t>(i)] += g[static_cast<size_t>(o * inner + i)];
        }
    });
    return out;
}

/// a − b, same shapes.
template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape() != b.shape())
        throw ShapeError("sub: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out(i) = a(i) - b(i);
    detail::record("sub", out, detail::any_requires_grad<S>({a, b}), [=]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
    return out;
}

/// Elementwise a ⊙ b with the same suffix-broadcast rule as add.
template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    const int64_t outer = detail::broadcast_outer(a, b, "mul");
    const int64_t inner = b.size();
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    const S* pa = a.data();
    const S* pb = b.data();
    S* po = out.data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i) po[o * inner + i] = pa[o * inner + i] * pb[i];
    detail::record("mul", out, detail::any_requires_grad<S>({a, b}), [=]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            const S* vb = b.data();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < inner; ++i)
                    ga[static_cast<size_t>(o * inner + i)] += g[static_cast<size_t>(o * inner + i)] * vb[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            const S* va = a.data();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < inner; ++i)
                    gb[static_cast<size_t>(i)] += g[static_cast<size_t>(o * inner + i)] * va[o * inner + i];
        }
    });
    return out;
}

/// c · x for a compile-time-known scalar factor.
template <typename S>
Tensor<S> scale(const Tensor<S>& a, S factor) {
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out(i) = a(i) * factor;
    detail::record("scale", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    });
    return out;
}

/// x + c elementwise.
template <typename S>
Tensor<S> add_scalar(const Tensor<S>& a, S value) {
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out(i) = a(i) + value;
    detail::record("add_scalar", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Linear algebra and shape
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<S> out = Tensor<S>::zeros({m, n});
    detail::matmul_nn_acc(a.data(), b.data(), out.data(), m, k, n);
    detail::record("matmul", out, detail::any_requires_grad<S>({a, b}), [=]() mutable {
        const S* g = out.grad().data();
        if (a.requires_grad()) detail::matmul_nt_acc(g, b.data(), a.grad().data(), m, n, k);
        if (b.requires_grad()) detail::matmul_tn_acc(a.data(), g, b.grad().data(), m, k, n);
    });
    return out;
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
    if (a.rank() != 2) throw ShapeError("transpose expects rank 2, got " + shape_str(a.shape()));
    const int64_t m = a.dim(0), n = a.dim(1);
    Tensor<S> out = Tensor<S>::zeros({n, m});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out(j, i) = a(i, j);
    detail::record("transpose", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j)
                ga[static_cast<size_t>(i * n + j)] += g[static_cast<size_t>(j * m + i)];
    });
    return out;
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& a, Shape new_shape) {
    if (shape_numel(new_shape) != a.size())
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                         shape_str(new_shape));
    Tensor<S> out = Tensor<S>::from(std::move(new_shape), a.values());
    detail::record("reshape", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out(i) = a(i) > S(0) ? a(i) : S(0);
    detail::record("relu", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (int64_t i = 0; i < a.size(); ++i)
            if (a(i) > S(0)) ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)];
    });
    return out;
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out(i) = S(1) / (S(1) + std::exp(-a(i)));
    detail::record("sigmoid", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (int64_t i = 0; i < out.size(); ++i) {
            const S y = out(i);
            ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * y * (S(1) - y);
        }
    });
    return out;
}

template <typename S>
Tensor<S> tanh(const Tensor<S>& a) {
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out(i) = std::tanh(a(i));
    detail::record("tanh", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (int64_t i = 0; i < out.size(); ++i) {
            const S y = out(i);
            ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * (S(1) - y * y);
        }
    });
    return out;
}

/// GELU, tanh approximation: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³))).
template <typename S>
Tensor<S> gelu(const Tensor<S>& a) {
    constexpr S kSqrt2OverPi = S(0.7978845608028654);
    constexpr S kCubic = S(0.044715);
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) {
        const S x = a(i);
        out(i) = S(0.5) * x * (S(1) + std::tanh(kSqrt2OverPi * (x + kCubic * x * x * x)));
    }
    detail::record("gelu", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (int64_t i = 0; i < a.size(); ++i) {
            const S x = a(i);
            const S u = kSqrt2OverPi * (x + kCubic * x * x * x);
            const S t = std::tanh(u);
            const S du = kSqrt2OverPi * (S(1) + S(3) * kCubic * x * x);
            const S dy = S(0.5) * (S(1) + t) + S(0.5) * x * (S(1) - t * t) * du;
            ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * dy;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Normalization, softmax, loss
// ---------------------------------------------------------------------------

/// Softmax along `axis` (negative counts from the end), stabilized by max
/// subtraction so arbitrarily large finite logits cannot overflow.
template <typename S>
Tensor<S> softmax(const Tensor<S>& a, int axis = -1) {
    int64_t outer, n, inner;
    int ax;
    detail::axis_split(a.shape(), axis, outer, n, inner, ax);
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    const S* pa = a.data();
    S* po = out.data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t r = 0; r < inner; ++r) {
            const int64_t base = o * n * inner + r;
            S mx = pa[base];
            for (int64_t i = 1; i < n; ++i) mx = std::max(mx, pa[base + i * inner]);
            S sum = 0;
            for (int64_t i = 0; i < n; ++i) {
                const S e = std::exp(pa[base + i * inner] - mx);
                po[base + i * inner] = e;
                sum += e;
            }
            const S norm = S(1) / sum;
            for (int64_t i = 0; i < n; ++i) po[base + i * inner] *= norm;
        }
    detail::record("softmax", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        const S* y = out.data();
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t r = 0; r < inner; ++r) {
                const int64_t base = o * n * inner + r;
                S dot = 0;
                for (int64_t i = 0; i < n; ++i)
                    dot += g[static_cast<size_t>(base + i * inner)] * y[base + i * inner];
                for (int64_t i = 0; i < n; ++i) {
                    const size_t idx = static_cast<size_t>(base + i * inner);
                    ga[idx] += y[idx] * (g[idx] - dot);
                }
            }
    });
    return out;
}

/// Layer normalization over the last axis with learned gamma/beta. Variance
/// is the biased (population) estimate.
template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     S eps = S(1e-5)) {
    const int64_t d = x.dim(x.rank() - 1);
    if (gamma.size() != d || beta.size() != d)
        throw ShapeError("layer_norm: gamma/beta must have " + std::to_string(d) + " elements");
    const int64_t rows = x.size() / d;
    Tensor<S> out = Tensor<S>::zeros(x.shape());
    // x̂ and 1/σ are saved for the backward pass.
    auto xhat = std::make_shared<std::vector<S>>(static_cast<size_t>(x.size()));
    auto inv_std = std::make_shared<std::vector<S>>(static_cast<size_t>(rows));
    const S* px = x.data();
    S* po = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        const S* row = px + r * d;
        S mean = 0;
        for (int64_t i = 0; i < d; ++i) mean += row[i];
        mean /= S(d);
        S var = 0;
        for (int64_t i = 0; i < d; ++i) {
            const S c = row[i] - mean;
            var += c * c;
        }
        var /= S(d);
        const S istd = S(1) / std::sqrt(var + eps);
        (*inv_std)[static_cast<size_t>(r)] = istd;
        for (int64_t i = 0; i < d; ++i) {
            const S xh = (row[i] - mean) * istd;
            (*xhat)[static_cast<size_t>(r * d + i)] = xh;
            po[r * d + i] = gamma(i) * xh + beta(i);
        }
    }
    detail::record("layer_norm", out, detail::any_requires_grad<S>({x, gamma, beta}),
                   [=]() mutable {
                       const auto& g = out.grad();
                       for (int64_t r = 0; r < rows; ++r) {
                           const S* gh = g.data() + r * d;
                           const S* xh = xhat->data() + r * d;
                           if (gamma.requires_grad()) {
                               auto& gg = gamma.grad();
                               for (int64_t i = 0; i < d; ++i)
                                   gg[static_cast<size_t>(i)] += gh[i] * xh[i];
                           }
                           if (beta.requires_grad()) {
                               auto& gb = beta.grad();
                               for (int64_t i = 0; i < d; ++i) gb[static_cast<size_t>(i)] += gh[i];
                           }
                           if (x.requires_grad()) {
                               auto& gx = x.grad();
                               S sum_g = 0, sum_gx = 0;
                               for (int64_t i = 0; i < d; ++i) {
                                   const S gi = gh[i] * gamma(i);
                                   sum_g += gi;
                                   sum_gx += gi * xh[i];
                               }
                               const S istd = (*inv_std)[static_cast<size_t>(r)];
                               for (int64_t i = 0; i < d; ++i) {
                                   const S gi = gh[i] * gamma(i);
                                   gx[static_cast<size_t>(r * d + i)] +=
                                       istd * (gi - sum_g / S(d) - xh[i] * sum_gx / S(d));
                               }
                           }
                       }
                   });
    return out;
}

/// Mean negative log-likelihood of integer labels under softmax(logits).
/// Computed from raw logits via log-sum-exp for stability.
template <typename S>
Tensor<S> cross_entropy_from_logits(const Tensor<S>& logits, const std::vector<int64_t>& labels) {
    if (logits.rank() != 2) throw ShapeError("cross_entropy: logits must be [batch, classes]");
    const int64_t batch = logits.dim(0), classes = logits.dim(1);
    if (static_cast<int64_t>(labels.size()) != batch)
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
                         std::to_string(batch));
    for (int64_t b = 0; b < batch; ++b)
        if (labels[static_cast<size_t>(b)] < 0 || labels[static_cast<size_t>(b)] >= classes)
            throw ShapeError("cross_entropy: label out of range");
    auto probs = std::make_shared<std::vector<S>>(static_cast<size_t>(batch * classes));
    S total = 0;
    for (int64_t b = 0; b < batch; ++b) {
        const S* row = logits.data() + b * classes;
        S mx = row[0];
        for (int64_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
        S sum = 0;
        for (int64_t c = 0; c < classes; ++c) {
            const S e = std::exp(row[c] - mx);
            (*probs)[static_cast<size_t>(b * classes + c)] = e;
            sum += e;
        }
        for (int64_t c = 0; c < classes; ++c) (*probs)[static_cast<size_t>(b * classes + c)] /= sum;
        const S lse = mx + std::log(sum);
        total += lse - row[labels[static_cast<size_t>(b)]];
    }
    Tensor<S> out = Tensor<S>::scalar(total / S(batch));
    detail::record("cross_entropy_from_logits", out, logits.requires_grad(), [=]() mutable {
        const S g = out.grad()[0];
        auto& gl = logits.grad();
        for (int64_t b = 0; b < batch; ++b)
            for (int64_t c = 0; c < classes; ++c) {
                const size_t idx = static_cast<size_t>(b * classes + c);
                S p = (*probs)[idx];
                if (c == labels[static_cast<size_t>(b)]) p -= S(1);
                gl[idx] += g * p / S(batch);
            }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

/// Mean over one axis; the axis is removed from the shape (a rank-1 input
/// reduces to shape [1]).
template <typename S>
Tensor<S> mean(const Tensor<S>& a, int axis) {
    int64_t outer, n, inner;
    int ax;
    detail::axis_split(a.shape(), axis, outer, n, inner, ax);
    Shape out_shape;
    for (int i = 0; i < a.rank(); ++i)
        if (i != ax) out_shape.push_back(a.dim(i));
    if (out_shape.empty()) out_shape.push_back(1);
    Tensor<S> out = Tensor<S>::zeros(out_shape);
    const S* pa = a.data();
    S* po = out.data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t r = 0; r < inner; ++r) {
            S s = 0;
            for (int64_t i = 0; i < n; ++i) s += pa[(o * n + i) * inner + r];
            po[o * inner + r] = s / S(n);
        }
    detail::record("mean", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t r = 0; r < inner; ++r) {
                const S gv = g[static_cast<size_t>(o * inner + r)] / S(n);
                for (int64_t i = 0; i < n; ++i)
                    ga[static_cast<size_t>((o * n + i) * inner + r)] += gv;
            }
    });
    return out;
}

/// Sum of all elements, as a [1] tensor.
template <typename S>
Tensor<S> sum(const Tensor<S>& a) {
    S s = 0;
    for (int64_t i = 0; i < a.size(); ++i) s += a(i);
    Tensor<S> out = Tensor<S>::scalar(s);
    detail::record("sum", out, a.requires_grad(), [=]() mutable {
        const S g = out.grad()[0];
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Convolution and pooling
// ---------------------------------------------------------------------------

namespace detail {

// Unrolls same-padded stride-1 convolution windows into a
// [ic*kh*kw, h*w] matrix so convolution becomes one matmul. Row
// (c*kh + ky)*kw + kx holds input channel c shifted by the kernel offset;
// out-of-image positions stay zero.
template <typename S>
void im2col(const S* x, S* col, int64_t ic, int64_t h, int64_t w, int64_t kh, int64_t kw) {
    const int64_t ph = kh / 2, pw = kw / 2;
    const int64_t hw = h * w;
    std::fill(col, col + ic * kh * kw * hw, S(0));
    for (int64_t c = 0; c < ic; ++c)
        for (int64_t ky = 0; ky < kh; ++ky)
            for (int64_t kx = 0; kx < kw; ++kx) {
                S* dst = col + ((c * kh + ky) * kw + kx) * hw;
                const int64_t dy = ky - ph, dx = kx - pw;
                const int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
                const int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
                for (int64_t y = y0; y < y1; ++y) {
                    const S* src = x + (c * h + y + dy) * w + x0 + dx;
                    S* drow = dst + y * w + x0;
                    for (int64_t xx = 0; xx < x1 - x0; ++xx) drow[xx] = src[xx];
                }
            }
}

// Scatter-accumulates a column-matrix gradient back onto the input image
// (the adjoint of im2col).
template <typename S>
void col2im_acc(const S* col, S* gx, int64_t ic, int64_t h, int64_t w, int64_t kh, int64_t kw) {
    const int64_t ph = kh / 2, pw = kw / 2;
    const int64_t hw = h * w;
    for (int64_t c = 0; c < ic; ++c)
        for (int64_t ky = 0; ky < kh; ++ky)
            for (int64_t kx = 0; kx < kw; ++kx) {
                const S* src = col + ((c * kh + ky) * kw + kx) * hw;
                const int64_t dy = ky - ph, dx = kx - pw;
                const int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
                const int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
                for (int64_t y = y0; y < y1; ++y) {
                    S* dst = gx + (c * h + y + dy) * w + x0 + dx;
                    const S* srow = src + y * w + x0;
                    for (int64_t xx = 0; xx < x1 - x0; ++xx) dst[xx] += srow[xx];
                }
            }
}

}  // namespace detail

/// 2-D convolution, stride 1, zero padding that preserves spatial extent
/// (odd kernel sizes). x: [in_ch, h, w], w: [out_ch, in_ch, kh, kw], b: [out_ch].
/// Internally lowered to im2col + matmul; the column matrix is rebuilt in the
/// backward pass rather than retained.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
    if (x.rank() != 3 || w.rank() != 4)
        throw ShapeError("conv2d: want x [c,h,w] and w [oc,ic,kh,kw], got " +
                         shape_str(x.shape()) + " and " + shape_str(w.shape()));
    const int64_t ic = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int64_t oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != ic)
        throw ShapeError("conv2d: weight expects " + std::to_string(w.dim(1)) +
                         " input channels, input has " + std::to_string(ic));
    if (b.size() != oc) throw ShapeError("conv2d: bias length must equal output channels");
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("conv2d: kernel extents must be odd");

    const int64_t hw = h * wd;
    const int64_t ickk = ic * kh * kw;
    std::vector<S> col(static_cast<size_t>(ickk * hw));
    detail::im2col(x.data(), col.data(), ic, h, wd, kh, kw);

    Tensor<S> out = Tensor<S>::zeros({oc, h, wd});
    S* po = out.data();
    for (int64_t o = 0; o < oc; ++o) std::fill(po + o * hw, po + (o + 1) * hw, b(o));
    detail::matmul_nn_acc(w.data(), col.data(), po, oc, ickk, hw);

    detail::record("conv2d", out, detail::any_requires_grad<S>({x, w, b}), [=]() {
        const S* g = out.grad().data();
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (int64_t o = 0; o < oc; ++o) {
                S s = 0;
                for (int64_t i = 0; i < hw; ++i) s += g[o * hw + i];
                gb[static_cast<size_t>(o)] += s;
            }
        }
        if (w.requires_grad() || x.requires_grad()) {
            std::vector<S> col2(static_cast<size_t>(ickk * hw));
            detail::im2col(x.data(), col2.data(), ic, h, wd, kh, kw);
            if (w.requires_grad())
                detail::matmul_nt_acc(g, col2.data(), w.grad().data(), oc, hw, ickk);
            if (x.requires_grad()) {
                std::vector<S> dcol(static_cast<size_t>(ickk * hw), S(0));
                detail::matmul_tn_acc(w.data(), g, dcol.data(), oc, ickk, hw);
                detail::col2im_acc(dcol.data(), x.grad().data(), ic, h, wd, kh, kw);
            }
        }
    });
    return out;
}

/// 2×2 max pooling with stride 2; spatial extents must be even.
template <typename S>
Tensor<S> maxpool2d(const Tensor<S>& x) {
    if (x.rank() != 3) throw ShapeError("maxpool2d: want [c,h,w], got " + shape_str(x.shape()));
    const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h % 2 || w % 2)
        throw ShapeError("maxpool2d: spatial extents must be even, got " + shape_str(x.shape()));
    const int64_t oh = h / 2, ow = w / 2;
    Tensor<S> out = Tensor<S>::zeros({c, oh, ow});
    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(c * oh * ow));
    const S* px = x.data();
    S* po = out.data();
    for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < oh; ++y)
            for (int64_t xx = 0; xx < ow; ++xx) {
                int64_t best = (ch * h + 2 * y) * w + 2 * xx;
                S bv = px[best];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int64_t idx = (ch * h + 2 * y + dy) * w + 2 * xx + dx;
                        if (px[idx] > bv) {
                            bv = px[idx];
                            best = idx;
                        }
                    }
                po[(ch * oh + y) * ow + xx] = bv;
                (*argmax)[static_cast<size_t>((ch * oh + y) * ow + xx)] = best;
            }
    detail::record("maxpool2d", out, x.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) gx[static_cast<size_t>((*argmax)[i])] += g[i];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Indexing and assembly
// ---------------------------------------------------------------------------

/// Gathers rows of a [m,n] table by index; out[i,:] = table[idx[i],:].
template <typename S>
Tensor<S> gather_rows(const Tensor<S>& table, const std::vector<int64_t>& idx) {
    if (table.rank() != 2) throw ShapeError("gather_rows: table must be rank 2");
    const int64_t m = table.dim(0), n = table.dim(1);
    for (int64_t i : idx)
        if (i < 0 || i >= m)
            throw ShapeError("gather_rows: index " + std::to_string(i) + " out of range [0," +
                             std::to_string(m) + ")");
    Tensor<S> out = Tensor<S>::zeros({static_cast<int64_t>(idx.size()), n});
    for (size_t r = 0; r < idx.size(); ++r)
        for (int64_t j = 0; j < n; ++j) out(static_cast<int64_t>(r), j) = table(idx[r], j);
    detail::record("gather_rows", out, table.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& gt = table.grad();
        for (size_t r = 0; r < idx.size(); ++r)
            for (int64_t j = 0; j < n; ++j)
                gt[static_cast<size_t>(idx[r] * n + j)] += g[r * static_cast<size_t>(n) + static_cast<size_t>(j)];
    });
    return out;
}

template <typename S>
Tensor<S> slice_rows(const Tensor<S>& a, int64_t start, int64_t len) {
    if (a.rank() != 2) throw ShapeError("slice_rows: want rank 2, got " + shape_str(a.shape()));
    const int64_t m = a.dim(0), n = a.dim(1);
    if (start < 0 || len <= 0 || start + len > m)
        throw ShapeError("slice_rows: window [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") outside " + shape_str(a.shape()));
    Tensor<S> out = Tensor<S>::zeros({len, n});
    for (int64_t i = 0; i < len; ++i)
        for (int64_t j = 0; j < n; ++j) out(i, j) = a(start + i, j);
    detail::record("slice_rows", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (int64_t i = 0; i < len; ++i)
            for (int64_t j = 0; j < n; ++j)
                ga[static_cast<size_t>((start + i) * n + j)] += g[static_cast<size_t>(i * n + j)];
    });
    return out;
}

template <typename S>
Tensor<S> slice_cols(const Tensor<S>& a, int64_t start, int64_t len) {
    if (a.rank() != 2) throw ShapeError("slice_cols: want rank 2, got " + shape_str(a.shape()));
    const int64_t m = a.dim(0), n = a.dim(1);
    if (start < 0 || len <= 0 || start + len > n)
        throw ShapeError("slice_cols: window [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") outside " + shape_str(a.shape()));
    Tensor<S> out = Tensor<S>::zeros({m, len});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < len; ++j) out(i, j) = a(i, start + j);
    detail::record("slice_cols", out, a.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < len; ++j)
                ga[static_cast<size_t>(i * n + start + j)] += g[static_cast<size_t>(i * len + j)];
    });
    return out;
}

template <typename S>
Tensor<S> concat_rows(const std::vector<Tensor<S>>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const int64_t n = parts[0].dim(1);
    int64_t m = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(1) != n)
            throw ShapeError("concat_rows: column mismatch at " + shape_str(p.shape()));
        m += p.dim(0);
    }
    Tensor<S> out = Tensor<S>::zeros({m, n});
    int64_t row = 0;
    for (const auto& p : parts) {
        for (int64_t i = 0; i < p.dim(0); ++i)
            for (int64_t j = 0; j < n; ++j) out(row + i, j) = p(i, j);
        row += p.dim(0);
    }
    bool needs = false;
    for (const auto& p : parts) needs = needs || p.requires_grad();
    detail::record("concat_rows", out, needs, [=]() mutable {
        const auto& g = out.grad();
        int64_t r0 = 0;
        for (auto& p : parts) {
            if (p.requires_grad()) {
                auto& gp = p.grad();
                for (int64_t i = 0; i < p.dim(0); ++i)
                    for (int64_t j = 0; j < n; ++j)
                        gp[static_cast<size_t>(i * n + j)] += g[static_cast<size_t>((r0 + i) * n + j)];
            }
            r0 += p.dim(0);
        }
    });
    return out;
}

template <typename S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const int64_t m = parts[0].dim(0);
    int64_t n = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(0) != m)
            throw ShapeError("concat_cols: row mismatch at " + shape_str(p.shape()));
        n += p.dim(1);
    }
    Tensor<S> out = Tensor<S>::zeros({m, n});
    int64_t col = 0;
    for (const auto& p : parts) {
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < p.dim(1); ++j) out(i, col + j) = p(i, j);
        col += p.dim(1);
    }
    bool needs = false;
    for (const auto& p : parts) needs = needs || p.requires_grad();
    detail::record("concat_cols", out, needs, [=]() mutable {
        const auto& g = out.grad();
        int64_t c0 = 0;
        for (auto& p : parts) {
            const int64_t pn = p.dim(1);
            if (p.requires_grad()) {
                auto& gp = p.grad();
                for (int64_t i = 0; i < m; ++i)
                    for (int64_t j = 0; j < pn; ++j)
                        gp[static_cast<size_t>(i * pn + j)] += g[static_cast<size_t>(i * n + c0 + j)];
            }
            c0 += pn;
        }
    });
    return out;
}

/// Inverted dropout: y = x ⊙ mask / keep_prob. The 0/1 mask is supplied by
/// the caller (drawn once per forward pass) so repeated evaluations with the
/// same mask are deterministic, which finite-difference checks rely on.
template <typename S>
Tensor<S> dropout(const Tensor<S>& x, const Tensor<S>& mask, S keep_prob) {
    if (x.shape() != mask.shape())
        throw ShapeError("dropout: mask shape " + shape_str(mask.shape()) + " vs input " +
                         shape_str(x.shape()));
    if (!(keep_prob > S(0)) || keep_prob > S(1))
        throw ConfigError("dropout: keep probability must be in (0,1]");
    Tensor<S> out = Tensor<S>::zeros(x.shape());
    const S inv = S(1) / keep_prob;
    for (int64_t i = 0; i < x.size(); ++i) out(i) = x(i) * mask(i) * inv;
    detail::record("dropout", out, x.requires_grad(), [=]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        for (int64_t i = 0; i < x.size(); ++i)
            gx[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * mask(i) * inv;
    });
    return out;
}

}  // namespace drumscribe
