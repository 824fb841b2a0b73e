#include <cmath>
#include <vector>

#include <doctest.h>

#include "drumscribe/autograd.hpp"
#include "drumscribe/ops.hpp"
#include "drumscribe/rng.hpp"
#include "drumscribe/tensor.hpp"

#include "fd_check.hpp"

using namespace drumscribe;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t = Tensor<double>::zeros(shape);
    for (int64_t i = 0; i < t.size(); ++i) t(i) = rng.uniform(lo, hi);
    t.set_requires_grad(true);
    return t;
}

}  // namespace

TEST_CASE("tensor construction and indexing") {
    Tensor<double> t = Tensor<double>::zeros({2, 3});
    CHECK(t.rank() == 2);
    CHECK(t.size() == 6);
    CHECK(t.dim(0) == 2);
    CHECK(t.dim(1) == 3);
    t(1, 2) = 5.0;
    CHECK(t(5) == 5.0);

    Tensor<double> f = Tensor<double>::full({2, 2}, 3.5);
    for (int64_t i = 0; i < 4; ++i) CHECK(f(i) == 3.5);

    Tensor<double> v = Tensor<double>::from({3}, {1.0, 2.0, 3.0});
    CHECK(v(2) == 3.0);
    CHECK_THROWS_AS(Tensor<double>::from({4}, {1.0}), ShapeError);
    CHECK_THROWS_AS(Tensor<double>::zeros({2, -1}), ShapeError);
}

TEST_CASE("tensor handles share storage; clone does not") {
    Tensor<double> a = Tensor<double>::from({2}, {1.0, 2.0});
    Tensor<double> alias = a;
    alias(0) = 9.0;
    CHECK(a(0) == 9.0);
    CHECK(a.same_storage(alias));

    Tensor<double> copy = a.clone();
    copy(0) = -1.0;
    CHECK(a(0) == 9.0);
    CHECK_FALSE(a.same_storage(copy));
}

TEST_CASE("gradients accumulate and reset") {
    Tensor<double> a = Tensor<double>::from({2}, {1.0, 2.0});
    a.set_requires_grad(true);
    a.grad()[0] += 1.0;
    a.grad()[0] += 2.0;
    CHECK(a.grad()[0] == 3.0);
    a.zero_grad();
    CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("parameter_count sums tensor sizes") {
    Tensor<float> a = Tensor<float>::zeros({2, 3});
    Tensor<float> b = Tensor<float>::zeros({5});
    ParamList<float> params{{"a", a}, {"b", b}};
    CHECK(parameter_count(params) == 11);
}

TEST_CASE("tape records and replays in reverse") {
    Tensor<double> x = Tensor<double>::from({1}, {3.0});
    x.set_requires_grad(true);
    Tape<double> tape;
    Tensor<double> y;
    {
        Tape<double>::Scope scope(tape);
        y = mul(x, x);           // x^2
        y = add(y, x);           // x^2 + x
        y = sum(y);
    }
    CHECK(tape.size() == 3);
    tape.backward(y);
    CHECK(x.grad()[0] == doctest::Approx(7.0));  // 2x + 1 at x=3

    // Without an active tape nothing records.
    Tensor<double> z = mul(x, x);
    CHECK(tape.size() == 3);
    CHECK(z(0) == 9.0);
}

TEST_CASE("backward requires a scalar") {
    Tensor<double> x = Tensor<double>::from({2}, {1.0, 2.0});
    x.set_requires_grad(true);
    Tape<double> tape;
    Tensor<double> y;
    {
        Tape<double>::Scope scope(tape);
        y = mul(x, x);
    }
    CHECK_THROWS_AS(tape.backward(y), ShapeError);
}

TEST_CASE("reused tensors accumulate gradient from every consumer") {
    Tensor<double> x = Tensor<double>::from({1}, {2.0});
    x.set_requires_grad(true);
    Tape<double> tape;
    Tensor<double> loss;
    {
        Tape<double>::Scope scope(tape);
        loss = sum(add(mul(x, x), mul(x, x)));  // 2x^2
    }
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(8.0));  // 4x at x=2
}

TEST_CASE("matmul values against a hand computation") {
    Tensor<double> a = Tensor<double>::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<double> b = Tensor<double>::from({3, 2}, {7, 8, 9, 10, 11, 12});
    Tensor<double> c = matmul(a, b);
    CHECK(c(0, 0) == 58.0);
    CHECK(c(0, 1) == 64.0);
    CHECK(c(1, 0) == 139.0);
    CHECK(c(1, 1) == 154.0);
    CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("elementwise op values") {
    Tensor<double> x = Tensor<double>::from({4}, {-2.0, -0.5, 0.0, 1.5});
    CHECK(relu(x)(0) == 0.0);
    CHECK(relu(x)(3) == 1.5);
    CHECK(sigmoid(x)(2) == doctest::Approx(0.5));
    CHECK(sigmoid(x)(3) == doctest::Approx(1.0 / (1.0 + std::exp(-1.5))));
    CHECK(drumscribe::tanh(x)(0) == doctest::Approx(std::tanh(-2.0)));

    // tanh-approximation GELU, evaluated directly from its definition.
    const auto gelu_ref = [](double v) {
        const double inner = std::sqrt(2.0 / 3.14159265358979323846) * (v + 0.044715 * v * v * v);
        return 0.5 * v * (1.0 + std::tanh(inner));
    };
    Tensor<double> g = gelu(x);
    for (int64_t i = 0; i < x.size(); ++i) CHECK(g(i) == doctest::Approx(gelu_ref(x(i))));

    CHECK(scale(x, 2.0)(0) == -4.0);
    CHECK(add_scalar(x, 1.0)(0) == -1.0);
}

TEST_CASE("softmax rows are normalized and stable under shift") {
    Tensor<double> x = Tensor<double>::from({2, 3}, {1.0, 2.0, 3.0, 1000.0, 1001.0, 1002.0});
    Tensor<double> y = softmax(x, 1);
    for (int64_t r = 0; r < 2; ++r) {
        double s = 0.0;
        for (int64_t c = 0; c < 3; ++c) s += y(r, c);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Shift invariance: both rows are [1,2,3] up to an offset.
    for (int64_t c = 0; c < 3; ++c) CHECK(y(0, c) == doctest::Approx(y(1, c)).epsilon(1e-12));
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(y(0, 2) == doctest::Approx(std::exp(3.0) / z));
}

TEST_CASE("softmax along axis 0") {
    Tensor<double> x = Tensor<double>::from({2, 2}, {0.0, 5.0, 1.0, -5.0});
    Tensor<double> y = softmax(x, 0);
    for (int64_t c = 0; c < 2; ++c) CHECK(y(0, c) + y(1, c) == doctest::Approx(1.0));
    CHECK(y(0, 0) == doctest::Approx(std::exp(0.0) / (std::exp(0.0) + std::exp(1.0))));
}

TEST_CASE("layer_norm normalizes rows to zero mean and unit variance") {
    Rng rng(17);
    Tensor<double> x = random_tensor({3, 8}, rng, -2.0, 2.0);
    Tensor<double> gamma = Tensor<double>::full({8}, 1.0);
    Tensor<double> beta = Tensor<double>::zeros({8});
    Tensor<double> y = layer_norm(x, gamma, beta);
    for (int64_t r = 0; r < 3; ++r) {
        double mean = 0.0, var = 0.0;
        for (int64_t c = 0; c < 8; ++c) mean += y(r, c);
        mean /= 8.0;
        for (int64_t c = 0; c < 8; ++c) var += (y(r, c) - mean) * (y(r, c) - mean);
        var /= 8.0;
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // eps shrinks it slightly
    }
}

TEST_CASE("cross entropy of uniform logits is log C") {
    Tensor<double> logits = Tensor<double>::zeros({3, 7});
    Tensor<double> loss = cross_entropy_from_logits(logits, {0, 3, 6});
    CHECK(loss(0) == doctest::Approx(std::log(7.0)).epsilon(1e-12));

    // A spot-on logit drives the loss toward zero.
    Tensor<double> sharp = Tensor<double>::zeros({1, 7});
    sharp(0, 2) = 50.0;
    CHECK(cross_entropy_from_logits(sharp, {2})(0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("mean and sum reduce as expected") {
    Tensor<double> x = Tensor<double>::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<double> m0 = mean(x, 0);
    CHECK(m0.rank() == 1);
    CHECK(m0(0) == doctest::Approx(2.5));
    Tensor<double> m1 = mean(x, 1);
    CHECK(m1(1) == doctest::Approx(5.0));
    CHECK(sum(x)(0) == 21.0);
}

TEST_CASE("maxpool2d picks the max of each 2x2 cell") {
    Tensor<double> x = Tensor<double>::from({1, 2, 4}, {1, 5, 2, 0, 3, 4, 8, 6});
    Tensor<double> y = maxpool2d(x);
    CHECK(y.dim(1) == 1);
    CHECK(y.dim(2) == 2);
    CHECK(y(0, 0, 0) == 5.0);
    CHECK(y(0, 0, 1) == 8.0);
    CHECK_THROWS_AS(maxpool2d(Tensor<double>::zeros({1, 3, 4})), ShapeError);
}

TEST_CASE("conv2d against a naive sliding-window reference") {
    Rng rng(23);
    const int64_t ic = 2, oc = 3, h = 5, wd = 6, k = 3;
    Tensor<double> x = random_tensor({ic, h, wd}, rng);
    Tensor<double> w = random_tensor({oc, ic, k, k}, rng);
    Tensor<double> b = random_tensor({oc}, rng);
    Tensor<double> y = conv2d(x, w, b);
    REQUIRE(y.dim(0) == oc);
    REQUIRE(y.dim(1) == h);
    REQUIRE(y.dim(2) == wd);
    for (int64_t o = 0; o < oc; ++o)
        for (int64_t r = 0; r < h; ++r)
            for (int64_t c = 0; c < wd; ++c) {
                double acc = b(o);
                for (int64_t i = 0; i < ic; ++i)
                    for (int64_t dr = -1; dr <= 1; ++dr)
                        for (int64_t dc = -1; dc <= 1; ++dc) {
                            const int64_t rr = r + dr, cc = c + dc;
                            if (rr < 0 || rr >= h || cc < 0 || cc >= wd) continue;
                            acc += x(i, rr, cc) * w(o, i, dr + 1, dc + 1);
                        }
                CHECK(y(o, r, c) == doctest::Approx(acc).epsilon(1e-12));
            }
}

TEST_CASE("slicing and concatenation round-trip") {
    Tensor<double> x = Tensor<double>::from({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor<double> top = slice_rows(x, 0, 2);
    Tensor<double> bottom = slice_rows(x, 2, 1);
    CHECK(top(1, 1) == 4.0);
    Tensor<double> glued = concat_rows<double>({top, bottom});
    for (int64_t i = 0; i < x.size(); ++i) CHECK(glued(i) == x(i));

    Tensor<double> left = slice_cols(x, 0, 1);
    Tensor<double> right = slice_cols(x, 1, 1);
    CHECK(right(2, 0) == 6.0);
    Tensor<double> wide = concat_cols<double>({left, right});
    for (int64_t i = 0; i < x.size(); ++i) CHECK(wide(i) == x(i));

    CHECK_THROWS_AS(slice_rows(x, 2, 2), ShapeError);
    CHECK_THROWS_AS(slice_cols(x, 0, 3), ShapeError);
}

TEST_CASE("gather_rows selects and repeats rows") {
    Tensor<double> table = Tensor<double>::from({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor<double> picked = gather_rows(table, {2, 0, 2});
    CHECK(picked.dim(0) == 3);
    CHECK(picked(0, 0) == 5.0);
    CHECK(picked(1, 1) == 2.0);
    CHECK(picked(2, 1) == 6.0);
    CHECK_THROWS_AS(gather_rows(table, {3}), ShapeError);
}

TEST_CASE("broadcast add/mul over trailing axis") {
    Tensor<double> a = Tensor<double>::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<double> b = Tensor<double>::from({3}, {10, 20, 30});
    Tensor<double> s = add(a, b);
    CHECK(s(0, 0) == 11.0);
    CHECK(s(1, 2) == 36.0);
    Tensor<double> p = mul(a, b);
    CHECK(p(1, 0) == 40.0);
    CHECK_THROWS_AS(add(a, Tensor<double>::zeros({2})), ShapeError);
}

TEST_CASE("dropout scales surviving entries by 1/keep") {
    Tensor<double> x = Tensor<double>::from({4}, {1.0, 2.0, 3.0, 4.0});
    Tensor<double> mask = Tensor<double>::from({4}, {1.0, 0.0, 1.0, 0.0});
    Tensor<double> y = dropout(x, mask, 0.5);
    CHECK(y(0) == doctest::Approx(2.0));
    CHECK(y(1) == 0.0);
    CHECK(y(2) == doctest::Approx(6.0));
}

// Finite-difference checks for every differentiable primitive. The loss is
// always collapsed to a weighted sum so gradients reach every entry with
// distinct weights.
namespace {

Tensor<double> weighted_sum(const Tensor<double>& t) {
    Tensor<double> w = Tensor<double>::zeros(t.shape());
    for (int64_t i = 0; i < w.size(); ++i)
        w(i) = 0.25 + 0.5 * static_cast<double>(i % 7) + 0.01 * static_cast<double>(i);
    return sum(mul(t, w));
}

}  // namespace

TEST_CASE("finite differences: arithmetic primitives") {
    Rng rng(31);
    Tensor<double> a = random_tensor({3, 4}, rng);
    Tensor<double> b = random_tensor({3, 4}, rng);
    Tensor<double> v = random_tensor({4}, rng);

    CHECK(fd_max_rel_error([&] { return weighted_sum(add(a, b)); }, {a, b}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(sub(a, b)); }, {a, b}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(mul(a, b)); }, {a, b}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(add(a, v)); }, {a, v}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(mul(a, v)); }, {a, v}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(scale(a, -1.7)); }, {a}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(add_scalar(a, 0.3)); }, {a}) < 1e-6);
}

TEST_CASE("finite differences: matmul, transpose, reshape") {
    Rng rng(37);
    Tensor<double> a = random_tensor({3, 5}, rng);
    Tensor<double> b = random_tensor({5, 2}, rng);
    CHECK(fd_max_rel_error([&] { return weighted_sum(matmul(a, b)); }, {a, b}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(transpose(a)); }, {a}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(reshape(a, {5, 3})); }, {a}) < 1e-6);
}

TEST_CASE("finite differences: activations") {
    Rng rng(41);
    // Keep points away from relu's kink at zero.
    Tensor<double> x = Tensor<double>::zeros({3, 4});
    for (int64_t i = 0; i < x.size(); ++i) {
        double v = rng.uniform(0.2, 1.5);
        x(i) = (i % 2 == 0) ? v : -v;
    }
    x.set_requires_grad(true);
    CHECK(fd_max_rel_error([&] { return weighted_sum(relu(x)); }, {x}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(sigmoid(x)); }, {x}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(drumscribe::tanh(x)); }, {x}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(gelu(x)); }, {x}) < 1e-6);
}

TEST_CASE("finite differences: softmax, layer_norm, cross entropy") {
    Rng rng(43);
    Tensor<double> x = random_tensor({3, 6}, rng, -2.0, 2.0);
    Tensor<double> gamma = random_tensor({6}, rng, 0.5, 1.5);
    Tensor<double> beta = random_tensor({6}, rng, -0.5, 0.5);

    CHECK(fd_max_rel_error([&] { return weighted_sum(softmax(x, 1)); }, {x}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(softmax(x, 0)); }, {x}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(layer_norm(x, gamma, beta)); },
                           {x, gamma, beta}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return cross_entropy_from_logits(x, {1, 4, 0}); }, {x}) < 1e-6);
}

TEST_CASE("finite differences: reductions, conv, pooling, slicing") {
    Rng rng(47);
    Tensor<double> x = random_tensor({2, 4, 4}, rng);
    Tensor<double> w = random_tensor({3, 2, 3, 3}, rng);
    Tensor<double> b = random_tensor({3}, rng);
    Tensor<double> m = random_tensor({4, 6}, rng);

    CHECK(fd_max_rel_error([&] { return weighted_sum(conv2d(x, w, b)); }, {x, w, b}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(maxpool2d(x)); }, {x}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(mean(m, 0)); }, {m}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(mean(m, 1)); }, {m}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(slice_rows(m, 1, 2)); }, {m}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(slice_cols(m, 2, 3)); }, {m}) < 1e-6);
    CHECK(fd_max_rel_error([&] { return weighted_sum(gather_rows(m, {0, 2, 2})); }, {m}) < 1e-6);

    Tensor<double> mask = Tensor<double>::zeros({4, 6});
    for (int64_t i = 0; i < mask.size(); ++i) mask(i) = (i % 3 == 0) ? 0.0 : 1.0;
    CHECK(fd_max_rel_error([&] { return weighted_sum(dropout(m, mask, 0.7)); }, {m}) < 1e-6);

    Tensor<double> p = random_tensor({2, 3}, rng);
    Tensor<double> q = random_tensor({1, 3}, rng);
    CHECK(fd_max_rel_error([&] { return weighted_sum(concat_rows<double>({p, q})); }, {p, q}) <
          1e-6);
    Tensor<double> r = random_tensor({2, 2}, rng);
    CHECK(fd_max_rel_error([&] { return weighted_sum(concat_cols<double>({p, r})); }, {p, r}) <
          1e-6);
}

TEST_CASE("finite differences: composite expression") {
    Rng rng(53);
    Tensor<double> x = random_tensor({2, 5}, rng);
    Tensor<double> w1 = random_tensor({5, 4}, rng);
    Tensor<double> w2 = random_tensor({4, 3}, rng);
    auto loss = [&] {
        Tensor<double> h = gelu(matmul(x, w1));
        Tensor<double> logits = matmul(h, w2);
        return cross_entropy_from_logits(logits, {2, 0});
    };
    CHECK(fd_max_rel_error(loss, {x, w1, w2}) < 1e-6);
}
