#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "drumscribe/errors.hpp"

namespace drumscribe {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

/// Dense n-dimensional array, row-major flat storage, with an optional
/// gradient buffer of the same shape. Tensor is a cheap shared handle:
/// copies alias the same storage, clone() deep-copies. Element type is a
/// template parameter; float is the production precision, the double
/// instantiation exists for finite-difference verification.
template <typename S>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, S value) {
        Tensor t(std::move(shape));
        for (S& v : t.store_->data) v = value;
        return t;
    }

    static Tensor from(Shape shape, std::vector<S> data) {
        Tensor t(std::move(shape), std::move(data));
        return t;
    }

    static Tensor scalar(S value) { return from({1}, {value}); }

    bool defined() const { return store_ != nullptr; }
    const Shape& shape() const { return store_->shape; }
    int rank() const { return static_cast<int>(store_->shape.size()); }
    int64_t size() const { return static_cast<int64_t>(store_->data.size()); }
    int64_t dim(int i) const { return store_->shape[static_cast<size_t>(i)]; }

    S* data() { return store_->data.data(); }
    const S* data() const { return store_->data.data(); }
    std::vector<S>& values() { return store_->data; }
    const std::vector<S>& values() const { return store_->data; }

    S& operator()(int64_t i) { return store_->data[static_cast<size_t>(i)]; }
    S operator()(int64_t i) const { return store_->data[static_cast<size_t>(i)]; }
    S& operator()(int64_t i, int64_t j) { return store_->data[static_cast<size_t>(i * dim(1) + j)]; }
    S operator()(int64_t i, int64_t j) const { return store_->data[static_cast<size_t>(i * dim(1) + j)]; }
    S& operator()(int64_t i, int64_t j, int64_t k) {
        return store_->data[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
    }
    S operator()(int64_t i, int64_t j, int64_t k) const {
        return store_->data[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
    }
    S& operator()(int64_t i, int64_t j, int64_t k, int64_t l) {
        return store_->data[static_cast<size_t>(((i * dim(1) + j) * dim(2) + k) * dim(3) + l)];
    }
    S operator()(int64_t i, int64_t j, int64_t k, int64_t l) const {
        return store_->data[static_cast<size_t>(((i * dim(1) + j) * dim(2) + k) * dim(3) + l)];
    }

    bool requires_grad() const { return store_->requires_grad; }
    Tensor& set_requires_grad(bool rg) {
        store_->requires_grad = rg;
        return *this;
    }

    bool has_grad() const { return !store_->grad.empty(); }

    /// Gradient buffer, allocated zero-filled on first access. Tensor is a
    /// shared handle, so like shared_ptr the handle's constness does not
    /// extend to the storage; backward closures capture handles by value and
    /// accumulate through them.
    std::vector<S>& grad() const {
        if (store_->grad.empty()) store_->grad.assign(store_->data.size(), S(0));
        return store_->grad;
    }

    void zero_grad() {
        if (!store_->grad.empty()) std::fill(store_->grad.begin(), store_->grad.end(), S(0));
    }

    /// Deep copy of the values (grad not copied, requires_grad preserved).
    Tensor clone() const {
        Tensor t(store_->shape, store_->data);
        t.store_->requires_grad = store_->requires_grad;
        return t;
    }

    template <typename T>
    Tensor<T> cast() const {
        std::vector<T> out(store_->data.size());
        for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(store_->data[i]);
        return Tensor<T>::from(store_->shape, std::move(out));
    }

    /// Identity test for the underlying storage (aliasing check).
    bool same_storage(const Tensor& other) const { return store_ == other.store_; }

private:
    struct Store {
        Shape shape;
        std::vector<S> data;
        mutable std::vector<S> grad;  // lazily allocated, same length as data
        bool requires_grad = false;
    };

    explicit Tensor(Shape shape) : store_(std::make_shared<Store>()) {
        store_->shape = std::move(shape);
        validate_shape();
        store_->data.assign(static_cast<size_t>(shape_numel(store_->shape)), S(0));
    }

    Tensor(Shape shape, std::vector<S> data) : store_(std::make_shared<Store>()) {
        store_->shape = std::move(shape);
        validate_shape();
        if (shape_numel(store_->shape) != static_cast<int64_t>(data.size()))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(store_->shape));
        store_->data = std::move(data);
    }

    void validate_shape() const {
        if (store_->shape.empty())
            throw ShapeError("tensor shape must have at least one extent");
        for (int64_t d : store_->shape)
            if (d <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(store_->shape));
    }

    std::shared_ptr<Store> store_;
};

/// Named parameter handle; the tensor aliases the model's storage.
template <typename S>
struct NamedParam {
    std::string name;
    Tensor<S> tensor;
};

template <typename S>
using ParamList = std::vector<NamedParam<S>>;

template <typename S>
int64_t parameter_count(const ParamList<S>& params) {
    int64_t n = 0;
    for (const auto& p : params) n += p.tensor.size();
    return n;
}

}  // namespace drumscribe
